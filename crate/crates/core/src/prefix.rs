// SPDX-License-Identifier: Apache-2.0
//! IPv4 prefixes with host bits masked off.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrefixError {
    #[error("prefix length {0} out of range (0..=32)")]
    Length(u8),
    #[error("malformed prefix `{0}`")]
    Malformed(String),
}

/// An IPv4 network prefix. The stored address never has bits set beyond the
/// prefix length, so two prefixes compare equal iff they name the same network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ipv4Prefix {
    addr: Ipv4Addr,
    len: u8,
}

impl Ipv4Prefix {
    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, PrefixError> {
        if len > 32 {
            return Err(PrefixError::Length(len));
        }
        Ok(Self { addr: Ipv4Addr::from(u32::from(addr) & mask(len)), len })
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.addr
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        u32::from(ip) & mask(self.len) == u32::from(self.addr)
    }

    /// Number of address bytes carried on the wire for this prefix.
    pub fn wire_octets(&self) -> usize {
        usize::from(self.len).div_ceil(8)
    }
}

fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - u32::from(len))
    }
}

impl Ord for Ipv4Prefix {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (u32::from(self.addr), self.len).cmp(&(u32::from(other.addr), other.len))
    }
}

impl PartialOrd for Ipv4Prefix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for Ipv4Prefix {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s.split_once('/').ok_or_else(|| PrefixError::Malformed(s.into()))?;
        let addr: Ipv4Addr = addr.trim().parse().map_err(|_| PrefixError::Malformed(s.into()))?;
        let len: u8 = len.trim().parse().map_err(|_| PrefixError::Malformed(s.into()))?;
        Self::new(addr, len)
    }
}

impl Serialize for Ipv4Prefix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ipv4Prefix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Interface address with its prefix length, e.g. `10.0.12.1/30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceAddress {
    pub address: Ipv4Addr,
    pub prefix: Ipv4Prefix,
}

impl FromStr for InterfaceAddress {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let prefix: Ipv4Prefix = s.parse()?;
        let address = s.split_once('/').and_then(|(a, _)| a.trim().parse().ok()).unwrap();
        Ok(Self { address, prefix })
    }
}

impl fmt::Display for InterfaceAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.address, self.prefix.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_bits_are_masked() {
        let p: Ipv4Prefix = "10.0.12.1/30".parse().unwrap();
        assert_eq!(p.to_string(), "10.0.12.0/30");
        assert!(p.contains("10.0.12.2".parse().unwrap()));
        assert!(!p.contains("10.0.12.4".parse().unwrap()));
    }

    #[test]
    fn ordering_is_address_then_length() {
        let a: Ipv4Prefix = "2.0.0.0/24".parse().unwrap();
        let b: Ipv4Prefix = "10.0.12.0/30".parse().unwrap();
        let c: Ipv4Prefix = "10.0.12.0/31".parse().unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn rejects_bad_length() {
        assert_eq!("1.2.3.4/33".parse::<Ipv4Prefix>(), Err(PrefixError::Length(33)));
        assert!("1.2.3.4".parse::<Ipv4Prefix>().is_err());
    }

    #[test]
    fn wire_octets() {
        let z: Ipv4Prefix = "0.0.0.0/0".parse().unwrap();
        assert_eq!(z.wire_octets(), 0);
        assert_eq!("1.0.0.0/24".parse::<Ipv4Prefix>().unwrap().wire_octets(), 3);
        assert_eq!("10.0.12.0/30".parse::<Ipv4Prefix>().unwrap().wire_octets(), 4);
    }
}
