// SPDX-License-Identifier: Apache-2.0
//! Type-length-value records carried after the fixed EIGRP header.
//!
//! Type codes follow the RFC 7868 registry as dissected by Wireshark:
//!
//! | Type   | TLV                         |
//! |--------|-----------------------------|
//! | 0x0001 | Parameters (K-values, hold) |
//! | 0x0002 | Authentication              |
//! | 0x0004 | Software Version            |
//! | 0x0006 | Stub                        |
//! | 0x0008 | Peer Topology ID List       |
//! | 0x0102 | IPv4 Internal Route         |

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::prefix::Ipv4Prefix;

pub const TLV_PARAMETERS: u16 = 0x0001;
pub const TLV_AUTHENTICATION: u16 = 0x0002;
pub const TLV_SOFTWARE_VERSION: u16 = 0x0004;
pub const TLV_STUB: u16 = 0x0006;
pub const TLV_PEER_TID_LIST: u16 = 0x0008;
pub const TLV_IPV4_INTERNAL: u16 = 0x0102;

pub const TLV_HEADER_LEN: usize = 4;
/// Fixed part of the IPv4 internal route TLV value, before the destination bytes.
const INTERNAL_ROUTE_FIXED: usize = 21;
pub const AUTH_MAGIC_LEN: usize = 16;

/// Delay value marking a route unreachable.
pub const DELAY_UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KValues {
    pub k1: u8,
    pub k2: u8,
    pub k3: u8,
    pub k4: u8,
    pub k5: u8,
}

impl Default for KValues {
    fn default() -> Self {
        KValues { k1: 1, k2: 0, k3: 1, k4: 0, k5: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameters {
    pub k: KValues,
    /// K6, unused by classic metrics; kept so foreign packets round-trip.
    pub k6: u8,
    pub hold_time: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftwareVersion {
    pub os_major: u8,
    pub os_minor: u8,
    pub eigrp_major: u8,
    pub eigrp_minor: u8,
}

impl Default for SoftwareVersion {
    fn default() -> Self {
        SoftwareVersion { os_major: 15, os_minor: 0, eigrp_major: 2, eigrp_minor: 0 }
    }
}

/// Stand-in for authentication material: a fixed ASCII tag instead of a digest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuthStandIn {
    pub magic: String,
}

impl AuthStandIn {
    pub fn new(magic: impl Into<String>) -> Self {
        AuthStandIn { magic: magic.into() }
    }

    pub fn accepts(&self, other: &AuthStandIn) -> bool {
        self.magic == other.magic
    }
}

/// Classic-metric IPv4 internal route.
///
/// `delay` and `bandwidth` are the wire-scaled values: delay is tens of
/// microseconds times 256, bandwidth is `256 * (10^7 / kbps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalRoute {
    pub next_hop: Ipv4Addr,
    pub delay: u32,
    pub bandwidth: u32,
    /// 24-bit on the wire.
    pub mtu: u32,
    pub hop_count: u8,
    pub reliability: u8,
    pub load: u8,
    pub tag: u8,
    pub flags: u8,
    pub destination: Ipv4Prefix,
}

impl InternalRoute {
    pub fn is_unreachable(&self) -> bool {
        self.delay == DELAY_UNREACHABLE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TlvKind {
    Parameters,
    Authentication,
    SoftwareVersion,
    PeerTopologyIdList,
    Stub,
    InternalRoute,
    Unknown(u16),
}

impl TlvKind {
    pub fn code(self) -> u16 {
        match self {
            TlvKind::Parameters => TLV_PARAMETERS,
            TlvKind::Authentication => TLV_AUTHENTICATION,
            TlvKind::SoftwareVersion => TLV_SOFTWARE_VERSION,
            TlvKind::PeerTopologyIdList => TLV_PEER_TID_LIST,
            TlvKind::Stub => TLV_STUB,
            TlvKind::InternalRoute => TLV_IPV4_INTERNAL,
            TlvKind::Unknown(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tlv {
    Parameters(Parameters),
    Authentication(AuthStandIn),
    SoftwareVersion(SoftwareVersion),
    PeerTopologyIdList(Vec<u16>),
    Stub(u16),
    InternalRoute(InternalRoute),
    /// Unrecognised type, value kept verbatim.
    Unknown { kind: u16, value: Vec<u8> },
}

impl Tlv {
    pub fn kind(&self) -> TlvKind {
        match self {
            Tlv::Parameters(_) => TlvKind::Parameters,
            Tlv::Authentication(_) => TlvKind::Authentication,
            Tlv::SoftwareVersion(_) => TlvKind::SoftwareVersion,
            Tlv::PeerTopologyIdList(_) => TlvKind::PeerTopologyIdList,
            Tlv::Stub(_) => TlvKind::Stub,
            Tlv::InternalRoute(_) => TlvKind::InternalRoute,
            Tlv::Unknown { kind, .. } => TlvKind::Unknown(*kind),
        }
    }

    /// Encoded size including the 4-byte type/length prefix.
    pub fn encoded_len(&self) -> usize {
        TLV_HEADER_LEN
            + match self {
                Tlv::Parameters(_) => 8,
                Tlv::Authentication(_) => AUTH_MAGIC_LEN,
                Tlv::SoftwareVersion(_) => 4,
                Tlv::PeerTopologyIdList(ids) => 2 + 2 * ids.len(),
                Tlv::Stub(_) => 2,
                Tlv::InternalRoute(r) => INTERNAL_ROUTE_FIXED + r.destination.wire_octets(),
                Tlv::Unknown { value, .. } => value.len(),
            }
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), CodecError> {
        let len = self.encoded_len();
        if len > usize::from(u16::MAX) {
            return Err(CodecError::InvariantViolation(format!("TLV of {len} bytes exceeds the 16-bit length field")));
        }
        let start = out.len();
        out.extend_from_slice(&self.kind().code().to_be_bytes());
        out.extend_from_slice(&(len as u16).to_be_bytes());
        match self {
            Tlv::Parameters(p) => {
                out.extend_from_slice(&[p.k.k1, p.k.k2, p.k.k3, p.k.k4, p.k.k5, p.k6]);
                out.extend_from_slice(&p.hold_time.to_be_bytes());
            }
            Tlv::Authentication(a) => {
                let bytes = a.magic.as_bytes();
                if bytes.len() > AUTH_MAGIC_LEN || !a.magic.is_ascii() || bytes.contains(&0) {
                    return Err(CodecError::InvariantViolation(format!(
                        "auth tag must be at most {AUTH_MAGIC_LEN} ASCII bytes without NUL"
                    )));
                }
                let mut buf = [0u8; AUTH_MAGIC_LEN];
                buf[..bytes.len()].copy_from_slice(bytes);
                out.extend_from_slice(&buf);
            }
            Tlv::SoftwareVersion(v) => {
                out.extend_from_slice(&[v.os_major, v.os_minor, v.eigrp_major, v.eigrp_minor]);
            }
            Tlv::PeerTopologyIdList(ids) => {
                out.extend_from_slice(&((2 * ids.len()) as u16).to_be_bytes());
                for id in ids {
                    out.extend_from_slice(&id.to_be_bytes());
                }
            }
            Tlv::Stub(flags) => out.extend_from_slice(&flags.to_be_bytes()),
            Tlv::InternalRoute(r) => {
                if r.mtu > 0x00FF_FFFF {
                    return Err(CodecError::InvariantViolation(format!("MTU {} exceeds 24 bits", r.mtu)));
                }
                out.extend_from_slice(&r.next_hop.octets());
                out.extend_from_slice(&r.delay.to_be_bytes());
                out.extend_from_slice(&r.bandwidth.to_be_bytes());
                out.extend_from_slice(&r.mtu.to_be_bytes()[1..]);
                out.extend_from_slice(&[r.hop_count, r.reliability, r.load, r.tag, r.flags]);
                out.push(r.destination.len());
                out.extend_from_slice(&r.destination.addr().octets()[..r.destination.wire_octets()]);
            }
            Tlv::Unknown { value, .. } => out.extend_from_slice(value),
        }
        debug_assert_eq!(out.len() - start, len);
        Ok(())
    }

    /// Decodes one TLV starting at `buf[0]`; returns it with its encoded length.
    pub(crate) fn decode(buf: &[u8], offset: usize) -> Result<(Tlv, usize), CodecError> {
        if buf.len() < TLV_HEADER_LEN {
            return Err(CodecError::Truncated { needed: offset + TLV_HEADER_LEN, available: offset + buf.len() });
        }
        let kind = u16::from_be_bytes([buf[0], buf[1]]);
        let len = usize::from(u16::from_be_bytes([buf[2], buf[3]]));
        if len < TLV_HEADER_LEN {
            return Err(CodecError::MalformedTlv { kind, offset, reason: format!("length {len} below 4") });
        }
        if len > buf.len() {
            return Err(CodecError::Truncated { needed: offset + len, available: offset + buf.len() });
        }
        let v = &buf[TLV_HEADER_LEN..len];
        let bad = |reason: String| CodecError::MalformedTlv { kind, offset, reason };
        let tlv = match kind {
            TLV_PARAMETERS => {
                if v.len() != 8 {
                    return Err(bad(format!("parameters value is {} bytes, expected 8", v.len())));
                }
                Tlv::Parameters(Parameters {
                    k: KValues { k1: v[0], k2: v[1], k3: v[2], k4: v[3], k5: v[4] },
                    k6: v[5],
                    hold_time: u16::from_be_bytes([v[6], v[7]]),
                })
            }
            TLV_AUTHENTICATION => {
                if v.len() != AUTH_MAGIC_LEN {
                    return Err(bad(format!("auth value is {} bytes, expected {AUTH_MAGIC_LEN}", v.len())));
                }
                let end = v.iter().position(|b| *b == 0).unwrap_or(v.len());
                if v[end..].iter().any(|b| *b != 0) || !v[..end].is_ascii() {
                    return Err(bad("auth tag is not zero-padded ASCII".into()));
                }
                Tlv::Authentication(AuthStandIn { magic: String::from_utf8_lossy(&v[..end]).into_owned() })
            }
            TLV_SOFTWARE_VERSION => {
                if v.len() != 4 {
                    return Err(bad(format!("software version value is {} bytes, expected 4", v.len())));
                }
                Tlv::SoftwareVersion(SoftwareVersion {
                    os_major: v[0],
                    os_minor: v[1],
                    eigrp_major: v[2],
                    eigrp_minor: v[3],
                })
            }
            TLV_PEER_TID_LIST => {
                if v.len() < 2 {
                    return Err(bad("peer topology list missing its length".into()));
                }
                let n = usize::from(u16::from_be_bytes([v[0], v[1]]));
                if n % 2 != 0 || n != v.len() - 2 {
                    return Err(bad(format!("peer topology list length {n} disagrees with TLV length")));
                }
                Tlv::PeerTopologyIdList(v[2..].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect())
            }
            TLV_STUB => {
                if v.len() != 2 {
                    return Err(bad(format!("stub value is {} bytes, expected 2", v.len())));
                }
                Tlv::Stub(u16::from_be_bytes([v[0], v[1]]))
            }
            TLV_IPV4_INTERNAL => {
                if v.len() < INTERNAL_ROUTE_FIXED {
                    return Err(bad(format!("internal route value is {} bytes", v.len())));
                }
                let plen = v[20];
                if plen > 32 {
                    return Err(bad(format!("prefix length {plen} above 32")));
                }
                let octets = usize::from(plen).div_ceil(8);
                if v.len() != INTERNAL_ROUTE_FIXED + octets {
                    return Err(bad(format!(
                        "internal route carries {} destination bytes, /{plen} needs {octets}",
                        v.len() - INTERNAL_ROUTE_FIXED
                    )));
                }
                let mut dst = [0u8; 4];
                dst[..octets].copy_from_slice(&v[INTERNAL_ROUTE_FIXED..]);
                let destination = Ipv4Prefix::new(Ipv4Addr::from(dst), plen).expect("length checked");
                if destination.addr().octets() != dst {
                    return Err(bad("destination has bits beyond its prefix length".into()));
                }
                Tlv::InternalRoute(InternalRoute {
                    next_hop: Ipv4Addr::new(v[0], v[1], v[2], v[3]),
                    delay: u32::from_be_bytes([v[4], v[5], v[6], v[7]]),
                    bandwidth: u32::from_be_bytes([v[8], v[9], v[10], v[11]]),
                    mtu: u32::from_be_bytes([0, v[12], v[13], v[14]]),
                    hop_count: v[15],
                    reliability: v[16],
                    load: v[17],
                    tag: v[18],
                    flags: v[19],
                    destination,
                })
            }
            _ => Tlv::Unknown { kind, value: v.to_vec() },
        };
        Ok((tlv, len))
    }
}
