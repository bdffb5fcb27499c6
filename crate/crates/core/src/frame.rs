// SPDX-License-Identifier: Apache-2.0
//! Ethernet II + IPv4 encapsulation of EIGRP payloads.

use std::fmt;
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::codec::compute_checksum;

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const IPPROTO_EIGRP: u8 = 88;
pub const EIGRP_MULTICAST: Ipv4Addr = Ipv4Addr::new(224, 0, 0, 10);
pub const EIGRP_MULTICAST_MAC: MacAddr = MacAddr([0x01, 0x00, 0x5e, 0x00, 0x00, 0x0a]);
pub const EIGRP_TTL: u8 = 2;
/// Internetwork control precedence, as routers mark routing protocol traffic.
pub const EIGRP_TOS: u8 = 0xc0;

pub const ETH_HEADER_LEN: usize = 14;
pub const IPV4_HEADER_LEN: usize = 20;
/// Minimum Ethernet frame without FCS.
pub const ETH_MIN_FRAME: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    /// Locally administered unicast address derived from router and interface index.
    pub fn for_interface(router: u8, iface: u8) -> Self {
        MacAddr([0x02, 0, 0, 0, router, iface])
    }

    /// RFC 1112 mapping of an IPv4 multicast group.
    pub fn for_multicast(group: Ipv4Addr) -> Self {
        let o = group.octets();
        MacAddr([0x01, 0x00, 0x5e, o[1] & 0x7f, o[2], o[3]])
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame of {0} bytes is too short")]
    TooShort(usize),
    #[error("bad IPv4 header: {0}")]
    BadIpv4(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameMeta {
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub ttl: u8,
    pub ip_id: u16,
}

/// Builds an Ethernet frame carrying `payload` as an EIGRP IPv4 datagram,
/// zero-padded to the Ethernet minimum.
pub fn encapsulate(meta: &FrameMeta, payload: &[u8]) -> Vec<u8> {
    let total = IPV4_HEADER_LEN + payload.len();
    let mut f = Vec::with_capacity((ETH_HEADER_LEN + total).max(ETH_MIN_FRAME));
    f.extend_from_slice(&meta.dst_mac.0);
    f.extend_from_slice(&meta.src_mac.0);
    f.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
    let ip_start = f.len();
    f.push(0x45);
    f.push(EIGRP_TOS);
    f.extend_from_slice(&(total as u16).to_be_bytes());
    f.extend_from_slice(&meta.ip_id.to_be_bytes());
    f.extend_from_slice(&[0, 0]);
    f.push(meta.ttl);
    f.push(IPPROTO_EIGRP);
    f.extend_from_slice(&[0, 0]);
    f.extend_from_slice(&meta.src_ip.octets());
    f.extend_from_slice(&meta.dst_ip.octets());
    let c = compute_checksum(&f[ip_start..ip_start + IPV4_HEADER_LEN]);
    f[ip_start + 10..ip_start + 12].copy_from_slice(&c.to_be_bytes());
    f.extend_from_slice(payload);
    if f.len() < ETH_MIN_FRAME {
        f.resize(ETH_MIN_FRAME, 0);
    }
    f
}

/// Splits a frame into its addressing and EIGRP payload. Returns `Ok(None)`
/// for frames that are not IPv4 protocol 88.
pub fn decapsulate(frame: &[u8]) -> Result<Option<(FrameMeta, &[u8])>, FrameError> {
    if frame.len() < ETH_HEADER_LEN {
        return Err(FrameError::TooShort(frame.len()));
    }
    let mut ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    let mut off = ETH_HEADER_LEN;
    // Single 802.1Q tag.
    if ethertype == 0x8100 {
        if frame.len() < off + 4 {
            return Err(FrameError::TooShort(frame.len()));
        }
        ethertype = u16::from_be_bytes([frame[16], frame[17]]);
        off += 4;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return Ok(None);
    }
    let ip = &frame[off..];
    if ip.len() < IPV4_HEADER_LEN {
        return Err(FrameError::TooShort(frame.len()));
    }
    if ip[0] >> 4 != 4 {
        return Err(FrameError::BadIpv4(format!("version {}", ip[0] >> 4)));
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    let total = usize::from(u16::from_be_bytes([ip[2], ip[3]]));
    if ihl < IPV4_HEADER_LEN || total < ihl || total > ip.len() {
        return Err(FrameError::BadIpv4(format!("header length {ihl}, total length {total}")));
    }
    if ip[9] != IPPROTO_EIGRP {
        return Ok(None);
    }
    let mac = |i: usize| {
        let mut m = [0u8; 6];
        m.copy_from_slice(&frame[i..i + 6]);
        MacAddr(m)
    };
    let meta = FrameMeta {
        dst_mac: mac(0),
        src_mac: mac(6),
        src_ip: Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]),
        dst_ip: Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]),
        ttl: ip[8],
        ip_id: u16::from_be_bytes([ip[4], ip[5]]),
    };
    Ok(Some((meta, &ip[ihl..total])))
}
