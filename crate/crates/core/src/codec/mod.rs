// SPDX-License-Identifier: Apache-2.0
//! EIGRP packet encoding and decoding (classic TLVs).

pub mod checksum;
pub mod tlv;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checksum::{compute_checksum, verify_checksum};
pub use tlv::{
    AuthStandIn, InternalRoute, KValues, Parameters, SoftwareVersion, Tlv, TlvKind, DELAY_UNREACHABLE,
};

pub const EIGRP_VERSION: u8 = 2;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("truncated packet: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad checksum: stored {stored:#06x}, computed {computed:#06x}")]
    BadChecksum { stored: u16, computed: u16 },
    #[error("unknown opcode {0}")]
    UnknownOpcode(u8),
    #[error("unsupported EIGRP version {0}")]
    BadVersion(u8),
    #[error("malformed TLV {kind:#06x} at offset {offset}: {reason}")]
    MalformedTlv { kind: u16, offset: usize, reason: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Opcode {
    Update = 1,
    Query = 3,
    Reply = 4,
    Hello = 5,
}

impl Opcode {
    pub fn from_u8(v: u8) -> Result<Self, CodecError> {
        match v {
            1 => Ok(Opcode::Update),
            3 => Ok(Opcode::Query),
            4 => Ok(Opcode::Reply),
            5 => Ok(Opcode::Hello),
            other => Err(CodecError::UnknownOpcode(other)),
        }
    }

    pub fn is_reliable(self) -> bool {
        !matches!(self, Opcode::Hello)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Opcode::Update => "Update",
            Opcode::Query => "Query",
            Opcode::Reply => "Reply",
            Opcode::Hello => "Hello",
        })
    }
}

/// Header flag bits. Unknown bits are kept so foreign packets round-trip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flags(pub u32);

impl Flags {
    pub const NONE: Flags = Flags(0);
    pub const INIT: Flags = Flags(0x1);
    pub const CR: Flags = Flags(0x2);
    pub const RS: Flags = Flags(0x4);
    pub const EOT: Flags = Flags(0x8);

    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn bits(self) -> u32 {
        self.0
    }
}

impl std::ops::BitOr for Flags {
    type Output = Flags;
    fn bitor(self, rhs: Flags) -> Flags {
        Flags(self.0 | rhs.0)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = Vec::new();
        for (flag, name) in [(Flags::INIT, "INIT"), (Flags::CR, "CR"), (Flags::RS, "RS"), (Flags::EOT, "EOT")] {
            if self.contains(flag) {
                names.push(name.to_string());
            }
        }
        let rest = self.0 & !0xF;
        if rest != 0 {
            names.push(format!("{rest:#x}"));
        }
        if names.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&names.join("|"))
        }
    }
}

/// Fixed 20-byte header. The checksum is not stored: [`encode_packet`]
/// computes it and [`decode_packet`] verifies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigrpHeader {
    pub version: u8,
    pub opcode: Opcode,
    pub flags: Flags,
    pub sequence: u32,
    pub acknowledgment: u32,
    pub virtual_router_id: u16,
    pub autonomous_system: u16,
}

impl EigrpHeader {
    pub fn new(opcode: Opcode, autonomous_system: u16) -> Self {
        EigrpHeader {
            version: EIGRP_VERSION,
            opcode,
            flags: Flags::NONE,
            sequence: 0,
            acknowledgment: 0,
            virtual_router_id: 0,
            autonomous_system,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigrpPacket {
    pub header: EigrpHeader,
    pub tlvs: Vec<Tlv>,
}

impl EigrpPacket {
    pub fn new(opcode: Opcode, autonomous_system: u16) -> Self {
        EigrpPacket { header: EigrpHeader::new(opcode, autonomous_system), tlvs: Vec::new() }
    }

    pub fn opcode(&self) -> Opcode {
        self.header.opcode
    }

    /// A Hello carrying an acknowledgment and no Parameters TLV. It may
    /// still carry authentication.
    pub fn is_ack(&self) -> bool {
        self.header.opcode == Opcode::Hello && self.header.acknowledgment != 0 && self.parameters().is_none()
    }

    pub fn routes(&self) -> impl Iterator<Item = &InternalRoute> {
        self.tlvs.iter().filter_map(|t| match t {
            Tlv::InternalRoute(r) => Some(r),
            _ => None,
        })
    }

    pub fn parameters(&self) -> Option<&Parameters> {
        self.tlvs.iter().find_map(|t| match t {
            Tlv::Parameters(p) => Some(p),
            _ => None,
        })
    }

    pub fn auth(&self) -> Option<&AuthStandIn> {
        self.tlvs.iter().find_map(|t| match t {
            Tlv::Authentication(a) => Some(a),
            _ => None,
        })
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.tlvs.iter().map(Tlv::encoded_len).sum::<usize>()
    }
}

fn check_invariants(pkt: &EigrpPacket) -> Result<(), CodecError> {
    let h = &pkt.header;
    if h.version != EIGRP_VERSION {
        return Err(CodecError::InvariantViolation(format!("version {} is not {EIGRP_VERSION}", h.version)));
    }
    if h.opcode == Opcode::Hello && h.sequence != 0 {
        return Err(CodecError::InvariantViolation("Hello with nonzero sequence".into()));
    }
    if h.flags.contains(Flags::INIT) && h.opcode != Opcode::Update {
        return Err(CodecError::InvariantViolation(format!("INIT flag on {}", h.opcode)));
    }
    Ok(())
}

/// Encodes `pkt` with a freshly computed checksum.
pub fn encode_packet(pkt: &EigrpPacket) -> Result<Vec<u8>, CodecError> {
    check_invariants(pkt)?;
    let h = &pkt.header;
    let mut out = Vec::with_capacity(pkt.encoded_len());
    out.push(h.version);
    out.push(h.opcode as u8);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&h.flags.0.to_be_bytes());
    out.extend_from_slice(&h.sequence.to_be_bytes());
    out.extend_from_slice(&h.acknowledgment.to_be_bytes());
    out.extend_from_slice(&h.virtual_router_id.to_be_bytes());
    out.extend_from_slice(&h.autonomous_system.to_be_bytes());
    for t in &pkt.tlvs {
        t.encode_into(&mut out)?;
    }
    let c = compute_checksum(&out);
    out[2..4].copy_from_slice(&c.to_be_bytes());
    Ok(out)
}

/// Strict decode: the checksum must validate.
pub fn decode_packet(bytes: &[u8]) -> Result<EigrpPacket, CodecError> {
    if bytes.len() < HEADER_LEN {
        return Err(CodecError::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    if !verify_checksum(bytes) {
        let stored = u16::from_be_bytes([bytes[2], bytes[3]]);
        let mut zeroed = bytes.to_vec();
        zeroed[2] = 0;
        zeroed[3] = 0;
        return Err(CodecError::BadChecksum { stored, computed: compute_checksum(&zeroed) });
    }
    decode_unchecked(bytes)
}

/// Decode ignoring the checksum; the flag reports whether it validated.
pub fn decode_packet_lenient(bytes: &[u8]) -> Result<(EigrpPacket, bool), CodecError> {
    let pkt = decode_unchecked(bytes)?;
    Ok((pkt, verify_checksum(bytes)))
}

fn decode_unchecked(bytes: &[u8]) -> Result<EigrpPacket, CodecError> {
    if bytes.len() < HEADER_LEN {
        return Err(CodecError::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    let be32 = |i: usize| u32::from_be_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = bytes[0];
    if version != EIGRP_VERSION {
        return Err(CodecError::BadVersion(version));
    }
    let opcode = Opcode::from_u8(bytes[1])?;
    let header = EigrpHeader {
        version,
        opcode,
        flags: Flags(be32(4)),
        sequence: be32(8),
        acknowledgment: be32(12),
        virtual_router_id: u16::from_be_bytes([bytes[16], bytes[17]]),
        autonomous_system: u16::from_be_bytes([bytes[18], bytes[19]]),
    };
    let mut tlvs = Vec::new();
    let mut off = HEADER_LEN;
    while off < bytes.len() {
        let (t, len) = Tlv::decode(&bytes[off..], off)?;
        tlvs.push(t);
        off += len;
    }
    Ok(EigrpPacket { header, tlvs })
}
