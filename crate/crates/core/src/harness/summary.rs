// SPDX-License-Identifier: Apache-2.0
//! Per-message summaries of EIGRP captures.

use std::fmt;
use std::net::Ipv4Addr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_packet_lenient, EigrpPacket, Flags, Opcode, TlvKind};
use crate::frame::decapsulate;
use crate::pcap::{read_pcap, PcapError};
use crate::prefix::Ipv4Prefix;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RouteMark {
    pub prefix: Ipv4Prefix,
    pub reachable: bool,
}

impl fmt::Display for RouteMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reachable {
            write!(f, "{}", self.prefix)
        } else {
            write!(f, "{} unreachable", self.prefix)
        }
    }
}

/// Role of a message. A Hello carrying only an acknowledgment is an Ack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    Hello,
    Ack,
    Update,
    Query,
    Reply,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageSummary {
    /// 1-based position within the capture.
    pub index: usize,
    /// Absent for hand-transcribed references.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<SimTime>,
    pub opcode: Opcode,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub sequence: u32,
    #[serde(default)]
    pub acknowledgment: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub multicast: bool,
    #[serde(default)]
    pub routes: Vec<RouteMark>,
    #[serde(default)]
    pub tlv_kinds: Vec<TlvKind>,
    /// False when the stored checksum did not verify.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub checksum_ok: bool,
    /// Free text carried by hand-written references.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl MessageSummary {
    pub fn from_packet(
        index: usize,
        timestamp: Option<SimTime>,
        src: Ipv4Addr,
        dst: Ipv4Addr,
        pkt: &EigrpPacket,
        checksum_ok: bool,
    ) -> Self {
        MessageSummary {
            index,
            timestamp,
            opcode: pkt.header.opcode,
            flags: pkt.header.flags,
            sequence: pkt.header.sequence,
            acknowledgment: pkt.header.acknowledgment,
            src,
            dst,
            multicast: dst.is_multicast(),
            routes: pkt
                .routes()
                .map(|r| RouteMark { prefix: r.destination, reachable: !r.is_unreachable() })
                .collect(),
            tlv_kinds: pkt.tlvs.iter().map(|t| t.kind()).collect(),
            checksum_ok,
            note: None,
        }
    }

    pub fn kind(&self) -> MessageKind {
        match self.opcode {
            Opcode::Hello if self.acknowledgment != 0 && !self.tlv_kinds.contains(&TlvKind::Parameters) => {
                MessageKind::Ack
            }
            Opcode::Hello => MessageKind::Hello,
            Opcode::Update => MessageKind::Update,
            Opcode::Query => MessageKind::Query,
            Opcode::Reply => MessageKind::Reply,
        }
    }

    /// Sorted, de-duplicated route marks.
    pub fn route_signature(&self) -> Vec<RouteMark> {
        let mut v = self.routes.clone();
        v.sort();
        v.dedup();
        v
    }

    /// Reliable packet that also acknowledges something.
    pub fn piggybacks_ack(&self) -> bool {
        self.kind() != MessageKind::Ack && self.acknowledgment != 0
    }

    pub fn short(&self) -> String {
        let mut s = format!("{} {}", self.kind(), self.src);
        if self.flags != Flags::NONE {
            s.push_str(&format!(" [{}]", self.flags));
        }
        s.push_str(if self.multicast { " mcast" } else { " ucast" });
        if !self.routes.is_empty() {
            let r: Vec<String> = self.routes.iter().map(|r| r.to_string()).collect();
            s.push_str(&format!(" {{{}}}", r.join(", ")));
        }
        s
    }
}

/// Hand-written reference trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTrace {
    pub title: String,
    pub capture: String,
    #[serde(default)]
    pub remarks: String,
    pub messages: Vec<MessageSummary>,
}

impl ReferenceTrace {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let t: ReferenceTrace = serde_json::from_str(s)?;
        if let Some((i, m)) = t.messages.iter().enumerate().find(|(i, m)| m.index != i + 1) {
            return Err(serde::de::Error::custom(format!("message {} has index {}, expected {}", i + 1, m.index, i + 1)));
        }
        Ok(t)
    }
}

/// Summaries for every EIGRP frame in a capture. Other traffic is skipped.
/// Frames whose checksum fails are kept with `checksum_ok == false`.
pub fn ingest_pcap(bytes: &[u8]) -> Result<Vec<MessageSummary>, PcapError> {
    let mut out = Vec::new();
    for (i, rec) in read_pcap(bytes)?.iter().enumerate() {
        let (meta, payload) = match decapsulate(&rec.data) {
            Ok(Some(x)) => x,
            Ok(None) => continue,
            Err(e) => {
                warn!("record {i}: {e}, skipped");
                continue;
            }
        };
        match decode_packet_lenient(payload) {
            Ok((pkt, ok)) => {
                if !ok {
                    warn!("record {i}: EIGRP checksum mismatch");
                }
                out.push(MessageSummary::from_packet(
                    out.len() + 1,
                    Some(rec.timestamp),
                    meta.src_ip,
                    meta.dst_ip,
                    &pkt,
                    ok,
                ));
            }
            Err(e) => warn!("record {i}: undecodable EIGRP packet ({e}), skipped"),
        }
    }
    Ok(out)
}
