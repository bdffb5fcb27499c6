// SPDX-License-Identifier: Apache-2.0
//! Field-level differences between messages and between routing tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::summary::MessageSummary;
use crate::codec::{EigrpPacket, Opcode, Tlv, TlvKind};
use crate::prefix::Ipv4Prefix;
use crate::tables::{RoutingEntry, TableSnapshot};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("cannot compare a {reference} with a {simulated}")]
    OpcodeMismatch { reference: Opcode, simulated: Opcode },
    #[error("snapshots are of different routers: {reference} vs {simulated}")]
    NodeMismatch { reference: String, simulated: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub field: String,
    pub reference: String,
    pub simulated: String,
}

impl fmt::Display for FieldDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: reference {}, simulated {}", self.field, self.reference, self.simulated)
    }
}

fn fd(field: &str, reference: impl fmt::Display, simulated: impl fmt::Display) -> FieldDiff {
    FieldDiff { field: field.into(), reference: reference.to_string(), simulated: simulated.to_string() }
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

fn kind_name(k: &TlvKind) -> String {
    match k {
        TlvKind::Unknown(c) => format!("Unknown({c:#06x})"),
        k => format!("{k:?}"),
    }
}

/// Differences visible in two summaries of the same opcode. Sequence and
/// acknowledgment numbers are transport context and are not compared.
pub fn diff_messages(reference: &MessageSummary, simulated: &MessageSummary) -> Result<Vec<FieldDiff>, HarnessError> {
    if reference.opcode != simulated.opcode {
        return Err(HarnessError::OpcodeMismatch { reference: reference.opcode, simulated: simulated.opcode });
    }
    let mut out = Vec::new();
    if reference.flags != simulated.flags {
        out.push(fd("flags", reference.flags, simulated.flags));
    }
    if reference.multicast != simulated.multicast {
        let cast = |m: bool| if m { "multicast" } else { "unicast" };
        out.push(fd("cast mode", cast(reference.multicast), cast(simulated.multicast)));
    }
    let rk: BTreeSet<TlvKind> = reference.tlv_kinds.iter().copied().filter(|k| *k != TlvKind::InternalRoute).collect();
    let sk: BTreeSet<TlvKind> = simulated.tlv_kinds.iter().copied().filter(|k| *k != TlvKind::InternalRoute).collect();
    if rk != sk {
        out.push(fd(
            "TLV kinds",
            join(rk.difference(&sk).map(kind_name)),
            join(sk.difference(&rk).map(kind_name)),
        ));
    }
    let rr: BTreeSet<_> = reference.route_signature().into_iter().collect();
    let sr: BTreeSet<_> = simulated.route_signature().into_iter().collect();
    if rr != sr {
        out.push(fd("routes", join(rr.difference(&sr)), join(sr.difference(&rr))));
    }
    Ok(out)
}

/// Value-level comparison of two decoded packets: header fields other than
/// sequence and acknowledgment, then TLVs matched by kind (routes by
/// destination).
pub fn diff_packets(reference: &EigrpPacket, simulated: &EigrpPacket) -> Result<Vec<FieldDiff>, HarnessError> {
    let (rh, sh) = (&reference.header, &simulated.header);
    if rh.opcode != sh.opcode {
        return Err(HarnessError::OpcodeMismatch { reference: rh.opcode, simulated: sh.opcode });
    }
    let mut out = Vec::new();
    if rh.version != sh.version {
        out.push(fd("version", rh.version, sh.version));
    }
    if rh.flags != sh.flags {
        out.push(fd("flags", rh.flags, sh.flags));
    }
    if rh.autonomous_system != sh.autonomous_system {
        out.push(fd("autonomous system", rh.autonomous_system, sh.autonomous_system));
    }
    if rh.virtual_router_id != sh.virtual_router_id {
        out.push(fd("virtual router id", rh.virtual_router_id, sh.virtual_router_id));
    }
    let key = |t: &Tlv| match t {
        Tlv::InternalRoute(r) => (t.kind(), Some(r.destination)),
        _ => (t.kind(), None),
    };
    let index = |p: &EigrpPacket| -> BTreeMap<(TlvKind, Option<Ipv4Prefix>), Tlv> {
        p.tlvs.iter().map(|t| (key(t), t.clone())).collect()
    };
    let (ri, si) = (index(reference), index(simulated));
    for k in ri.keys().chain(si.keys()).collect::<BTreeSet<_>>() {
        let name = match k.1 {
            Some(p) => format!("{} {p}", kind_name(&k.0)),
            None => kind_name(&k.0),
        };
        match (ri.get(k), si.get(k)) {
            (Some(a), Some(b)) if a != b => out.push(fd(&name, format!("{a:?}"), format!("{b:?}"))),
            (Some(a), None) => out.push(fd(&name, format!("{a:?}"), "absent")),
            (None, Some(b)) => out.push(fd(&name, "absent", format!("{b:?}"))),
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableField {
    RouteSource,
    Destination,
    Metric,
    NextHop,
    ExitInterface,
}

impl fmt::Display for TableField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableField::RouteSource => "route source",
            TableField::Destination => "destination",
            TableField::Metric => "metric",
            TableField::NextHop => "next-hop",
            TableField::ExitInterface => "exit-interface",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDiff {
    pub field: TableField,
    pub destination: Ipv4Prefix,
    pub reference: Option<String>,
    pub simulated: Option<String>,
}

impl fmt::Display for TableDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |o: &Option<String>| o.clone().unwrap_or_else(|| "missing".into());
        write!(
            f,
            "{} {}: reference {}, simulated {}",
            self.destination,
            self.field,
            v(&self.reference),
            v(&self.simulated)
        )
    }
}

fn entry_diffs(dest: Ipv4Prefix, r: &RoutingEntry, s: &RoutingEntry, out: &mut Vec<TableDiff>) {
    let mut push = |field, a: String, b: String| {
        if a != b {
            out.push(TableDiff { field, destination: dest, reference: Some(a), simulated: Some(b) });
        }
    };
    push(TableField::RouteSource, r.source.code().into(), s.source.code().into());
    push(TableField::NextHop, r.next_hop_text(), s.next_hop_text());
    push(
        TableField::Metric,
        format!("{}/{}", r.administrative_distance, r.metric),
        format!("{}/{}", s.administrative_distance, s.metric),
    );
    push(TableField::ExitInterface, r.exit_interface.clone(), s.exit_interface.clone());
}

/// Routing-table differences. Entries are keyed by (destination, next hop);
/// a destination present on one side only is one whole-entry difference.
pub fn diff_tables(reference: &TableSnapshot, simulated: &TableSnapshot) -> Result<Vec<TableDiff>, HarnessError> {
    if reference.node != simulated.node {
        return Err(HarnessError::NodeMismatch { reference: reference.node.clone(), simulated: simulated.node.clone() });
    }
    let group = |s: &TableSnapshot| {
        let mut m: BTreeMap<Ipv4Prefix, Vec<RoutingEntry>> = BTreeMap::new();
        for e in &s.routing {
            m.entry(e.destination).or_default().push(e.clone());
        }
        m
    };
    let (rg, sg) = (group(reference), group(simulated));
    let mut out = Vec::new();
    let dests: BTreeSet<&Ipv4Prefix> = rg.keys().chain(sg.keys()).collect();
    for d in dests {
        let empty = Vec::new();
        let rs = rg.get(d).unwrap_or(&empty);
        let ss = sg.get(d).unwrap_or(&empty);
        if rs.is_empty() || ss.is_empty() {
            let whole = |v: &Vec<RoutingEntry>| (!v.is_empty()).then(|| join(v.iter()));
            out.push(TableDiff { field: TableField::Destination, destination: *d, reference: whole(rs), simulated: whole(ss) });
            continue;
        }
        let mut r_left: Vec<&RoutingEntry> = Vec::new();
        let mut s_left: Vec<&RoutingEntry> = ss.iter().collect();
        for r in rs {
            match s_left.iter().position(|s| s.next_hop == r.next_hop) {
                Some(p) => entry_diffs(*d, r, s_left.remove(p), &mut out),
                None => r_left.push(r),
            }
        }
        // Paths that differ only in next hop are compared pairwise; the rest
        // are listed whole.
        let paired = r_left.len().min(s_left.len());
        for (r, s) in r_left.iter().zip(&s_left) {
            entry_diffs(*d, r, s, &mut out);
        }
        for r in &r_left[paired..] {
            out.push(TableDiff { field: TableField::NextHop, destination: *d, reference: Some(r.to_string()), simulated: None });
        }
        for s in &s_left[paired..] {
            out.push(TableDiff { field: TableField::NextHop, destination: *d, reference: None, simulated: Some(s.to_string()) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Flags, KValues, Parameters, SoftwareVersion};
    use crate::time::SimTime;

    fn snap(node: &str, lines: &[&str]) -> TableSnapshot {
        TableSnapshot {
            node: node.into(),
            at: SimTime::ZERO,
            routing: lines.iter().map(|l| l.parse().unwrap()).collect(),
            topology: vec![],
            neighbors: vec![],
        }
    }

    #[test]
    fn table_diff_cases() {
        let a = snap("R1", &["C 1.0.0.0/24 [0/0] via connected, ethg[2]", "D 2.0.0.0/24 [90/307200] via 10.0.12.2, ethg[0]"]);
        assert!(diff_tables(&a, &a).unwrap().is_empty());

        let b = snap("R1", &["C 1.0.0.0/24 [0/0] via connected, ethg[2]", "D 2.0.0.0/24 [90/332800] via 10.0.13.2, ethg[1]"]);
        let d = diff_tables(&a, &b).unwrap();
        let fields: Vec<TableField> = d.iter().map(|x| x.field).collect();
        assert_eq!(fields, [TableField::NextHop, TableField::Metric, TableField::ExitInterface]);

        let c = snap("R1", &["C 1.0.0.0/24 [0/0] via connected, ethg[2]"]);
        let d = diff_tables(&a, &c).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, TableField::Destination);
        assert_eq!(d[0].simulated, None);

        assert!(matches!(diff_tables(&a, &snap("R2", &[])), Err(HarnessError::NodeMismatch { .. })));
    }

    fn summary(opcode: Opcode) -> MessageSummary {
        MessageSummary {
            index: 1,
            timestamp: None,
            opcode,
            flags: Flags::NONE,
            sequence: 4,
            acknowledgment: 0,
            src: "10.0.12.1".parse().unwrap(),
            dst: "224.0.0.10".parse().unwrap(),
            multicast: true,
            routes: vec![],
            tlv_kinds: vec![],
            checksum_ok: true,
            note: None,
        }
    }

    #[test]
    fn cast_mode_is_the_only_difference() {
        let a = summary(Opcode::Update);
        let mut b = a.clone();
        b.multicast = false;
        b.dst = "10.0.12.2".parse().unwrap();
        b.sequence = 9;
        let d = diff_messages(&a, &b).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "cast mode");
        assert!(diff_messages(&a, &a).unwrap().is_empty());
        assert!(matches!(diff_messages(&a, &summary(Opcode::Query)), Err(HarnessError::OpcodeMismatch { .. })));
    }

    #[test]
    fn hello_tlv_sets() {
        let mut device = summary(Opcode::Hello);
        device.tlv_kinds = vec![TlvKind::Parameters, TlvKind::SoftwareVersion, TlvKind::PeerTopologyIdList];
        let mut sim = summary(Opcode::Hello);
        sim.tlv_kinds = vec![TlvKind::Parameters, TlvKind::Stub];
        let d = diff_messages(&device, &sim).unwrap();
        assert_eq!(d[0].reference, "SoftwareVersion, PeerTopologyIdList");
        assert_eq!(d[0].simulated, "Stub");
    }

    #[test]
    fn packet_values() {
        let mut a = EigrpPacket::new(Opcode::Hello, 1);
        a.tlvs.push(Tlv::Parameters(Parameters { k: KValues::default(), k6: 0, hold_time: 15 }));
        a.tlvs.push(Tlv::SoftwareVersion(SoftwareVersion::default()));
        assert!(diff_packets(&a, &a).unwrap().is_empty());
        let mut b = a.clone();
        b.tlvs[0] = Tlv::Parameters(Parameters { k: KValues::default(), k6: 0, hold_time: 10 });
        b.header.sequence = 77;
        let d = diff_packets(&a, &b).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "Parameters");
    }
}
