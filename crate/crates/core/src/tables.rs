// SPDX-License-Identifier: Apache-2.0
//! Routing table derived from DUAL state, and point-in-time snapshots of the
//! routing, topology and neighbor tables.
//!
//! Snapshot text format:
//!
//! ```text
//! # node=R1 t=100
//! C 1.0.0.0/24 [0/0] via connected, ethg[2]
//! D 2.0.0.0/24 [90/332800] via 10.0.13.2, ethg[1]
//! ## topology
//! P 2.0.0.0/24 fd=332800 succ=10.0.13.2 src=10.0.13.2:307200/332800
//! ## neighbors
//! 10.0.13.2 ethg[1] up hold=15 seq=4
//! ```
//!
//! The topology and neighbor sections are optional, so hand-written
//! reference tables may list routes only.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigrp::{DualState, EigrpInstance, NeighborState, Via, METRIC_INFINITY};
use crate::prefix::Ipv4Prefix;
use crate::time::SimTime;

pub const AD_CONNECTED: u8 = 0;
pub const AD_EIGRP_INTERNAL: u8 = 90;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("snapshot line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RouteKind {
    #[serde(rename = "C")]
    Connected,
    #[serde(rename = "D")]
    Eigrp,
}

impl RouteKind {
    pub fn code(self) -> &'static str {
        match self {
            RouteKind::Connected => "C",
            RouteKind::Eigrp => "D",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutingEntry {
    pub source: RouteKind,
    pub destination: Ipv4Prefix,
    pub metric: u32,
    /// `None` for directly connected networks.
    pub next_hop: Option<Ipv4Addr>,
    pub exit_interface: String,
    pub administrative_distance: u8,
}

impl RoutingEntry {
    pub fn sort_key(&self) -> (Ipv4Prefix, Option<Ipv4Addr>) {
        (self.destination, self.next_hop)
    }

    pub fn next_hop_text(&self) -> String {
        self.next_hop.map_or_else(|| "connected".to_string(), |a| a.to_string())
    }
}

impl fmt::Display for RoutingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} [{}/{}] via {}, {}",
            self.source.code(),
            self.destination,
            self.administrative_distance,
            self.metric,
            self.next_hop_text(),
            self.exit_interface
        )
    }
}

impl FromStr for RoutingEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected `SOURCE PREFIX [AD/METRIC] via NEXTHOP, IFACE`, got `{s}`");
        let (head, iface) = s.rsplit_once(", ").ok_or_else(bad)?;
        let mut tok = head.split_whitespace();
        let source = match tok.next().ok_or_else(bad)? {
            "C" => RouteKind::Connected,
            "D" => RouteKind::Eigrp,
            other => return Err(format!("unknown route source `{other}`")),
        };
        let destination: Ipv4Prefix = tok.next().ok_or_else(bad)?.parse().map_err(|e| format!("{e}"))?;
        let admin = tok.next().ok_or_else(bad)?;
        let (ad, metric) = admin
            .strip_prefix('[')
            .and_then(|a| a.strip_suffix(']'))
            .and_then(|a| a.split_once('/'))
            .ok_or_else(bad)?;
        if tok.next() != Some("via") {
            return Err(bad());
        }
        let nh = tok.next().ok_or_else(bad)?;
        if tok.next().is_some() {
            return Err(bad());
        }
        let next_hop = match nh {
            "connected" => None,
            a => Some(a.parse().map_err(|_| format!("bad next hop `{a}`"))?),
        };
        Ok(RoutingEntry {
            source,
            destination,
            metric: metric.parse().map_err(|_| format!("bad metric `{metric}`"))?,
            next_hop,
            exit_interface: iface.trim().to_string(),
            administrative_distance: ad.parse().map_err(|_| format!("bad distance `{ad}`"))?,
        })
    }
}

/// Recomputes the routing table from the instance's interfaces and DUAL state.
pub fn routing_table(inst: &EigrpInstance) -> Vec<RoutingEntry> {
    let mut out = Vec::new();
    let mut connected = BTreeSet::new();
    for i in 0..inst.interface_count() {
        if !inst.interface_up(i) {
            continue;
        }
        let spec = inst.interface(i);
        connected.insert(spec.address.prefix);
        out.push(RoutingEntry {
            source: RouteKind::Connected,
            destination: spec.address.prefix,
            metric: 0,
            next_hop: None,
            exit_interface: spec.name.clone(),
            administrative_distance: AD_CONNECTED,
        });
    }
    for e in inst.topology() {
        if connected.contains(&e.destination) || e.distance == METRIC_INFINITY {
            continue;
        }
        for v in &e.successors {
            let Via::Neighbor(addr) = v else { continue };
            let Some(n) = inst.neighbor(*addr) else { continue };
            if n.state != NeighborState::Up {
                continue;
            }
            out.push(RoutingEntry {
                source: RouteKind::Eigrp,
                destination: e.destination,
                metric: e.distance,
                next_hop: Some(*addr),
                exit_interface: inst.interface(n.iface).name.clone(),
                administrative_distance: AD_EIGRP_INTERNAL,
            });
        }
    }
    out.sort_by_key(RoutingEntry::sort_key);
    out
}

/// Routing table kept in step with an instance, reporting what changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable {
    entries: Vec<RoutingEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RouteDelta {
    pub added: Vec<RoutingEntry>,
    pub removed: Vec<RoutingEntry>,
}

impl RouteDelta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

impl RoutingTable {
    pub fn entries(&self) -> &[RoutingEntry] {
        &self.entries
    }

    pub fn sync(&mut self, inst: &EigrpInstance) -> RouteDelta {
        let fresh = routing_table(inst);
        let added = fresh.iter().filter(|e| !self.entries.contains(e)).cloned().collect();
        let removed = self.entries.iter().filter(|e| !fresh.contains(e)).cloned().collect();
        self.entries = fresh;
        RouteDelta { added, removed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyLine {
    pub state: DualState,
    pub destination: Ipv4Prefix,
    pub feasible_distance: u32,
    pub successors: Vec<String>,
    /// (via, reported distance, metric)
    pub sources: Vec<(String, u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborLine {
    pub address: Ipv4Addr,
    pub interface: String,
    pub state: NeighborState,
    pub hold_time: u16,
    pub last_seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSnapshot {
    pub node: String,
    pub at: SimTime,
    pub routing: Vec<RoutingEntry>,
    pub topology: Vec<TopologyLine>,
    pub neighbors: Vec<NeighborLine>,
}

fn metric_text(m: u32) -> String {
    if m == METRIC_INFINITY {
        "inf".into()
    } else {
        m.to_string()
    }
}

fn parse_metric(s: &str) -> Result<u32, String> {
    if s == "inf" {
        Ok(METRIC_INFINITY)
    } else {
        s.parse().map_err(|_| format!("bad metric `{s}`"))
    }
}

pub fn take_snapshot(inst: &EigrpInstance, at: SimTime) -> TableSnapshot {
    let topology = inst
        .topology()
        .filter(|e| !e.sources.is_empty() || e.is_reachable())
        .map(|e| TopologyLine {
            state: e.state,
            destination: e.destination,
            feasible_distance: e.feasible_distance,
            successors: e.successors.iter().map(Via::to_string).collect(),
            sources: e.sources.values().map(|s| (s.via.to_string(), s.reported_distance, s.metric)).collect(),
        })
        .collect();
    let neighbors = inst
        .neighbors()
        .map(|n| NeighborLine {
            address: n.address,
            interface: inst.interface(n.iface).name.clone(),
            state: n.state,
            hold_time: n.hold_time,
            last_seq: n.last_seq_received,
        })
        .collect();
    TableSnapshot { node: inst.name().to_string(), at, routing: routing_table(inst), topology, neighbors }
}

impl TableSnapshot {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# node={} t={}", self.node, self.at).unwrap();
        for r in &self.routing {
            writeln!(s, "{r}").unwrap();
        }
        writeln!(s, "## topology").unwrap();
        for t in &self.topology {
            let succ = if t.successors.is_empty() { "-".to_string() } else { t.successors.join(",") };
            let src: Vec<String> =
                t.sources.iter().map(|(v, rd, m)| format!("{v}:{}/{}", metric_text(*rd), metric_text(*m))).collect();
            let src = if src.is_empty() { "-".to_string() } else { src.join(",") };
            writeln!(s, "{} {} fd={} succ={succ} src={src}", t.state, t.destination, metric_text(t.feasible_distance))
                .unwrap();
        }
        writeln!(s, "## neighbors").unwrap();
        for n in &self.neighbors {
            writeln!(s, "{} {} {} hold={} seq={}", n.address, n.interface, n.state, n.hold_time, n.last_seq).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SnapshotError> {
        #[derive(PartialEq)]
        enum Section {
            Routing,
            Topology,
            Neighbors,
        }
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SnapshotError::Parse { line: 1, message: "empty snapshot".into() })?;
        let err = |line: usize, message: String| SnapshotError::Parse { line: line + 1, message };
        let mut node = None;
        let mut at = None;
        for tok in header.trim().strip_prefix('#').ok_or_else(|| err(0, "missing `# node=... t=...` header".into()))?.split_whitespace() {
            match tok.split_once('=') {
                Some(("node", v)) => node = Some(v.to_string()),
                Some(("t", v)) => at = Some(v.parse::<SimTime>().map_err(|e| err(0, e.to_string()))?),
                _ => return Err(err(0, format!("unexpected header token `{tok}`"))),
            }
        }
        let mut snap = TableSnapshot {
            node: node.ok_or_else(|| err(0, "header lacks node=".into()))?,
            at: at.ok_or_else(|| err(0, "header lacks t=".into()))?,
            routing: Vec::new(),
            topology: Vec::new(),
            neighbors: Vec::new(),
        };
        let mut section = Section::Routing;
        for (i, raw) in lines {
            let l = raw.trim();
            match l {
                "## topology" => {
                    section = Section::Topology;
                    continue;
                }
                "## neighbors" => {
                    section = Section::Neighbors;
                    continue;
                }
                _ if l.starts_with('#') => continue,
                _ => {}
            }
            match section {
                Section::Routing => snap.routing.push(l.parse().map_err(|m| err(i, m))?),
                Section::Topology => snap.topology.push(parse_topology_line(l).map_err(|m| err(i, m))?),
                Section::Neighbors => snap.neighbors.push(parse_neighbor_line(l).map_err(|m| err(i, m))?),
            }
        }
        snap.routing.sort_by_key(RoutingEntry::sort_key);
        Ok(snap)
    }
}

fn kv<'a>(tok: Option<&'a str>, key: &str) -> Result<&'a str, String> {
    tok.and_then(|t| t.strip_prefix(key)).and_then(|t| t.strip_prefix('=')).ok_or_else(|| format!("expected {key}="))
}

fn parse_topology_line(l: &str) -> Result<TopologyLine, String> {
    let mut tok = l.split_whitespace();
    let state = match tok.next() {
        Some("P") => DualState::Passive,
        Some("A") => DualState::Active,
        other => return Err(format!("bad DUAL state {other:?}")),
    };
    let destination = tok.next().ok_or("missing destination")?.parse().map_err(|e| format!("{e}"))?;
    let fd = parse_metric(kv(tok.next(), "fd")?)?;
    let succ = kv(tok.next(), "succ")?;
    let src = kv(tok.next(), "src")?;
    let successors = if succ == "-" { Vec::new() } else { succ.split(',').map(str::to_string).collect() };
    let mut sources = Vec::new();
    if src != "-" {
        for s in src.split(',') {
            let (via, m) = s.rsplit_once(':').ok_or_else(|| format!("bad source `{s}`"))?;
            let (rd, metric) = m.split_once('/').ok_or_else(|| format!("bad source `{s}`"))?;
            sources.push((via.to_string(), parse_metric(rd)?, parse_metric(metric)?));
        }
    }
    Ok(TopologyLine { state, destination, feasible_distance: fd, successors, sources })
}

fn parse_neighbor_line(l: &str) -> Result<NeighborLine, String> {
    let mut tok = l.split_whitespace();
    let address = tok.next().ok_or("missing address")?.parse().map_err(|_| "bad neighbor address".to_string())?;
    let interface = tok.next().ok_or("missing interface")?.to_string();
    let state = match tok.next() {
        Some("up") => NeighborState::Up,
        Some("pending") => NeighborState::Pending,
        other => return Err(format!("bad neighbor state {other:?}")),
    };
    let hold_time = kv(tok.next(), "hold")?.parse().map_err(|_| "bad hold".to_string())?;
    let last_seq = kv(tok.next(), "seq")?.parse().map_err(|_| "bad seq".to_string())?;
    Ok(NeighborLine { address, interface, state, hold_time, last_seq })
}
