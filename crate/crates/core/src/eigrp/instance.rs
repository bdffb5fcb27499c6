// SPDX-License-Identifier: Apache-2.0
//! One EIGRP process, driven by inputs and producing transmissions and timer
//! requests. It does no I/O and never reads a clock.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::config::{EigrpConfig, InterfaceSpec};
use super::dual::{DualState, RouteSource, Selection, TopologyEntry, Via};
use super::metric::{compose, RouteComponents, METRIC_INFINITY};
use super::neighbor::{IfaceId, InFlight, Neighbor, NeighborState, Queued};
use crate::codec::{
    AuthStandIn, EigrpPacket, Flags, InternalRoute, Opcode, Parameters, SoftwareVersion, Tlv, HEADER_LEN,
};
use crate::prefix::Ipv4Prefix;
use crate::time::SimTime;

pub const RETRANSMIT_TIMEOUT: SimTime = SimTime::from_secs(1);
/// Upper bound on EIGRP payload bytes when packing route TLVs.
pub const MAX_PAYLOAD: usize = 1400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimerKind {
    Hello(IfaceId),
    Hold(Ipv4Addr),
    Retransmit(Ipv4Addr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Start,
    InterfaceUp(IfaceId),
    InterfaceDown(IfaceId),
    Receive { iface: IfaceId, src: Ipv4Addr, dst: Ipv4Addr, packet: EigrpPacket },
    Timer(TimerKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Destination {
    Multicast,
    Unicast(Ipv4Addr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Send { iface: IfaceId, dst: Destination, packet: EigrpPacket },
    Timer { at: SimTime, kind: TimerKind },
}

/// What split horizon and poison reverse allow on one interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advertisement {
    Metric(RouteComponents),
    Poisoned(RouteComponents),
    Suppress,
    Unreachable,
}

/// Last metric reported per interface, finite or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reported {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub dropped_auth: u64,
    pub dropped_as: u64,
    pub k_mismatch: u64,
    pub ignored_pending: u64,
    pub duplicates: u64,
    pub unexpected_replies: u64,
    pub retransmissions: u64,
    pub teardowns: u64,
}

#[derive(Debug, Clone)]
struct Iface {
    spec: InterfaceSpec,
    up: bool,
    hello_deadline: Option<SimTime>,
    link: RouteComponents,
}

type Snapshot = BTreeMap<Ipv4Prefix, (u32, BTreeSet<Via>, DualState)>;

pub struct EigrpInstance {
    name: String,
    cfg: EigrpConfig,
    ifaces: Vec<Iface>,
    neighbors: BTreeMap<Ipv4Addr, Neighbor>,
    topology: BTreeMap<Ipv4Prefix, TopologyEntry>,
    last_reported: BTreeMap<(IfaceId, Ipv4Prefix), Reported>,
    next_seq: u32,
    started: bool,
    counters: Counters,
    now: SimTime,
    out: Vec<Output>,
    replies: BTreeMap<Ipv4Addr, BTreeMap<Ipv4Prefix, RouteComponents>>,
    queries: BTreeMap<Ipv4Addr, BTreeSet<Ipv4Prefix>>,
    completed: BTreeSet<Ipv4Prefix>,
}

impl EigrpInstance {
    pub fn new(name: impl Into<String>, cfg: EigrpConfig, interfaces: Vec<InterfaceSpec>) -> Self {
        let ifaces = interfaces
            .into_iter()
            .map(|spec| Iface {
                link: RouteComponents::interface(spec.bandwidth_kbps, spec.delay_tens_us),
                spec,
                up: false,
                hello_deadline: None,
            })
            .collect();
        EigrpInstance {
            name: name.into(),
            cfg,
            ifaces,
            neighbors: BTreeMap::new(),
            topology: BTreeMap::new(),
            last_reported: BTreeMap::new(),
            next_seq: 1,
            started: false,
            counters: Counters::default(),
            now: SimTime::ZERO,
            out: Vec::new(),
            replies: BTreeMap::new(),
            queries: BTreeMap::new(),
            completed: BTreeSet::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &EigrpConfig {
        &self.cfg
    }

    pub fn interface(&self, id: IfaceId) -> &InterfaceSpec {
        &self.ifaces[id].spec
    }

    pub fn interface_count(&self) -> usize {
        self.ifaces.len()
    }

    pub fn interface_up(&self, id: IfaceId) -> bool {
        self.ifaces[id].up
    }

    pub fn neighbors(&self) -> impl Iterator<Item = &Neighbor> {
        self.neighbors.values()
    }

    pub fn neighbor(&self, addr: Ipv4Addr) -> Option<&Neighbor> {
        self.neighbors.get(&addr)
    }

    pub fn topology(&self) -> impl Iterator<Item = &TopologyEntry> {
        self.topology.values()
    }

    pub fn entry(&self, dest: &Ipv4Prefix) -> Option<&TopologyEntry> {
        self.topology.get(dest)
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    /// Runs one input to completion.
    pub fn handle(&mut self, now: SimTime, input: Input) -> Vec<Output> {
        self.now = now;
        let before = self.state_snapshot();
        match input {
            Input::Start => self.start(),
            Input::InterfaceUp(i) => self.iface_up(i),
            Input::InterfaceDown(i) => self.iface_down(i),
            Input::Receive { iface, src, dst: _, packet } => self.receive(iface, src, packet),
            Input::Timer(kind) => self.timer(kind),
        }
        self.finish(&before);
        std::mem::take(&mut self.out)
    }

    // ---- inputs ----

    fn start(&mut self) {
        if self.started {
            return;
        }
        self.started = true;
        for i in 0..self.ifaces.len() {
            if self.ifaces[i].up {
                self.bring_up(i);
            }
        }
    }

    fn iface_up(&mut self, i: IfaceId) {
        if self.ifaces[i].up {
            return;
        }
        self.ifaces[i].up = true;
        if self.started {
            self.bring_up(i);
        }
    }

    fn bring_up(&mut self, i: IfaceId) {
        if !self.ifaces[i].spec.eigrp_enabled {
            return;
        }
        let prefix = self.ifaces[i].spec.address.prefix;
        let link = self.ifaces[i].link;
        self.set_source(prefix, Via::Connected, i, link);
        self.reevaluate(prefix, None);
        self.send_hello(i);
    }

    fn iface_down(&mut self, i: IfaceId) {
        if !self.ifaces[i].up {
            return;
        }
        self.ifaces[i].up = false;
        self.ifaces[i].hello_deadline = None;
        if !self.started || !self.ifaces[i].spec.eigrp_enabled {
            return;
        }
        let on_iface: Vec<Ipv4Addr> = self.neighbors.values().filter(|n| n.iface == i).map(|n| n.address).collect();
        for a in on_iface {
            self.teardown(a, "interface down");
        }
        let prefix = self.ifaces[i].spec.address.prefix;
        self.remove_source(prefix, Via::Connected);
        self.last_reported.retain(|(iface, _), _| *iface != i);
    }

    fn timer(&mut self, kind: TimerKind) {
        match kind {
            TimerKind::Hello(i) => {
                if self.ifaces[i].hello_deadline == Some(self.now) && self.ifaces[i].up {
                    self.send_hello(i);
                }
            }
            TimerKind::Hold(a) => {
                if self.neighbors.get(&a).is_some_and(|n| n.hold_deadline == self.now) {
                    self.teardown(a, "hold time expired");
                }
            }
            TimerKind::Retransmit(a) => {
                let limit = self.cfg.retransmit_limit;
                let Some(n) = self.neighbors.get_mut(&a) else { return };
                let Some(f) = n.in_flight.as_mut() else { return };
                if f.deadline != self.now {
                    return;
                }
                if f.retries >= limit {
                    self.teardown(a, "retransmit limit exceeded");
                    return;
                }
                f.retries += 1;
                f.deadline = self.now + RETRANSMIT_TIMEOUT;
                let (packet, deadline, iface) = (f.packet.clone(), f.deadline, n.iface);
                self.counters.retransmissions += 1;
                debug!("{}: retransmit seq {} to {a} (attempt {})", self.name, packet.header.sequence, f.retries);
                self.out.push(Output::Send { iface, dst: Destination::Unicast(a), packet });
                self.out.push(Output::Timer { at: deadline, kind: TimerKind::Retransmit(a) });
            }
        }
    }

    fn receive(&mut self, iface: IfaceId, src: Ipv4Addr, pkt: EigrpPacket) {
        if !self.started || !self.ifaces[iface].up || !self.ifaces[iface].spec.eigrp_enabled {
            return;
        }
        if pkt.header.autonomous_system != self.cfg.as_number {
            self.counters.dropped_as += 1;
            return;
        }
        if pkt.auth().map(|a| a.magic.as_str()) != self.cfg.auth_magic.as_deref() {
            self.counters.dropped_auth += 1;
            debug!("{}: dropped packet from {src}: authentication mismatch", self.name);
            return;
        }
        if !self.ifaces[iface].spec.address.prefix.contains(src) {
            debug!("{}: ignoring {src}, not on the subnet of {}", self.name, self.ifaces[iface].spec.name);
            return;
        }
        if pkt.header.opcode == Opcode::Hello {
            self.receive_hello(iface, src, &pkt);
            return;
        }
        let Some(n) = self.neighbors.get(&src) else {
            debug!("{}: {} from unknown neighbor {src} ignored", self.name, pkt.header.opcode);
            return;
        };
        if n.iface != iface {
            return;
        }
        self.process_ack(src, pkt.header.acknowledgment);
        let seq = pkt.header.sequence;
        let Some(n) = self.neighbors.get_mut(&src) else { return };
        if seq != 0 && seq == n.last_seq_received {
            self.counters.duplicates += 1;
            n.ack_pending = Some(seq);
            return;
        }
        if pkt.header.flags.contains(Flags::INIT) {
            if n.state == NeighborState::Up {
                info!("{}: neighbor {src} restarted (INIT), resetting adjacency", self.name);
                let hold = n.hold_time;
                self.teardown(src, "peer restarted");
                self.create_neighbor(src, iface, hold);
            }
            let n = self.neighbors.get_mut(&src).expect("present");
            n.peer_init_received = true;
            n.last_seq_received = seq;
            n.ack_pending = Some(seq);
            self.check_up(src);
            return;
        }
        if n.state == NeighborState::Pending {
            // Not acked: the adjacency is not up from our side yet.
            self.counters.ignored_pending += 1;
            debug!("{}: {} seq {seq} from pending neighbor {src} ignored", self.name, pkt.header.opcode);
            return;
        }
        n.last_seq_received = seq;
        n.ack_pending = Some(seq);
        let routes: Vec<InternalRoute> = pkt.routes().copied().collect();
        match pkt.header.opcode {
            Opcode::Update => self.process_update(src, iface, &routes),
            Opcode::Query => self.process_query(src, iface, &routes),
            Opcode::Reply => self.process_reply(src, iface, &routes),
            Opcode::Hello => unreachable!(),
        }
    }

    fn receive_hello(&mut self, iface: IfaceId, src: Ipv4Addr, pkt: &EigrpPacket) {
        if let Some(p) = pkt.parameters().copied() {
            if p.k != self.cfg.k_values {
                self.counters.k_mismatch += 1;
                warn!("{}: K-value mismatch with {src}, no adjacency", self.name);
                if self.neighbors.contains_key(&src) {
                    self.teardown(src, "K-value mismatch");
                }
                return;
            }
            match self.neighbors.get_mut(&src) {
                Some(n) if n.iface == iface => {
                    n.hold_time = p.hold_time;
                    n.hold_deadline = self.now + SimTime::from_secs(u64::from(p.hold_time));
                    self.out.push(Output::Timer { at: n.hold_deadline, kind: TimerKind::Hold(src) });
                }
                Some(_) => return,
                None => {
                    info!("{}: new neighbor {src} on {} (pending)", self.name, self.ifaces[iface].spec.name);
                    self.create_neighbor(src, iface, p.hold_time);
                }
            }
        }
        if pkt.header.acknowledgment != 0 && self.neighbors.get(&src).is_some_and(|n| n.iface == iface) {
            self.process_ack(src, pkt.header.acknowledgment);
        }
    }

    fn create_neighbor(&mut self, src: Ipv4Addr, iface: IfaceId, hold: u16) {
        let mut n = Neighbor::new(src, iface, hold, self.now);
        self.out.push(Output::Timer { at: n.hold_deadline, kind: TimerKind::Hold(src) });
        let mut init = self.packet(Opcode::Update);
        init.header.flags = Flags::INIT;
        n.queue.push_back(Queued { packet: init, multicast: false });
        self.neighbors.insert(src, n);
    }

    fn process_ack(&mut self, from: Ipv4Addr, ack: u32) {
        if ack == 0 {
            return;
        }
        let Some(n) = self.neighbors.get_mut(&from) else { return };
        let Some(f) = &n.in_flight else { return };
        if f.packet.header.sequence != ack {
            return;
        }
        let was_init = f.packet.header.flags.contains(Flags::INIT);
        n.in_flight = None;
        if was_init {
            n.init_acked = true;
            self.check_up(from);
        }
    }

    fn check_up(&mut self, addr: Ipv4Addr) {
        let Some(n) = self.neighbors.get_mut(&addr) else { return };
        if n.state == NeighborState::Pending && n.init_acked && n.peer_init_received {
            n.state = NeighborState::Up;
            info!("{}: neighbor {addr} is up", self.name);
            self.initial_sync(addr);
        }
    }

    fn teardown(&mut self, addr: Ipv4Addr, reason: &str) {
        let Some(n) = self.neighbors.remove(&addr) else { return };
        self.counters.teardowns += 1;
        info!("{}: neighbor {addr} down ({reason})", self.name);
        self.replies.remove(&addr);
        self.queries.remove(&addr);
        if n.state == NeighborState::Pending {
            return;
        }
        let via = Via::Neighbor(addr);
        let dests: Vec<Ipv4Prefix> = self
            .topology
            .values()
            .filter(|e| {
                e.sources.contains_key(&via) || e.replies_outstanding.contains(&addr) || e.deferred_replies.contains(&addr)
            })
            .map(|e| e.destination)
            .collect();
        for d in dests {
            let e = self.topology.get_mut(&d).expect("present");
            e.deferred_replies.remove(&addr);
            let active = e.state == DualState::Active;
            e.sources.remove(&via);
            if active {
                e.successors.remove(&via);
                if e.replies_outstanding.remove(&addr) && e.replies_outstanding.is_empty() {
                    self.complete(d);
                }
            } else {
                self.reevaluate(d, None);
            }
        }
        if !self.neighbors.values().any(|m| m.iface == n.iface) {
            self.last_reported.retain(|(i, _), _| *i != n.iface);
        }
    }

    // ---- DUAL ----

    fn set_source(&mut self, dest: Ipv4Prefix, via: Via, iface: IfaceId, reported: RouteComponents) {
        let k = self.cfg.k_values;
        let (total, rd) = match via {
            Via::Connected => (reported, 0),
            Via::Neighbor(_) => (reported.through(&self.ifaces[iface].link), compose(&reported, &k)),
        };
        let src = RouteSource { via, iface, reported, total, reported_distance: rd, metric: compose(&total, &k) };
        self.topology.entry(dest).or_insert_with(|| TopologyEntry::new(dest)).sources.insert(via, src);
    }

    fn remove_source(&mut self, dest: Ipv4Prefix, via: Via) {
        let Some(e) = self.topology.get_mut(&dest) else { return };
        e.sources.remove(&via);
        match e.state {
            DualState::Passive => {
                self.reevaluate(dest, None);
            }
            DualState::Active => {
                e.successors.remove(&via);
            }
        }
    }

    /// Re-runs selection for a Passive destination. Returns true if it is
    /// left Active waiting for replies.
    fn reevaluate(&mut self, dest: Ipv4Prefix, querier: Option<Ipv4Addr>) -> bool {
        let e = self.topology.get(&dest).expect("entry exists");
        if e.state == DualState::Active {
            return true;
        }
        match e.select() {
            Selection::Unreachable => false,
            Selection::Passive { best, successors } => {
                self.topology.get_mut(&dest).expect("present").install(best, successors);
                false
            }
            Selection::NeedsActive => self.go_active(dest, querier),
        }
    }

    fn go_active(&mut self, dest: Ipv4Prefix, querier: Option<Ipv4Addr>) -> bool {
        let outstanding: BTreeSet<Ipv4Addr> = self
            .neighbors
            .values()
            .filter(|n| n.state == NeighborState::Up && Some(n.address) != querier)
            .map(|n| n.address)
            .collect();
        let up_ifaces: Vec<bool> = self.ifaces.iter().map(|i| i.up).collect();
        let up_nbrs: BTreeSet<Ipv4Addr> =
            self.neighbors.values().filter(|n| n.state == NeighborState::Up).map(|n| n.address).collect();
        let e = self.topology.get_mut(&dest).expect("present");
        e.state = DualState::Active;
        e.successors.retain(|v| match v {
            Via::Connected => e.sources.get(v).is_some_and(|s| up_ifaces[s.iface]),
            Via::Neighbor(a) => up_nbrs.contains(a),
        });
        if outstanding.is_empty() {
            self.complete(dest);
            return false;
        }
        debug!("{}: {dest} goes active, querying {outstanding:?}", self.name);
        for a in &outstanding {
            self.queries.entry(*a).or_default().insert(dest);
        }
        e.replies_outstanding = outstanding;
        true
    }

    /// Active to Passive once every reply is in.
    fn complete(&mut self, dest: Ipv4Prefix) {
        let e = self.topology.get_mut(&dest).expect("present");
        e.reset_passive();
        debug!("{}: {dest} passive, distance {}", self.name, e.distance);
        let adv = e.advertisement();
        let owed = std::mem::take(&mut e.deferred_replies);
        for q in owed {
            if self.neighbors.get(&q).is_some_and(|n| n.state == NeighborState::Up) {
                self.replies.entry(q).or_default().insert(dest, adv);
            }
        }
        self.completed.insert(dest);
    }

    fn process_update(&mut self, from: Ipv4Addr, iface: IfaceId, routes: &[InternalRoute]) {
        for r in routes {
            self.set_source(r.destination, Via::Neighbor(from), iface, RouteComponents::from_route(r));
            if self.topology[&r.destination].state == DualState::Passive {
                self.reevaluate(r.destination, None);
            }
        }
    }

    fn process_query(&mut self, from: Ipv4Addr, iface: IfaceId, routes: &[InternalRoute]) {
        for r in routes {
            let dest = r.destination;
            let reported = RouteComponents::from_route(r).poisoned();
            self.set_source(dest, Via::Neighbor(from), iface, reported);
            let e = &self.topology[&dest];
            let answer_now = if e.state == DualState::Active {
                Some(RouteComponents::UNREACHABLE)
            } else if self.reevaluate(dest, Some(from)) {
                self.topology.get_mut(&dest).expect("present").deferred_replies.insert(from);
                None
            } else {
                Some(self.topology[&dest].advertisement())
            };
            if let Some(adv) = answer_now {
                self.replies.entry(from).or_default().insert(dest, adv);
            }
        }
    }

    fn process_reply(&mut self, from: Ipv4Addr, iface: IfaceId, routes: &[InternalRoute]) {
        for r in routes {
            let dest = r.destination;
            self.set_source(dest, Via::Neighbor(from), iface, RouteComponents::from_route(r));
            let e = self.topology.get_mut(&dest).expect("present");
            if e.state == DualState::Active && e.replies_outstanding.remove(&from) {
                if e.replies_outstanding.is_empty() {
                    self.complete(dest);
                }
            } else {
                self.counters.unexpected_replies += 1;
                warn!("{}: unexpected reply from {from} for {dest}", self.name);
            }
        }
    }

    /// Split horizon with poison reverse for one outgoing interface.
    pub fn advertise_filter(&self, e: &TopologyEntry, out_iface: IfaceId) -> Advertisement {
        if e.state == DualState::Active || !e.is_reachable() {
            return Advertisement::Unreachable;
        }
        let mut poisoned = false;
        for v in &e.successors {
            let Some(s) = e.sources.get(v) else { continue };
            if s.iface == out_iface {
                match v {
                    Via::Connected => return Advertisement::Suppress,
                    Via::Neighbor(_) => poisoned = true,
                }
            }
        }
        if poisoned {
            Advertisement::Poisoned(e.advertised.poisoned())
        } else {
            Advertisement::Metric(e.advertised)
        }
    }

    // ---- output assembly ----

    fn state_snapshot(&self) -> Snapshot {
        self.topology.values().map(|e| (e.destination, (e.distance, e.successors.clone(), e.state))).collect()
    }

    fn finish(&mut self, before: &Snapshot) {
        // Replies first, then queries, then updates.
        let replies = std::mem::take(&mut self.replies);
        for (addr, routes) in replies {
            let Some(n) = self.neighbors.get(&addr) else { continue };
            if n.state != NeighborState::Up {
                continue;
            }
            let iface = n.iface;
            let list: Vec<(Ipv4Prefix, RouteComponents)> = routes.into_iter().collect();
            for (d, c) in &list {
                self.record(iface, *d, c);
            }
            self.enqueue_routes(addr, Opcode::Reply, &list, false, false);
        }
        let queries = std::mem::take(&mut self.queries);
        for (addr, dests) in queries {
            let Some(n) = self.neighbors.get(&addr) else { continue };
            let iface = n.iface;
            let list: Vec<(Ipv4Prefix, RouteComponents)> =
                dests.into_iter().map(|d| (d, self.topology[&d].advertised.poisoned())).collect();
            for (d, c) in &list {
                self.record(iface, *d, c);
            }
            self.enqueue_routes(addr, Opcode::Query, &list, true, false);
        }
        self.triggered_updates(before);
        self.completed.clear();
        let addrs: Vec<Ipv4Addr> = self.neighbors.keys().copied().collect();
        for a in addrs {
            self.flush(a);
        }
    }

    fn changed(&self, before: &Snapshot, e: &TopologyEntry) -> bool {
        if self.completed.contains(&e.destination) {
            return true;
        }
        match before.get(&e.destination) {
            Some((dist, succ, state)) => {
                *dist != e.distance || *succ != e.successors || (*state == DualState::Active && e.state == DualState::Passive)
            }
            None => e.is_reachable(),
        }
    }

    fn triggered_updates(&mut self, before: &Snapshot) {
        let mut per_iface: BTreeMap<IfaceId, Vec<(Ipv4Prefix, RouteComponents)>> = BTreeMap::new();
        let ifaces: BTreeSet<IfaceId> =
            self.neighbors.values().filter(|n| n.state == NeighborState::Up).map(|n| n.iface).collect();
        for &i in &ifaces {
            for e in self.topology.values() {
                if e.state == DualState::Active {
                    continue;
                }
                let changed = self.changed(before, e);
                let last = self.last_reported.get(&(i, e.destination)).copied();
                let send = match self.advertise_filter(e, i) {
                    Advertisement::Suppress => None,
                    Advertisement::Metric(c) => {
                        (changed || last != Some(Reported::Finite(compose(&c, &self.cfg.k_values)))).then_some(c)
                    }
                    Advertisement::Poisoned(c) => {
                        (changed || matches!(last, Some(Reported::Finite(_)))).then_some(c)
                    }
                    Advertisement::Unreachable => {
                        matches!(last, Some(Reported::Finite(_))).then_some(RouteComponents::UNREACHABLE)
                    }
                };
                if let Some(c) = send {
                    per_iface.entry(i).or_default().push((e.destination, c));
                }
            }
        }
        for (i, list) in per_iface {
            for (d, c) in &list {
                self.record(i, *d, c);
            }
            let targets: Vec<Ipv4Addr> = self
                .neighbors
                .values()
                .filter(|n| n.iface == i && n.state == NeighborState::Up)
                .map(|n| n.address)
                .collect();
            for a in targets {
                self.enqueue_routes(a, Opcode::Update, &list, true, false);
            }
        }
    }

    fn initial_sync(&mut self, addr: Ipv4Addr) {
        let iface = self.neighbors[&addr].iface;
        let mut list = Vec::new();
        for e in self.topology.values() {
            if e.state == DualState::Active {
                continue;
            }
            match self.advertise_filter(e, iface) {
                Advertisement::Metric(c) | Advertisement::Poisoned(c) => list.push((e.destination, c)),
                Advertisement::Suppress | Advertisement::Unreachable => {}
            }
        }
        for (d, c) in &list {
            self.record(iface, *d, c);
        }
        self.enqueue_routes(addr, Opcode::Update, &list, true, true);
    }

    fn record(&mut self, iface: IfaceId, dest: Ipv4Prefix, c: &RouteComponents) {
        let r = match compose(c, &self.cfg.k_values) {
            METRIC_INFINITY => Reported::Infinite,
            m => Reported::Finite(m),
        };
        self.last_reported.insert((iface, dest), r);
    }

    /// Packs routes into as few packets as fit and queues them reliably.
    fn enqueue_routes(
        &mut self,
        addr: Ipv4Addr,
        opcode: Opcode,
        routes: &[(Ipv4Prefix, RouteComponents)],
        multicast: bool,
        eot: bool,
    ) {
        let base = self.packet(opcode);
        let mut packets = Vec::new();
        let mut cur = base.clone();
        for (dest, c) in routes {
            let tlv = Tlv::InternalRoute(InternalRoute {
                next_hop: Ipv4Addr::UNSPECIFIED,
                delay: c.delay,
                bandwidth: c.bandwidth,
                mtu: c.mtu,
                hop_count: c.hop_count,
                reliability: c.reliability,
                load: c.load,
                tag: 0,
                flags: 0,
                destination: *dest,
            });
            if cur.encoded_len() + tlv.encoded_len() > MAX_PAYLOAD && cur.routes().next().is_some() {
                packets.push(std::mem::replace(&mut cur, base.clone()));
            }
            cur.tlvs.push(tlv);
        }
        if cur.routes().next().is_some() || packets.is_empty() {
            packets.push(cur);
        }
        if eot {
            if let Some(last) = packets.last_mut() {
                last.header.flags = last.header.flags | Flags::EOT;
            }
        }
        let n = self.neighbors.get_mut(&addr).expect("neighbor exists");
        for p in packets {
            debug_assert!(p.encoded_len() <= MAX_PAYLOAD.max(HEADER_LEN + 64));
            n.queue.push_back(Queued { packet: p, multicast });
        }
    }

    /// Sends a pending ack (piggybacked if possible) and the next queued packet.
    fn flush(&mut self, addr: Ipv4Addr) {
        let seq = self.next_seq;
        let mut used_seq = false;
        let mut sends = Vec::new();
        let ack_packet = self.packet(Opcode::Hello);
        let n = self.neighbors.get_mut(&addr).expect("neighbor exists");
        let window_open = n.in_flight.is_none() && !n.queue.is_empty();
        let can_piggyback = window_open && !n.queue[0].multicast;
        if let Some(ack) = n.ack_pending.take() {
            if can_piggyback {
                n.queue[0].packet.header.acknowledgment = ack;
            } else {
                let mut a = ack_packet;
                a.header.acknowledgment = ack;
                sends.push(Output::Send { iface: n.iface, dst: Destination::Unicast(addr), packet: a });
            }
        }
        if window_open {
            let q = n.queue.pop_front().expect("non-empty");
            let mut packet = q.packet;
            packet.header.sequence = seq;
            used_seq = true;
            let deadline = self.now + RETRANSMIT_TIMEOUT;
            let dst = if q.multicast { Destination::Multicast } else { Destination::Unicast(addr) };
            sends.push(Output::Send { iface: n.iface, dst, packet: packet.clone() });
            sends.push(Output::Timer { at: deadline, kind: TimerKind::Retransmit(addr) });
            n.in_flight = Some(InFlight { packet, retries: 0, deadline });
        }
        if used_seq {
            self.next_seq = self.next_seq.wrapping_add(1).max(1);
        }
        self.out.extend(sends);
    }

    fn packet(&self, opcode: Opcode) -> EigrpPacket {
        let mut p = EigrpPacket::new(opcode, self.cfg.as_number);
        if let Some(m) = &self.cfg.auth_magic {
            p.tlvs.push(Tlv::Authentication(AuthStandIn::new(m.clone())));
        }
        p
    }

    fn send_hello(&mut self, i: IfaceId) {
        let mut p = self.packet(Opcode::Hello);
        p.tlvs.push(Tlv::Parameters(Parameters { k: self.cfg.k_values, k6: 0, hold_time: self.cfg.hold_time }));
        p.tlvs.push(Tlv::SoftwareVersion(SoftwareVersion::default()));
        p.tlvs.push(Tlv::PeerTopologyIdList(vec![0]));
        self.out.push(Output::Send { iface: i, dst: Destination::Multicast, packet: p });
        let next = self.now + SimTime::from_secs(u64::from(self.cfg.hello_interval));
        self.ifaces[i].hello_deadline = Some(next);
        self.out.push(Output::Timer { at: next, kind: TimerKind::Hello(i) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, addr: &str) -> InterfaceSpec {
        InterfaceSpec { name: name.into(), address: addr.parse().unwrap(), bandwidth_kbps: 10_000, delay_tens_us: 100, eigrp_enabled: true }
    }

    fn router(name: &str, link: &str, lan: &str, as_number: u16) -> EigrpInstance {
        let mut r = EigrpInstance::new(name, EigrpConfig::new(as_number), vec![spec("ethg[0]", link), spec("ethg[1]", lan)]);
        let t = SimTime::from_secs(1);
        r.handle(t, Input::InterfaceUp(0));
        r.handle(t, Input::InterfaceUp(1));
        r
    }

    fn addr(r: &EigrpInstance) -> Ipv4Addr {
        r.interface(0).address.address
    }

    /// Delivers every send between `a` and `b` (both on interface 0) until
    /// nothing is left. Timers are ignored. Returns the packets exchanged.
    fn exchange(a: &mut EigrpInstance, b: &mut EigrpInstance, mut pending: Vec<(bool, Output)>) -> Vec<EigrpPacket> {
        let mut seen = Vec::new();
        let now = SimTime::from_secs(1);
        while let Some((src_is_a, o)) = (!pending.is_empty()).then(|| pending.remove(0)) {
            let Output::Send { iface: 0, packet, .. } = o else { continue };
            seen.push(packet.clone());
            let (src, rx) = if src_is_a { (addr(a), &mut *b) } else { (addr(b), &mut *a) };
            let dst = EIGRP_GROUP;
            let outs = rx.handle(now, Input::Receive { iface: 0, src, dst, packet });
            pending.extend(outs.into_iter().map(|o| (!src_is_a, o)));
        }
        seen
    }

    const EIGRP_GROUP: Ipv4Addr = Ipv4Addr::new(224, 0, 0, 10);

    fn boot_pair(as_b: u16) -> (EigrpInstance, EigrpInstance, Vec<EigrpPacket>) {
        let mut a = router("A", "10.0.0.1/30", "192.168.1.1/24", 1);
        let mut b = router("B", "10.0.0.2/30", "192.168.2.1/24", as_b);
        let t = SimTime::from_secs(1);
        let mut first: Vec<(bool, Output)> = a.handle(t, Input::Start).into_iter().map(|o| (true, o)).collect();
        first.extend(b.handle(t, Input::Start).into_iter().map(|o| (false, o)));
        let seen = exchange(&mut a, &mut b, first);
        (a, b, seen)
    }

    #[test]
    fn start_sends_multicast_hellos_and_arms_timers() {
        let mut r = router("A", "10.0.0.1/30", "192.168.1.1/24", 1);
        let out = r.handle(SimTime::from_secs(1), Input::Start);
        let hellos = out
            .iter()
            .filter(|o| matches!(o, Output::Send { dst: Destination::Multicast, packet, .. } if packet.parameters().is_some()))
            .count();
        assert_eq!(hellos, 2);
        assert!(out.iter().any(|o| matches!(o, Output::Timer { at, kind: TimerKind::Hello(0) } if *at == SimTime::from_secs(6))));
        assert!(r.is_started());
        assert_eq!(r.topology().count(), 2);
    }

    #[test]
    fn adjacency_forms_and_routes_are_learned() {
        let (a, b, seen) = boot_pair(1);
        let na = a.neighbor(addr(&b)).unwrap();
        assert_eq!(na.state, NeighborState::Up);
        assert_eq!(na.pending_reliable(), 0);
        assert_eq!(b.neighbor(addr(&a)).unwrap().state, NeighborState::Up);
        assert!(seen.iter().any(|p| p.header.flags.contains(Flags::INIT)));
        let lan: Ipv4Prefix = "192.168.2.0/24".parse().unwrap();
        let e = a.entry(&lan).expect("learned");
        assert_eq!(e.distance, 307_200);
        assert_eq!(e.state, DualState::Passive);
    }

    #[test]
    fn other_autonomous_system_is_dropped() {
        let (a, b, _) = boot_pair(2);
        assert_eq!(a.neighbors().count(), 0);
        assert_eq!(b.neighbors().count(), 0);
        assert!(a.counters().dropped_as > 0);
    }

    #[test]
    fn interface_down_tears_down_and_withdraws() {
        let (mut a, b, _) = boot_pair(1);
        a.handle(SimTime::from_secs(2), Input::InterfaceDown(0));
        assert!(a.neighbor(addr(&b)).is_none());
        assert_eq!(a.counters().teardowns, 1);
        let lan: Ipv4Prefix = "192.168.2.0/24".parse().unwrap();
        assert!(a.entry(&lan).is_none_or(|e| !e.is_reachable()));
    }

    #[test]
    fn hold_timer_expiry_tears_down() {
        let (mut a, b, _) = boot_pair(1);
        let n = a.neighbor(addr(&b)).unwrap();
        let deadline = n.hold_deadline;
        a.handle(deadline, Input::Timer(TimerKind::Hold(addr(&b))));
        assert!(a.neighbor(addr(&b)).is_none());
    }
}
