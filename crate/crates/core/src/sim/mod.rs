// SPDX-License-Identifier: Apache-2.0
//! Discrete-event simulation of EIGRP routers joined by point-to-point
//! Ethernet links. Every frame put on or taken off a link is traced.

pub mod scenario;
pub mod scheduler;
pub mod topology;

use std::fmt;
use std::net::Ipv4Addr;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{decode_packet, encode_packet, EigrpPacket};
use crate::eigrp::{Destination, EigrpInstance, Input, InterfaceSpec, Output, TimerKind};
use crate::frame::{decapsulate, encapsulate, FrameMeta, MacAddr, EIGRP_MULTICAST, EIGRP_TTL};
use crate::pcap::pcap_bytes;
use crate::tables::{take_snapshot, RoutingTable, TableSnapshot};
use crate::time::SimTime;

pub use scenario::{load_scenario, ActionKind, Gate, ScenarioAction, ScenarioError};
pub use scheduler::{priority, EventHandle, Scheduler, SchedulerError};
pub use topology::{channel_bandwidth, LinkConfig, LinkState, TopologyConfig, TopologyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("no link between {0}")]
    UnknownLink(String),
    #[error("link {0} is already in the requested state")]
    AlreadyInState(String),
    #[error("unknown capture point `{0}`")]
    UnknownPoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// One frame seen at an interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    /// `ROUTER.GATE`
    pub point: String,
    pub direction: Direction,
    pub time: SimTime,
    pub link: usize,
    pub frame: Vec<u8>,
}

/// Half-open capture window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: SimTime,
    pub end: SimTime,
}

impl Window {
    pub const ALL: Window = Window { start: SimTime::ZERO, end: SimTime::from_picos(u64::MAX) };

    pub fn new(start: SimTime, end: SimTime) -> Self {
        Window { start, end }
    }

    pub fn contains(&self, t: SimTime) -> bool {
        t >= self.start && t < self.end
    }
}

struct Node {
    name: String,
    instance: EigrpInstance,
    iface_links: Vec<Option<usize>>,
    start: SimTime,
    ip_id: u16,
    index: u8,
    table: RoutingTable,
}

struct Link {
    /// (node, iface) for side 0 and side 1.
    ends: [(usize, usize); 2],
    bandwidth_bps: u64,
    propagation: SimTime,
    up: bool,
    generation: u64,
    busy_until: [SimTime; 2],
}

enum Event {
    Boot(usize),
    Timer(usize, TimerKind),
    TransmitStart { link: usize, side: usize, frame: Vec<u8> },
    Deliver { link: usize, side: usize, generation: u64, frame: Vec<u8> },
    Scenario(usize),
    Snapshot,
}

/// Test hook: return false to lose a frame on its way to `node`.
pub type DeliveryFilter = Box<dyn FnMut(&str, &EigrpPacket) -> bool + Send>;

pub struct Simulation {
    config: TopologyConfig,
    nodes: Vec<Node>,
    links: Vec<Link>,
    sched: Scheduler<Event>,
    trace: Vec<TraceRecord>,
    actions: Vec<ScenarioAction>,
    snapshots: Vec<TableSnapshot>,
    jitter: Option<(ChaCha8Rng, u64, u64)>,
    filter: Option<DeliveryFilter>,
}

fn serialization_time(bytes: usize, bps: u64) -> SimTime {
    let bits = bytes as u128 * 8;
    SimTime::from_picos((bits * crate::time::PICOS_PER_SEC as u128 / bps as u128) as u64)
}

impl Simulation {
    pub fn new(config: TopologyConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut nodes: Vec<Node> = config
            .routers
            .iter()
            .enumerate()
            .map(|(idx, r)| {
                let specs = r
                    .interfaces
                    .iter()
                    .map(|i| InterfaceSpec {
                        name: i.name.clone(),
                        address: i.address,
                        bandwidth_kbps: i.bandwidth,
                        delay_tens_us: i.delay,
                        eigrp_enabled: i.eigrp.unwrap_or_else(|| r.eigrp.enables(&i.address)),
                    })
                    .collect();
                Node {
                    name: r.name.clone(),
                    instance: EigrpInstance::new(r.name.clone(), r.eigrp.clone(), specs),
                    iface_links: vec![None; r.interfaces.len()],
                    start: r.start,
                    ip_id: 0,
                    index: (idx + 1) as u8,
                    table: RoutingTable::default(),
                }
            })
            .collect();
        let mut links = Vec::new();
        for l in &config.links {
            let a = config.endpoint(&l.a)?;
            let b = config.endpoint(&l.b)?;
            let id = links.len();
            nodes[a.0].iface_links[a.1] = Some(id);
            nodes[b.0].iface_links[b.1] = Some(id);
            links.push(Link {
                ends: [a, b],
                bandwidth_bps: channel_bandwidth(&l.channel)?,
                propagation: l.propagation,
                up: l.state == LinkState::Up,
                generation: 0,
                busy_until: [SimTime::ZERO; 2],
            });
        }
        let mut sched = Scheduler::new();
        for (i, n) in nodes.iter_mut().enumerate() {
            // Before Start the instance only records which interfaces are up.
            // An interface with no link is a stub network and always up.
            for (iface, l) in n.iface_links.iter().enumerate() {
                if l.is_none_or(|l| links[l].up) {
                    n.instance.handle(SimTime::ZERO, Input::InterfaceUp(iface));
                }
            }
            sched.schedule(n.start, priority::TIMER, Event::Boot(i))?;
        }
        Ok(Simulation {
            config,
            nodes,
            links,
            sched,
            trace: Vec::new(),
            actions: Vec::new(),
            snapshots: Vec::new(),
            jitter: None,
            filter: None,
        })
    }

    pub fn from_toml(s: &str) -> Result<Self, SimError> {
        Self::new(TopologyConfig::from_toml(s)?)
    }

    pub fn config(&self) -> &TopologyConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    /// Delays each transmission by a uniform draw from `[min, max]`, using a
    /// generator seeded with `seed`.
    pub fn set_jitter(&mut self, seed: u64, min: SimTime, max: SimTime) {
        let (lo, hi) = (min.min(max), min.max(max));
        self.jitter = (hi > SimTime::ZERO).then(|| (ChaCha8Rng::seed_from_u64(seed), lo.as_picos(), hi.as_picos()));
    }

    pub fn set_delivery_filter(&mut self, f: DeliveryFilter) {
        self.filter = Some(f);
    }

    /// Queues scenario actions. Gates are checked now; link state is checked
    /// when each action fires.
    pub fn add_scenario(&mut self, actions: Vec<ScenarioAction>) -> Result<(), SimError> {
        for a in actions {
            let (src, dest) = match &a.kind {
                ActionKind::Connect { src, dest, channel } => {
                    if let Some(c) = channel {
                        channel_bandwidth(c)?;
                    }
                    (src, Some(dest))
                }
                ActionKind::Disconnect { src, dest } => (src, dest.as_ref()),
            };
            self.config.resolve(&src.module, &src.gate)?;
            if let Some(d) = dest {
                self.config.resolve(&d.module, &d.gate)?;
            }
            let idx = self.actions.len();
            self.sched.schedule(a.at, priority::SCENARIO, Event::Scenario(idx))?;
            self.actions.push(a);
        }
        Ok(())
    }

    pub fn schedule_snapshot(&mut self, at: SimTime) -> Result<(), SimError> {
        self.sched.schedule(at, priority::SNAPSHOT, Event::Snapshot)?;
        Ok(())
    }

    /// Processes all events up to and including `until`.
    pub fn run(&mut self, until: SimTime) -> Result<(), SimError> {
        while let Some((now, ev)) = self.sched.pop_until(until) {
            self.dispatch(now, ev)?;
        }
        self.sched.advance_to(until);
        Ok(())
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn snapshots(&self) -> &[TableSnapshot] {
        &self.snapshots
    }

    pub fn snapshot_all(&self) -> Vec<TableSnapshot> {
        self.nodes.iter().map(|n| take_snapshot(&n.instance, self.now())).collect()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn instance(&self, name: &str) -> Option<&EigrpInstance> {
        self.nodes.iter().find(|n| n.name == name).map(|n| &n.instance)
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_up(&self, link: usize) -> bool {
        self.links[link].up
    }

    pub fn link_name(&self, link: usize) -> String {
        let [a, b] = self.links[link].ends;
        format!("{}<->{}", self.point_name(a), self.point_name(b))
    }

    /// Link index joining two `ROUTER.GATE` points, in either order.
    pub fn link_between(&self, a: &str, b: &str) -> Result<usize, SimError> {
        let pa = self.config.endpoint(a)?;
        let pb = self.config.endpoint(b)?;
        self.find_link(pa, pb).ok_or_else(|| SimError::UnknownLink(format!("{a} and {b}")))
    }

    fn find_link(&self, a: (usize, usize), b: (usize, usize)) -> Option<usize> {
        self.links.iter().position(|l| l.ends == [a, b] || l.ends == [b, a])
    }

    fn point_name(&self, (n, i): (usize, usize)) -> String {
        format!("{}.{}", self.nodes[n].name, self.nodes[n].instance.interface(i).name)
    }

    /// Frames sent onto `link` from either end, in time order.
    pub fn link_records(&self, link: usize, window: Window) -> Vec<&TraceRecord> {
        let mut v: Vec<&TraceRecord> = self
            .trace
            .iter()
            .filter(|r| r.link == link && r.direction == Direction::Out && window.contains(r.time))
            .collect();
        v.sort_by_key(|r| r.time);
        v
    }

    /// Frames seen at one interface, both directions, in time order.
    pub fn point_records(&self, point: &str, window: Window) -> Result<Vec<&TraceRecord>, SimError> {
        self.config.endpoint(point).map_err(|_| SimError::UnknownPoint(point.into()))?;
        let mut v: Vec<&TraceRecord> =
            self.trace.iter().filter(|r| r.point == point && window.contains(r.time)).collect();
        v.sort_by_key(|r| r.time);
        Ok(v)
    }

    pub fn export_link(&self, link: usize, window: Window) -> Vec<u8> {
        pcap_bytes(self.link_records(link, window).into_iter().map(|r| (r.time, r.frame.as_slice())))
    }

    pub fn export_point(&self, point: &str, window: Window) -> Result<Vec<u8>, SimError> {
        Ok(pcap_bytes(self.point_records(point, window)?.into_iter().map(|r| (r.time, r.frame.as_slice()))))
    }

    fn dispatch(&mut self, now: SimTime, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Boot(n) => {
                info!("{} boots at {now}", self.nodes[n].name);
                self.input(n, now, Input::Start)?;
            }
            Event::Timer(n, kind) => self.input(n, now, Input::Timer(kind))?,
            Event::TransmitStart { link, side, frame } => self.put_on_wire(link, side, now, frame)?,
            Event::Deliver { link, side, generation, frame } => self.deliver(link, side, generation, now, frame)?,
            Event::Scenario(idx) => {
                let action = self.actions[idx].clone();
                info!("scenario: {action}");
                match self.apply(&action.kind, now) {
                    Err(SimError::AlreadyInState(l)) => warn!("scenario action ignored, {l} already in that state"),
                    r => r?,
                }
            }
            Event::Snapshot => {
                let snaps = self.snapshot_all();
                self.snapshots.extend(snaps);
            }
        }
        Ok(())
    }

    fn apply(&mut self, kind: &ActionKind, now: SimTime) -> Result<(), SimError> {
        match kind {
            ActionKind::Connect { src, dest, channel } => {
                let a = self.config.resolve(&src.module, &src.gate)?;
                let b = self.config.resolve(&dest.module, &dest.gate)?;
                let link = match self.find_link(a, b) {
                    Some(l) if self.links[l].up => return Err(SimError::AlreadyInState(self.link_name(l))),
                    Some(l) => {
                        if let Some(c) = channel {
                            self.links[l].bandwidth_bps = channel_bandwidth(c)?;
                        }
                        l
                    }
                    None if self.nodes[a.0].iface_links[a.1].is_none() && self.nodes[b.0].iface_links[b.1].is_none() => {
                        let bw = channel_bandwidth(channel.as_deref().unwrap_or("Eth10M"))?;
                        let id = self.links.len();
                        self.links.push(Link {
                            ends: [a, b],
                            bandwidth_bps: bw,
                            propagation: SimTime::ZERO,
                            up: false,
                            generation: 0,
                            busy_until: [SimTime::ZERO; 2],
                        });
                        self.nodes[a.0].iface_links[a.1] = Some(id);
                        self.nodes[b.0].iface_links[b.1] = Some(id);
                        id
                    }
                    None => return Err(SimError::UnknownLink(format!("{src} and {dest}"))),
                };
                let l = &mut self.links[link];
                l.up = true;
                l.busy_until = [now; 2];
                self.input(a.0, now, Input::InterfaceUp(a.1))?;
                self.input(b.0, now, Input::InterfaceUp(b.1))?;
            }
            ActionKind::Disconnect { src, dest } => {
                let a = self.config.resolve(&src.module, &src.gate)?;
                let link = match dest {
                    Some(d) => {
                        let b = self.config.resolve(&d.module, &d.gate)?;
                        self.find_link(a, b).ok_or_else(|| SimError::UnknownLink(format!("{src} and {d}")))?
                    }
                    None => self.nodes[a.0].iface_links[a.1].ok_or_else(|| SimError::UnknownLink(src.to_string()))?,
                };
                if !self.links[link].up {
                    return Err(SimError::AlreadyInState(self.link_name(link)));
                }
                let l = &mut self.links[link];
                l.up = false;
                l.generation += 1;
                let other = if l.ends[0] == a { l.ends[1] } else { l.ends[0] };
                self.input(a.0, now, Input::InterfaceDown(a.1))?;
                self.input(other.0, now, Input::InterfaceDown(other.1))?;
            }
        }
        Ok(())
    }

    fn input(&mut self, n: usize, now: SimTime, input: Input) -> Result<(), SimError> {
        let outputs = self.nodes[n].instance.handle(now, input);
        for o in outputs {
            match o {
                Output::Timer { at, kind } => {
                    self.sched.schedule(at, priority::TIMER, Event::Timer(n, kind))?;
                }
                Output::Send { iface, dst, packet } => self.transmit(n, iface, dst, &packet, now)?,
            }
        }
        let node = &mut self.nodes[n];
        let delta = node.table.sync(&node.instance);
        for r in &delta.removed {
            info!("{} t={now} route removed: {r}", node.name);
        }
        for r in &delta.added {
            info!("{} t={now} route added: {r}", node.name);
        }
        Ok(())
    }

    fn transmit(
        &mut self,
        n: usize,
        iface: usize,
        dst: Destination,
        packet: &EigrpPacket,
        now: SimTime,
    ) -> Result<(), SimError> {
        let Some(link) = self.nodes[n].iface_links[iface] else {
            debug!("{}: no link on interface {iface}, packet dropped", self.nodes[n].name);
            return Ok(());
        };
        if !self.links[link].up {
            debug!("{}: link down, {} dropped", self.nodes[n].name, packet.header.opcode);
            return Ok(());
        }
        let payload = match encode_packet(packet) {
            Ok(p) => p,
            Err(e) => {
                warn!("{}: refusing to send malformed packet: {e}", self.nodes[n].name);
                return Ok(());
            }
        };
        let l = &self.links[link];
        let side = usize::from(l.ends[0] != (n, iface));
        let peer = l.ends[1 - side];
        let node = &mut self.nodes[n];
        node.ip_id = node.ip_id.wrapping_add(1);
        let (dst_ip, dst_mac) = match dst {
            Destination::Multicast => (EIGRP_MULTICAST, MacAddr::for_multicast(EIGRP_MULTICAST)),
            Destination::Unicast(a) => (a, MacAddr::for_interface(self.nodes[peer.0].index, peer.1 as u8)),
        };
        let node = &self.nodes[n];
        let meta = FrameMeta {
            src_mac: MacAddr::for_interface(node.index, iface as u8),
            dst_mac,
            src_ip: node.instance.interface(iface).address.address,
            dst_ip,
            ttl: EIGRP_TTL,
            ip_id: node.ip_id,
        };
        let frame = encapsulate(&meta, &payload);
        let jitter = match &mut self.jitter {
            Some((rng, lo, hi)) => SimTime::from_picos(rng.random_range(*lo..=*hi)),
            None => SimTime::ZERO,
        };
        let start = (now + jitter).max(self.links[link].busy_until[side]);
        self.links[link].busy_until[side] = start + serialization_time(frame.len(), self.links[link].bandwidth_bps);
        if start == now {
            self.put_on_wire(link, side, now, frame)
        } else {
            self.sched.schedule(start, priority::DELIVERY, Event::TransmitStart { link, side, frame })?;
            Ok(())
        }
    }

    fn put_on_wire(&mut self, link: usize, side: usize, now: SimTime, frame: Vec<u8>) -> Result<(), SimError> {
        let l = &self.links[link];
        if !l.up {
            return Ok(());
        }
        let arrive = now + serialization_time(frame.len(), l.bandwidth_bps) + l.propagation;
        let generation = l.generation;
        self.trace.push(TraceRecord {
            point: self.point_name(l.ends[side]),
            direction: Direction::Out,
            time: now,
            link,
            frame: frame.clone(),
        });
        self.sched.schedule(arrive, priority::DELIVERY, Event::Deliver { link, side, generation, frame })?;
        Ok(())
    }

    fn deliver(
        &mut self,
        link: usize,
        side: usize,
        generation: u64,
        now: SimTime,
        frame: Vec<u8>,
    ) -> Result<(), SimError> {
        let l = &self.links[link];
        if !l.up || l.generation != generation {
            debug!("frame lost on {} (link changed in flight)", self.link_name(link));
            return Ok(());
        }
        let (n, iface) = l.ends[1 - side];
        let (meta, payload) = match decapsulate(&frame) {
            Ok(Some(x)) => x,
            Ok(None) => return Ok(()),
            Err(e) => {
                warn!("{}: bad frame: {e}", self.nodes[n].name);
                return Ok(());
            }
        };
        let packet = match decode_packet(payload) {
            Ok(p) => p,
            Err(e) => {
                warn!("{}: undecodable EIGRP packet: {e}", self.nodes[n].name);
                return Ok(());
            }
        };
        if let Some(f) = &mut self.filter {
            if !f(&self.nodes[n].name, &packet) {
                debug!("{}: frame dropped by delivery filter", self.nodes[n].name);
                return Ok(());
            }
        }
        self.trace.push(TraceRecord {
            point: self.point_name((n, iface)),
            direction: Direction::In,
            time: now,
            link,
            frame: frame.clone(),
        });
        let (src, dst): (Ipv4Addr, Ipv4Addr) = (meta.src_ip, meta.dst_ip);
        self.input(n, now, Input::Receive { iface, src, dst, packet })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Opcode;

    const TWO: &str = r#"
[[router]]
name = "A"
start = "1"
eigrp = { as = 1 }
interface = [{ name = "e0", address = "10.0.0.1/30" }, { name = "e1", address = "192.168.1.1/24" }]

[[router]]
name = "B"
start = "1"
eigrp = { as = 1 }
interface = [{ name = "e0", address = "10.0.0.2/30" }]

[[link]]
a = "A.e0"
b = "B.e0"
"#;

    fn opcodes(sim: &Simulation) -> Vec<Opcode> {
        sim.link_records(0, Window::ALL)
            .iter()
            .map(|r| {
                let (_, p) = decapsulate(&r.frame).unwrap().unwrap();
                decode_packet(p).unwrap().header.opcode
            })
            .collect()
    }

    #[test]
    fn serialization_of_minimum_frame() {
        // 60 bytes at 10 Mb/s
        assert_eq!(serialization_time(60, 10_000_000), SimTime::from_micros(48));
    }

    #[test]
    fn two_routers_converge() {
        let mut sim = Simulation::from_toml(TWO).unwrap();
        sim.run(SimTime::from_secs(10)).unwrap();
        let b = sim.instance("B").unwrap();
        let t = crate::tables::routing_table(b);
        let lines: Vec<String> = t.iter().map(|e| e.to_string()).collect();
        assert_eq!(
            lines,
            ["C 10.0.0.0/30 [0/0] via connected, e0", "D 192.168.1.0/24 [90/307200] via 10.0.0.1, e0"]
        );
        let ops = opcodes(&sim);
        assert_eq!(ops[0], Opcode::Hello);
        assert!(ops.contains(&Opcode::Update));
    }

    #[test]
    fn frames_on_one_side_do_not_overlap() {
        let mut sim = Simulation::from_toml(TWO).unwrap();
        sim.run(SimTime::from_secs(3)).unwrap();
        let recs = sim.point_records("A.e0", Window::ALL).unwrap();
        let outs: Vec<_> = recs.iter().filter(|r| r.direction == Direction::Out).collect();
        for w in outs.windows(2) {
            assert!(w[1].time >= w[0].time + serialization_time(w[0].frame.len(), 10_000_000));
        }
    }

    #[test]
    fn disconnect_then_reconnect() {
        let mut sim = Simulation::from_toml(TWO).unwrap();
        let xml = r#"<scenario><at t="20"><disconnect src-module="A" src-gate="e0"/></at>
            <at t="21"><disconnect src-module="A" src-gate="e0"/></at>
            <at t="30"><connect src-module="B" src-gate="e0" dest-module="A" dest-gate="e0"/></at></scenario>"#;
        sim.add_scenario(load_scenario(xml).unwrap()).unwrap();
        sim.run(SimTime::from_secs(25)).unwrap();
        assert_eq!(crate::tables::routing_table(sim.instance("B").unwrap()).len(), 0);
        let before = sim.trace().len();
        sim.run(SimTime::from_secs(29)).unwrap();
        assert_eq!(sim.trace().len(), before, "nothing crosses a down link");
        sim.run(SimTime::from_secs(40)).unwrap();
        assert_eq!(crate::tables::routing_table(sim.instance("B").unwrap()).len(), 2);
    }

    #[test]
    fn unknown_gate_in_scenario_is_rejected() {
        let mut sim = Simulation::from_toml(TWO).unwrap();
        let xml = r#"<scenario><at t="2"><disconnect src-module="A" src-gate="e7"/></at></scenario>"#;
        assert!(matches!(
            sim.add_scenario(load_scenario(xml).unwrap()),
            Err(SimError::Topology(TopologyError::UnknownInterface { .. }))
        ));
    }

    #[test]
    fn window_is_half_open() {
        let w = Window::new(SimTime::from_secs(1), SimTime::from_secs(2));
        assert!(w.contains(SimTime::from_secs(1)));
        assert!(!w.contains(SimTime::from_secs(2)));
    }
}
