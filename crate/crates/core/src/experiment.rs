// SPDX-License-Identifier: Apache-2.0
//! Runnable experiments: a topology, timed actions, capture links and the
//! two instants at which every router's tables are snapshotted.

use serde::Serialize;

use crate::sim::{load_scenario, SimError, Simulation, TopologyConfig, Window};
use crate::tables::TableSnapshot;
use crate::time::SimTime;

pub const TRIANGLE: &str = include_str!("../fixtures/topologies/triangle.toml");
pub const TRIANGLE_R1R2_DOWN: &str = include_str!("../fixtures/topologies/triangle_r1r2_down.toml");
pub const SCENARIO1_XML: &str = include_str!("../fixtures/scenarios/scenario1.xml");
pub const SCENARIO2_XML: &str = include_str!("../fixtures/scenarios/scenario2.xml");

pub const BUILTIN: [&str; 2] = ["scenario1", "scenario2"];

/// Idle time after the last action before a custom run stops.
pub const SETTLE: SimTime = SimTime::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Capture {
    pub a: String,
    pub b: String,
}

impl Capture {
    pub fn new(a: &str, b: &str) -> Self {
        Capture { a: a.into(), b: b.into() }
    }

    /// File-name friendly form, e.g. `R1_ethg0--R2_ethg0`.
    pub fn file_stem(&self) -> String {
        let clean = |s: &str| s.replace('.', "_").replace(['[', ']'], "");
        format!("{}--{}", clean(&self.a), clean(&self.b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub name: String,
    pub topology: String,
    pub scenario: String,
    pub captures: Vec<Capture>,
    pub window: Window,
    /// Router whose tables the experiment is about.
    pub observed: Option<String>,
    pub before: SimTime,
    pub after: SimTime,
}

impl Experiment {
    /// Adding the R1-R2 link at t=100 to an already converged R1-R3-R2 chain.
    pub fn scenario1() -> Self {
        Experiment {
            name: "scenario1".into(),
            topology: TRIANGLE_R1R2_DOWN.into(),
            scenario: SCENARIO1_XML.into(),
            captures: vec![Capture::new("R1.ethg[0]", "R2.ethg[0]")],
            window: Window::new(SimTime::from_secs(100), SimTime::from_millis(100_500)),
            observed: Some("R1".into()),
            before: SimTime::from_secs(99),
            after: SimTime::from_secs(130),
        }
    }

    /// Removing the R1-R2 link at t=50 from the converged triangle.
    pub fn scenario2() -> Self {
        Experiment {
            name: "scenario2".into(),
            topology: TRIANGLE.into(),
            scenario: SCENARIO2_XML.into(),
            captures: vec![Capture::new("R1.ethg[1]", "R3.ethg[0]")],
            window: Window::new(SimTime::from_secs(50), SimTime::from_millis(50_500)),
            observed: Some("R1".into()),
            before: SimTime::from_secs(49),
            after: SimTime::from_secs(80),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "scenario1" => Some(Self::scenario1()),
            "scenario2" => Some(Self::scenario2()),
            _ => None,
        }
    }

    /// A user-supplied topology and scenario. Every link is captured over the
    /// whole run; tables are snapshotted just before the first action and at
    /// the end.
    pub fn custom(name: &str, topology: &str, scenario: &str, until: Option<SimTime>) -> Result<Self, SimError> {
        let cfg = TopologyConfig::from_toml(topology)?;
        let actions = load_scenario(scenario)?;
        let first = actions.first().map_or(SimTime::ZERO, |a| a.at);
        let last = actions.last().map_or(SimTime::ZERO, |a| a.at);
        let boot = cfg.routers.iter().map(|r| r.start).max().unwrap_or(SimTime::ZERO);
        let after = until.unwrap_or(last.max(boot) + SETTLE);
        Ok(Experiment {
            name: name.into(),
            topology: topology.into(),
            scenario: scenario.into(),
            captures: cfg.links.iter().map(|l| Capture::new(&l.a, &l.b)).collect(),
            window: Window::new(SimTime::ZERO, after + SimTime::from_picos(1)),
            observed: None,
            before: first.min(after),
            after,
        })
    }

    pub fn simulation(&self, seed: u64, jitter: Option<(SimTime, SimTime)>) -> Result<Simulation, SimError> {
        let mut sim = Simulation::from_toml(&self.topology)?;
        if let Some((lo, hi)) = jitter {
            sim.set_jitter(seed, lo, hi);
        }
        sim.add_scenario(load_scenario(&self.scenario)?)?;
        sim.schedule_snapshot(self.before)?;
        if self.after != self.before {
            sim.schedule_snapshot(self.after)?;
        }
        Ok(sim)
    }

    pub fn run(&self, seed: u64, jitter: Option<(SimTime, SimTime)>) -> Result<ExperimentRun, SimError> {
        let mut sim = self.simulation(seed, jitter)?;
        sim.run(self.after)?;
        let mut pcaps = Vec::new();
        for c in &self.captures {
            let link = sim.link_between(&c.a, &c.b)?;
            pcaps.push((c.clone(), sim.export_link(link, self.window)));
        }
        let mut before = Vec::new();
        let mut after = Vec::new();
        for s in sim.snapshots() {
            if s.at == self.before {
                before.push(s.clone());
            }
            if s.at == self.after {
                after.push(s.clone());
            }
        }
        Ok(ExperimentRun { pcaps, before, after, sim })
    }
}

pub struct ExperimentRun {
    pub pcaps: Vec<(Capture, Vec<u8>)>,
    /// One per router, in topology order.
    pub before: Vec<TableSnapshot>,
    pub after: Vec<TableSnapshot>,
    pub sim: Simulation,
}

impl ExperimentRun {
    pub fn pcap(&self) -> &[u8] {
        &self.pcaps[0].1
    }

    pub fn before_of(&self, node: &str) -> Option<&TableSnapshot> {
        self.before.iter().find(|s| s.node == node)
    }

    pub fn after_of(&self, node: &str) -> Option<&TableSnapshot> {
        self.after.iter().find(|s| s.node == node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capture_file_stem() {
        assert_eq!(Capture::new("R1.ethg[0]", "R2.ethg[0]").file_stem(), "R1_ethg0--R2_ethg0");
    }

    #[test]
    fn custom_defaults() {
        let e = Experiment::custom("x", TRIANGLE, SCENARIO2_XML, None).unwrap();
        assert_eq!(e.before, SimTime::from_secs(50));
        assert_eq!(e.after, SimTime::from_secs(80));
        assert_eq!(e.captures.len(), 3);
    }
}
