// SPDX-License-Identifier: Apache-2.0
//! Topology table entries and the DUAL selection rules that do not need
//! the rest of the instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::metric::{RouteComponents, METRIC_INFINITY};
use super::neighbor::IfaceId;
use crate::prefix::Ipv4Prefix;

/// Where a route source came from. Connected sorts before any neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Via {
    Connected,
    Neighbor(Ipv4Addr),
}

impl Via {
    pub fn neighbor(&self) -> Option<Ipv4Addr> {
        match self {
            Via::Connected => None,
            Via::Neighbor(a) => Some(*a),
        }
    }
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Via::Connected => f.write_str("connected"),
            Via::Neighbor(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualState {
    Passive,
    Active,
}

impl fmt::Display for DualState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualState::Passive => "P",
            DualState::Active => "A",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSource {
    pub via: Via,
    pub iface: IfaceId,
    /// Vector as the neighbor advertised it.
    pub reported: RouteComponents,
    /// Vector after adding the receiving interface.
    pub total: RouteComponents,
    pub reported_distance: u32,
    pub metric: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyEntry {
    pub destination: Ipv4Prefix,
    pub feasible_distance: u32,
    /// Metric of the installed successors.
    pub distance: u32,
    /// Vector advertised for this destination while Passive.
    pub advertised: RouteComponents,
    pub state: DualState,
    pub successors: BTreeSet<Via>,
    pub sources: BTreeMap<Via, RouteSource>,
    pub replies_outstanding: BTreeSet<Ipv4Addr>,
    /// Queriers still owed a reply once the diffusion completes.
    pub deferred_replies: BTreeSet<Ipv4Addr>,
    /// FD against which the current successors were accepted.
    pub selected_against: u32,
}

/// Outcome of evaluating a Passive destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Selection {
    /// Nothing reachable and nothing installed: stays unreachable.
    Unreachable,
    /// Feasible successors found.
    Passive { best: u32, successors: BTreeSet<Via> },
    /// No feasible successor: a diffusing computation is needed.
    NeedsActive,
}

impl TopologyEntry {
    pub fn new(destination: Ipv4Prefix) -> Self {
        TopologyEntry {
            destination,
            feasible_distance: METRIC_INFINITY,
            distance: METRIC_INFINITY,
            advertised: RouteComponents::UNREACHABLE,
            state: DualState::Passive,
            successors: BTreeSet::new(),
            sources: BTreeMap::new(),
            replies_outstanding: BTreeSet::new(),
            deferred_replies: BTreeSet::new(),
            selected_against: METRIC_INFINITY,
        }
    }

    pub fn best_metric(&self) -> Option<u32> {
        self.sources.values().map(|s| s.metric).filter(|m| *m != METRIC_INFINITY).min()
    }

    pub fn is_reachable(&self) -> bool {
        self.distance != METRIC_INFINITY
    }

    pub(crate) fn select(&self) -> Selection {
        let Some(best) = self.best_metric() else {
            return if self.successors.is_empty() && !self.is_reachable() {
                Selection::Unreachable
            } else {
                Selection::NeedsActive
            };
        };
        let successors: BTreeSet<Via> = self
            .sources
            .values()
            .filter(|s| s.metric == best && super::metric::feasibility_check(s.reported_distance, self.feasible_distance))
            .map(|s| s.via)
            .collect();
        if successors.is_empty() {
            Selection::NeedsActive
        } else {
            Selection::Passive { best, successors }
        }
    }

    /// Installs a Passive selection, lowering FD if the new best is smaller.
    pub(crate) fn install(&mut self, best: u32, successors: BTreeSet<Via>) {
        self.selected_against = self.feasible_distance;
        self.feasible_distance = self.feasible_distance.min(best);
        self.distance = best;
        self.advertised = self.sources[successors.iter().next().expect("non-empty")].total;
        self.successors = successors;
    }

    /// Leaves Active: FD resets to the best metric now known.
    pub(crate) fn reset_passive(&mut self) {
        self.state = DualState::Passive;
        self.replies_outstanding.clear();
        match self.best_metric() {
            Some(best) => {
                let succ: BTreeSet<Via> = self.sources.values().filter(|s| s.metric == best).map(|s| s.via).collect();
                self.feasible_distance = METRIC_INFINITY;
                self.install(best, succ);
            }
            None => self.make_unreachable(),
        }
    }

    pub(crate) fn make_unreachable(&mut self) {
        self.feasible_distance = METRIC_INFINITY;
        self.selected_against = METRIC_INFINITY;
        self.distance = METRIC_INFINITY;
        self.advertised = RouteComponents::UNREACHABLE;
        self.successors.clear();
    }

    /// Vector to put in a Reply or Update that is not subject to split horizon.
    pub fn advertisement(&self) -> RouteComponents {
        if self.state == DualState::Passive && self.is_reachable() {
            self.advertised
        } else {
            RouteComponents::UNREACHABLE
        }
    }

    pub fn successor_ifaces(&self) -> BTreeSet<IfaceId> {
        self.successors.iter().filter_map(|v| self.sources.get(v)).map(|s| s.iface).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::KValues;
    use crate::eigrp::metric::compose;

    fn src(via: Via, iface: IfaceId, rd_hops: u32) -> RouteSource {
        let link = RouteComponents::interface(10_000, 100);
        let mut reported = link;
        for _ in 1..rd_hops {
            reported = reported.through(&link);
        }
        let total = reported.through(&link);
        let k = KValues::default();
        RouteSource { via, iface, reported, total, reported_distance: compose(&reported, &k), metric: compose(&total, &k) }
    }

    fn n(last: u8) -> Via {
        Via::Neighbor(Ipv4Addr::new(10, 0, 0, last))
    }

    #[test]
    fn equal_cost_successors_survive_single_loss() {
        let mut e = TopologyEntry::new("10.0.23.0/30".parse().unwrap());
        e.sources.insert(n(2), src(n(2), 0, 1));
        e.sources.insert(n(3), src(n(3), 1, 1));
        let Selection::Passive { best, successors } = e.select() else { panic!() };
        assert_eq!(successors.len(), 2);
        e.install(best, successors);
        e.sources.remove(&n(2));
        assert_eq!(e.select(), Selection::Passive { best: 307_200, successors: [n(3)].into() });
    }

    #[test]
    fn equal_rd_and_fd_is_not_feasible() {
        let mut e = TopologyEntry::new("2.0.0.0/24".parse().unwrap());
        e.sources.insert(n(2), src(n(2), 0, 1));
        e.sources.insert(n(3), src(n(3), 1, 2));
        let Selection::Passive { best, successors } = e.select() else { panic!() };
        e.install(best, successors);
        assert_eq!(e.feasible_distance, 307_200);
        e.sources.remove(&n(2));
        assert_eq!(e.select(), Selection::NeedsActive);
    }

    #[test]
    fn unknown_destination_stays_unreachable() {
        let e = TopologyEntry::new("9.0.0.0/8".parse().unwrap());
        assert_eq!(e.select(), Selection::Unreachable);
    }
}
