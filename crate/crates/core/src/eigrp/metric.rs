// SPDX-License-Identifier: Apache-2.0
//! Classic composite metric.

use serde::{Deserialize, Serialize};

use crate::codec::{InternalRoute, KValues, DELAY_UNREACHABLE};

pub const METRIC_INFINITY: u32 = u32::MAX;
pub const DEFAULT_MTU: u32 = 1500;

/// Vector metric in wire units: `bandwidth` is `256 * 10^7 / kbps` of the
/// slowest link, `delay` is the summed tens of microseconds times 256.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteComponents {
    pub bandwidth: u32,
    pub delay: u32,
    pub hop_count: u8,
    pub mtu: u32,
    pub reliability: u8,
    pub load: u8,
}

impl RouteComponents {
    pub const UNREACHABLE: RouteComponents =
        RouteComponents { bandwidth: 0, delay: DELAY_UNREACHABLE, hop_count: 0, mtu: 0, reliability: 0, load: 0 };

    /// Components of a directly attached network.
    pub fn interface(bandwidth_kbps: u32, delay_tens_us: u32) -> Self {
        RouteComponents {
            bandwidth: scaled_bandwidth(bandwidth_kbps),
            delay: scaled_delay(delay_tens_us),
            hop_count: 0,
            mtu: DEFAULT_MTU,
            reliability: 255,
            load: 1,
        }
    }

    pub fn from_route(r: &InternalRoute) -> Self {
        RouteComponents {
            bandwidth: r.bandwidth,
            delay: r.delay,
            hop_count: r.hop_count,
            mtu: r.mtu,
            reliability: r.reliability,
            load: r.load,
        }
    }

    pub fn is_unreachable(&self) -> bool {
        self.delay == DELAY_UNREACHABLE
    }

    /// Same vector with the delay set to infinity (poison reverse).
    pub fn poisoned(self) -> Self {
        RouteComponents { delay: DELAY_UNREACHABLE, ..self }
    }

    /// Extends a neighbor's advertised vector across the receiving interface.
    pub fn through(self, link: &RouteComponents) -> Self {
        if self.is_unreachable() {
            return self;
        }
        RouteComponents {
            bandwidth: self.bandwidth.max(link.bandwidth),
            delay: self.delay.saturating_add(link.delay).min(DELAY_UNREACHABLE - 1),
            hop_count: self.hop_count.saturating_add(1),
            mtu: self.mtu.min(link.mtu),
            reliability: self.reliability.min(link.reliability),
            load: self.load.max(link.load),
        }
    }
}

pub fn scaled_bandwidth(kbps: u32) -> u32 {
    if kbps == 0 {
        return u32::MAX;
    }
    (10_000_000 / kbps).saturating_mul(256)
}

pub fn scaled_delay(tens_us: u32) -> u32 {
    if tens_us == DELAY_UNREACHABLE {
        return DELAY_UNREACHABLE;
    }
    tens_us.saturating_mul(256).min(DELAY_UNREACHABLE - 1)
}

/// `K1*BW + K2*BW/(256-load) + K3*delay`, scaled by `K5/(reliability+K4)`
/// when K5 is set. Saturates to [`METRIC_INFINITY`].
pub fn compose(c: &RouteComponents, k: &KValues) -> u32 {
    if c.is_unreachable() {
        return METRIC_INFINITY;
    }
    let bw = u128::from(c.bandwidth);
    let delay = u128::from(c.delay);
    let mut m = u128::from(k.k1) * bw + u128::from(k.k3) * delay;
    if k.k2 != 0 {
        m += u128::from(k.k2) * bw / (256 - u128::from(c.load));
    }
    if k.k5 != 0 {
        let denom = u128::from(c.reliability) + u128::from(k.k4);
        m = (m * u128::from(k.k5)).checked_div(denom).unwrap_or(u128::MAX);
    }
    u32::try_from(m).unwrap_or(METRIC_INFINITY)
}

/// Metric of a path given its slowest link in kbps and total delay in tens of
/// microseconds.
pub fn compute_metric(min_bw_kbps: u32, delay_tens_us: u32, k: &KValues) -> u32 {
    if delay_tens_us == DELAY_UNREACHABLE || min_bw_kbps == 0 {
        return METRIC_INFINITY;
    }
    let c = RouteComponents {
        bandwidth: scaled_bandwidth(min_bw_kbps),
        delay: scaled_delay(delay_tens_us),
        ..RouteComponents::interface(min_bw_kbps, 0)
    };
    compose(&c, k)
}

/// DUAL feasibility condition.
pub fn feasibility_check(reported: u32, feasible_distance: u32) -> bool {
    reported < feasible_distance
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> KValues {
        KValues::default()
    }

    #[test]
    fn hand_evaluated_metrics() {
        assert_eq!(compute_metric(10_000, 100, &k()), 281_600);
        assert_eq!(compute_metric(10_000, 200, &k()), 307_200);
        assert_eq!(compute_metric(10_000, 300, &k()), 332_800);
        assert_eq!(compute_metric(10_000, DELAY_UNREACHABLE, &k()), METRIC_INFINITY);
    }

    #[test]
    fn components_accumulate_per_hop() {
        let link = RouteComponents::interface(10_000, 100);
        let two = link.through(&link);
        let three = two.through(&link);
        assert_eq!(compose(&link, &k()), 281_600);
        assert_eq!(compose(&two, &k()), 307_200);
        assert_eq!(compose(&three, &k()), 332_800);
        assert_eq!(three.hop_count, 2);
        assert_eq!(compose(&link.poisoned().through(&link), &k()), METRIC_INFINITY);
    }

    #[test]
    fn slowest_link_dominates() {
        let fast = RouteComponents::interface(100_000, 10);
        let slow = RouteComponents::interface(1_544, 2_000);
        let c = fast.through(&slow);
        assert_eq!(compose(&c, &k()), 256 * (10_000_000 / 1_544 + 2_010));
    }

    #[test]
    fn feasibility_is_strict() {
        assert!(feasibility_check(281_600, 307_200));
        assert!(!feasibility_check(307_200, 307_200));
        assert!(feasibility_check(4_000_000_000, METRIC_INFINITY));
    }

    #[test]
    fn k5_reliability_term() {
        let kv = KValues { k1: 1, k2: 0, k3: 1, k4: 0, k5: 1 };
        let c = RouteComponents::interface(10_000, 100);
        assert_eq!(compose(&c, &kv), 281_600 / 255);
    }
}
