// SPDX-License-Identifier: Apache-2.0
//! EIGRP protocol instance: neighbors, reliable transport and DUAL.

pub mod config;
pub mod dual;
pub mod instance;
pub mod metric;
pub mod neighbor;

pub use config::{EigrpConfig, InterfaceSpec};
pub use dual::{DualState, RouteSource, TopologyEntry, Via};
pub use instance::{Advertisement, Counters, Destination, EigrpInstance, Input, Output, TimerKind};
pub use metric::{compose, compute_metric, feasibility_check, RouteComponents, METRIC_INFINITY};
pub use neighbor::{IfaceId, Neighbor, NeighborState, NeighborSummary};
