// SPDX-License-Identifier: Apache-2.0
//! Neighbor table entries and per-neighbor reliable transport state.

use std::collections::VecDeque;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::codec::EigrpPacket;
use crate::time::SimTime;

pub type IfaceId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborState {
    Pending,
    Up,
}

impl fmt::Display for NeighborState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborState::Pending => "pending",
            NeighborState::Up => "up",
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Queued {
    pub packet: EigrpPacket,
    pub multicast: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct InFlight {
    pub packet: EigrpPacket,
    pub retries: u32,
    pub deadline: SimTime,
}

#[derive(Debug, Clone)]
pub struct Neighbor {
    pub address: Ipv4Addr,
    pub iface: IfaceId,
    pub state: NeighborState,
    /// Hold time the neighbor advertised.
    pub hold_time: u16,
    pub hold_deadline: SimTime,
    /// Sequence number of the last reliable packet accepted from the neighbor.
    pub last_seq_received: u32,
    pub(crate) peer_init_received: bool,
    pub(crate) init_acked: bool,
    pub(crate) ack_pending: Option<u32>,
    pub(crate) queue: VecDeque<Queued>,
    pub(crate) in_flight: Option<InFlight>,
}

impl Neighbor {
    pub(crate) fn new(address: Ipv4Addr, iface: IfaceId, hold_time: u16, now: SimTime) -> Self {
        Neighbor {
            address,
            iface,
            state: NeighborState::Pending,
            hold_time,
            hold_deadline: now + SimTime::from_secs(u64::from(hold_time)),
            last_seq_received: 0,
            peer_init_received: false,
            init_acked: false,
            ack_pending: None,
            queue: VecDeque::new(),
            in_flight: None,
        }
    }

    /// Packets queued or awaiting acknowledgment.
    pub fn pending_reliable(&self) -> usize {
        self.queue.len() + usize::from(self.in_flight.is_some())
    }

    pub fn retransmissions(&self) -> u32 {
        self.in_flight.as_ref().map_or(0, |f| f.retries)
    }

    pub fn summary(&self) -> NeighborSummary {
        NeighborSummary {
            address: self.address,
            iface: self.iface,
            state: self.state,
            hold_time: self.hold_time,
            last_seq_received: self.last_seq_received,
            queued: self.pending_reliable(),
        }
    }
}

/// Immutable view of a neighbor for snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSummary {
    pub address: Ipv4Addr,
    pub iface: IfaceId,
    pub state: NeighborState,
    pub hold_time: u16,
    pub last_seq_received: u32,
    pub queued: usize,
}
