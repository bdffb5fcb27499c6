// SPDX-License-Identifier: Apache-2.0
//! Discrete-event queue ordered by (time, priority, insertion order).

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::time::SimTime;

/// Tie-break classes for events at the same instant. Lower runs first.
pub mod priority {
    pub const DELIVERY: u8 = 0;
    pub const TIMER: u8 = 1;
    pub const SNAPSHOT: u8 = 2;
    pub const SCENARIO: u8 = 3;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("cannot schedule at {at}, clock is already at {now}")]
    PastTime { at: SimTime, now: SimTime },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

struct Entry<T> {
    time: SimTime,
    priority: u8,
    seq: u64,
    payload: T,
}

impl<T> Entry<T> {
    fn key(&self) -> (SimTime, u8, u64) {
        (self.time, self.priority, self.seq)
    }
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<T> Eq for Entry<T> {}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

pub struct Scheduler<T> {
    heap: BinaryHeap<Reverse<Entry<T>>>,
    cancelled: BTreeSet<u64>,
    now: SimTime,
    next_seq: u64,
}

impl<T> Default for Scheduler<T> {
    fn default() -> Self {
        Scheduler { heap: BinaryHeap::new(), cancelled: BTreeSet::new(), now: SimTime::ZERO, next_seq: 0 }
    }
}

impl<T> Scheduler<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schedule(&mut self, time: SimTime, priority: u8, payload: T) -> Result<EventHandle, SchedulerError> {
        if time < self.now {
            return Err(SchedulerError::PastTime { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { time, priority, seq, payload }));
        Ok(EventHandle(seq))
    }

    /// Returns false if the event already fired or was cancelled.
    pub fn cancel(&mut self, h: EventHandle) -> bool {
        if h.0 >= self.next_seq || self.heap.iter().all(|Reverse(e)| e.seq != h.0) {
            return false;
        }
        self.cancelled.insert(h.0)
    }

    /// Removes the next event at or before `until` and moves the clock to it.
    pub fn pop_until(&mut self, until: SimTime) -> Option<(SimTime, T)> {
        loop {
            let Reverse(head) = self.heap.peek()?;
            if head.time > until {
                return None;
            }
            let Reverse(e) = self.heap.pop().expect("peeked");
            if self.cancelled.remove(&e.seq) {
                continue;
            }
            self.now = e.time;
            return Some((e.time, e.payload));
        }
    }

    /// Moves the clock forward without firing anything.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn priority_breaks_ties() {
        let mut s = Scheduler::new();
        let t = SimTime::from_secs(5);
        s.schedule(t, 1, "b").unwrap();
        s.schedule(t, 0, "a").unwrap();
        assert_eq!(s.pop_until(t).unwrap().1, "a");
        assert_eq!(s.pop_until(t).unwrap().1, "b");
    }

    #[test]
    fn now_fires_before_later_and_past_is_rejected() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::from_secs(2), 0, 2).unwrap();
        s.pop_until(SimTime::from_secs(10)).unwrap();
        s.schedule(SimTime::from_secs(3), 0, 3).unwrap();
        s.schedule(SimTime::from_secs(2), 3, 1).unwrap();
        assert_eq!(s.pop_until(SimTime::from_secs(10)).unwrap().1, 1);
        assert_eq!(
            s.schedule(SimTime::from_secs(1), 0, 0),
            Err(SchedulerError::PastTime { at: SimTime::from_secs(1), now: SimTime::from_secs(2) })
        );
    }

    #[test]
    fn cancelled_events_never_fire() {
        let mut s = Scheduler::new();
        let h = s.schedule(SimTime::from_secs(1), 0, 'x').unwrap();
        s.schedule(SimTime::from_secs(2), 0, 'y').unwrap();
        assert!(s.cancel(h));
        assert!(!s.cancel(h));
        assert_eq!(s.len(), 1);
        assert_eq!(s.pop_until(SimTime::from_secs(5)).unwrap().1, 'y');
        assert!(s.pop_until(SimTime::from_secs(5)).is_none());
    }

    #[test]
    fn random_events_match_sorted_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = Scheduler::new();
        let mut expected = Vec::new();
        for i in 0..10_000u64 {
            let t = SimTime::from_micros(rng.random_range(0..500));
            let p = rng.random_range(0..4u8);
            s.schedule(t, p, i).unwrap();
            expected.push((t, p, i));
        }
        expected.sort();
        let mut got = Vec::new();
        while let Some((_, i)) = s.pop_until(SimTime::from_secs(1)) {
            got.push(i);
        }
        assert_eq!(got, expected.into_iter().map(|e| e.2).collect::<Vec<_>>());
    }
}
