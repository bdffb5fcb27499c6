// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv4Addr;

use proptest::prelude::*;

use eigrp_vv::codec::{Flags, Opcode, TlvKind};
use eigrp_vv::experiment::Experiment;
use eigrp_vv::harness::{align_traces, diff_tables, MessageSummary, RouteMark, RowVerdict};
use eigrp_vv::prefix::Ipv4Prefix;
use eigrp_vv::sim::{priority, Scheduler};
use eigrp_vv::tables::{RouteKind, RoutingEntry, TableSnapshot};
use eigrp_vv::time::SimTime;

fn arb_prefix() -> impl Strategy<Value = Ipv4Prefix> {
    (any::<u32>(), 8u8..=30).prop_map(|(a, l)| Ipv4Prefix::new(Ipv4Addr::from(a), l).unwrap())
}

fn arb_message() -> impl Strategy<Value = MessageSummary> {
    (
        prop_oneof![Just(Opcode::Hello), Just(Opcode::Update), Just(Opcode::Query), Just(Opcode::Reply)],
        0u32..16,
        0u32..20,
        0u32..20,
        any::<bool>(),
        any::<bool>(),
        proptest::collection::vec((arb_prefix(), any::<bool>()), 0..4),
    )
        .prop_map(|(opcode, flags, seq, ack, from_a, multicast, routes)| {
            let src = if from_a { Ipv4Addr::new(10, 0, 0, 1) } else { Ipv4Addr::new(10, 0, 0, 2) };
            let hello = opcode == Opcode::Hello;
            MessageSummary {
                index: 0,
                timestamp: None,
                opcode,
                flags: Flags(if opcode == Opcode::Update { flags } else { flags & !1 }),
                sequence: if hello { 0 } else { seq + 1 },
                acknowledgment: ack,
                src,
                dst: if multicast { Ipv4Addr::new(224, 0, 0, 10) } else { Ipv4Addr::new(10, 0, 0, 3) },
                multicast,
                routes: if hello { vec![] } else { routes.into_iter().map(|(prefix, reachable)| RouteMark { prefix, reachable }).collect() },
                tlv_kinds: if hello && ack == 0 { vec![TlvKind::Parameters] } else { vec![] },
                checksum_ok: true,
                note: None,
            }
        })
}

fn arb_trace() -> impl Strategy<Value = Vec<MessageSummary>> {
    proptest::collection::vec(arb_message(), 0..30).prop_map(|mut v| {
        for (i, m) in v.iter_mut().enumerate() {
            m.index = i + 1;
        }
        v
    })
}

fn arb_entry() -> impl Strategy<Value = RoutingEntry> {
    (arb_prefix(), any::<bool>(), 1u32..10_000_000, any::<u32>(), 0usize..4).prop_map(|(destination, connected, metric, hop, iface)| {
        if connected {
            RoutingEntry {
                source: RouteKind::Connected,
                destination,
                metric: 0,
                next_hop: None,
                exit_interface: format!("ethg[{iface}]"),
                administrative_distance: 0,
            }
        } else {
            RoutingEntry {
                source: RouteKind::Eigrp,
                destination,
                metric,
                next_hop: Some(Ipv4Addr::from(hop)),
                exit_interface: format!("ethg[{iface}]"),
                administrative_distance: 90,
            }
        }
    })
}

fn arb_snapshot() -> impl Strategy<Value = TableSnapshot> {
    (proptest::collection::vec(arb_entry(), 0..12), 0u64..1000).prop_map(|(mut routing, t)| {
        routing.sort_by_key(|e| e.sort_key());
        routing.dedup_by_key(|e| e.sort_key());
        TableSnapshot { node: "R1".into(), at: SimTime::from_secs(t), routing, topology: vec![], neighbors: vec![] }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn a_trace_aligns_with_itself(t in arb_trace()) {
        let rows = align_traces(&t, &t);
        prop_assert!(rows.iter().all(|r| r.verdict == RowVerdict::Match), "{rows:?}");
        let covered: Vec<usize> = rows.iter().flat_map(|r| r.reference_indices.clone()).collect();
        let mut sorted = covered.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=t.len()).collect::<Vec<_>>());
    }

    #[test]
    fn alignment_accounts_for_every_message(a in arb_trace(), b in arb_trace()) {
        let rows = align_traces(&a, &b);
        let mut r: Vec<usize> = rows.iter().flat_map(|x| x.reference_indices.clone()).collect();
        let mut s: Vec<usize> = rows.iter().flat_map(|x| x.simulated_indices.clone()).collect();
        r.sort_unstable();
        s.sort_unstable();
        prop_assert_eq!(r, (1..=a.len()).collect::<Vec<_>>());
        prop_assert_eq!(s, (1..=b.len()).collect::<Vec<_>>());
    }

    #[test]
    fn snapshot_text_round_trips(s in arb_snapshot()) {
        let back = TableSnapshot::parse(&s.to_text()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn a_table_has_no_differences_with_itself(s in arb_snapshot()) {
        prop_assert!(diff_tables(&s, &s).unwrap().is_empty());
    }

    #[test]
    fn dropping_a_route_is_reported(s in arb_snapshot(), pick in any::<prop::sample::Index>()) {
        prop_assume!(!s.routing.is_empty());
        let mut t = s.clone();
        t.routing.remove(pick.index(s.routing.len()));
        prop_assert!(!diff_tables(&s, &t).unwrap().is_empty());
    }

    #[test]
    fn scheduler_pops_in_time_then_priority_then_fifo_order(
        events in proptest::collection::vec((0u64..50, prop_oneof![Just(priority::DELIVERY), Just(priority::TIMER), Just(priority::SNAPSHOT), Just(priority::SCENARIO)]), 0..60)
    ) {
        let mut s = Scheduler::new();
        for (i, (t, p)) in events.iter().enumerate() {
            s.schedule(SimTime::from_millis(*t), *p, i).unwrap();
        }
        let mut popped = Vec::new();
        while let Some((_, i)) = s.pop_until(SimTime::from_secs(1)) {
            popped.push(i);
        }
        let mut want: Vec<usize> = (0..events.len()).collect();
        want.sort_by_key(|&i| (events[i].0, events[i].1, i));
        prop_assert_eq!(popped, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn jittered_runs_are_reproducible_and_converge(seed in any::<u64>()) {
        let e = Experiment::scenario1();
        let jitter = Some((SimTime::ZERO, SimTime::from_millis(5)));
        let a = e.run(seed, jitter).unwrap();
        let b = e.run(seed, jitter).unwrap();
        prop_assert_eq!(a.pcap(), b.pcap());
        // Timing changes, the converged table does not.
        let plain = e.run(0, None).unwrap();
        prop_assert_eq!(&a.after_of("R1").unwrap().routing, &plain.after_of("R1").unwrap().routing);
    }
}
