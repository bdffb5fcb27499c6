// SPDX-License-Identifier: Apache-2.0
//! Ordered alignment of a reference message sequence with a simulated one.
//!
//! Messages are keyed by role and header flags. A pure acknowledgment is
//! keyed by the role and flags of the packet it acknowledges, found by
//! matching its ack number against earlier sequence numbers from the peer.
//! A row starts from two heads with equal keys and then absorbs, within the
//! window on each side, further messages with the same key that come from a
//! sender not yet in the row, or that retransmit a row member.

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::summary::{MessageKind, MessageSummary};
use crate::codec::Flags;

pub const ALIGN_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowVerdict {
    Match,
    Partial,
    ReferenceOnly,
    SimulatedOnly,
}

impl fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowVerdict::Match => "match",
            RowVerdict::Partial => "partial",
            RowVerdict::ReferenceOnly => "reference-only",
            RowVerdict::SimulatedOnly => "simulated-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRow {
    /// 1-based ordinals, as in [`MessageSummary::index`].
    pub reference_indices: Vec<usize>,
    pub simulated_indices: Vec<usize>,
    pub verdict: RowVerdict,
    pub description: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKey {
    Message(MessageKind, Flags),
    /// Role and flags of the acknowledged packet, when it is in the capture.
    Ack(Option<(MessageKind, Flags)>),
}

impl fmt::Display for MessageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flags = |fl: &Flags| if *fl == Flags::NONE { String::new() } else { format!(" [{fl}]") };
        match self {
            MessageKey::Message(k, fl) => write!(f, "{k}{}", flags(fl)),
            MessageKey::Ack(Some((k, fl))) => write!(f, "Ack of {k}{}", flags(fl)),
            MessageKey::Ack(None) => f.write_str("Ack"),
        }
    }
}

/// Role and flags of the packet that `msgs[i]` acknowledges, if captured.
fn acked(msgs: &[MessageSummary], i: usize) -> Option<(MessageKind, Flags)> {
    let m = &msgs[i];
    if m.acknowledgment == 0 {
        return None;
    }
    msgs[..i]
        .iter()
        .rev()
        .find(|p| p.sequence != 0 && p.sequence == m.acknowledgment && p.src != m.src)
        .map(|p| (p.kind(), p.flags))
}

/// Keys for a whole capture.
pub fn message_keys(msgs: &[MessageSummary]) -> Vec<MessageKey> {
    (0..msgs.len())
        .map(|i| match msgs[i].kind() {
            MessageKind::Ack => MessageKey::Ack(acked(msgs, i)),
            k => MessageKey::Message(k, msgs[i].flags),
        })
        .collect()
}

fn is_retransmission(orig: &MessageSummary, again: &MessageSummary) -> bool {
    orig.src == again.src
        && !matches!(orig.kind(), MessageKind::Ack | MessageKind::Hello)
        && orig.kind() == again.kind()
        && orig.flags == again.flags
        && (orig.sequence == 0 || again.sequence == 0 || orig.sequence == again.sequence)
        && orig.route_signature() == again.route_signature()
}

struct Side<'a> {
    msgs: &'a [MessageSummary],
    keys: Vec<MessageKey>,
    used: Vec<bool>,
    pos: usize,
}

impl<'a> Side<'a> {
    fn new(msgs: &'a [MessageSummary]) -> Self {
        Side { msgs, keys: message_keys(msgs), used: vec![false; msgs.len()], pos: 0 }
    }

    fn head(&mut self) -> Option<usize> {
        while self.pos < self.msgs.len() && self.used[self.pos] {
            self.pos += 1;
        }
        (self.pos < self.msgs.len()).then_some(self.pos)
    }

    fn find(&self, from: usize, key: MessageKey) -> Option<usize> {
        (from + 1..=(from + ALIGN_WINDOW).min(self.msgs.len().saturating_sub(1)))
            .find(|&k| !self.used[k] && self.keys[k] == key)
    }

    /// Takes `start` and everything the row may absorb after it.
    fn gather(&mut self, start: usize, notes: &mut Vec<String>, label: &str) -> Vec<usize> {
        let key = self.keys[start];
        let mut taken = vec![start];
        self.used[start] = true;
        let end = (start + ALIGN_WINDOW).min(self.msgs.len().saturating_sub(1));
        for k in start + 1..=end {
            if self.used[k] || self.keys[k] != key {
                continue;
            }
            let m = &self.msgs[k];
            if let Some(&orig) = taken.iter().find(|&&t| is_retransmission(&self.msgs[t], m)) {
                notes.push(format!(
                    "{label} #{} retransmits #{}, grouped with the original",
                    m.index, self.msgs[orig].index
                ));
            } else if taken.iter().any(|&t| self.msgs[t].src == m.src) {
                continue;
            }
            self.used[k] = true;
            taken.push(k);
        }
        taken
    }
}

fn describe(key: MessageKey, msgs: &[&MessageSummary]) -> String {
    let srcs: BTreeSet<Ipv4Addr> = msgs.iter().map(|m| m.src).collect();
    let srcs: Vec<String> = srcs.iter().map(|a| a.to_string()).collect();
    format!("{key} from {}", srcs.join(", "))
}

/// Compares the two sides of a row sender by sender.
fn compare_row(refs: &[&MessageSummary], sims: &[&MessageSummary], notes: &mut Vec<String>) -> RowVerdict {
    let mut verdict = RowVerdict::Match;
    // Pure acknowledgments match on role alone.
    let acks = refs.iter().chain(sims).all(|m| m.kind() == MessageKind::Ack);
    let missing = if acks { RowVerdict::Match } else { RowVerdict::Partial };
    let srcs: BTreeSet<Ipv4Addr> = refs.iter().chain(sims).map(|m| m.src).collect();
    for src in srcs {
        // A retransmission adds nothing to compare; use the first copy.
        let r = refs.iter().find(|m| m.src == src);
        let s = sims.iter().find(|m| m.src == src);
        let (r, s) = match (r, s) {
            (Some(r), Some(s)) => (r, s),
            (Some(r), None) => {
                notes.push(format!("reference #{} from {src} has no simulated counterpart in this row", r.index));
                verdict = verdict.max(missing);
                continue;
            }
            (None, Some(s)) => {
                notes.push(format!("simulated #{} from {src} has no reference counterpart in this row", s.index));
                verdict = verdict.max(missing);
                continue;
            }
            (None, None) => unreachable!(),
        };
        let diffs = super::diff::diff_messages(r, s).expect("rows pair equal roles");
        if !diffs.is_empty() {
            verdict = RowVerdict::Partial;
            for d in diffs {
                notes.push(format!("{src} (#{} vs #{}): {d}", r.index, s.index));
            }
        }
        if r.piggybacks_ack() != s.piggybacks_ack() {
            let (who, idx) = if s.piggybacks_ack() { ("simulated", s.index) } else { ("reference", r.index) };
            notes.push(format!("{who} #{idx} piggybacks an acknowledgment"));
        }
    }
    verdict
}

pub fn align_traces(reference: &[MessageSummary], simulated: &[MessageSummary]) -> Vec<AlignmentRow> {
    let mut rs = Side::new(reference);
    let mut ss = Side::new(simulated);
    let mut rows = Vec::new();
    let one_sided = |side: &mut Side, other: &[MessageSummary], i: usize, is_ref: bool| {
        side.used[i] = true;
        let m = &side.msgs[i];
        let mut notes = Vec::new();
        if let Some(k) = (i + 1..side.msgs.len()).find(|&k| is_retransmission(m, &side.msgs[k])) {
            notes.push(format!("retransmitted later as #{}", side.msgs[k].index));
        }
        if let MessageKey::Ack(Some(ctx)) = side.keys[i] {
            let piggy = (0..other.len())
                .find(|&k| other[k].piggybacks_ack() && other[k].src == m.src && acked(other, k) == Some(ctx));
            if let Some(p) = piggy.map(|k| &other[k]) {
                let who = if is_ref { "simulated" } else { "reference" };
                notes.push(format!("acknowledgment piggybacked on {who} #{} instead", p.index));
            }
        }
        AlignmentRow {
            reference_indices: if is_ref { vec![m.index] } else { vec![] },
            simulated_indices: if is_ref { vec![] } else { vec![m.index] },
            verdict: if is_ref { RowVerdict::ReferenceOnly } else { RowVerdict::SimulatedOnly },
            description: describe(side.keys[i], &[m]),
            notes,
        }
    };
    loop {
        match (rs.head(), ss.head()) {
            (None, None) => break,
            (Some(i), None) => rows.push(one_sided(&mut rs, simulated, i, true)),
            (None, Some(j)) => rows.push(one_sided(&mut ss, reference, j, false)),
            (Some(i), Some(j)) if rs.keys[i] == ss.keys[j] => {
                let mut notes = Vec::new();
                let ri = rs.gather(i, &mut notes, "reference");
                let si = ss.gather(j, &mut notes, "simulated");
                let refs: Vec<&MessageSummary> = ri.iter().map(|&k| &reference[k]).collect();
                let sims: Vec<&MessageSummary> = si.iter().map(|&k| &simulated[k]).collect();
                let mut cmp_notes = Vec::new();
                let verdict = compare_row(&refs, &sims, &mut cmp_notes);
                notes.extend(cmp_notes);
                let all: Vec<&MessageSummary> = refs.iter().chain(&sims).copied().collect();
                rows.push(AlignmentRow {
                    reference_indices: refs.iter().map(|m| m.index).collect(),
                    simulated_indices: sims.iter().map(|m| m.index).collect(),
                    verdict,
                    description: describe(rs.keys[i], &all),
                    notes,
                });
            }
            (Some(i), Some(j)) => {
                let d_sim = ss.find(j, rs.keys[i]).map(|k| k - j);
                let d_ref = rs.find(i, ss.keys[j]).map(|k| k - i);
                match (d_sim, d_ref) {
                    (Some(a), Some(b)) if a <= b => rows.push(one_sided(&mut ss, reference, j, false)),
                    (Some(_), None) => rows.push(one_sided(&mut ss, reference, j, false)),
                    (_, Some(_)) => rows.push(one_sided(&mut rs, simulated, i, true)),
                    (None, None) => {
                        rows.push(one_sided(&mut rs, simulated, i, true));
                        rows.push(one_sided(&mut ss, reference, j, false));
                    }
                }
            }
        }
    }
    rows
}
