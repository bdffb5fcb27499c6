// SPDX-License-Identifier: Apache-2.0
//! Comparison reports, as aligned text and as JSON.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::align::{align_traces, AlignmentRow, RowVerdict};
use super::diff::{diff_tables, HarnessError, TableDiff};
use super::summary::MessageSummary;
use crate::tables::TableSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

const STRICTNESS: &str = "overall PASS requires every row to match and no routing-table differences";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub title: String,
    pub verdict: Verdict,
    pub reference_messages: usize,
    pub simulated_messages: usize,
    pub rows: Vec<AlignmentRow>,
    pub table_diffs: Vec<TableDiff>,
}

impl DiffReport {
    pub fn new(title: impl Into<String>, rows: Vec<AlignmentRow>, table_diffs: Vec<TableDiff>) -> Self {
        let count = |f: fn(&AlignmentRow) -> usize| rows.iter().map(f).sum();
        let verdict = if table_diffs.is_empty() && rows.iter().all(|r| r.verdict == RowVerdict::Match) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        DiffReport {
            title: title.into(),
            verdict,
            reference_messages: count(|r| r.reference_indices.len()),
            simulated_messages: count(|r| r.simulated_indices.len()),
            rows,
            table_diffs,
        }
    }

    /// Aligns two traces and diffs each (reference, simulated) table pair.
    pub fn compare(
        title: impl Into<String>,
        reference: &[MessageSummary],
        simulated: &[MessageSummary],
        tables: &[(&TableSnapshot, &TableSnapshot)],
    ) -> Result<Self, HarnessError> {
        let rows = align_traces(reference, simulated);
        let mut diffs = Vec::new();
        for (r, s) in tables {
            diffs.extend(diff_tables(r, s)?);
        }
        Ok(Self::new(title, rows, diffs))
    }

    pub fn count(&self, v: RowVerdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.to_text(),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    fn to_text(&self) -> String {
        let idx = |v: &[usize]| if v.is_empty() { "-".to_string() } else { v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ") };
        let mut s = String::new();
        writeln!(s, "# {}", self.title).unwrap();
        writeln!(s, "# {STRICTNESS}").unwrap();
        writeln!(s, "# messages: {} reference, {} simulated", self.reference_messages, self.simulated_messages).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "{:<12} {:<12} {:<15} Description", "Reference", "Simulated", "Verdict").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<12} {:<12} {:<15} {}",
                idx(&r.reference_indices),
                idx(&r.simulated_indices),
                r.verdict.to_string(),
                r.description
            )
            .unwrap();
            for n in &r.notes {
                writeln!(s, "{:<41}- {n}", "").unwrap();
            }
        }
        writeln!(s).unwrap();
        writeln!(s, "## routing table differences").unwrap();
        if self.table_diffs.is_empty() {
            writeln!(s, "none").unwrap();
        }
        for d in &self.table_diffs {
            writeln!(s, "{d}").unwrap();
        }
        writeln!(s).unwrap();
        writeln!(
            s,
            "rows: {} match, {} partial, {} reference-only, {} simulated-only",
            self.count(RowVerdict::Match),
            self.count(RowVerdict::Partial),
            self.count(RowVerdict::ReferenceOnly),
            self.count(RowVerdict::SimulatedOnly)
        )
        .unwrap();
        writeln!(s, "{}", self.verdict).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = DiffReport::compare("empty", &[], &[], &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.rows.is_empty());
        let text = r.render(ReportFormat::Text);
        assert_eq!(text.lines().last(), Some("PASS"));
        let v: serde_json::Value = serde_json::from_str(&r.render(ReportFormat::Json)).unwrap();
        assert_eq!(v["verdict"], "PASS");
        assert!(v["rows"].as_array().unwrap().is_empty());
        assert!(v["table_diffs"].as_array().unwrap().is_empty());
    }
}
