// SPDX-License-Identifier: Apache-2.0
//! Comparing simulated behavior against a reference: message alignment,
//! per-message and table diffs, and report rendering.

pub mod align;
pub mod diff;
pub mod report;
pub mod summary;

pub use align::{align_traces, message_keys, AlignmentRow, MessageKey, RowVerdict, ALIGN_WINDOW};
pub use diff::{diff_messages, diff_packets, diff_tables, FieldDiff, HarnessError, TableDiff, TableField};
pub use report::{DiffReport, ReportFormat, Verdict};
pub use summary::{ingest_pcap, MessageKind, MessageSummary, ReferenceTrace, RouteMark};
