// SPDX-License-Identifier: Apache-2.0
//! Timed topology changes in the ScenarioManager XML dialect:
//!
//! ```xml
//! <scenario>
//!   <at t="50"><disconnect src-module="R1" src-gate="ethg[0]"/></at>
//!   <at t="100">
//!     <connect src-module="R2" src-gate="ethg[0]" dest-module="R1" dest-gate="ethg[0]"
//!              channel-type="inet.node.ethernet.Eth10M"/>
//!   </at>
//! </scenario>
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario parse error at {line}:{column}: {message}")]
    ParseError { line: u32, column: u32, message: String },
    #[error("unknown attribute `{attribute}` on <{element}> at {line}:{column}")]
    UnknownAttribute { element: String, attribute: String, line: u32, column: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gate {
    pub module: String,
    pub gate: String,
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.module, self.gate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Connect { src: Gate, dest: Gate, channel: Option<String> },
    /// `dest` is optional: a point-to-point gate identifies its link.
    Disconnect { src: Gate, dest: Option<Gate> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioAction {
    pub at: SimTime,
    pub kind: ActionKind,
}

impl fmt::Display for ScenarioAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ActionKind::Connect { src, dest, channel } => {
                write!(f, "t={} connect {src} <-> {dest}", self.at)?;
                if let Some(c) = channel {
                    write!(f, " ({c})")?;
                }
                Ok(())
            }
            ActionKind::Disconnect { src, dest: Some(d) } => write!(f, "t={} disconnect {src} <-> {d}", self.at),
            ActionKind::Disconnect { src, dest: None } => write!(f, "t={} disconnect {src}", self.at),
        }
    }
}

const ACTION_ATTRS: [&str; 5] = ["src-module", "src-gate", "dest-module", "dest-gate", "channel-type"];

/// Parses a scenario document into actions sorted by time. Actions with the
/// same time keep document order.
pub fn load_scenario(xml: &str) -> Result<Vec<ScenarioAction>, ScenarioError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let p = e.pos();
        ScenarioError::ParseError { line: p.row, column: p.col, message: e.to_string() }
    })?;
    let pos = |n: roxmltree::Node| doc.text_pos_at(n.range().start);
    let perr = |n: roxmltree::Node, message: String| {
        let p = pos(n);
        ScenarioError::ParseError { line: p.row, column: p.col, message }
    };
    let root = doc.root_element();
    if root.tag_name().name() != "scenario" {
        return Err(perr(root, format!("root element is <{}>, expected <scenario>", root.tag_name().name())));
    }
    let mut actions = Vec::new();
    for at in root.children().filter(|n| n.is_element()) {
        if at.tag_name().name() != "at" {
            return Err(perr(at, format!("unexpected element <{}>", at.tag_name().name())));
        }
        for a in at.attributes() {
            if a.name() != "t" {
                let p = pos(at);
                return Err(ScenarioError::UnknownAttribute {
                    element: "at".into(),
                    attribute: a.name().into(),
                    line: p.row,
                    column: p.col,
                });
            }
        }
        let t = at.attribute("t").ok_or_else(|| perr(at, "<at> needs a t attribute".into()))?;
        let time: SimTime = t.trim().parse().map_err(|_| perr(at, format!("invalid time `{t}`")))?;
        for el in at.children().filter(|n| n.is_element()) {
            let name = el.tag_name().name();
            for a in el.attributes() {
                if !ACTION_ATTRS.contains(&a.name()) {
                    let p = pos(el);
                    return Err(ScenarioError::UnknownAttribute {
                        element: name.into(),
                        attribute: a.name().into(),
                        line: p.row,
                        column: p.col,
                    });
                }
            }
            let gate = |m: &str, g: &str| -> Option<Gate> {
                Some(Gate { module: el.attribute(m)?.to_string(), gate: el.attribute(g)?.to_string() })
            };
            let src = gate("src-module", "src-gate")
                .ok_or_else(|| perr(el, format!("<{name}> needs src-module and src-gate")))?;
            let dest = gate("dest-module", "dest-gate");
            let kind = match name {
                "connect" => ActionKind::Connect {
                    src,
                    dest: dest.ok_or_else(|| perr(el, "<connect> needs dest-module and dest-gate".into()))?,
                    channel: el.attribute("channel-type").map(str::to_string),
                },
                "disconnect" => ActionKind::Disconnect { src, dest },
                other => return Err(perr(el, format!("unknown action <{other}>"))),
            };
            actions.push(ScenarioAction { at: time, kind });
        }
    }
    actions.sort_by_key(|a| a.at);
    Ok(actions)
}
