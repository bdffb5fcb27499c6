// SPDX-License-Identifier: Apache-2.0
//! Python module `eigrp_vv`: run experiments, summarize captures and compare
//! traces from Python. Structured results come back as plain dicts and lists.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use eigrp_vv::cli;
use eigrp_vv::experiment::{Experiment, ExperimentRun, BUILTIN};
use eigrp_vv::harness::{self, DiffReport, MessageSummary, ReferenceTrace, ReportFormat};
use eigrp_vv::tables::TableSnapshot;
use eigrp_vv::time::SimTime;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn jitter(j: Option<(f64, f64)>) -> PyResult<Option<(SimTime, SimTime)>> {
    match j {
        None => Ok(None),
        Some((lo, hi)) if lo >= 0.0 && hi >= lo => Ok(Some((SimTime::from_secs_f64(lo), SimTime::from_secs_f64(hi)))),
        Some(_) => Err(PyValueError::new_err("jitter must be (min, max) with 0 <= min <= max")),
    }
}

fn run_to_dict<'py>(py: Python<'py>, run: &ExperimentRun) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let pcaps = PyDict::new(py);
    for (cap, bytes) in &run.pcaps {
        pcaps.set_item(cap.file_stem(), PyBytes::new(py, bytes))?;
    }
    d.set_item("pcaps", pcaps)?;
    let texts = |snaps: &[TableSnapshot]| snaps.iter().map(|s| (s.node.clone(), s.to_text())).collect::<BTreeMap<_, _>>();
    d.set_item("before", texts(&run.before))?;
    d.set_item("after", texts(&run.after))?;
    Ok(d)
}

/// Names of the built-in experiments.
#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    BUILTIN.to_vec()
}

/// Runs a built-in experiment. Returns `{"pcaps": {stem: bytes}, "before":
/// {router: snapshot text}, "after": {...}}`.
#[pyfunction]
#[pyo3(signature = (name, seed=0, jitter=None))]
fn run_builtin<'py>(py: Python<'py>, name: &str, seed: u64, jitter: Option<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let e = Experiment::builtin(name).ok_or_else(|| PyValueError::new_err(format!("unknown built-in `{name}`")))?;
    let j = self::jitter(jitter)?;
    let run = py.detach(|| e.run(seed, j)).map_err(value_err)?;
    run_to_dict(py, &run)
}

/// Runs a topology (TOML text) with a scenario (XML text). Every link is captured.
#[pyfunction]
#[pyo3(signature = (topology, scenario, until=None, seed=0, jitter=None))]
fn run_custom<'py>(
    py: Python<'py>,
    topology: &str,
    scenario: &str,
    until: Option<f64>,
    seed: u64,
    jitter: Option<(f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let e = Experiment::custom("custom", topology, scenario, until.map(SimTime::from_secs_f64)).map_err(value_err)?;
    let j = self::jitter(jitter)?;
    let run = py.detach(|| e.run(seed, j)).map_err(value_err)?;
    run_to_dict(py, &run)
}

/// Message summaries for every EIGRP frame in a pcap.
#[pyfunction]
fn summarize_pcap<'py>(py: Python<'py>, data: &[u8]) -> PyResult<Bound<'py, PyAny>> {
    let msgs = harness::ingest_pcap(data).map_err(value_err)?;
    to_py(py, &msgs)
}

fn trace_of(data: &Bound<'_, PyAny>) -> PyResult<Vec<MessageSummary>> {
    if let Ok(text) = data.extract::<String>() {
        return Ok(ReferenceTrace::from_json(&text).map_err(value_err)?.messages);
    }
    let bytes: Vec<u8> = data.extract()?;
    harness::ingest_pcap(&bytes).map_err(value_err)
}

/// Aligns two traces. Each side is pcap bytes or a JSON transcript string.
/// `tables` holds (reference, simulated) snapshot text pairs. Returns the
/// report as a dict; `text=True` returns the rendered text instead.
#[pyfunction]
#[pyo3(signature = (reference, simulated, tables=Vec::new(), title="comparison", text=false))]
fn compare<'py>(
    py: Python<'py>,
    reference: &Bound<'py, PyAny>,
    simulated: &Bound<'py, PyAny>,
    tables: Vec<(String, String)>,
    title: &str,
    text: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let r = trace_of(reference)?;
    let s = trace_of(simulated)?;
    let mut pairs = Vec::new();
    for (a, b) in &tables {
        pairs.push((TableSnapshot::parse(a).map_err(value_err)?, TableSnapshot::parse(b).map_err(value_err)?));
    }
    let refs: Vec<_> = pairs.iter().map(|(a, b)| (a, b)).collect();
    let report = DiffReport::compare(title, &r, &s, &refs).map_err(value_err)?;
    if text {
        return Ok(report.render(ReportFormat::Text).into_pyobject(py)?.into_any());
    }
    to_py(py, &report)
}

/// Routing-table differences between two snapshot texts.
#[pyfunction]
fn diff_tables<'py>(py: Python<'py>, reference: &str, simulated: &str) -> PyResult<Bound<'py, PyAny>> {
    let a = TableSnapshot::parse(reference).map_err(value_err)?;
    let b = TableSnapshot::parse(simulated).map_err(value_err)?;
    to_py(py, &harness::diff_tables(&a, &b).map_err(value_err)?)
}

/// Builds the reproduction bundle in `out`. Returns `{"passed": bool,
/// "bundle_sha256": str, "reports": [...]}`.
#[pyfunction]
#[pyo3(signature = (out, parallel=1))]
fn repro<'py>(py: Python<'py>, out: PathBuf, parallel: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| cli::cmd_repro(&out, parallel, None)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("bundle_sha256", &r.bundle_sha256)?;
    d.set_item("reports", to_py(py, &r.regression)?)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "eigrp_vv")]
fn eigrp_vv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_builtin, m)?)?;
    m.add_function(wrap_pyfunction!(run_custom, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_pcap, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(diff_tables, m)?)?;
    m.add_function(wrap_pyfunction!(repro, m)?)?;
    Ok(())
}
