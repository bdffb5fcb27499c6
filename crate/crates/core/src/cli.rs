// SPDX-License-Identifier: Apache-2.0
//! The `eigrp-vv` command line: run, compare, repro and export-pcap.
//!
//! Exit codes: 0 pass, 1 comparison mismatch, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::experiment::{Capture, Experiment, BUILTIN};
use crate::harness::{ingest_pcap, DiffReport, HarnessError, MessageSummary, ReferenceTrace, ReportFormat, Verdict};
use crate::manifest::{sha256_hex, ArtifactKind, ManifestError, RunManifest, MANIFEST_FILE};
use crate::pcap::PcapError;
use crate::sim::{SimError, Simulation, Window};
use crate::tables::{SnapshotError, TableSnapshot};
use crate::time::SimTime;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub const GOLDEN_SCENARIO1_PCAP: &[u8] = include_bytes!("../fixtures/golden/scenario1.pcap");
pub const GOLDEN_SCENARIO2_PCAP: &[u8] = include_bytes!("../fixtures/golden/scenario2.pcap");
pub const REFERENCE_SCENARIO1: &str = include_str!("../fixtures/reference/scenario1.json");
pub const REFERENCE_SCENARIO2: &str = include_str!("../fixtures/reference/scenario2.json");
const REFERENCE_SNAPSHOTS: [(&str, &str); 4] = [
    ("scenario1_R1_before.txt", include_str!("../fixtures/reference/scenario1_R1_before.txt")),
    ("scenario1_R1_after.txt", include_str!("../fixtures/reference/scenario1_R1_after.txt")),
    ("scenario2_R1_before.txt", include_str!("../fixtures/reference/scenario2_R1_before.txt")),
    ("scenario2_R1_after.txt", include_str!("../fixtures/reference/scenario2_R1_after.txt")),
];

pub const BUNDLE_FILE: &str = "repro.tar";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Pcap { path: String, source: PcapError },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    Snapshot { path: String, source: SnapshotError },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(p).map_err(|source| CliError::Io { path: p.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.into(), source })
}

#[derive(Debug, Parser)]
#[command(name = "eigrp-vv", version, about = "EIGRP simulation, trace export and reference comparison")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run built-in or custom scenarios and write captures, snapshots and a manifest.
    Run(RunArgs),
    /// Compare reference and simulated artifacts and write a diff report.
    Compare(CompareArgs),
    /// Rerun the built-in scenarios against the bundled baselines and pack the results.
    Repro(ReproArgs),
    /// Write a pcap for one link or capture point.
    ExportPcap(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Built-in experiment name (scenario1, scenario2).
    #[arg(long = "builtin", conflicts_with_all = ["topology", "scenario"])]
    pub builtin: Vec<String>,
    /// Topology TOML file.
    #[arg(long, requires = "scenario")]
    pub topology: Option<PathBuf>,
    /// Scenario XML file.
    #[arg(long, requires = "topology")]
    pub scenario: Option<PathBuf>,
    /// Stop time for custom runs, seconds. Defaults to 30 s after the last action.
    #[arg(long)]
    pub until: Option<SimTime>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniform send jitter range in seconds, e.g. `0,0.01`.
    #[arg(long, value_parser = parse_range)]
    pub jitter: Option<(SimTime, SimTime)>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Number of simulations to run at once.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference pcap, JSON transcript, or run directory.
    #[arg(long)]
    pub reference: PathBuf,
    /// Simulated pcap, JSON transcript, or run directory.
    #[arg(long)]
    pub simulated: PathBuf,
    /// Reference routing table snapshot, paired in order with `--simulated-table`.
    #[arg(long = "reference-table")]
    pub reference_table: Vec<PathBuf>,
    #[arg(long = "simulated-table")]
    pub simulated_table: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(long, default_value = "repro")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Directory with `<scenario>.pcap` and `<scenario>_R1_{before,after}.txt`
    /// to use instead of the bundled baselines.
    #[arg(long)]
    pub golden: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Link given by its two endpoints, e.g. `R1.ethg[0],R2.ethg[0]`.
    #[arg(long, conflicts_with = "point", value_parser = parse_pair)]
    pub link: Option<(String, String)>,
    /// Single capture point, e.g. `R1.ethg[0]`.
    #[arg(long)]
    pub point: Option<String>,
    /// Half-open time window `start,end` in seconds.
    #[arg(long, value_parser = parse_range)]
    pub window: Option<(SimTime, SimTime)>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim().into(), b.trim().into())),
        _ => Err(format!("expected `A,B`, got `{s}`")),
    }
}

fn parse_range(s: &str) -> Result<(SimTime, SimTime), String> {
    let (a, b) = parse_pair(s)?;
    let a: SimTime = a.parse().map_err(|e| format!("{e}"))?;
    let b: SimTime = b.parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("range start {a} is after end {b}"));
    }
    Ok((a, b))
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run(a) => {
            let jobs = experiments(&a.source)?;
            let manifests = cmd_run(&jobs, a.source.seed, a.source.jitter, &a.out, a.parallel)?;
            for (m, dir) in manifests.iter().zip(run_dirs(&jobs, &a.out)) {
                println!("{}: {} artifacts in {}", m.scenario, m.artifacts.len(), dir.display());
            }
            Ok(EXIT_PASS)
        }
        Command::Compare(a) => {
            let report = cmd_compare(&a)?;
            println!("{}", report.render(ReportFormat::Text));
            Ok(verdict_code(report.verdict))
        }
        Command::Repro(a) => {
            let out = cmd_repro(&a.out, a.parallel, a.golden.as_deref())?;
            for r in &out.regression {
                println!("{}: {}", r.title, r.verdict);
            }
            for r in &out.informational {
                println!("{}: {} (informational)", r.title, r.verdict);
            }
            println!("bundle {} sha256 {}", a.out.join(BUNDLE_FILE).display(), out.bundle_sha256);
            Ok(if out.passed() { EXIT_PASS } else { EXIT_MISMATCH })
        }
        Command::ExportPcap(a) => {
            cmd_export(&a)?;
            Ok(EXIT_PASS)
        }
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_MISMATCH,
    }
}

/// A resolved experiment plus the names recorded in its manifest.
#[derive(Debug, Clone)]
pub struct Job {
    pub experiment: Experiment,
    pub topology_file: String,
    pub scenario_file: String,
}

impl Job {
    pub fn builtin(name: &str) -> Result<Self, CliError> {
        let experiment = Experiment::builtin(name)
            .ok_or_else(|| CliError::Usage(format!("unknown built-in `{name}`, expected one of {}", BUILTIN.join(", "))))?;
        let topology = if name == "scenario1" { "triangle_r1r2_down.toml" } else { "triangle.toml" };
        Ok(Job {
            experiment,
            topology_file: format!("builtin:{topology}"),
            scenario_file: format!("builtin:{name}.xml"),
        })
    }
}

pub fn experiments(src: &SourceArgs) -> Result<Vec<Job>, CliError> {
    if let (Some(t), Some(s)) = (&src.topology, &src.scenario) {
        let name = s.file_stem().map_or("custom".into(), |n| n.to_string_lossy().into_owned());
        let experiment = Experiment::custom(&name, &read_text(t)?, &read_text(s)?, src.until)?;
        return Ok(vec![Job { experiment, topology_file: t.display().to_string(), scenario_file: s.display().to_string() }]);
    }
    if src.builtin.is_empty() {
        return Err(CliError::Usage("give --builtin NAME or both --topology and --scenario".into()));
    }
    src.builtin.iter().map(|n| Job::builtin(n)).collect()
}

fn run_dirs(jobs: &[Job], out: &Path) -> Vec<PathBuf> {
    jobs.iter().map(|j| out.join(&j.experiment.name)).collect()
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order.
pub fn run_parallel<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every item ran")).collect()
}

/// Plain results of one run, detached from the simulation.
struct RunOutput {
    pcaps: Vec<(Capture, Vec<u8>)>,
    snapshots: Vec<(String, String)>,
}

fn simulate(job: &Job, seed: u64, jitter: Option<(SimTime, SimTime)>) -> Result<RunOutput, SimError> {
    info!("running {}", job.experiment.name);
    let run = job.experiment.run(seed, jitter)?;
    let mut snapshots = Vec::new();
    for (tag, snaps) in [("before", &run.before), ("after", &run.after)] {
        for s in snaps.iter() {
            snapshots.push((format!("snapshots/{}_{tag}.txt", s.node), s.to_text()));
        }
    }
    Ok(RunOutput { pcaps: run.pcaps, snapshots })
}

/// Runs every job and writes `out/<name>/` with pcaps, snapshots and a manifest.
pub fn cmd_run(
    jobs: &[Job],
    seed: u64,
    jitter: Option<(SimTime, SimTime)>,
    out: &Path,
    parallel: usize,
) -> Result<Vec<RunManifest>, CliError> {
    let outputs = run_parallel(jobs, parallel, |j| simulate(j, seed, jitter));
    let mut manifests = Vec::new();
    for ((job, output), dir) in jobs.iter().zip(outputs).zip(run_dirs(jobs, out)) {
        let output = output?;
        let mut m = RunManifest::new(&job.experiment.name, &job.topology_file, &job.scenario_file, seed);
        m.jitter = jitter.map(|(a, b)| format!("{a},{b}"));
        for (cap, bytes) in &output.pcaps {
            m.add_file(&dir, &format!("{}.pcap", cap.file_stem()), ArtifactKind::Pcap, bytes)?;
        }
        for (rel, text) in &output.snapshots {
            m.add_file(&dir, rel, ArtifactKind::Snapshot, text.as_bytes())?;
        }
        m.write(&dir)?;
        manifests.push(m);
    }
    Ok(manifests)
}

/// Messages plus named table snapshots from one side of a comparison.
#[derive(Debug, Clone, Default)]
pub struct Side {
    pub messages: Vec<MessageSummary>,
    pub tables: Vec<(String, TableSnapshot)>,
}

fn parse_snapshot(path: &str, text: &str) -> Result<TableSnapshot, CliError> {
    TableSnapshot::parse(text).map_err(|source| CliError::Snapshot { path: path.into(), source })
}

/// Loads a run directory (via its manifest), a JSON transcript or a pcap.
pub fn load_side(path: &Path) -> Result<Side, CliError> {
    if path.is_dir() {
        let m = RunManifest::load(path)?;
        m.verify(path)?;
        let pcap = m
            .artifacts_of(ArtifactKind::Pcap)
            .next()
            .ok_or_else(|| CliError::Usage(format!("{} lists no pcap", path.join(MANIFEST_FILE).display())))?;
        let bytes = read(&path.join(&pcap.path))?;
        let messages = ingest_pcap(&bytes).map_err(|source| CliError::Pcap { path: pcap.path.clone(), source })?;
        let mut tables = Vec::new();
        for a in m.artifacts_of(ArtifactKind::Snapshot) {
            tables.push((a.path.clone(), parse_snapshot(&a.path, &read_text(&path.join(&a.path))?)?));
        }
        return Ok(Side { messages, tables });
    }
    let bytes = read(path)?;
    let shown = path.display().to_string();
    if path.extension().is_some_and(|e| e == "json") {
        let text = String::from_utf8_lossy(&bytes);
        let t = ReferenceTrace::from_json(&text).map_err(|source| CliError::Json { path: shown, source })?;
        return Ok(Side { messages: t.messages, tables: Vec::new() });
    }
    let messages = ingest_pcap(&bytes).map_err(|source| CliError::Pcap { path: shown, source })?;
    Ok(Side { messages, tables: Vec::new() })
}

fn name_of(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<DiffReport, CliError> {
    if a.reference_table.len() != a.simulated_table.len() {
        return Err(CliError::Usage("--reference-table and --simulated-table must be given the same number of times".into()));
    }
    let reference = load_side(&a.reference)?;
    let simulated = load_side(&a.simulated)?;
    // Run directories pair their snapshots by file name.
    let mut pairs: Vec<(TableSnapshot, TableSnapshot)> = reference
        .tables
        .iter()
        .filter_map(|(n, r)| simulated.tables.iter().find(|(m, _)| m == n).map(|(_, s)| (r.clone(), s.clone())))
        .collect();
    for (r, s) in a.reference_table.iter().zip(&a.simulated_table) {
        let rs = parse_snapshot(&r.display().to_string(), &read_text(r)?)?;
        let ss = parse_snapshot(&s.display().to_string(), &read_text(s)?)?;
        pairs.push((rs, ss));
    }
    let title = a.title.clone().unwrap_or_else(|| format!("{} vs {}", name_of(&a.reference), name_of(&a.simulated)));
    let refs: Vec<(&TableSnapshot, &TableSnapshot)> = pairs.iter().map(|(r, s)| (r, s)).collect();
    let report = DiffReport::compare(title, &reference.messages, &simulated.messages, &refs)?;
    write_report(&a.out, "report", &report)?;
    Ok(report)
}

fn write_report(dir: &Path, stem: &str, report: &DiffReport) -> Result<(), CliError> {
    write(&dir.join(format!("{stem}.txt")), report.render(ReportFormat::Text).as_bytes())?;
    write(&dir.join(format!("{stem}.json")), report.render(ReportFormat::Json).as_bytes())
}

/// Baseline artifacts for one built-in experiment.
#[derive(Debug, Clone)]
pub struct Golden {
    pub pcap: Vec<u8>,
    pub before: TableSnapshot,
    pub after: TableSnapshot,
}

impl Golden {
    pub fn bundled(name: &str) -> Result<Self, CliError> {
        let pcap = match name {
            "scenario1" => GOLDEN_SCENARIO1_PCAP,
            "scenario2" => GOLDEN_SCENARIO2_PCAP,
            _ => return Err(CliError::Usage(format!("no bundled baseline for `{name}`"))),
        };
        let snap = |tag: &str| {
            let file = format!("{name}_R1_{tag}.txt");
            let text = REFERENCE_SNAPSHOTS.iter().find(|(n, _)| *n == file).map(|(_, t)| *t).expect("bundled snapshot");
            parse_snapshot(&file, text)
        };
        Ok(Golden { pcap: pcap.to_vec(), before: snap("before")?, after: snap("after")? })
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, CliError> {
        let snap = |tag: &str| {
            let p = dir.join(format!("{name}_R1_{tag}.txt"));
            parse_snapshot(&p.display().to_string(), &read_text(&p)?)
        };
        Ok(Golden { pcap: read(&dir.join(format!("{name}.pcap")))?, before: snap("before")?, after: snap("after")? })
    }
}

pub fn reference_transcript(name: &str) -> Option<ReferenceTrace> {
    let text = match name {
        "scenario1" => REFERENCE_SCENARIO1,
        "scenario2" => REFERENCE_SCENARIO2,
        _ => return None,
    };
    Some(ReferenceTrace::from_json(text).expect("bundled transcript parses"))
}

#[derive(Debug, Clone)]
pub struct ReproOutcome {
    /// Simulated vs bundled baseline. These decide the exit code.
    pub regression: Vec<DiffReport>,
    /// Simulated vs the hand-written reference transcripts.
    pub informational: Vec<DiffReport>,
    pub manifest: RunManifest,
    pub bundle_sha256: String,
}

impl ReproOutcome {
    pub fn passed(&self) -> bool {
        self.regression.iter().all(|r| r.verdict == Verdict::Pass)
    }
}

/// Runs both built-ins with seed 0, compares them with the baselines and
/// packs every artifact into a deterministic tar.
pub fn cmd_repro(out: &Path, parallel: usize, golden: Option<&Path>) -> Result<ReproOutcome, CliError> {
    let jobs: Vec<Job> = BUILTIN.iter().map(|n| Job::builtin(n)).collect::<Result<_, _>>()?;
    let runs = cmd_run(&jobs, 0, None, out, parallel)?;
    let mut bundle = RunManifest::new("repro", "builtin", "builtin", 0);
    let mut regression = Vec::new();
    let mut informational = Vec::new();
    for (job, run) in jobs.iter().zip(&runs) {
        let name = &job.experiment.name;
        let dir = out.join(name);
        for a in &run.artifacts {
            bundle.artifacts.push(crate::manifest::Artifact {
                path: format!("{name}/{}", a.path),
                kind: a.kind,
                sha256: a.sha256.clone(),
            });
        }
        let manifest_bytes = read(&dir.join(MANIFEST_FILE))?;
        bundle.artifacts.push(crate::manifest::Artifact {
            path: format!("{name}/{MANIFEST_FILE}"),
            kind: ArtifactKind::Manifest,
            sha256: sha256_hex(&manifest_bytes),
        });

        let side = load_side(&dir)?;
        let observed = job.experiment.observed.as_deref().unwrap_or("R1");
        let sim_table = |tag: &str| {
            let key = format!("snapshots/{observed}_{tag}.txt");
            side.tables.iter().find(|(n, _)| *n == key).map(|(_, t)| t.clone()).ok_or(CliError::Usage(format!("run lacks {key}")))
        };
        let (before, after) = (sim_table("before")?, sim_table("after")?);
        let base = match golden {
            Some(d) => Golden::load(d, name)?,
            None => Golden::bundled(name)?,
        };
        let base_msgs = ingest_pcap(&base.pcap).map_err(|source| CliError::Pcap { path: format!("{name}.pcap"), source })?;
        let report = DiffReport::compare(
            format!("{name}: simulated vs baseline capture and reference tables"),
            &base_msgs,
            &side.messages,
            &[(&base.before, &before), (&base.after, &after)],
        )?;
        let text = report.render(ReportFormat::Text);
        let json = report.render(ReportFormat::Json);
        bundle.add_file(out, &format!("reports/{name}_regression.txt"), ArtifactKind::Report, text.as_bytes())?;
        bundle.add_file(out, &format!("reports/{name}_regression.json"), ArtifactKind::Report, json.as_bytes())?;
        regression.push(report);

        if let Some(t) = reference_transcript(name) {
            let report = DiffReport::compare(format!("{name}: simulated vs reference transcript ({})", t.capture), &t.messages, &side.messages, &[])?;
            let text = report.render(ReportFormat::Text);
            let json = report.render(ReportFormat::Json);
            bundle.add_file(out, &format!("reports/{name}_reference.txt"), ArtifactKind::Report, text.as_bytes())?;
            bundle.add_file(out, &format!("reports/{name}_reference.json"), ArtifactKind::Report, json.as_bytes())?;
            informational.push(report);
        }
    }
    bundle.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let tar = pack(out, &bundle)?;
    let bundle_sha256 = sha256_hex(&tar);
    write(&out.join(BUNDLE_FILE), &tar)?;
    bundle.artifacts.push(crate::manifest::Artifact { path: BUNDLE_FILE.into(), kind: ArtifactKind::Archive, sha256: bundle_sha256.clone() });
    bundle.write(out)?;
    Ok(ReproOutcome { regression, informational, manifest: bundle, bundle_sha256 })
}

/// Tar of the listed artifacts with fixed metadata, sorted by path.
fn pack(dir: &Path, m: &RunManifest) -> Result<Vec<u8>, CliError> {
    let mut paths: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    paths.sort_unstable();
    let io_err = |source| CliError::Io { path: dir.join(BUNDLE_FILE), source };
    let mut b = tar::Builder::new(Vec::new());
    for p in paths {
        let data = read(&dir.join(p))?;
        let mut h = tar::Header::new_gnu();
        h.set_size(data.len() as u64);
        h.set_mode(0o644);
        h.set_mtime(0);
        h.set_uid(0);
        h.set_gid(0);
        h.set_entry_type(tar::EntryType::Regular);
        b.append_data(&mut h, p, data.as_slice()).map_err(io_err)?;
    }
    b.into_inner().map_err(io_err)
}

pub fn cmd_export(a: &ExportArgs) -> Result<(), CliError> {
    let jobs = experiments(&a.source)?;
    let [job] = jobs.as_slice() else {
        return Err(CliError::Usage("export-pcap takes exactly one experiment".into()));
    };
    let mut sim: Simulation = job.experiment.simulation(a.source.seed, a.source.jitter)?;
    sim.run(job.experiment.after)?;
    let window = a.window.map_or(job.experiment.window, |(s, e)| Window::new(s, e));
    let bytes = match (&a.link, &a.point) {
        (Some((x, y)), None) => {
            let l = sim.link_between(x, y)?;
            sim.export_link(l, window)
        }
        (None, Some(p)) => sim.export_point(p, window)?,
        _ => return Err(CliError::Usage("give --link A,B or --point P".into())),
    };
    write(&a.out, &bytes)
}
