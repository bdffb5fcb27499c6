// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use eigrp_vv::cli::{self, main_with, Golden, EXIT_ERROR, EXIT_MISMATCH, EXIT_PASS};
use eigrp_vv::codec::{decode_packet, encode_packet, Tlv};
use eigrp_vv::frame::{decapsulate, encapsulate};
use eigrp_vv::harness::{ingest_pcap, RowVerdict, Verdict};
use eigrp_vv::manifest::RunManifest;
use eigrp_vv::pcap::{pcap_bytes, read_pcap};

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn run_builtin(name: &str, out: &Path) {
    assert_eq!(main_with(["eigrp-vv", "run", "--builtin", name, "--out", &s(out)]), EXIT_PASS);
}

#[test]
fn run_writes_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run_builtin("scenario1", dir.path());
    let run = dir.path().join("scenario1");
    let m = RunManifest::load(&run).unwrap();
    m.verify(&run).unwrap();
    let paths: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert!(paths.contains(&"R1_ethg0--R2_ethg0.pcap"));
    assert!(paths.contains(&"snapshots/R1_before.txt"));
    assert!(paths.contains(&"snapshots/R1_after.txt"));
}

#[test]
fn scenario2_manifest_lists_r1_r3_capture() {
    let dir = tempfile::tempdir().unwrap();
    run_builtin("scenario2", dir.path());
    let m = RunManifest::load(&dir.path().join("scenario2")).unwrap();
    assert_eq!(m.artifacts[0].path, "R1_ethg1--R3_ethg0.pcap");
}

#[test]
fn same_seed_same_hashes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(
            main_with(["eigrp-vv", "run", "--builtin", "scenario1", "--builtin", "scenario2", "--parallel", "2", "--jitter", "0,0.002", "--seed", "7", "--out", &s(d.path())]),
            EXIT_PASS
        );
    }
    for n in ["scenario1", "scenario2"] {
        let ma = RunManifest::load(&a.path().join(n)).unwrap();
        let mb = RunManifest::load(&b.path().join(n)).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.jitter.as_deref(), Some("0,0.002"));
    }
}

#[test]
fn compare_with_itself_passes() {
    let dir = tempfile::tempdir().unwrap();
    run_builtin("scenario1", dir.path());
    let run = s(&dir.path().join("scenario1"));
    let out = dir.path().join("cmp");
    assert_eq!(main_with(["eigrp-vv", "compare", "--reference", &run, "--simulated", &run, "--out", &s(&out)]), EXIT_PASS);
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(text.lines().last(), Some("PASS"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "PASS");
}

#[test]
fn compare_against_transcript_reports_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    run_builtin("scenario1", dir.path());
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/reference/scenario1.json");
    let code = main_with([
        "eigrp-vv",
        "compare",
        "--reference",
        fixture,
        "--simulated",
        &s(&dir.path().join("scenario1")),
        "--out",
        &s(&dir.path().join("cmp")),
    ]);
    assert_eq!(code, EXIT_MISMATCH);
}

#[test]
fn snapshots_of_different_routers_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    run_builtin("scenario1", dir.path());
    let run = dir.path().join("scenario1");
    let pcap = s(&run.join("R1_ethg0--R2_ethg0.pcap"));
    let code = main_with([
        "eigrp-vv",
        "compare",
        "--reference",
        &pcap,
        "--simulated",
        &pcap,
        "--reference-table",
        &s(&run.join("snapshots/R1_after.txt")),
        "--simulated-table",
        &s(&run.join("snapshots/R2_after.txt")),
        "--out",
        &s(&dir.path().join("cmp")),
    ]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = s(&dir.path().join("nope.pcap"));
    assert_eq!(main_with(["eigrp-vv", "compare", "--reference", &missing, "--simulated", &missing]), EXIT_ERROR);
}

#[test]
fn export_pcap_for_link_and_point() {
    let dir = tempfile::tempdir().unwrap();
    let link = dir.path().join("link.pcap");
    let code = main_with(["eigrp-vv", "export-pcap", "--builtin", "scenario1", "--link", "R1.ethg[0],R2.ethg[0]", "--out", &s(&link)]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(ingest_pcap(&fs::read(&link).unwrap()).unwrap().len(), 14);
    assert_eq!(fs::read(&link).unwrap(), cli::GOLDEN_SCENARIO1_PCAP);

    let point = dir.path().join("point.pcap");
    let code = main_with([
        "eigrp-vv",
        "export-pcap",
        "--builtin",
        "scenario1",
        "--point",
        "R1.ethg[0]",
        "--window",
        "100,100.5",
        "--out",
        &s(&point),
    ]);
    assert_eq!(code, EXIT_PASS);
    // One end of a point-to-point link sees every frame, sent or received.
    let msgs = ingest_pcap(&fs::read(&point).unwrap()).unwrap();
    assert_eq!(msgs.len(), 14);
    assert!(msgs.iter().any(|m| m.src.octets() == [10, 0, 12, 1]));
    assert!(msgs.iter().any(|m| m.src.octets() == [10, 0, 12, 2]));
}

#[test]
fn custom_topology_and_scenario_run() {
    let dir = tempfile::tempdir().unwrap();
    let fx = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let code = main_with([
        "eigrp-vv",
        "run",
        "--topology",
        &format!("{fx}/topologies/triangle.toml"),
        "--scenario",
        &format!("{fx}/scenarios/scenario2.xml"),
        "--out",
        &s(dir.path()),
    ]);
    assert_eq!(code, EXIT_PASS);
    let m = RunManifest::load(&dir.path().join("scenario2")).unwrap();
    assert_eq!(m.artifacts_of(eigrp_vv::manifest::ArtifactKind::Pcap).count(), 3);
}

#[test]
fn repro_twice_is_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cli::cmd_repro(a.path(), 1, None).unwrap();
    let rb = cli::cmd_repro(b.path(), 2, None).unwrap();
    assert!(ra.passed());
    assert_eq!(ra.bundle_sha256, rb.bundle_sha256);
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(fs::read(a.path().join(cli::BUNDLE_FILE)).unwrap(), fs::read(b.path().join(cli::BUNDLE_FILE)).unwrap());
}

/// Drops the last route from capture record `index` and rebuilds the pcap.
fn drop_route(pcap: &[u8], index: usize) -> Vec<u8> {
    let recs = read_pcap(pcap).unwrap();
    let frames: Vec<_> = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if i != index {
                return (r.timestamp, r.data.clone());
            }
            let (meta, payload) = decapsulate(&r.data).unwrap().unwrap();
            let mut pkt = decode_packet(payload).unwrap();
            let last = pkt.tlvs.iter().rposition(|t| matches!(t, Tlv::InternalRoute(_))).unwrap();
            pkt.tlvs.remove(last);
            (r.timestamp, encapsulate(&meta, &encode_packet(&pkt).unwrap()))
        })
        .collect();
    pcap_bytes(frames.iter().map(|(t, f)| (*t, f.as_slice())))
}

#[test]
fn tampered_golden_pcap_fails_on_the_altered_row() {
    let golden = tempfile::tempdir().unwrap();
    let fx = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/reference");
    for n in ["scenario1", "scenario2"] {
        for tag in ["before", "after"] {
            let f = format!("{n}_R1_{tag}.txt");
            fs::copy(format!("{fx}/{f}"), golden.path().join(f)).unwrap();
        }
        let g = Golden::bundled(n).unwrap();
        fs::write(golden.path().join(format!("{n}.pcap")), &g.pcap).unwrap();
    }
    // Record 7 is R1's multicast sync Update.
    let bad = drop_route(cli::GOLDEN_SCENARIO1_PCAP, 6);
    fs::write(golden.path().join("scenario1.pcap"), bad).unwrap();

    let out = tempfile::tempdir().unwrap();
    let r = cli::cmd_repro(out.path(), 1, Some(golden.path())).unwrap();
    assert!(!r.passed());
    let s1 = &r.regression[0];
    assert_eq!(s1.verdict, Verdict::Fail);
    let bad_rows: Vec<_> = s1.rows.iter().filter(|r| r.verdict != RowVerdict::Match).collect();
    assert_eq!(bad_rows.len(), 1);
    assert!(bad_rows[0].reference_indices.contains(&7));
    assert!(bad_rows[0].notes.iter().any(|n| n.contains("route")), "{:?}", bad_rows[0].notes);
    assert_eq!(r.regression[1].verdict, Verdict::Pass);
    let text = fs::read_to_string(out.path().join("reports/scenario1_regression.txt")).unwrap();
    assert_eq!(text.lines().last(), Some("FAIL"));

    let code = main_with(["eigrp-vv", "repro", "--out", &s(&out.path().join("again")), "--golden", &s(golden.path())]);
    assert_eq!(code, EXIT_MISMATCH);
}
