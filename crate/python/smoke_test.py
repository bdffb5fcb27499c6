# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the eigrp_vv Python module.

Builds the extension with cargo (unless EIGRP_VV_LIB points at a built
library), loads it as `eigrp_vv` and exercises each function once.

    python3 python/smoke_test.py
"""

import importlib.util
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_library() -> Path:
    env = os.environ.get("EIGRP_VV_LIB")
    if env:
        return Path(env)
    subprocess.run(["cargo", "build", "--release", "-p", "eigrp-vv-py"], cwd=ROOT, check=True)
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "release"
    for name in ("libeigrp_vv_py.so", "libeigrp_vv_py.dylib", "eigrp_vv_py.dll"):
        if (target / name).exists():
            return target / name
    sys.exit(f"extension library not found in {target}")


def load(lib: Path, tmp: Path):
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    dest = tmp / f"eigrp_vv{suffix}"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("eigrp_vv", dest)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        ev = load(locate_library(), tmp)
        print("eigrp_vv", ev.__version__)
        assert ev.builtin_names() == ["scenario1", "scenario2"]

        run = ev.run_builtin("scenario1")
        (stem, pcap), = run["pcaps"].items()
        msgs = ev.summarize_pcap(pcap)
        assert len(msgs) == 14, len(msgs)
        assert [m["opcode"] for m in msgs[:2]] == ["Hello", "Hello"]
        assert "D 2.0.0.0/24 [90/307200]" in run["after"]["R1"]
        print(f"scenario1: {len(msgs)} messages on {stem}")

        again = ev.run_builtin("scenario1")
        assert again["pcaps"][stem] == pcap, "same seed must give the same capture"

        same = ev.compare(pcap, pcap, [(run["after"]["R1"], run["after"]["R1"])])
        assert same["verdict"] == "PASS"
        reference = (ROOT / "crates/core/fixtures/reference/scenario1.json").read_text()
        report = ev.compare(reference, pcap, title="scenario1 vs reference")
        kinds = sorted({row["verdict"] for row in report["rows"]})
        print(f"against the reference transcript: {report['verdict']} ({', '.join(kinds)})")
        print(ev.compare(reference, pcap, text=True).splitlines()[-1])

        s2 = ev.run_builtin("scenario2")
        assert ev.diff_tables(run["before"]["R1"], s2["after"]["R1"]) == []
        try:
            ev.diff_tables(run["after"]["R1"], run["after"]["R2"])
        except ValueError as e:
            print("node mismatch rejected:", e)
        else:
            raise AssertionError("diff of different routers must fail")

        topo = (ROOT / "crates/core/fixtures/topologies/triangle.toml").read_text()
        scen = (ROOT / "crates/core/fixtures/scenarios/scenario2.xml").read_text()
        custom = ev.run_custom(topo, scen, jitter=(0.0, 0.002), seed=3)
        assert len(custom["pcaps"]) == 3

        out = ev.repro(str(tmp / "repro"))
        assert out["passed"], out
        print("repro bundle", out["bundle_sha256"][:16], "PASS")
    print("smoke test ok")


if __name__ == "__main__":
    main()
