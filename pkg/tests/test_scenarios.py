"""Replay the bundled regression scenarios and pin their key numbers."""
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

REPLAY = {
    "solve_cubic_free": ("solve", "models/power3_free.json",
                         "--mass", "4", "--grid-R", "20", "--grid-n", "2000"),
    "threshold_gaussian_well": ("threshold", "models/gaussian_well_cubic.json",
                                "--grid-R", "20", "--grid-n", "2000"),
    "spectrum_harmonic": ("spectrum", "models/harmonic.json",
                          "--grid-R", "20", "--grid-n", "2000"),
}


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "ngs", *map(str, argv)],
        capture_output=True, text=True, cwd=ROOT, env=os.environ.copy(),
    )


@pytest.mark.parametrize("name", sorted(REPLAY))
def test_scenario_passes_offline_verification(name):
    cmd, model, *rest = REPLAY[name]
    proc = run_cli(cmd, "--model", model, *rest,
                   "--out", SCENARIOS / name, "--verify")
    assert proc.returncode == 0, proc.stderr
    assert "verification OK" in proc.stdout


def test_solve_scenario_matches_oracle():
    with open(SCENARIOS / "solve_cubic_free" / "result.json") as fh:
        stored = json.load(fh)
    # g = u^3, a = 4: multiplier 1 and C_4 = -2/3 exactly
    assert abs(stored["lambda"] - 1.0) <= 1e-3
    assert abs(stored["C_a_estimate"] + 2.0 / 3.0) <= 1e-3 * (2.0 / 3.0)
    assert stored["converged"]


def test_threshold_scenario_is_below_bracket():
    with open(SCENARIOS / "threshold_gaussian_well" / "threshold.json") as fh:
        stored = json.load(fh)
    assert stored["below_lower_bracket"]
    assert stored["a0"] <= 1e-3
    assert len(stored["evaluations"]) == 2


def test_spectrum_scenario_matches_eigenvalue():
    with open(SCENARIOS / "spectrum_harmonic" / "spectrum.json") as fh:
        stored = json.load(fh)
    assert abs(stored["infimum"] - 1.0) <= 1e-3


def test_solve_scenario_rebuild_is_deterministic(tmp_path):
    cmd, model, *rest = REPLAY["solve_cubic_free"]
    out = tmp_path / "rebuild"
    proc = run_cli(cmd, "--model", model, *rest, "--out", out)
    assert proc.returncode == 0, proc.stderr
    for name in ("result.json", "profile.csv", "trace.csv"):
        fresh = (out / name).read_bytes()
        committed = (SCENARIOS / "solve_cubic_free" / name).read_bytes()
        assert fresh == committed, f"{name} drifted from the committed fixture"
