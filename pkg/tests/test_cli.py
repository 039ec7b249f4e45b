"""Tests for the command line entry points and their exit codes."""

from __future__ import annotations

import os
import tempfile

import pandas as pd
import pytest

from leobeam.analysis.validator import DecisionContext
from leobeam.core.config import METRICS_FILE, REPORT_FILE, SUMMARY_FILE, SWEEP_FILE, TRACE_FILE
from leobeam.core.models import BeamActivation, EpochDecision
from leobeam.filesystem.outputs import TraceWriter
from leobeam.ui.cli import (
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATIONS,
    build_scenario,
    main_report,
    main_run,
    main_sweep,
    main_validate,
    parse_run_arguments,
    parse_sweep_arguments,
)

SMALL_SCENARIO = """
epochs = 3
slots_per_epoch = 10
min_elevation_deg = 10.0

[layout]
cell_rows = 2
cell_columns = 2
cluster_count = 4

[handover]
visibility_step_s = 10.0
visibility_horizon_s = 60.0

[sparrow]
population = 6
max_iterations = 5
local_search_iterations = 2
producers = 2
spectators = 2

[arrivals]
mean_total_rate_bps = 1e9
distribution = "deterministic"
"""


def _write_scenario(tmpdir: str) -> str:
    path = os.path.join(tmpdir, "scenario.toml")
    with open(path, "w", encoding="utf-8") as f:
        f.write(SMALL_SCENARIO)
    return path


def test_parse_run_arguments():
    """Repeatable --set and --policy options accumulate."""
    args = parse_run_arguments(
        ["-s", "x.toml", "--set", "epochs=5", "--set", "lyapunov.V=10", "--policy", "beamhop=greedy_hop"]
    )
    assert args.scenario == "x.toml"
    assert args.overrides == ["epochs=5", "lyapunov.V=10"]
    assert args.policies == ["beamhop=greedy_hop"]
    assert args.out == "leobeam-run"

    sweep = parse_sweep_arguments(["--parameter", "V", "--values", "10,100", "--seeds", "1,2"])
    assert sweep.values == [10.0, 100.0]
    assert sweep.seeds == [1, 2]

    with pytest.raises(SystemExit):
        parse_sweep_arguments(["--parameter", "beams", "--values", "1"])


def test_build_scenario():
    """Overrides apply before policies, then the epoch count and seed."""
    args = parse_run_arguments(["--set", "epochs=7", "--policy", "spectrum=none", "--seed", "4"])
    config = build_scenario(args, args.seed)

    assert config.epochs == 7
    assert config.policy.spectrum == "none"
    assert config.seed == 4

    args = parse_run_arguments(["--set", "epochs=7", "--epochs", "2", "--full-scale"])
    assert build_scenario(args).epochs == 2


def test_main_run_writes_outputs():
    """A clean run exits 0 and leaves metrics, trace and summary behind."""
    with tempfile.TemporaryDirectory() as tmpdir:
        scenario = _write_scenario(tmpdir)
        out = os.path.join(tmpdir, "run")

        assert main_run(["-s", scenario, "--out", out, "--no-color"]) == EXIT_OK
        for name in (METRICS_FILE, TRACE_FILE, SUMMARY_FILE):
            assert os.path.isfile(os.path.join(out, name))
        assert len(pd.read_csv(os.path.join(out, METRICS_FILE))) == 3

        assert main_run(["-s", scenario, "--out", out, "--set", "epochs=2", "--no-color"]) == EXIT_OK
        assert len(pd.read_csv(os.path.join(out, METRICS_FILE))) == 2

        assert main_validate([os.path.join(out, TRACE_FILE), "--no-color"]) == EXIT_OK

        schedule = os.path.join(tmpdir, "schedule.csv")
        assert main_validate([os.path.join(out, TRACE_FILE), "--schedule", schedule]) == EXIT_OK
        rows = pd.read_csv(schedule)
        assert list(rows.columns) == ["epoch", "slot", "satellite", "beam", "cell"]
        assert set(rows["epoch"]) <= {1, 2}


def test_main_run_usage_errors():
    """Missing scenario files and bad overrides exit 2."""
    with tempfile.TemporaryDirectory() as tmpdir:
        out = os.path.join(tmpdir, "run")
        assert main_run(["-s", os.path.join(tmpdir, "missing.toml"), "--out", out]) == EXIT_USAGE
        assert main_run(["--set", "lyapunov.W=3", "--out", out]) == EXIT_USAGE
        assert main_run(["--policy", "handover", "--out", out]) == EXIT_USAGE


def test_main_validate():
    """Empty traces pass, broken constraints exit 1 and corrupt files exit 2."""
    context = DecisionContext(
        visible=((0,), (0,)), conflicts=frozenset(), beams=1, polarization_count=1, slots=2
    )
    with tempfile.TemporaryDirectory() as tmpdir:
        empty = os.path.join(tmpdir, "empty.trace")
        with open(empty, "w", encoding="utf-8"):
            pass
        assert main_validate([empty]) == EXIT_OK

        bad = os.path.join(tmpdir, "bad.trace")
        with TraceWriter(bad) as writer:
            writer.write(EpochDecision(epoch=1, serving=(0, 0)), context)
            # one beam lights two cells in the same slot
            writer.write(
                EpochDecision(
                    epoch=2,
                    serving=(0, 0),
                    beams=(BeamActivation(0, 0, 0, 0), BeamActivation(0, 0, 1, 0)),
                ),
                context,
            )
        assert main_validate([bad]) == EXIT_VIOLATIONS

        corrupt = os.path.join(tmpdir, "corrupt.trace")
        with open(corrupt, "w", encoding="utf-8") as f:
            f.write("{broken\n")
        assert main_validate([corrupt]) == EXIT_USAGE
        assert main_validate([os.path.join(tmpdir, "missing.trace")]) == EXIT_USAGE


def test_main_report():
    """Summaries of finished runs are tabulated and optionally written."""
    with tempfile.TemporaryDirectory() as tmpdir:
        scenario = _write_scenario(tmpdir)
        first = os.path.join(tmpdir, "proposed")
        second = os.path.join(tmpdir, "baseline")
        assert main_run(["-s", scenario, "--out", first, "--set", "epochs=2"]) == EXIT_OK
        assert (
            main_run(["-s", scenario, "--out", second, "--set", "epochs=2", "--policy", "spectrum=none"])
            == EXIT_OK
        )

        report = os.path.join(tmpdir, "report")
        assert main_report([first, second, "--out", report]) == EXIT_OK
        table = pd.read_csv(os.path.join(report, REPORT_FILE))
        assert sorted(table["run"]) == ["baseline", "proposed"]

        assert main_report([os.path.join(tmpdir, "nowhere")]) == EXIT_USAGE


def test_main_sweep():
    """A single-value sweep writes one row per seed and a comparison table."""
    with tempfile.TemporaryDirectory() as tmpdir:
        scenario = _write_scenario(tmpdir)
        out = os.path.join(tmpdir, "sweep")
        code = main_sweep(
            ["-s", scenario, "--set", "epochs=2", "--parameter", "V", "--values", "50", "--out", out]
        )

        assert code == EXIT_OK
        rows = pd.read_csv(os.path.join(out, SWEEP_FILE))
        assert len(rows) == 1
        assert rows["value"].tolist() == [50.0]
        assert os.path.isfile(os.path.join(out, REPORT_FILE))
        assert os.path.isfile(os.path.join(out, "V_50", "seed_0", SUMMARY_FILE))
