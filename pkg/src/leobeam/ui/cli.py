"""
Command line interface and argument parsing.

This module handles argument parsing, scenario assembly, logging setup and the
conversion of errors into exit codes for all subcommands:

  0  success
  1  constraint violations found
  2  usage, scenario or trace problems
  3  a cell lost sight of every satellite
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field

import pandas as pd
from rich.logging import RichHandler

from leobeam.analysis.metrics import comparison_table
from leobeam.analysis.validator import validate_decision
from leobeam.core.config import FULL_SCALE_EPOCHS, REPORT_FILE, SUMMARY_FILE, SWEEP_FILE
from leobeam.core.errors import InfeasibleScenarioError, ScenarioError, TraceError
from leobeam.core.models import Colors, EpochDecision
from leobeam.core.scenario import ScenarioConfig, apply_overrides, load_scenario, with_policy
from leobeam.core.utils import add_common_arguments, validate_output_directory
from leobeam.filesystem.outputs import iter_trace, read_summary, write_schedule_csv
from leobeam.processing.background_sweep import SWEEP_PARAMETERS, build_sweep_jobs, run_sweep
from leobeam.processing.simulator import run
from leobeam.ui.display import make_progress, print_run_summary, print_violations, render_table

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

REPORT_KEYS = ("policy_handover", "policy_beamhop", "policy_spectrum", "V", "arrival_rate_bps")

logger = logging.getLogger(__name__)


def should_use_colors() -> bool:
    """Determine if colors should be used based on terminal support."""
    # Check for NO_COLOR environment variable first (https://no-color.org/)
    if os.environ.get("NO_COLOR"):
        return False

    if os.environ.get("FORCE_COLOR"):
        return True

    term = os.environ.get("TERM", "").lower()
    if term in ["dumb", "unknown"]:
        return False

    return True


@dataclass
class BaseCommandArgs:
    """Base arguments common to all commands."""

    no_color: bool = False
    verbose: bool = False


@dataclass
class ScenarioArgs(BaseCommandArgs):
    """Arguments that assemble a scenario."""

    scenario: str | None = None
    overrides: list[str] = field(default_factory=list)
    policies: list[str] = field(default_factory=list)
    epochs: int | None = None
    full_scale: bool = False


@dataclass
class RunArgs(ScenarioArgs):
    """Arguments for the run command."""

    out: str = "leobeam-run"
    seed: int | None = None


@dataclass
class ValidateArgs(BaseCommandArgs):
    """Arguments for the validate command."""

    trace: str = ""
    schedule: str | None = None


@dataclass
class SweepArgs(ScenarioArgs):
    """Arguments for the sweep command."""

    parameter: str = "V"
    values: list[float] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    workers: int = 1
    out: str = "leobeam-sweep"


@dataclass
class ReportArgs(BaseCommandArgs):
    """Arguments for the report command."""

    runs: list[str] = field(default_factory=list)
    out: str | None = None


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(show_path=False)],
        force=True,
    )


def _setup_common(args: BaseCommandArgs):
    """Common setup for all commands."""
    if args.no_color or not should_use_colors():
        Colors.disable()
    setup_logging(args.verbose)


def _error(message: str):
    print(f"{Colors.RED}Error:{Colors.RESET} {message}")


def _number_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def build_scenario(args: ScenarioArgs, seed: int | None = None) -> ScenarioConfig:
    """Scenario file (or defaults), then overrides, policies, epochs and seed."""
    config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    config = apply_overrides(config, args.overrides)
    for text in args.policies:
        stage, sep, name = text.partition("=")
        if not sep:
            raise ScenarioError(f"policy '{text}' must look like stage=name")
        config = with_policy(config, stage.strip(), name.strip())
    if args.full_scale:
        config = dataclasses.replace(config, epochs=FULL_SCALE_EPOCHS)
    if args.epochs is not None:
        config = dataclasses.replace(config, epochs=args.epochs)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def parse_run_arguments(argv: Sequence[str] | None = None) -> RunArgs:
    """Parse command line arguments for the run command."""
    parser = argparse.ArgumentParser(
        prog="leobeam run",
        description="Simulate a scenario epoch by epoch and write metrics, decisions and a summary.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s                                  # Reference scenario, 2000 epochs
  %(prog)s -s scenario.toml --out results   # Scenario file, custom output directory
  %(prog)s --set epochs=10                  # Override any scenario value
  %(prog)s --policy handover=load_balance   # Swap in a baseline policy
  %(prog)s --full-scale                     # 20000 epochs
        """,
    )
    add_common_arguments(parser)
    parser.add_argument("-o", "--out", default="leobeam-run", help="Output directory (default: leobeam-run)")
    parser.add_argument("--seed", type=int, help="Random seed (overrides the scenario seed)")
    args = parser.parse_args(argv)
    return RunArgs(
        no_color=args.no_color,
        verbose=args.verbose,
        scenario=args.scenario,
        overrides=args.overrides,
        policies=args.policies,
        epochs=args.epochs,
        full_scale=args.full_scale,
        out=args.out,
        seed=args.seed,
    )


def parse_validate_arguments(argv: Sequence[str] | None = None) -> ValidateArgs:
    """Parse command line arguments for the validate command."""
    parser = argparse.ArgumentParser(
        prog="leobeam validate",
        description="Check every decision of a trace against the scheduling constraints.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s leobeam-run/decisions.trace
  %(prog)s leobeam-run/decisions.trace --schedule schedule.csv
        """,
    )
    parser.add_argument("trace", help="Decisions trace written by 'leobeam run'")
    parser.add_argument(
        "--schedule", metavar="FILE", help="Also write the beam schedule as CSV (epoch, slot, satellite, beam, cell)"
    )
    add_common_arguments(parser, include_scenario=False)
    args = parser.parse_args(argv)
    return ValidateArgs(
        no_color=args.no_color, verbose=args.verbose, trace=args.trace, schedule=args.schedule
    )


def parse_sweep_arguments(argv: Sequence[str] | None = None) -> SweepArgs:
    """Parse command line arguments for the sweep command."""
    parser = argparse.ArgumentParser(
        prog="leobeam sweep",
        description="Run a scenario for several values of one parameter and seeds, and tabulate.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s --parameter V --values 10,100,1000 --seeds 0,1,2
  %(prog)s --parameter arrival_rate --values 5e9,6.52e9,7.32e9 --workers 3
        """,
    )
    add_common_arguments(parser)
    parser.add_argument("-p", "--parameter", choices=SWEEP_PARAMETERS, required=True, help="Swept parameter")
    parser.add_argument("--values", type=_number_list, required=True, help="Comma-separated parameter values")
    parser.add_argument("--seeds", type=_int_list, default=[0], help="Comma-separated seeds (default: 0)")
    parser.add_argument("-j", "--workers", type=int, default=1, help="Concurrent runs (default: 1)")
    parser.add_argument("-o", "--out", default="leobeam-sweep", help="Output directory (default: leobeam-sweep)")
    args = parser.parse_args(argv)
    if not args.values:
        parser.error("--values needs at least one value")
    return SweepArgs(
        no_color=args.no_color,
        verbose=args.verbose,
        scenario=args.scenario,
        overrides=args.overrides,
        policies=args.policies,
        epochs=args.epochs,
        full_scale=args.full_scale,
        parameter=args.parameter,
        values=args.values,
        seeds=args.seeds or [0],
        workers=args.workers,
        out=args.out,
    )


def parse_report_arguments(argv: Sequence[str] | None = None) -> ReportArgs:
    """Parse command line arguments for the report command."""
    parser = argparse.ArgumentParser(
        prog="leobeam report",
        description="Compare the summaries of finished runs.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s proposed-run baseline-run
  %(prog)s runs/* --out comparison
        """,
    )
    parser.add_argument("runs", nargs="+", help="Run directories containing summary.json")
    parser.add_argument("-o", "--out", help="Directory for comparison.csv (default: print only)")
    add_common_arguments(parser, include_scenario=False)
    args = parser.parse_args(argv)
    return ReportArgs(no_color=args.no_color, verbose=args.verbose, runs=args.runs, out=args.out)


def main_run(argv: Sequence[str] | None = None) -> int:
    """Main function for the run command."""
    args = parse_run_arguments(argv)
    _setup_common(args)

    try:
        config = build_scenario(args, args.seed)
    except ScenarioError as e:
        _error(str(e))
        return EXIT_USAGE

    is_valid, out_dir = validate_output_directory(args.out)
    if not is_valid:
        return EXIT_USAGE

    try:
        with make_progress() as progress:
            task = progress.add_task("Simulating", total=config.epochs)
            result = run(
                config,
                out_dir,
                progress_callback=lambda done, _total: progress.update(task, completed=done),
            )
    except ScenarioError as e:
        _error(str(e))
        return EXIT_USAGE
    except InfeasibleScenarioError as e:
        _error(str(e))
        return EXIT_INFEASIBLE

    print_run_summary(result.summary, out_dir, config.lyapunov.h_bar)
    if result.violations:
        print_violations(result.violations)
        return EXIT_VIOLATIONS
    return EXIT_OK


def main_validate(argv: Sequence[str] | None = None) -> int:
    """Main function for the validate command."""
    args = parse_validate_arguments(argv)
    _setup_common(args)

    decisions = 0
    violations = []
    scheduled: list[EpochDecision] = []
    try:
        for decision, context in iter_trace(args.trace):
            decisions += 1
            violations.extend(validate_decision(decision, context))
            if args.schedule:
                scheduled.append(decision)
    except TraceError as e:
        _error(str(e))
        return EXIT_USAGE

    if args.schedule:
        try:
            write_schedule_csv(scheduled, args.schedule)
        except OSError as e:
            _error(f"cannot write schedule: {e}")
            return EXIT_USAGE

    if violations:
        print_violations(violations)
        print(f"{Colors.RED}{len(violations)} violations in {decisions} decisions{Colors.RESET}")
        return EXIT_VIOLATIONS
    print(f"{Colors.GREEN}✓{Colors.RESET} {decisions} decisions, no violations")
    return EXIT_OK


def main_sweep(argv: Sequence[str] | None = None) -> int:
    """Main function for the sweep command."""
    args = parse_sweep_arguments(argv)
    _setup_common(args)

    try:
        config = build_scenario(args)
        jobs = build_sweep_jobs(config, args.parameter, args.values, args.seeds, args.out)
    except ScenarioError as e:
        _error(str(e))
        return EXIT_USAGE

    is_valid, out_dir = validate_output_directory(args.out)
    if not is_valid:
        return EXIT_USAGE

    with make_progress() as progress:
        task = progress.add_task(f"Sweeping {args.parameter}", total=len(jobs))
        outcomes = run_sweep(
            jobs, args.workers, lambda done, _total: progress.update(task, completed=done)
        )

    failed = [o for o in outcomes if not o.ok]
    for outcome in failed:
        _error(f"{outcome.job.parameter}={outcome.job.value:g} seed {outcome.job.seed}: {outcome.error}")
    rows = [o.row() for o in outcomes if o.ok]
    if not rows:
        return EXIT_INFEASIBLE

    pd.DataFrame.from_records(rows).to_csv(os.path.join(out_dir, SWEEP_FILE), index=False)
    table = comparison_table(rows)
    table.to_csv(os.path.join(out_dir, REPORT_FILE), index=False)
    render_table(table, f"Sweep over {args.parameter}")
    if failed:
        return EXIT_INFEASIBLE
    if any(row.get("violations") for row in rows):
        return EXIT_VIOLATIONS
    return EXIT_OK


def main_report(argv: Sequence[str] | None = None) -> int:
    """Main function for the report command."""
    args = parse_report_arguments(argv)
    _setup_common(args)

    summaries = []
    try:
        for run_dir in args.runs:
            summary = read_summary(os.path.join(run_dir, SUMMARY_FILE))
            summary["run"] = os.path.basename(os.path.normpath(run_dir))
            summaries.append(summary)
    except TraceError as e:
        _error(str(e))
        return EXIT_USAGE

    table = comparison_table(summaries, by=("run", *REPORT_KEYS))
    if args.out:
        is_valid, out_dir = validate_output_directory(args.out)
        if not is_valid:
            return EXIT_USAGE
        table.to_csv(os.path.join(out_dir, REPORT_FILE), index=False)
    render_table(table, "Run comparison")
    return EXIT_OK
