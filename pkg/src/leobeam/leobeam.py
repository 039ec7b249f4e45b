"""
Main entry point for leobeam with subcommand support.

This module dispatches to the run, validate, sweep and report subcommands.
"""

import sys

from leobeam.ui.cli import main_report, main_run, main_sweep, main_validate


def run_run() -> int:
    """Run a scenario simulation."""
    return main_run(sys.argv[2:])


def run_validate() -> int:
    """Validate a decisions trace."""
    return main_validate(sys.argv[2:])


def run_sweep() -> int:
    """Run a parameter sweep."""
    return main_sweep(sys.argv[2:])


def run_report() -> int:
    """Compare finished runs."""
    return main_report(sys.argv[2:])


def show_main_help():
    """Show the main help message with subcommand information."""
    print("""leobeam - Beam management simulator for multi-satellite LEO constellations.

Usage:
  leobeam run [options]               # Simulate a scenario and write metrics, decisions, summary
  leobeam validate TRACE              # Check a decisions trace against the scheduling constraints
  leobeam sweep [options]             # Run a scenario over parameter values and seeds
  leobeam report RUN [RUN...]         # Compare the summaries of finished runs

Scenario Options (run, sweep):
  -s, --scenario FILE       # Scenario TOML file (default: built-in reference scenario)
  --set KEY=VALUE           # Override a scenario value, e.g. lyapunov.V=1000 (repeatable)
  --policy STAGE=NAME       # handover=proposed|load_balance|entropy_only
                              beamhop=proposed|greedy_hop
                              spectrum=proposed|greedy_share|none
  --epochs N                # Number of epochs (default: 2000)
  --full-scale              # 20000 epochs
  -v, --verbose             # Debug logging with stage timings
  --no-color                # Disable colored output

Simulation:
  Usage:
    leobeam run [options] [--out DIR] [--seed N]

  Examples:
    leobeam run                                   # Reference scenario
    leobeam run --set epochs=10 --out quick       # Ten epochs into ./quick
    leobeam run --policy spectrum=greedy_share    # Greedy spectrum sharing baseline

Trace Validation:
  Usage:
    leobeam validate leobeam-run/decisions.trace

  Exit codes: 0 no violations, 1 violations found, 2 unreadable trace

Parameter Sweeps:
  Usage:
    leobeam sweep --parameter {V,arrival_rate} --values V1,V2,... [--seeds S1,S2,...] [-j N]

  Examples:
    leobeam sweep -p V --values 10,100,1000 --seeds 0,1,2
    leobeam sweep -p arrival_rate --values 5.2e9,6.52e9,6.85e9 -j 3

Run Comparison:
  Usage:
    leobeam report RUN_DIR [RUN_DIR...] [--out DIR]

For more help on a specific subcommand:
  leobeam run --help
  leobeam validate --help
  leobeam sweep --help
  leobeam report --help""")


def main():
    """Main entry point with subcommand support."""
    if len(sys.argv) > 1 and sys.argv[1] == "run":
        sys.exit(run_run())
    elif len(sys.argv) > 1 and sys.argv[1] == "validate":
        sys.exit(run_validate())
    elif len(sys.argv) > 1 and sys.argv[1] == "sweep":
        sys.exit(run_sweep())
    elif len(sys.argv) > 1 and sys.argv[1] == "report":
        sys.exit(run_report())
    elif len(sys.argv) > 1 and sys.argv[1] == "help":
        # Handle 'leobeam help <subcommand>' syntax
        if len(sys.argv) > 2 and sys.argv[2] in ("run", "validate", "sweep", "report"):
            sys.argv = ["leobeam", sys.argv[2], "--help"]
            main()
        else:
            show_main_help()
    elif len(sys.argv) > 1 and sys.argv[1] in ["-h", "--help"]:
        show_main_help()
    elif len(sys.argv) > 1:
        print(f"Unknown command '{sys.argv[1]}'\n")
        show_main_help()
        sys.exit(2)
    else:
        show_main_help()


if __name__ == "__main__":
    main()
