"""
Terminal output for run summaries, violation reports and comparison tables.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np
import pandas as pd
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from leobeam.analysis.validator import Violation
from leobeam.core.models import Colors
from leobeam.core.utils import format_bits


def get_frequency_color(frequency: float, h_bar: float) -> str:
    """Green when a handover frequency respects the bound, red otherwise."""
    return Colors.GREEN if frequency <= h_bar else Colors.RED


def print_run_summary(summary: Mapping[str, Any], out_dir: str | None, h_bar: float):
    epochs = summary["epochs"]
    window = summary["window"]
    max_freq = summary["final_max_handover_frequency"]
    freq_color = get_frequency_color(max_freq, h_bar)

    print(f"{Colors.BOLD_WHITE}Simulated {epochs} epochs{Colors.RESET} (summary over the last {window})")
    print(f"  Mean queue:            {Colors.CYAN}{format_bits(summary['mean_queue_bits'])}{Colors.RESET}")
    print(f"  Objective (time avg):  {summary['objective_avg']:.6g}")
    print(f"  Served per epoch:      {format_bits(summary['served_w1_bits'])} satellite band, "
          f"{format_bits(summary['served_w2_bits'])} terrestrial band")
    print(f"  Utilization:           {summary['utilization']:.3f}")
    print(f"  Max handover freq:     {freq_color}{max_freq:.5f}{Colors.RESET} (bound {h_bar})")
    if summary.get("diverging"):
        print(f"  {Colors.RED}Queue is growing: slope {summary['queue_slope']:.4g} b/epoch{Colors.RESET}")
    if summary.get("violations"):
        print(f"  {Colors.RED}{summary['violations']} constraint violations{Colors.RESET}")
    if out_dir:
        print(f"  Outputs in {Colors.GREY}{out_dir}{Colors.RESET}")


def print_violations(violations: Sequence[Violation], limit: int = 50):
    for violation in violations[:limit]:
        print(f"{Colors.RED}✗{Colors.RESET} {violation}")
    if len(violations) > limit:
        print(f"{Colors.GREY}... {len(violations) - limit} more{Colors.RESET}")


def _cell(value: Any) -> str:
    if isinstance(value, bool | np.bool_):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4g}" if math.isfinite(value) else str(value)
    return str(value)


def render_table(df: pd.DataFrame, title: str, console: Console | None = None):
    """Print a DataFrame as a rich table."""
    console = console or Console()
    table = Table(title=title, show_lines=False)
    for column in df.columns:
        table.add_column(str(column), justify="right" if pd.api.types.is_numeric_dtype(df[column]) else "left")
    for row in df.itertuples(index=False):
        table.add_row(*(_cell(v) for v in row))
    console.print(table)


def make_progress(enabled: bool = True) -> Progress:
    return Progress(
        TextColumn("[bold]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        disable=not enabled,
    )
