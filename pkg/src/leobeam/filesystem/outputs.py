"""
Reading and writing run artifacts.

A run directory holds the metrics CSV (one row per epoch), the decisions trace
(one JSON record per line carrying the decision and the facts it is validated
against) and the summary JSON. Arrival traces are CSV files with epoch, cell and
bits columns. Beam schedules export to CSV with one row per activation.
"""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Iterable, Iterator, Mapping, Sequence
from types import TracebackType
from typing import Any, TextIO

import numpy as np
import pandas as pd

from leobeam.analysis.metrics import MetricsFrame, frames_to_dataframe
from leobeam.analysis.validator import DecisionContext
from leobeam.core.errors import ScenarioError, TraceError
from leobeam.core.models import (
    BeamActivation,
    ClusterUsage,
    ConflictPair,
    EpochDecision,
    HandoverEvent,
    SharingActivation,
)
from leobeam.network.traffic import ArrivalTrace

logger = logging.getLogger(__name__)

ARRIVAL_COLUMNS = ("epoch", "cell", "bits")
SCHEDULE_COLUMNS = ("epoch", "slot", "satellite", "beam", "cell")


def write_metrics_csv(frames: Sequence[MetricsFrame], path: str):
    frames_to_dataframe(frames).to_csv(path, index=False)
    logger.debug("Wrote %d metric rows to %s", len(frames), path)


def read_metrics_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path)


def decision_to_record(decision: EpochDecision, context: DecisionContext) -> dict[str, Any]:
    return {
        "epoch": decision.epoch,
        "serving": list(decision.serving),
        "beams": [list(a) for a in decision.beams],
        "sharing": [list(a) for a in decision.sharing],
        "events": [list(e) for e in decision.events],
        "mandatory": list(decision.mandatory),
        "rebalanced": decision.rebalanced,
        "cluster_usage": [list(u) for u in decision.cluster_usage],
        "context": {
            "visible": [list(v) for v in context.visible],
            "conflicts": [list(p) for p in sorted(context.conflicts)],
            "beams": context.beams,
            "polarization_count": context.polarization_count,
            "slots": context.slots,
            "cross_pol_isolated": context.cross_pol_isolated,
            "inr_threshold": context.inr_threshold,
            "budgets": [[j, b] for j, b in sorted(context.budgets.items())],
            "cluster_inr": [[j, list(v)] for j, v in sorted(context.cluster_inr.items())],
        },
    }


def record_to_decision(record: Mapping[str, Any]) -> tuple[EpochDecision, DecisionContext]:
    """Rebuild a decision and its context; raises KeyError, TypeError or ValueError on bad input."""
    ctx = record["context"]
    decision = EpochDecision(
        epoch=int(record["epoch"]),
        serving=tuple(int(s) for s in record["serving"]),
        beams=tuple(BeamActivation(*map(int, a)) for a in record["beams"]),
        sharing=tuple(SharingActivation(*map(int, a)) for a in record["sharing"]),
        events=tuple(
            HandoverEvent(int(e[0]), int(e[1]), int(e[2]), int(e[3]), str(e[4]))
            for e in record.get("events", [])
        ),
        mandatory=tuple(int(c) for c in record.get("mandatory", [])),
        rebalanced=bool(record.get("rebalanced", False)),
        cluster_usage=tuple(ClusterUsage(*map(int, u)) for u in record.get("cluster_usage", [])),
    )
    context = DecisionContext(
        visible=tuple(tuple(int(s) for s in v) for v in ctx["visible"]),
        conflicts=frozenset(ConflictPair(*map(int, p)) for p in ctx["conflicts"]),
        beams=int(ctx["beams"]),
        polarization_count=int(ctx["polarization_count"]),
        slots=int(ctx["slots"]),
        cross_pol_isolated=bool(ctx["cross_pol_isolated"]),
        inr_threshold=float(ctx["inr_threshold"]),
        budgets={int(j): int(b) for j, b in ctx["budgets"]},
        cluster_inr={int(j): tuple(float(x) for x in v) for j, v in ctx["cluster_inr"]},
    )
    return decision, context


class TraceWriter:
    """Appends one JSON line per epoch decision."""

    def __init__(self, path: str):
        self.path: str = path
        self.records: int = 0
        self._file: TextIO | None = None

    def __enter__(self) -> TraceWriter:
        self._file = open(self.path, "w", encoding="utf-8")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ):
        if self._file is not None:
            self._file.close()
            self._file = None

    def write(self, decision: EpochDecision, context: DecisionContext):
        if self._file is None:
            raise TraceError(f"trace {self.path} is not open")
        json.dump(decision_to_record(decision, context), self._file, separators=(",", ":"))
        self._file.write("\n")
        self.records += 1


def iter_trace(path: str) -> Iterator[tuple[EpochDecision, DecisionContext]]:
    """Yield decisions from a trace; blank lines are skipped."""
    if not os.path.isfile(path):
        raise TraceError(f"trace '{path}' does not exist")
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield record_to_decision(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise TraceError(f"{path}:{number}: corrupt record ({e})") from e


def read_trace(path: str) -> list[tuple[EpochDecision, DecisionContext]]:
    return list(iter_trace(path))


def schedule_frame(decisions: Iterable[EpochDecision]) -> pd.DataFrame:
    """Beam activations as rows of epoch, slot, satellite, beam and cell."""
    rows = [
        (d.epoch, a.slot, a.satellite, a.beam, a.cell)
        for d in decisions
        for a in sorted(d.beams)
    ]
    return pd.DataFrame.from_records(rows, columns=list(SCHEDULE_COLUMNS))


def write_schedule_csv(decisions: Iterable[EpochDecision], path: str):
    df = schedule_frame(decisions)
    df.to_csv(path, index=False)
    logger.debug("Wrote %d beam activations to %s", len(df), path)


def write_summary(summary: Mapping[str, Any], path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dict(summary), f, indent=2, sort_keys=True)
        f.write("\n")


def read_summary(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise TraceError(f"summary '{path}' does not exist") from e
    except json.JSONDecodeError as e:
        raise TraceError(f"{path}: {e}") from e


def write_arrival_trace(trace: ArrivalTrace, path: str):
    rows = [
        (epoch, cell, float(bits))
        for epoch in sorted(trace.bits)
        for cell, bits in enumerate(trace.bits[epoch])
    ]
    pd.DataFrame.from_records(rows, columns=list(ARRIVAL_COLUMNS)).to_csv(path, index=False)


def read_arrival_trace(path: str, cells: int) -> ArrivalTrace:
    """Load an arrival CSV; rows for the same (epoch, cell) add up."""
    try:
        df = pd.read_csv(path)
    except FileNotFoundError as e:
        raise ScenarioError(f"arrival trace '{path}' does not exist") from e
    missing = [c for c in ARRIVAL_COLUMNS if c not in df.columns]
    if missing:
        raise ScenarioError(f"arrival trace '{path}' lacks columns: {', '.join(missing)}")
    if len(df) and (df["cell"].min() < 0 or df["cell"].max() >= cells):
        raise ScenarioError(f"arrival trace '{path}' names cells outside 0..{cells - 1}")
    if len(df) and (df["epoch"].min() < 1 or df["bits"].min() < 0):
        raise ScenarioError(f"arrival trace '{path}' needs epochs >= 1 and non-negative bits")

    bits: dict[int, np.ndarray] = {}
    for (epoch, cell), total in df.groupby(["epoch", "cell"])["bits"].sum().items():
        bits.setdefault(int(epoch), np.zeros(cells))[int(cell)] = float(total)
    return ArrivalTrace(cells=cells, bits=bits)
