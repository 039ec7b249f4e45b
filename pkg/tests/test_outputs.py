"""Tests for run artifacts: decision traces, summaries, metrics and arrival CSVs."""

from __future__ import annotations

import os
import tempfile

import numpy as np
import pytest

from leobeam.analysis.metrics import MetricsRecorder
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
from leobeam.filesystem.outputs import (
    TraceWriter,
    read_arrival_trace,
    read_metrics_csv,
    read_summary,
    read_trace,
    schedule_frame,
    write_arrival_trace,
    write_metrics_csv,
    write_schedule_csv,
    write_summary,
)
from leobeam.network.traffic import ArrivalTrace

DECISION = EpochDecision(
    epoch=7,
    serving=(0, 1),
    beams=(BeamActivation(0, 0, 0, 1), BeamActivation(1, 1, 1, 0)),
    sharing=(SharingActivation(0, 0, 0),),
    events=(HandoverEvent(7, 1, 0, 1, "rebalance"),),
    mandatory=(1,),
    rebalanced=True,
    cluster_usage=(ClusterUsage(2, 1, 3),),
)
CONTEXT = DecisionContext(
    visible=((0,), (0, 1)),
    conflicts=frozenset({ConflictPair(0, 0, 1, 1)}),
    beams=2,
    polarization_count=2,
    slots=10,
    inr_threshold=0.5,
    budgets={2: 3},
    cluster_inr={2: (0.75, 0.0)},
)


def test_trace_write_and_read():
    """A decision and its context come back field for field."""
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "decisions.trace")
        with TraceWriter(path) as writer:
            writer.write(DECISION, CONTEXT)
            writer.write(EpochDecision(epoch=8, serving=(0, 0)), CONTEXT)
        assert writer.records == 2

        records = read_trace(path)

    assert len(records) == 2
    decision, context = records[0]
    assert decision == DECISION
    assert context == CONTEXT
    assert records[1][0].beams == ()


def test_trace_errors():
    """Missing files and corrupt lines raise TraceError naming the line."""
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(TraceError, match="does not exist"):
            read_trace(os.path.join(tmpdir, "nothing.trace"))

        path = os.path.join(tmpdir, "decisions.trace")
        with TraceWriter(path) as writer:
            writer.write(DECISION, CONTEXT)
        with open(path, "a", encoding="utf-8") as f:
            f.write("\n")
            f.write('{"epoch": 8, "serving": [0]}\n')
        with pytest.raises(TraceError, match=":3:"):
            read_trace(path)

        with open(path, "w", encoding="utf-8") as f:
            f.write("not json\n")
        with pytest.raises(TraceError, match=":1:"):
            read_trace(path)

        # blank lines only: an empty trace
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n\n")
        assert read_trace(path) == []

    writer = TraceWriter("unused.trace")
    with pytest.raises(TraceError):
        writer.write(DECISION, CONTEXT)


def test_summary_roundtrip_and_errors():
    """Summaries are plain JSON; unreadable ones raise TraceError."""
    summary = {"epochs": 3, "mean_queue_bits": 1.5e6, "final_handover_frequency": [0.0, 0.5]}
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "summary.json")
        write_summary(summary, path)
        assert read_summary(path) == summary

        with pytest.raises(TraceError):
            read_summary(os.path.join(tmpdir, "missing.json"))

        with open(path, "w", encoding="utf-8") as f:
            f.write("{")
        with pytest.raises(TraceError):
            read_summary(path)


def test_metrics_csv():
    """One row per frame with the scalar columns."""
    recorder = MetricsRecorder()
    for epoch in (1, 2, 3):
        recorder.record(
            epoch=epoch,
            p0_term=1.0,
            queues=np.array([2.0]),
            handovers=np.array([0]),
            virtual=np.array([0.0]),
            utilization=0.25,
            imbalance=1.0,
            served_w1_bits=3.0,
            served_w2_bits=0.0,
            handover_events=0,
            arrivals_bits=3.0,
            penalty=0.0,
        )
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "metrics.csv")
        write_metrics_csv(recorder.frames, path)
        df = read_metrics_csv(path)

    assert list(df["epoch"]) == [1, 2, 3]
    assert "utilization" in df.columns
    assert "handover_counts" not in df.columns


def test_arrival_trace_csv():
    """Traces written to CSV replay the same bits; duplicate rows add up."""
    trace = ArrivalTrace(cells=2, bits={1: np.array([10.0, 0.0]), 3: np.array([1.0, 2.0])})
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "arrivals.csv")
        write_arrival_trace(trace, path)
        loaded = read_arrival_trace(path, 2)

        assert loaded.arrivals(1).tolist() == [10.0, 0.0]
        assert loaded.arrivals(2).tolist() == [0.0, 0.0]
        assert loaded.arrivals(3).tolist() == [1.0, 2.0]

        duplicated = os.path.join(tmpdir, "duplicated.csv")
        with open(duplicated, "w", encoding="utf-8") as f:
            f.write("epoch,cell,bits\n1,0,5\n1,0,7\n")
        assert read_arrival_trace(duplicated, 1).arrivals(1).tolist() == [12.0]


def test_arrival_trace_errors():
    """Missing files, missing columns and out-of-range cells are scenario errors."""
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(ScenarioError):
            read_arrival_trace(os.path.join(tmpdir, "missing.csv"), 2)

        path = os.path.join(tmpdir, "arrivals.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("epoch,bits\n1,5\n")
        with pytest.raises(ScenarioError, match="cell"):
            read_arrival_trace(path, 2)

        with open(path, "w", encoding="utf-8") as f:
            f.write("epoch,cell,bits\n1,2,5\n")
        with pytest.raises(ScenarioError):
            read_arrival_trace(path, 2)

        with open(path, "w", encoding="utf-8") as f:
            f.write("epoch,cell,bits\n0,1,5\n")
        with pytest.raises(ScenarioError):
            read_arrival_trace(path, 2)


def test_schedule_csv():
    """One row per beam activation, ordered by slot within each epoch."""
    idle = EpochDecision(epoch=8, serving=(0, 1))
    frame = schedule_frame([DECISION, idle])

    assert list(frame.columns) == ["epoch", "slot", "satellite", "beam", "cell"]
    assert frame.values.tolist() == [[7, 0, 0, 1, 0], [7, 1, 1, 0, 1]]

    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "schedule.csv")
        write_schedule_csv([DECISION], path)
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()

    assert lines == ["epoch,slot,satellite,beam,cell", "7,0,0,1,0", "7,1,1,0,1"]
