"""
Per-epoch metrics, run summaries and sweep comparison tables.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
import pandas as pd

from leobeam.core.config import DEFAULT_SUMMARY_WINDOW, DIVERGENCE_GROWTH_FRACTION
from leobeam.core.errors import EmptyWindowError

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "mean_queue_bits",
    "p0_term",
    "mean_handover_frequency",
    "max_handover_frequency",
    "utilization",
    "served_w1_bits",
    "served_w2_bits",
    "mean_virtual_queue",
)


@dataclass(frozen=True)
class MetricsFrame:
    """State of the network after one epoch."""

    epoch: int
    p0_term: float
    objective_avg: float
    mean_queue_bits: float
    mean_handover_frequency: float
    max_handover_frequency: float
    utilization: float
    imbalance: float
    served_w1_bits: float
    served_w2_bits: float
    mean_virtual_queue: float
    handover_events: int
    arrivals_bits: float
    penalty: float
    handover_counts: tuple[int, ...] = ()
    virtual_queues: tuple[float, ...] = ()

    def to_row(self) -> dict[str, Any]:
        """Scalar columns of the metrics CSV."""
        row = asdict(self)
        del row["handover_counts"]
        del row["virtual_queues"]
        return row


class MetricsRecorder:
    """Turns the end-of-epoch state into frames and keeps the running p0 average."""

    def __init__(self):
        self.frames: list[MetricsFrame] = []
        self._p0_total: float = 0.0

    def record(
        self,
        epoch: int,
        p0_term: float,
        queues: np.ndarray,
        handovers: np.ndarray,
        virtual: np.ndarray,
        utilization: float,
        imbalance: float,
        served_w1_bits: float,
        served_w2_bits: float,
        handover_events: int,
        arrivals_bits: float,
        penalty: float,
    ) -> MetricsFrame:
        self._p0_total += p0_term
        frequency = handovers / epoch
        frame = MetricsFrame(
            epoch=epoch,
            p0_term=p0_term,
            objective_avg=self._p0_total / epoch,
            mean_queue_bits=float(np.mean(queues)),
            mean_handover_frequency=float(np.mean(frequency)),
            max_handover_frequency=float(np.max(frequency)),
            utilization=utilization,
            imbalance=imbalance,
            served_w1_bits=served_w1_bits,
            served_w2_bits=served_w2_bits,
            mean_virtual_queue=float(np.mean(virtual)),
            handover_events=handover_events,
            arrivals_bits=arrivals_bits,
            penalty=penalty,
            handover_counts=tuple(int(h) for h in handovers),
            virtual_queues=tuple(float(m) for m in virtual),
        )
        self.frames.append(frame)
        return frame


def frames_to_dataframe(frames: Sequence[MetricsFrame]) -> pd.DataFrame:
    return pd.DataFrame.from_records([f.to_row() for f in frames])


def queue_trend(series: Sequence[float]) -> float:
    """Least-squares slope (bits per epoch) of the last half of a queue series."""
    values = np.asarray(series, dtype=float)
    tail = values[len(values) // 2 :]
    if tail.size < 2:
        return 0.0
    slope, _intercept = np.polyfit(np.arange(tail.size, dtype=float), tail, 1)
    return float(slope)


def is_diverging(series: Sequence[float], growth_fraction: float = DIVERGENCE_GROWTH_FRACTION) -> bool:
    """The fitted growth over the last half exceeds growth_fraction of its mean."""
    values = np.asarray(series, dtype=float)
    tail = values[len(values) // 2 :]
    if tail.size < 2:
        return False
    slope = queue_trend(values)
    mean = float(np.mean(tail))
    if mean <= 0:
        return slope > 0
    return slope * tail.size > growth_fraction * mean


def _finite_mean(values: np.ndarray) -> float | None:
    finite = values[np.isfinite(values)]
    return float(np.mean(finite)) if finite.size else None


def metrics_summary(frames: Sequence[MetricsFrame], window: int = DEFAULT_SUMMARY_WINDOW) -> dict[str, Any]:
    """
    Final-window means and end-of-run per-cell statistics.

    Raises EmptyWindowError when there are no frames or the window is not positive.
    """
    if not frames or window <= 0:
        raise EmptyWindowError("metrics summary needs at least one frame and a positive window")

    df = frames_to_dataframe(frames)
    tail = df.tail(window)
    last = frames[-1]
    epochs = last.epoch
    frequencies = [h / epochs for h in last.handover_counts]
    queue_series = df["mean_queue_bits"].to_numpy()

    summary: dict[str, Any] = {
        "epochs": epochs,
        "window": len(tail),
        "objective_avg": last.objective_avg,
        "imbalance": _finite_mean(tail["imbalance"].to_numpy(dtype=float)),
    }
    for column in SUMMARY_COLUMNS:
        summary[column] = float(tail[column].mean())
    summary["final_handover_frequency"] = frequencies
    summary["final_max_handover_frequency"] = max(frequencies, default=0.0)
    summary["virtual_queue_ratio"] = (
        float(np.mean(last.virtual_queues)) / epochs if last.virtual_queues else 0.0
    )
    summary["queue_slope"] = queue_trend(queue_series)
    tail_mean = float(np.mean(queue_series[len(queue_series) // 2 :]))
    summary["queue_slope_ratio"] = summary["queue_slope"] / tail_mean if tail_mean > 0 else 0.0
    summary["diverging"] = is_diverging(queue_series)
    return summary


def comparison_table(
    summaries: Sequence[Mapping[str, Any]], by: Sequence[str] = ("parameter", "value")
) -> pd.DataFrame:
    """
    Mean and spread across seeds of the summary metrics, one row per group.

    A group is flagged as diverging when any of its runs diverged.
    """
    if not summaries:
        return pd.DataFrame()
    df = pd.DataFrame.from_records([dict(s) for s in summaries])
    keys = [k for k in by if k in df.columns]
    metrics = [c for c in SUMMARY_COLUMNS if c in df.columns]
    grouped = df.groupby(keys, sort=True) if keys else df.groupby(np.zeros(len(df)))

    table = grouped[metrics].agg(["mean", "std"])
    table.columns = [f"{metric}_{stat}" for metric, stat in table.columns]
    table = table.fillna({c: 0.0 for c in table.columns if c.endswith("_std")})
    table["runs"] = grouped.size()
    if "diverging" in df.columns:
        table["diverging"] = grouped["diverging"].any()
    return table.reset_index(drop=not keys)

