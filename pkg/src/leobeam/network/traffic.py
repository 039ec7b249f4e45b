"""
Per-cell traffic: data queues, arrivals, handover counters, virtual queues and the
drift-plus-penalty terms evaluated each epoch.

Queue lengths are in bits. Functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from leobeam.core.errors import ScenarioError
from leobeam.core.models import CellState
from leobeam.core.scenario import ArrivalConfig, ClusterLoadConfig

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ArrivalModel:
    """Epoch arrivals: Poisson batches of fixed-size packets, or their exact mean."""

    mean_total_rate_bps: float
    weights: tuple[float, ...]
    epoch_duration_s: float
    distribution: str = "poisson_batch"
    packet_bits: int = 10_000

    def __post_init__(self):
        if self.mean_total_rate_bps < 0:
            raise ScenarioError("arrival rate must be non-negative")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ScenarioError(f"arrival weights sum to {math.fsum(self.weights)}, expected 1")
        if self.distribution not in ("poisson_batch", "deterministic"):
            raise ScenarioError(f"unknown arrival distribution {self.distribution!r}")

    @classmethod
    def from_config(
        cls, arrivals: ArrivalConfig, weights: Sequence[float], epoch_duration_s: float
    ) -> ArrivalModel:
        return cls(
            mean_total_rate_bps=arrivals.mean_total_rate_bps,
            weights=tuple(weights),
            epoch_duration_s=epoch_duration_s,
            distribution=arrivals.distribution,
            packet_bits=arrivals.packet_bits,
        )

    def mean_arrivals(self) -> np.ndarray:
        """Expected bits per cell per epoch."""
        return self.mean_total_rate_bps * self.epoch_duration_s * np.asarray(self.weights)


@dataclass(frozen=True)
class ArrivalTrace:
    """Recorded arrivals replayed by epoch; epochs missing from the trace bring nothing."""

    cells: int
    bits: dict[int, np.ndarray] = field(default_factory=dict)

    def arrivals(self, epoch: int) -> np.ndarray:
        recorded = self.bits.get(epoch)
        return np.zeros(self.cells) if recorded is None else recorded.copy()

    def mean_arrivals(self) -> np.ndarray:
        """Average bits per cell over the recorded epochs."""
        if not self.bits:
            return np.zeros(self.cells)
        return np.mean(np.stack(list(self.bits.values())), axis=0)


def update_data_queue(queue: ArrayLike, served: ArrayLike, arrived: ArrayLike) -> np.ndarray:
    """Q ← max(Q − D, 0) + α."""
    return np.maximum(np.asarray(queue, dtype=float) - served, 0.0) + np.asarray(arrived, dtype=float)


def sample_arrivals(model: ArrivalModel, epoch: int, rng: np.random.Generator) -> np.ndarray:
    """Bits arriving at each cell during a 1-based epoch."""
    if epoch < 1:
        raise ValueError(f"epochs are numbered from 1, got {epoch}")
    mean = model.mean_arrivals()
    if model.distribution == "deterministic":
        return mean
    packets = rng.poisson(mean / model.packet_bits)
    return packets.astype(float) * model.packet_bits


def handover_increment(previous: int | None, current: int) -> int:
    """1 when the serving satellite changed between epochs, 0 otherwise (and on the first epoch)."""
    if previous is None or previous < 0:
        return 0
    return int(previous != current)


def handover_increments(previous: np.ndarray | None, current: np.ndarray) -> np.ndarray:
    if previous is None:
        return np.zeros(current.shape, dtype=int)
    return ((previous >= 0) & (previous != current)).astype(int)


def update_virtual_queue(virtual: ArrayLike, handover: ArrayLike, h_bar: float) -> np.ndarray:
    """M ← max(M + handover − H̄, 0)."""
    return np.maximum(np.asarray(virtual, dtype=float) + handover - h_bar, 0.0)


def epoch_penalty(
    served: ArrayLike, queue: ArrayLike, virtual: ArrayLike, drift: ArrayLike, V: float
) -> float:
    """V · Σ(D − Q)² + Σ M · m."""
    gap = np.asarray(served, dtype=float) - np.asarray(queue, dtype=float)
    return float(V * np.sum(gap**2) + np.sum(np.asarray(virtual) * np.asarray(drift)))


def p0_objective_term(served: ArrayLike, queue: ArrayLike) -> float:
    """Σ(D − Q)² for one epoch."""
    gap = np.asarray(served, dtype=float) - np.asarray(queue, dtype=float)
    return float(np.sum(gap**2))


def draw_cluster_loads(
    load: ClusterLoadConfig, clusters: int, rng: np.random.Generator
) -> np.ndarray:
    return rng.uniform(load.low, load.high, size=clusters)


def slot_budgets(loads: np.ndarray, slots: int) -> np.ndarray:
    """Interfered-slot budget ⌊T (1 − l)⌋ per cluster."""
    return np.floor(slots * (1.0 - loads) + 1e-9).astype(int)


def virtual_queue_bound(epochs: int, h_bar: float, cells: int) -> float:
    """Upper trend bound on M/F after F epochs with B0 = C (1 − H̄)² / 2."""
    b0 = cells * (1.0 - h_bar) ** 2 / 2.0
    return math.sqrt(2.0 * (b0 + 2.0 * cells * (1.0 - h_bar) ** 2) / epochs)


@dataclass
class TrafficState:
    """Mutable per-cell bookkeeping advanced once per epoch by the simulator."""

    queues: np.ndarray
    virtual_queues: np.ndarray
    handovers: np.ndarray
    serving: np.ndarray  # -1 before the first assignment
    target_snr_db: np.ndarray
    demand_weights: np.ndarray

    @classmethod
    def initial(cls, weights: Sequence[float], target_snr_db: float) -> TrafficState:
        cells = len(weights)
        return cls(
            queues=np.zeros(cells),
            virtual_queues=np.zeros(cells),
            handovers=np.zeros(cells, dtype=int),
            serving=np.full(cells, -1, dtype=int),
            target_snr_db=np.full(cells, float(target_snr_db)),
            demand_weights=np.asarray(weights, dtype=float),
        )

    @property
    def cell_count(self) -> int:
        return int(self.queues.shape[0])

    def previous_serving(self) -> np.ndarray | None:
        return None if np.all(self.serving < 0) else self.serving.copy()

    def cell_state(self, cell: int) -> CellState:
        sat = int(self.serving[cell])
        return CellState(
            cell_id=cell,
            queue_bits=float(self.queues[cell]),
            virtual_queue=float(self.virtual_queues[cell]),
            handovers=int(self.handovers[cell]),
            serving_satellite=None if sat < 0 else sat,
            target_snr_db=float(self.target_snr_db[cell]),
            demand_weight=float(self.demand_weights[cell]),
        )

    def advance(
        self, serving: np.ndarray, served: np.ndarray, arrived: np.ndarray, h_bar: float
    ) -> np.ndarray:
        """Apply one epoch; returns the per-cell handover indicator."""
        increments = handover_increments(self.previous_serving(), serving)
        self.queues = update_data_queue(self.queues, served, arrived)
        self.handovers = self.handovers + increments
        self.virtual_queues = update_virtual_queue(self.virtual_queues, increments, h_bar)
        self.serving = serving.copy()
        return increments
