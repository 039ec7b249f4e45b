"""
Inter-satellite handover decisions.

Cells whose serving satellite left visibility must be reassigned; they are placed by
an entropy-weighted multi-attribute score (satellite load, remaining visibility,
elevation). When resource utilization and load imbalance are both below their
thresholds the whole assignment is refined by swap matching, which lowers the
load-balance plus handover-drift objective one exchange or move at a time.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Collection, Sequence
from dataclasses import dataclass, field

import numpy as np
from funlog import log_calls
from numpy.typing import ArrayLike

from leobeam.core.errors import InfeasibleScenarioError
from leobeam.core.models import EpochDecision, HandoverEvent
from leobeam.core.scenario import HandoverConfig
from leobeam.operations.baselines import baseline_load_balance

logger = logging.getLogger(__name__)

IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class TriggerDecision:
    mandatory: frozenset[int]
    global_rebalance: bool


@dataclass
class SwapResult:
    serving: np.ndarray
    history: list[float]
    iterations: int
    accepted: int


@dataclass
class HandoverOutcome:
    serving: np.ndarray
    events: list[HandoverEvent]
    trigger: TriggerDecision
    delta_history: list[float] = field(default_factory=list)


def utilization_rate(busy_beam_slots: int, active_satellites: int, beams: int, slots: int) -> float:
    """Share of the beam-slots of active satellites that carried data."""
    capacity = active_satellites * beams * slots
    if capacity == 0:
        return 0.0
    return busy_beam_slots / capacity


def decision_utilization(decision: EpochDecision, beams: int, slots: int) -> float:
    return utilization_rate(len(decision.beams), len(set(decision.serving)), beams, slots)


def satellite_loads(serving: np.ndarray, queues: np.ndarray, satellites: int) -> np.ndarray:
    """Queued bits behind each satellite; unassigned cells (-1) are skipped."""
    assigned = serving >= 0
    return np.bincount(serving[assigned], weights=queues[assigned], minlength=satellites)


def imbalance_index(loads: ArrayLike) -> float:
    """Max over min load of the satellites serving at least one cell; inf when the min is 0."""
    values = np.asarray(loads, dtype=float)
    if values.size == 0:
        return 1.0
    low, high = float(values.min()), float(values.max())
    if low == 0.0:
        return 1.0 if high == 0.0 and values.size == 1 else math.inf
    return high / low


def serving_imbalance(serving: np.ndarray, queues: np.ndarray) -> float:
    active = np.unique(serving[serving >= 0])
    loads = satellite_loads(serving, queues, int(serving.max(initial=0)) + 1)
    return imbalance_index(loads[active])


def should_trigger(
    lost_cells: Collection[int], sigma: float, tau: float, config: HandoverConfig
) -> TriggerDecision:
    """Cells that must hand over, and whether a global rebalancing round runs."""
    return TriggerDecision(
        mandatory=frozenset(int(c) for c in lost_cells),
        global_rebalance=sigma < config.sigma0 and tau < config.tau0,
    )


def entropy_weights(attributes: np.ndarray) -> np.ndarray:
    """
    Entropy weights of the attribute columns of a candidates x attributes matrix.

    Columns are min-max normalized; a constant column carries weight 0 and when every
    column is constant the weights are uniform.
    """
    n, k = attributes.shape
    if n < 2:
        return np.full(k, 1.0 / k)

    span = attributes.max(axis=0) - attributes.min(axis=0)
    varying = span > 0
    if not varying.any():
        return np.full(k, 1.0 / k)

    normalized = np.zeros_like(attributes, dtype=float)
    normalized[:, varying] = (attributes[:, varying] - attributes[:, varying].min(axis=0)) / span[varying]
    p = normalized[:, varying] / normalized[:, varying].sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -plogp.sum(axis=0) / math.log(n)

    weights = np.zeros(k)
    weights[varying] = 1.0 - entropy
    return weights / weights.sum()


def _normalize_columns(attributes: np.ndarray) -> np.ndarray:
    span = attributes.max(axis=0) - attributes.min(axis=0)
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (attributes - attributes.min(axis=0)) / safe, 0.0)


def entropy_assign(
    cells: Sequence[int],
    candidates: np.ndarray,
    loads: np.ndarray,
    queues: np.ndarray,
    elevation: np.ndarray,
    remaining: np.ndarray,
    mode: str = "entropy",
) -> dict[int, int]:
    """
    Assign each cell, in the given order, its best-scoring candidate satellite.

    Attributes per candidate are 1/(1+load), remaining visibility seconds and
    elevation. Loads are updated after each assignment. Ties go to the lowest id.
    """
    loads = np.array(loads, dtype=float)
    assignment: dict[int, int] = {}
    for cell in cells:
        sats = np.flatnonzero(candidates[:, cell])
        if sats.size == 0:
            raise InfeasibleScenarioError(f"cell {cell} has no visible satellite", cell=int(cell))
        if sats.size == 1:
            choice = int(sats[0])
        else:
            attributes = np.column_stack(
                (1.0 / (1.0 + loads[sats]), remaining[sats, cell], elevation[sats, cell])
            )
            weights = (
                entropy_weights(attributes) if mode == "entropy" else np.full(3, 1.0 / 3.0)
            )
            scores = _normalize_columns(attributes) @ weights
            choice = int(sats[int(np.argmax(scores))])
        assignment[int(cell)] = choice
        loads[choice] += queues[cell]
    return assignment


def _drift(virtual: float, changed: bool, h_bar: float) -> float:
    return virtual * ((1.0 if changed else 0.0) - h_bar)


def delta_prime(
    serving: np.ndarray,
    queues: np.ndarray,
    virtual: np.ndarray,
    previous: np.ndarray | None,
    h_bar: float,
    satellites: Sequence[int] | np.ndarray,
    load_weight: float = 1.0,
) -> float:
    """
    Load-balance plus handover-drift objective of an assignment:

        load_weight · Σ_s ((Σ_c (x_sc − ½) Q_c) / Σ_c Q_c)²  +  Σ_c M_c m_c

    `satellites` is the candidate set; satellites serving no cell still add ¼ each.
    The load term is 0 when no data is queued.
    """
    sats = np.asarray(satellites, dtype=int)
    total = float(np.sum(queues))
    load_term = 0.0
    if total > 0:
        for s in sats:
            share = float(np.sum(queues[serving == s])) / total
            load_term += (share - 0.5) ** 2
    changed = np.zeros(serving.shape, dtype=bool) if previous is None else (previous >= 0) & (previous != serving)
    drift = float(np.sum(virtual * (changed.astype(float) - h_bar)))
    return load_weight * load_term + drift


class _SwapEvaluator:
    """Incremental δ′ bookkeeping for single moves and pair exchanges."""

    def __init__(
        self,
        serving: np.ndarray,
        queues: np.ndarray,
        virtual: np.ndarray,
        previous: np.ndarray | None,
        h_bar: float,
        satellites: np.ndarray,
        load_weight: float,
    ):
        self.serving: np.ndarray = serving.copy()
        self.queues: np.ndarray = queues
        self.virtual: np.ndarray = virtual
        self.previous: np.ndarray = (
            np.full(serving.shape, -1, dtype=int) if previous is None else previous
        )
        self.h_bar: float = h_bar
        self.load_weight: float = load_weight
        self.total: float = float(np.sum(queues))
        self.loads: dict[int, float] = {int(s): 0.0 for s in satellites}
        for cell, sat in enumerate(self.serving):
            self.loads[int(sat)] = self.loads.get(int(sat), 0.0) + float(queues[cell])
        self.current: float = delta_prime(
            self.serving, queues, virtual, previous, h_bar, list(self.loads), load_weight
        )

    def _load_term(self, load: float) -> float:
        if self.total <= 0:
            return 0.0
        return self.load_weight * (load / self.total - 0.5) ** 2

    def _cell_drift(self, cell: int, sat: int) -> float:
        prev = int(self.previous[cell])
        return _drift(float(self.virtual[cell]), prev >= 0 and prev != sat, self.h_bar)

    def candidate_value(self, moves: Sequence[tuple[int, int]]) -> float:
        new_loads: dict[int, float] = {}
        value = self.current
        for cell, sat in moves:
            old = int(self.serving[cell])
            q = float(self.queues[cell])
            new_loads[old] = new_loads.get(old, self.loads[old]) - q
            new_loads[sat] = new_loads.get(sat, self.loads[sat]) + q
            value += self._cell_drift(cell, sat) - self._cell_drift(cell, old)
        for sat, load in new_loads.items():
            value += self._load_term(load) - self._load_term(self.loads[sat])
        return value

    def apply(self, moves: Sequence[tuple[int, int]], value: float):
        for cell, sat in moves:
            old = int(self.serving[cell])
            q = float(self.queues[cell])
            self.loads[old] -= q
            self.loads[sat] += q
            self.serving[cell] = sat
        self.current = value


def perturb_assignment(
    serving: np.ndarray, candidates: np.ndarray, fraction: float, rng: np.random.Generator
) -> np.ndarray:
    """Move ⌈fraction · C⌉ random cells to random candidate satellites."""
    perturbed = serving.copy()
    cells = perturbed.shape[0]
    count = min(cells, math.ceil(fraction * cells))
    if count == 0:
        return perturbed
    for cell in np.sort(rng.choice(cells, size=count, replace=False)):
        sats = np.flatnonzero(candidates[:, cell])
        perturbed[cell] = int(rng.choice(sats))
    return perturbed


def swap_matching(
    initial: np.ndarray,
    queues: np.ndarray,
    virtual: np.ndarray,
    previous: np.ndarray | None,
    candidates: np.ndarray,
    config: HandoverConfig,
    h_bar: float,
    rng: np.random.Generator | None = None,
    load_weight: float = 1.0,
    perturb: bool = True,
) -> SwapResult:
    """
    Lower δ′ by exchanging the satellites of two cells or moving one cell.

    Exchanges are scanned by (c1, c2), moves by (cell, satellite); the first improving
    feasible swap is applied. Stops after a pass without improvement or after
    swap_iterations passes. history holds δ′ after perturbation and after each
    accepted swap.
    """
    serving = initial.copy()
    if perturb and rng is not None:
        serving = perturb_assignment(serving, candidates, config.perturb_fraction, rng)

    satellites = np.flatnonzero(candidates.any(axis=1))
    evaluator = _SwapEvaluator(serving, queues, virtual, previous, h_bar, satellites, load_weight)
    history = [evaluator.current]
    cells = serving.shape[0]
    accepted = 0
    iterations = 0

    for _ in range(config.swap_iterations):
        iterations += 1
        improved = False
        current = evaluator.serving

        # exchange the satellites of two cells
        for c1 in range(cells):
            for c2 in range(c1 + 1, cells):
                s1, s2 = int(current[c1]), int(current[c2])
                if s1 == s2 or not (candidates[s2, c1] and candidates[s1, c2]):
                    continue
                moves = ((c1, s2), (c2, s1))
                value = evaluator.candidate_value(moves)
                if value < evaluator.current - IMPROVEMENT_EPS:
                    evaluator.apply(moves, value)
                    history.append(value)
                    accepted += 1
                    improved = True

        # move one cell to another satellite
        for cell in range(cells):
            for sat in np.flatnonzero(candidates[:, cell]):
                sat = int(sat)
                if sat == int(current[cell]):
                    continue
                moves = ((cell, sat),)
                value = evaluator.candidate_value(moves)
                if value < evaluator.current - IMPROVEMENT_EPS:
                    evaluator.apply(moves, value)
                    history.append(value)
                    accepted += 1
                    improved = True

        if not improved:
            break

    logger.debug("Swap matching: %d swaps accepted in %d passes", accepted, iterations)
    return SwapResult(serving=evaluator.serving, history=history, iterations=iterations, accepted=accepted)


@log_calls(level="info", show_timing_only=True)
def handover_epoch(
    epoch: int,
    previous: np.ndarray | None,
    candidates: np.ndarray,
    queues: np.ndarray,
    virtual: np.ndarray,
    sigma: float,
    tau: float,
    elevation: np.ndarray,
    remaining: Callable[[np.ndarray], np.ndarray],
    config: HandoverConfig,
    h_bar: float,
    rng: np.random.Generator,
    policy: str = "proposed",
    load_weight: float = 1.0,
    expected: np.ndarray | None = None,
) -> HandoverOutcome:
    """
    Serving satellites for one epoch.

    Satellites are balanced on the queued bits, or on `expected` (bits per cell
    expected this epoch) while nothing is queued yet.

    `remaining(sats)` returns the remaining visibility seconds (len(sats), C) of the
    given satellites; it is only called when cells need a new satellite.
    """
    cells = queues.shape[0]
    satellites = candidates.shape[0]
    if previous is None:
        lost = list(range(cells))
        serving = np.full(cells, -1, dtype=int)
    else:
        lost = [c for c in range(cells) if not candidates[previous[c], c]]
        serving = previous.copy()

    for cell in lost:
        if not candidates[:, cell].any():
            raise InfeasibleScenarioError(
                f"epoch {epoch}: cell {cell} has no visible satellite", epoch=epoch, cell=cell
            )

    # a topology change always opens a rebalancing round
    if lost:
        sigma, tau = 0.0, 0.0
    trigger = should_trigger(lost, sigma, tau, config)

    demand = queues
    if expected is not None and float(np.sum(queues)) == 0.0:
        demand = np.asarray(expected, dtype=float)
    kept = serving.copy()
    kept[lost] = -1
    loads = satellite_loads(kept, demand, satellites)

    if lost:
        if policy == "load_balance":
            assigned = baseline_load_balance(lost, loads, candidates, demand)
        else:
            needed = np.flatnonzero(candidates[:, lost].any(axis=1))
            remaining_all = np.zeros(candidates.shape)
            remaining_all[needed] = remaining(needed)
            assigned = entropy_assign(
                lost, candidates, loads, demand, elevation, remaining_all, config.attribute_weights
            )
        for cell, sat in assigned.items():
            serving[cell] = sat

    history: list[float] = []
    if policy == "proposed" and trigger.global_rebalance:
        result = swap_matching(
            serving, demand, virtual, previous, candidates, config, h_bar, rng, load_weight
        )
        serving = result.serving
        history = result.history

    events: list[HandoverEvent] = []
    if previous is not None:
        mandatory = set(lost)
        for cell in np.flatnonzero(serving != previous):
            cell = int(cell)
            reason = "visibility" if cell in mandatory else "rebalance"
            events.append(HandoverEvent(epoch, cell, int(previous[cell]), int(serving[cell]), reason))

    return HandoverOutcome(serving=serving, events=events, trigger=trigger, delta_history=history)
