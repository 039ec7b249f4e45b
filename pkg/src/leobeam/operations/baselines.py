"""
Reference policies the simulator can swap in for each stage.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from leobeam.core.errors import InfeasibleScenarioError
from leobeam.core.models import ConflictPair
from leobeam.operations.beamhop import BeamHopResult, beamhop_epoch
from leobeam.operations.spectrum import SharingProblem, SharingResult, fitness, greedy_post_pass


def baseline_load_balance(
    cells: Sequence[int],
    loads: np.ndarray,
    candidates: np.ndarray,
    queues: np.ndarray | None = None,
) -> dict[int, int]:
    """Each cell, in order, goes to its least-loaded candidate; ties to the lowest id."""
    loads = np.array(loads, dtype=float)
    assignment: dict[int, int] = {}
    for cell in cells:
        sats = np.flatnonzero(candidates[:, cell])
        if sats.size == 0:
            raise InfeasibleScenarioError(f"cell {cell} has no visible satellite", cell=int(cell))
        choice = int(sats[int(np.argmin(loads[sats]))])
        assignment[int(cell)] = choice
        if queues is not None:
            loads[choice] += queues[cell]
    return assignment


def greedy_hop_epoch(
    serving: np.ndarray,
    conflicts: Iterable[ConflictPair],
    queues: np.ndarray,
    slots: int,
    rates: np.ndarray,
    beams: int,
    polarization_count: int,
    cross_pol_isolated: bool = True,
) -> BeamHopResult:
    """Beam hopping that fills each slot by raw vertex weight instead of weight ratio."""
    return beamhop_epoch(
        serving,
        conflicts,
        queues,
        slots,
        rates,
        beams,
        polarization_count,
        cross_pol_isolated,
        priority="weight",
    )


def baseline_greedy_share(problem: SharingProblem) -> SharingResult:
    """Largest residual queue first; every flip the cluster budgets allow is taken."""
    n = problem.dimension
    if n == 0:
        return SharingResult(z=np.zeros(0, dtype=bool), fitness=0.0, history=[0.0])
    residual = problem.residual_queues[[v.cell for v in problem.variables]]
    order = [int(i) for i in np.lexsort((np.arange(n), -residual))]
    z = greedy_post_pass(np.zeros(n, dtype=bool), problem, order)
    value = fitness(z, problem)
    return SharingResult(z=z, fitness=value, history=[value])


def no_sharing(problem: SharingProblem) -> SharingResult:
    z = np.zeros(problem.dimension, dtype=bool)
    value = fitness(z, problem) if problem.dimension else 0.0
    return SharingResult(z=z, fitness=value, history=[value])
