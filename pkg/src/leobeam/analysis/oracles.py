"""
Exhaustive references for small instances.

Each oracle enumerates the whole search space with the same objective and
constraint evaluators the heuristics use, so a test comparing the two only
measures search quality.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass

import networkx as nx
import numpy as np

from leobeam.core.errors import InfeasibleScenarioError, OracleSizeError
from leobeam.operations.handover import delta_prime
from leobeam.operations.spectrum import SharingProblem, population_fitness

MAX_WMIS_VERTICES = 20
MAX_BINARY_DIMENSION = 20
MAX_TOY_DIMENSION = 24
MAX_ASSIGNMENTS = 1_000_000
ENUMERATION_CHUNK = 4096


@dataclass(frozen=True)
class ToyInstance:
    """A binary problem given only by its objective and feasibility callbacks."""

    dimension: int
    objective: Callable[[np.ndarray], float]
    feasible: Callable[[np.ndarray], bool] = lambda _z: True

    def __post_init__(self):
        if not 0 <= self.dimension <= MAX_TOY_DIMENSION:
            raise OracleSizeError(f"toy instance dimension {self.dimension} exceeds {MAX_TOY_DIMENSION}")


def _binary_rows(dimension: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop)[:, None]
    return ((codes >> np.arange(dimension)) & 1).astype(bool)


def brute_force_wmis(
    graph: nx.Graph | np.ndarray, weights: np.ndarray
) -> tuple[tuple[int, ...], float]:
    """
    Maximum-weight independent set by depth-first enumeration; a vertex is skipped
    as soon as it is adjacent to the partial set. Ties keep the set found first.
    """
    if isinstance(graph, nx.Graph):
        n = graph.number_of_nodes()
        adjacency = nx.to_numpy_array(graph, nodelist=range(n), dtype=bool) if n else np.zeros((0, 0), dtype=bool)
    else:
        adjacency = np.asarray(graph, dtype=bool)
        n = adjacency.shape[0]
    if n > MAX_WMIS_VERTICES:
        raise OracleSizeError(f"graph has {n} vertices, oracle limit is {MAX_WMIS_VERTICES}")
    weights = np.asarray(weights, dtype=float)

    best: tuple[tuple[int, ...], float] = ((), 0.0)

    def extend(v: int, chosen: list[int], blocked: np.ndarray, total: float):
        nonlocal best
        if v == n:
            if total > best[1]:
                best = (tuple(chosen), total)
            return
        if not blocked[v]:
            chosen.append(v)
            extend(v + 1, chosen, blocked | adjacency[v], total + weights[v])
            chosen.pop()
        extend(v + 1, chosen, blocked, total)

    extend(0, [], np.zeros(n, dtype=bool), 0.0)
    return best


def brute_force_binary(problem: SharingProblem) -> tuple[np.ndarray, float]:
    """Best of all 2^dim sharing vectors under the sharing fitness."""
    n = problem.dimension
    if n > MAX_BINARY_DIMENSION:
        raise OracleSizeError(f"dimension {n} exceeds oracle limit {MAX_BINARY_DIMENSION}")
    if n == 0:
        return np.zeros(0, dtype=bool), 0.0

    best_z = np.zeros(n, dtype=bool)
    best_value = -math.inf
    total = 1 << n
    for start in range(0, total, ENUMERATION_CHUNK):
        rows = _binary_rows(n, start, min(start + ENUMERATION_CHUNK, total))
        values = population_fitness(rows, problem)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_z, best_value = rows[i].copy(), float(values[i])
    return best_z, best_value


def brute_force_toy(instance: ToyInstance) -> tuple[np.ndarray, float]:
    """Maximize a toy objective over feasible vectors; raises when none is feasible."""
    n = instance.dimension
    best: tuple[np.ndarray, float] | None = None
    for code in range(1 << n):
        z = _binary_rows(n, code, code + 1)[0]
        if not instance.feasible(z):
            continue
        value = float(instance.objective(z))
        if best is None or value > best[1]:
            best = (z, value)
    if best is None:
        raise ValueError("no feasible vector")
    return best


def brute_force_assignment(
    candidates: np.ndarray,
    queues: np.ndarray,
    virtual: np.ndarray,
    previous: np.ndarray | None,
    h_bar: float,
    load_weight: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Minimum δ′ over every assignment of cells to candidate satellites."""
    cells = candidates.shape[1]
    options = [np.flatnonzero(candidates[:, c]) for c in range(cells)]
    for cell, sats in enumerate(options):
        if sats.size == 0:
            raise InfeasibleScenarioError(f"cell {cell} has no visible satellite", cell=cell)
    combinations = math.prod(len(o) for o in options)
    if combinations > MAX_ASSIGNMENTS:
        raise OracleSizeError(f"{combinations} assignments exceed oracle limit {MAX_ASSIGNMENTS}")

    satellites = np.flatnonzero(candidates.any(axis=1))
    best_serving = np.array([o[0] for o in options], dtype=int)
    best_value = math.inf
    for choice in itertools.product(*options):
        serving = np.array(choice, dtype=int)
        value = delta_prime(serving, queues, virtual, previous, h_bar, satellites, load_weight)
        if value < best_value:
            best_serving, best_value = serving, value
    return best_serving, best_value
