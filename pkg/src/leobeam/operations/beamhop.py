"""
Beam hopping on a per-epoch conflict graph.

Every served cell contributes one vertex per beam of its serving satellite. Two
vertices are adjacent when they belong to the same cell, use the same beam of the
same satellite, or sit on a conflicting cell pair with the same polarization. A
slot schedule is an independent set of this graph; each slot is filled greedily in
descending order of weight ratio.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import networkx as nx
import numpy as np
from funlog import log_calls
from numpy.typing import ArrayLike

from leobeam.core.models import BeamActivation, ConflictPair

logger = logging.getLogger(__name__)


class Vertex(NamedTuple):
    cell: int
    satellite: int
    beam: int


def beam_polarization(beam: int, polarization_count: int) -> int:
    """Polarization group of a beam; beams alternate round-robin over the groups."""
    return beam % polarization_count


class ConflictGraph:
    """Vertices (cell, satellite, beam) with a networkx graph and a cached adjacency matrix."""

    def __init__(self, vertices: Sequence[Vertex], graph: nx.Graph):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        self.graph: nx.Graph = graph
        n = len(self.vertices)
        if n:
            self.adjacency: np.ndarray = nx.to_numpy_array(graph, nodelist=range(n), dtype=bool)
        else:
            self.adjacency = np.zeros((0, 0), dtype=bool)
        self.adjacency.setflags(write=False)
        self.cells: np.ndarray = np.array([v.cell for v in self.vertices], dtype=int)

    def __len__(self) -> int:
        return len(self.vertices)

    def neighbors(self, vertex: int) -> list[int]:
        return sorted(self.graph.neighbors(vertex))

    def vertices_of_cell(self, cell: int) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.cell == cell]


def build_conflict_graph(
    serving: ArrayLike,
    conflicts: Iterable[ConflictPair],
    beams: int,
    polarization_count: int,
    cross_pol_isolated: bool = True,
) -> ConflictGraph:
    """Conflict graph of one epoch for every cell with a serving satellite (>= 0)."""
    serving = np.asarray(serving, dtype=int)
    vertices = [
        Vertex(int(cell), int(serving[cell]), beam)
        for cell in np.flatnonzero(serving >= 0)
        for beam in range(beams)
    ]
    index = {(v.cell, v.beam): i for i, v in enumerate(vertices)}

    graph = nx.Graph()
    graph.add_nodes_from(
        (i, {"cell": v.cell, "satellite": v.satellite, "beam": v.beam})
        for i, v in enumerate(vertices)
    )

    # a cell is served by at most one beam
    by_cell: dict[int, list[int]] = {}
    # a beam serves at most one cell
    by_beam: dict[tuple[int, int], list[int]] = {}
    for i, v in enumerate(vertices):
        by_cell.setdefault(v.cell, []).append(i)
        by_beam.setdefault((v.satellite, v.beam), []).append(i)
    for group in itertools.chain(by_cell.values(), by_beam.values()):
        graph.add_edges_from(itertools.combinations(group, 2))

    # co-polarized beams on conflicting cells
    for pair in conflicts:
        if serving[pair.cell_a] < 0 or serving[pair.cell_b] < 0:
            continue
        for beam_a in range(beams):
            for beam_b in range(beams):
                same_group = beam_polarization(beam_a, polarization_count) == beam_polarization(
                    beam_b, polarization_count
                )
                if same_group or not cross_pol_isolated:
                    graph.add_edge(index[(pair.cell_a, beam_a)], index[(pair.cell_b, beam_b)])

    logger.debug("Conflict graph: %d vertices, %d edges", len(vertices), graph.number_of_edges())
    return ConflictGraph(vertices, graph)


def vertex_weight(queue: ArrayLike, rate: ArrayLike, served: ArrayLike) -> np.ndarray:
    """R² + Q² − (D − Q)²; with D = R this is 2RQ."""
    q = np.asarray(queue, dtype=float)
    r = np.asarray(rate, dtype=float)
    d = np.asarray(served, dtype=float)
    return r**2 + q**2 - (d - q) ** 2


def weight_ratios(adjacency: np.ndarray, weights: np.ndarray, accessible: np.ndarray) -> np.ndarray:
    """w_v / (w_v + Σ accessible neighbor weights); 0 for inaccessible vertices."""
    active = np.where(accessible, weights, 0.0)
    neighbor_sum = adjacency.astype(float) @ active
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(accessible, weights / (weights + neighbor_sum), 0.0)
    return ratios


def weight_ratio(vertex: int, adjacency: np.ndarray, weights: np.ndarray, accessible: np.ndarray) -> float:
    return float(weight_ratios(adjacency, weights, accessible)[vertex])


def greedy_independent_set(
    adjacency: np.ndarray,
    weights: np.ndarray,
    accessible: np.ndarray | None = None,
    priority: str = "ratio",
) -> list[int]:
    """
    Greedy weighted independent set over accessible vertices.

    `ratio` orders by weight ratio, then weight, then lowest id; `weight` orders by
    weight, then lowest id. The result is maximal among accessible vertices.
    """
    n = weights.shape[0]
    if n == 0:
        return []
    accessible = np.ones(n, dtype=bool) if accessible is None else accessible
    accessible = accessible & (weights > 0)
    ids = np.arange(n)
    if priority == "ratio":
        order = np.lexsort((ids, -weights, -weight_ratios(adjacency, weights, accessible)))
    elif priority == "weight":
        order = np.lexsort((ids, -weights))
    else:
        raise ValueError(f"unknown priority {priority!r}")

    blocked = ~accessible
    selected: list[int] = []
    for v in order:
        if blocked[v]:
            continue
        selected.append(int(v))
        blocked = blocked | adjacency[v]
        blocked[v] = True
    return selected


@dataclass
class SlotSchedule:
    """Beam activations per slot and the bits each cell received over the satellite band."""

    slots: tuple[tuple[BeamActivation, ...], ...]
    served_bits: np.ndarray  # (T, C)

    def activations(self) -> tuple[BeamActivation, ...]:
        return tuple(itertools.chain.from_iterable(self.slots))

    @property
    def busy_beam_slots(self) -> int:
        return sum(len(slot) for slot in self.slots)

    def scheduled(self) -> np.ndarray:
        """(T, C) mask of cells holding a beam in each slot."""
        mask = np.zeros(self.served_bits.shape, dtype=bool)
        for act in self.activations():
            mask[act.slot, act.cell] = True
        return mask


@dataclass
class BeamHopResult:
    graph: ConflictGraph
    schedule: SlotSchedule
    residual: np.ndarray


def schedule_slot(
    graph: ConflictGraph,
    queues: np.ndarray,
    rates: np.ndarray,
    priority: str = "ratio",
) -> tuple[list[int], np.ndarray, np.ndarray]:
    """
    Pick the vertices served in one slot.

    Returns the selected vertex ids, the queues after service and the bits served
    per cell (each selected cell gets min(R, Q)).
    """
    cells = queues.shape[0]
    if len(graph) == 0:
        return [], queues.copy(), np.zeros(cells)
    q = queues[graph.cells]
    r = rates[graph.cells]
    weights = vertex_weight(q, r, r)
    selected = greedy_independent_set(graph.adjacency, weights, q > 0, priority)

    served = np.zeros(cells)
    for v in selected:
        cell = graph.vertices[v].cell
        served[cell] = min(float(rates[cell]), float(queues[cell]))
    return selected, np.maximum(queues - served, 0.0), served


@log_calls(level="info", show_timing_only=True)
def beamhop_epoch(
    serving: ArrayLike,
    conflicts: Iterable[ConflictPair],
    queues: np.ndarray,
    slots: int,
    rates: np.ndarray,
    beams: int,
    polarization_count: int,
    cross_pol_isolated: bool = True,
    priority: str = "ratio",
) -> BeamHopResult:
    """Schedule beams over the slots of one epoch; the conflict graph is fixed for the epoch."""
    graph = build_conflict_graph(serving, conflicts, beams, polarization_count, cross_pol_isolated)
    residual = np.asarray(queues, dtype=float).copy()
    served_bits = np.zeros((slots, residual.shape[0]))
    plan: list[tuple[BeamActivation, ...]] = []

    for t in range(slots):
        if not np.any(residual > 0):
            plan.extend(() for _ in range(slots - t))
            break
        selected, residual, served = schedule_slot(graph, residual, rates, priority)
        served_bits[t] = served
        plan.append(
            tuple(
                BeamActivation(t, graph.vertices[v].satellite, graph.vertices[v].cell, graph.vertices[v].beam)
                for v in sorted(selected, key=lambda v: (graph.vertices[v].cell, graph.vertices[v].beam))
            )
        )

    return BeamHopResult(graph=graph, schedule=SlotSchedule(tuple(plan), served_bits), residual=residual)
