"""
Satellite-terrestrial spectrum sharing.

After beam hopping, a cell that holds a beam in a slot may additionally use the
terrestrial band in that slot. Each such (satellite, cell, slot) is a binary
variable. A terrestrial cluster counts a slot as interfered when the aggregate
INR at its center exceeds the threshold; no cluster may exceed its budget of
interfered slots. The assignment is searched with a binary sparrow search
(tent-chaos initialization, s-shaped binarization, local search on the best
sparrow, adaptive crossover on the worse half) and finished by a greedy pass.

Only (slot, cluster) pairs whose slot could reach the threshold with every
variable switched on are tracked. The variables of a slot are split into chunks
of SUBSET_CHUNK; for every pair and chunk the INR of all 2^SUBSET_CHUNK subsets is
tabulated once, so evaluating a population is a gather and a segmented sum.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from funlog import log_calls
from numpy.typing import ArrayLike

from leobeam.core.config import POSITION_BOUND, SAFETY_THRESHOLD, TENT_PARAMETER
from leobeam.core.models import ClusterUsage, SharingActivation
from leobeam.core.scenario import SparrowConfig
from leobeam.operations.beamhop import SlotSchedule

logger = logging.getLogger(__name__)

SUBSET_CHUNK = 4
BINDING_TOLERANCE = 1e-9


class SharingVariable(NamedTuple):
    slot: int
    satellite: int
    cell: int


@dataclass(frozen=True)
class PairIndex:
    """
    Binding (slot group, cluster) pairs and their subset tables.

    Pairs are sorted by group, then cluster. Entries are (pair, chunk) combinations
    sorted by pair; `tables[e, code]` is the INR that the variables of chunk
    `entry_chunk[e]` selected by `code` add at the pair's cluster.
    """

    pair_group: np.ndarray  # (K,)
    pair_cluster: np.ndarray  # (K,)
    group_pair_starts: np.ndarray  # (G + 1,)
    pair_entry_starts: np.ndarray  # (K + 1,)
    entry_chunk: np.ndarray  # (E,)
    tables: np.ndarray  # (E, 2^SUBSET_CHUNK)
    var_chunk: np.ndarray  # (n,)
    var_bit: np.ndarray  # (n,) 1 << position in chunk
    chunk_starts: np.ndarray  # (H,)

    @property
    def size(self) -> int:
        return int(self.pair_group.shape[0])


def _index_pairs(
    contributions: np.ndarray, slot_groups: np.ndarray, group_starts: np.ndarray, threshold: float
) -> PairIndex:
    n, clusters = contributions.shape
    groups = group_starts.shape[0]

    members = np.diff(np.append(group_starts, n))
    position = np.arange(n) - group_starts[slot_groups] if n else np.zeros(0, dtype=int)
    chunks_per_group = -(-members // SUBSET_CHUNK)
    chunk_base = np.concatenate(([0], np.cumsum(chunks_per_group)[:-1])).astype(int)
    var_chunk = (chunk_base[slot_groups] + position // SUBSET_CHUNK).astype(int) if n else position
    var_bit = (1 << (position % SUBSET_CHUNK)).astype(np.int64)
    chunk_starts = np.flatnonzero(np.r_[True, var_chunk[1:] != var_chunk[:-1]]) if n else position

    if n and clusters:
        reachable = np.add.reduceat(contributions, group_starts, axis=0)
        pair_group, pair_cluster = np.nonzero(reachable * (1.0 + BINDING_TOLERANCE) > threshold)
    else:
        pair_group = pair_cluster = np.zeros(0, dtype=int)

    group_pair_starts = np.searchsorted(pair_group, np.arange(groups + 1))
    entries_per_pair = chunks_per_group[pair_group] if pair_group.size else np.zeros(0, dtype=int)
    pair_entry_starts = np.concatenate(([0], np.cumsum(entries_per_pair))).astype(int)
    entry_pair = np.repeat(np.arange(pair_group.size), entries_per_pair)
    entry_offset = np.arange(entry_pair.size) - pair_entry_starts[entry_pair]
    entry_chunk = (chunk_base[pair_group[entry_pair]] + entry_offset).astype(int)

    # chunk members padded with a zero-contribution row
    chunk_members = np.full((max(len(chunk_starts), 1), SUBSET_CHUNK), n, dtype=int)
    if n:
        chunk_members[var_chunk, position % SUBSET_CHUNK] = np.arange(n)
    padded = np.vstack((contributions, np.zeros((1, clusters))))
    member_inr = padded[chunk_members[entry_chunk], pair_cluster[entry_pair][:, None]]
    codes = np.arange(1 << SUBSET_CHUNK)
    selected = ((codes[:, None] >> np.arange(SUBSET_CHUNK)) & 1).astype(float)
    tables = member_inr @ selected.T if entry_chunk.size else np.zeros((0, codes.size))

    return PairIndex(
        pair_group=pair_group.astype(int),
        pair_cluster=pair_cluster.astype(int),
        group_pair_starts=group_pair_starts.astype(int),
        pair_entry_starts=pair_entry_starts,
        entry_chunk=entry_chunk,
        tables=tables,
        var_chunk=var_chunk,
        var_bit=var_bit,
        chunk_starts=chunk_starts.astype(int),
    )


@dataclass(frozen=True, eq=False)
class SharingProblem:
    """
    Variables sorted by slot, with the INR each one adds at every relevant cluster.

    Clusters that cannot reach the INR threshold in any slot even with every variable
    switched on are dropped; `clusters` maps the kept columns back to cluster ids.
    """

    variables: tuple[SharingVariable, ...]
    residual_queues: np.ndarray  # (C,) bits
    rates: np.ndarray  # (C,) terrestrial-band bits per slot
    slots: int
    contributions: np.ndarray  # (n, J') linear INR
    clusters: np.ndarray  # (J',)
    budgets: np.ndarray  # (J',)
    inr_threshold: float
    cell_index: np.ndarray = field(init=False)
    eligible_cells: np.ndarray = field(init=False)
    slot_groups: np.ndarray = field(init=False)
    group_starts: np.ndarray = field(init=False)
    pairs: PairIndex = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        if any(b < 0 for b in self.budgets):
            raise ValueError("cluster budgets must be non-negative")
        if np.any(self.contributions < 0):
            raise ValueError("INR contributions must be non-negative")
        cells = np.array([v.cell for v in self.variables], dtype=int)
        slots = np.array([v.slot for v in self.variables], dtype=int)
        if slots.size and np.any(np.diff(slots) < 0):
            raise ValueError("sharing variables must be sorted by slot")
        eligible, cell_index = np.unique(cells, return_inverse=True)
        _, group_starts, slot_groups = np.unique(slots, return_index=True, return_inverse=True)
        q = self.residual_queues[eligible]
        r = self.rates[eligible]
        object.__setattr__(self, "cell_index", cell_index.astype(int))
        object.__setattr__(self, "eligible_cells", eligible)
        object.__setattr__(self, "slot_groups", slot_groups.astype(int))
        object.__setattr__(self, "group_starts", group_starts.astype(int))
        object.__setattr__(
            self,
            "pairs",
            _index_pairs(
                self.contributions, slot_groups.astype(int), group_starts.astype(int), self.inr_threshold
            ),
        )
        object.__setattr__(self, "omega", float(np.sum(q**2 + (r * self.slots) ** 2)))

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def cluster_count(self) -> int:
        return int(self.clusters.shape[0])


@dataclass
class SharingResult:
    z: np.ndarray
    fitness: float
    history: list[float]
    feasible: bool = True

    def activations(self, problem: SharingProblem) -> tuple[SharingActivation, ...]:
        return tuple(
            SharingActivation(v.slot, v.satellite, v.cell)
            for v, on in zip(problem.variables, self.z, strict=True)
            if on
        )


@dataclass
class SparrowState:
    positions: np.ndarray  # (N_pop, n)
    binary: np.ndarray  # (N_pop, n)
    fitness: np.ndarray  # (N_pop,)
    best: np.ndarray
    best_fitness: float

    def sort(self):
        """Order sparrows by descending fitness; ties keep their index order."""
        order = np.argsort(-self.fitness, kind="stable")
        self.positions = self.positions[order]
        self.binary = self.binary[order]
        self.fitness = self.fitness[order]

    def consider(self, binary: np.ndarray, fitness: np.ndarray):
        if fitness.size == 0:
            return
        i = int(np.argmax(fitness))
        if fitness[i] > self.best_fitness:
            self.best = binary[i].copy()
            self.best_fitness = float(fitness[i])


def build_sharing_problem(
    schedule: SlotSchedule,
    residual: ArrayLike,
    serving: ArrayLike,
    cell_inr: np.ndarray,
    budgets: ArrayLike,
    inr_threshold: float,
    rates: ArrayLike,
) -> SharingProblem:
    """
    Sharing variables of one epoch.

    `cell_inr` (C, J) holds the linear INR a cell's link to its serving satellite
    produces at every cluster center when it uses the terrestrial band.
    """
    residual = np.asarray(residual, dtype=float)
    serving = np.asarray(serving, dtype=int)
    budgets = np.asarray(budgets, dtype=int)
    variables = tuple(
        SharingVariable(act.slot, int(serving[act.cell]), act.cell)
        for act in sorted(schedule.activations(), key=lambda a: (a.slot, a.cell))
        if residual[act.cell] > 0
    )
    clusters = np.arange(cell_inr.shape[1])
    contributions = (
        cell_inr[[v.cell for v in variables]] if variables else np.zeros((0, clusters.size))
    )

    # clusters that no slot can push over the threshold never bind
    if variables and clusters.size:
        slots = np.array([v.slot for v in variables])
        _, starts = np.unique(slots, return_index=True)
        worst = np.add.reduceat(contributions, starts, axis=0).max(axis=0)
        relevant = worst > inr_threshold
    else:
        relevant = np.zeros(clusters.size, dtype=bool)

    problem = SharingProblem(
        variables=variables,
        residual_queues=residual,
        rates=np.asarray(rates, dtype=float),
        slots=schedule.served_bits.shape[0],
        contributions=contributions[:, relevant],
        clusters=clusters[relevant],
        budgets=budgets[relevant],
        inr_threshold=inr_threshold,
    )
    logger.debug(
        "Sharing problem: %d variables, %d of %d clusters binding",
        problem.dimension,
        problem.cluster_count,
        clusters.size,
    )
    return problem


def chunk_codes(binary: np.ndarray, problem: SharingProblem) -> np.ndarray:
    """Subset code of every variable chunk, (P, H) for a (P, n) population."""
    index = problem.pairs
    weighted = binary.astype(np.int64) * index.var_bit
    return np.add.reduceat(weighted, index.chunk_starts, axis=1)


def _summed_entries(values: np.ndarray, entry_starts: np.ndarray) -> np.ndarray:
    return np.add.reduceat(values, entry_starts, axis=1)


def pair_loads(binary: np.ndarray, problem: SharingProblem) -> np.ndarray:
    """Aggregate INR per (sparrow, binding pair) for a (P, n) population, (P, K)."""
    index = problem.pairs
    population = binary.shape[0]
    if index.size == 0:
        return np.zeros((population, 0))
    codes = chunk_codes(binary, problem)
    entries = np.arange(index.entry_chunk.size)
    values = index.tables[entries[None, :], codes[:, index.entry_chunk]]
    return _summed_entries(values, index.pair_entry_starts[:-1])


def interfered_slots(binary: np.ndarray, problem: SharingProblem) -> np.ndarray:
    """Interfered-slot count per cluster, (P, J') for a population or (J',) for one vector."""
    population = np.atleast_2d(binary)
    rows = population.shape[0]
    clusters = problem.cluster_count
    if problem.dimension == 0 or problem.pairs.size == 0:
        counts = np.zeros((rows, clusters), dtype=int)
    else:
        row, pair = np.nonzero(pair_loads(population, problem) > problem.inr_threshold)
        flat = row * clusters + problem.pairs.pair_cluster[pair]
        counts = np.bincount(flat, minlength=rows * clusters).reshape(rows, clusters)
    return counts if binary.ndim == 2 else counts[0]


def population_feasible(binary: np.ndarray, problem: SharingProblem) -> np.ndarray:
    if problem.cluster_count == 0:
        return np.ones(binary.shape[0], dtype=bool)
    return np.all(interfered_slots(binary, problem) <= problem.budgets, axis=1)


def population_fitness(binary: np.ndarray, problem: SharingProblem) -> np.ndarray:
    """
    Fitness of each row of a (P, n) binary population.

    Feasible rows score Σ Ω − Σ (D′ − Q′)² with D′ capped at Q′; infeasible rows score
    Σ Ω − Σ Q′², the value of the all-zero vector.
    """
    population = binary.shape[0]
    if problem.dimension == 0:
        return np.full(population, problem.omega)
    q = problem.residual_queues[problem.eligible_cells]
    r = problem.rates[problem.eligible_cells]
    onehot = np.zeros((problem.dimension, problem.eligible_cells.size))
    onehot[np.arange(problem.dimension), problem.cell_index] = 1.0
    served = np.minimum((binary.astype(float) @ onehot) * r, q)
    feasible_value = problem.omega - np.sum((served - q) ** 2, axis=1)
    penalty_value = problem.omega - float(np.sum(q**2))
    return np.where(population_feasible(binary, problem), feasible_value, penalty_value)


def fitness(z: ArrayLike, problem: SharingProblem) -> float:
    return float(population_fitness(np.asarray(z, dtype=bool)[None, :], problem)[0])


def is_feasible(z: ArrayLike, problem: SharingProblem) -> bool:
    return bool(population_feasible(np.asarray(z, dtype=bool)[None, :], problem)[0])


def shared_bits(z: ArrayLike, problem: SharingProblem) -> np.ndarray:
    """Terrestrial-band bits delivered per cell, capped at the residual queue, (C,)."""
    z = np.asarray(z, dtype=bool)
    counts = np.zeros(problem.residual_queues.shape[0])
    if problem.dimension:
        np.add.at(counts, problem.eligible_cells[problem.cell_index[z]], 1.0)
    return np.minimum(problem.residual_queues, counts * problem.rates)


def tent_map(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One tent-map step; values that land on 0 or 1 are re-seeded uniformly."""
    x = np.asarray(values, dtype=float)
    nxt = np.where(x < TENT_PARAMETER, x / TENT_PARAMETER, (1.0 - x) / (1.0 - TENT_PARAMETER))
    stuck = (nxt <= 0.0) | (nxt >= 1.0)
    while np.any(stuck):
        nxt[stuck] = rng.random(int(stuck.sum()))
        stuck = (nxt <= 0.0) | (nxt >= 1.0)
    return nxt


def tent_init(dim: int, population: int, rng: np.random.Generator) -> np.ndarray:
    """(population, dim) chaotic sequence in (0, 1), each row one tent step from the last."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    rows = np.empty((population, dim))
    first = rng.random(dim)
    while np.any(first <= 0.0):
        first[first <= 0.0] = rng.random(int(np.sum(first <= 0.0)))
    rows[0] = first
    for k in range(1, population):
        rows[k] = tent_map(rows[k - 1], rng)
    return rows


def binarize(positions: ArrayLike, mu: ArrayLike) -> np.ndarray:
    """1 where 1 / (1 + e^(−2S)) exceeds the uniform draw μ."""
    s = np.asarray(positions, dtype=float)
    return 1.0 / (1.0 + np.exp(-2.0 * s)) > np.asarray(mu, dtype=float)


def crossover_probability(iteration: int, max_iterations: int) -> float:
    progress = iteration / max(max_iterations, 1)
    return 0.55 - 0.1 / (1.0 + math.exp(5.0 - 10.0 * progress))


def local_search(
    best: np.ndarray,
    best_fitness: float,
    problem: SharingProblem,
    iterations: int,
    mutation_bits: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Flip random bits of the best vector; keep a mutation only if it scores higher."""
    n = best.shape[0]
    if n == 0:
        return best, best_fitness
    flips = min(mutation_bits, n)
    for _ in range(iterations):
        candidate = best.copy()
        idx = rng.choice(n, size=flips, replace=False)
        candidate[idx] = ~candidate[idx]
        value = fitness(candidate, problem)
        if value > best_fitness:
            best, best_fitness = candidate, value
    return best, best_fitness


def adaptive_crossover(
    binary: np.ndarray,
    iteration: int,
    max_iterations: int,
    rng: np.random.Generator,
    max_bits: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Flip 1..max_bits random bits of each sparrow in the worse half with the
    iteration-dependent probability. The population must be sorted best first.
    Returns the new population and the mask of changed rows.
    """
    population, n = binary.shape
    result = binary.copy()
    changed = np.zeros(population, dtype=bool)
    if n == 0:
        return result, changed
    upsilon = crossover_probability(iteration, max_iterations)
    for row in range(population // 2, population):
        if rng.random() >= upsilon:
            continue
        bits = min(int(rng.integers(1, max_bits + 1)), n)
        idx = rng.choice(n, size=bits, replace=False)
        result[row, idx] = ~result[row, idx]
        changed[row] = True
    return result, changed


def greedy_post_pass(
    z: ArrayLike,
    problem: SharingProblem,
    order: Sequence[int] | None = None,
) -> np.ndarray:
    """
    Switch zeros to ones in `order` while every cluster budget holds.

    Every flip that keeps the vector feasible is taken, so no single further 0→1 flip
    of the result is feasible. The input must be feasible.
    """
    z = np.asarray(z, dtype=bool).copy()
    n = problem.dimension
    if n == 0:
        return z
    order = range(n) if order is None else order
    thr = problem.inr_threshold
    index = problem.pairs

    codes = chunk_codes(z[None, :], problem)[0]
    loads = pair_loads(z[None, :], problem)[0]
    over = loads > thr
    used = np.bincount(index.pair_cluster[over], minlength=problem.cluster_count)

    for i in order:
        if z[i]:
            continue
        g = problem.slot_groups[i]
        first, last = index.group_pair_starts[g], index.group_pair_starts[g + 1]
        if first == last:
            z[i] = True
            codes[index.var_chunk[i]] += index.var_bit[i]
            continue
        entry_lo, entry_hi = index.pair_entry_starts[first], index.pair_entry_starts[last]
        trial = codes.copy()
        trial[index.var_chunk[i]] += index.var_bit[i]
        chunks = index.entry_chunk[entry_lo:entry_hi]
        values = index.tables[np.arange(entry_lo, entry_hi), trial[chunks]]
        new_load = _summed_entries(values[None, :], index.pair_entry_starts[first:last] - entry_lo)[0]
        newly = (new_load > thr) & ~over[first:last]
        clusters = index.pair_cluster[first:last][newly]
        if np.any(used[clusters] + 1 > problem.budgets[clusters]):
            continue
        z[i] = True
        codes = trial
        loads[first:last] = new_load
        over[first:last] |= newly
        used[clusters] += 1
    return z


def _sparrow_step(
    state: SparrowState,
    iteration: int,
    config: SparrowConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Producer, scrounger and spectator moves on a population sorted best first."""
    x = state.positions
    population, n = x.shape
    producers = min(config.producers, population)
    best_x, worst_x = x[0], x[-1]
    best_f, worst_f = state.fitness[0], state.fitness[-1]
    new = x.copy()

    if rng.random() < SAFETY_THRESHOLD:
        alpha = rng.random((producers, 1)) + 1e-12
        rank = np.arange(1, producers + 1)[:, None]
        new[:producers] = x[:producers] * np.exp(-rank / (alpha * max(config.max_iterations, 1)))
    else:
        new[:producers] = x[:producers] + rng.standard_normal((producers, 1))

    leader = new[0]
    for j in range(producers, population):
        if j + 1 > population / 2:
            new[j] = rng.standard_normal() * np.exp((worst_x - x[j]) / (j + 1) ** 2)
        else:
            a = rng.choice((-1.0, 1.0), size=n)
            new[j] = leader + np.abs(x[j] - leader) * a / n

    for j in rng.choice(population, size=min(config.spectators, population), replace=False):
        if state.fitness[j] < best_f:
            new[j] = best_x + rng.standard_normal() * np.abs(x[j] - best_x)
        else:
            k = rng.uniform(-1.0, 1.0)
            new[j] = x[j] + k * np.abs(x[j] - worst_x) / (abs(state.fitness[j] - worst_f) + 1e-8)

    return np.clip(new, -POSITION_BOUND, POSITION_BOUND)


@log_calls(level="info", show_timing_only=True)
def solve_sharing(
    problem: SharingProblem, config: SparrowConfig, rng: np.random.Generator
) -> SharingResult:
    """
    Binary sparrow search seeded with the greedy pass from all zeros. history holds the
    global best fitness after initialization, after every iteration and after the
    final greedy pass; it never decreases.
    """
    n = problem.dimension
    if n == 0:
        return SharingResult(z=np.zeros(0, dtype=bool), fitness=0.0, history=[0.0])

    seed_z = greedy_post_pass(np.zeros(n, dtype=bool), problem)
    positions = -POSITION_BOUND + 2.0 * POSITION_BOUND * tent_init(n, config.population, rng)
    binary = binarize(positions, rng.random(positions.shape))
    state = SparrowState(
        positions=positions,
        binary=binary,
        fitness=population_fitness(binary, problem),
        best=seed_z,
        best_fitness=fitness(seed_z, problem),
    )
    state.consider(state.binary, state.fitness)
    history = [state.best_fitness]

    for i in range(config.max_iterations):
        state.sort()
        state.positions = _sparrow_step(state, i, config, rng)
        state.binary = binarize(state.positions, rng.random(state.positions.shape))
        state.fitness = population_fitness(state.binary, problem)
        state.sort()

        crossed, changed = adaptive_crossover(
            state.binary, i, config.max_iterations, rng, config.crossover_bits_max
        )
        if changed.any():
            state.binary = crossed
            state.fitness[changed] = population_fitness(crossed[changed], problem)
            # positions follow the flipped bits
            magnitude = np.abs(state.positions[changed])
            state.positions[changed] = np.where(crossed[changed], magnitude, -magnitude)

        state.consider(state.binary, state.fitness)
        state.best, state.best_fitness = local_search(
            state.best,
            state.best_fitness,
            problem,
            config.local_search_iterations,
            config.mutation_bits,
            rng,
        )
        history.append(state.best_fitness)

    best = state.best if is_feasible(state.best, problem) else np.zeros(n, dtype=bool)
    final = greedy_post_pass(best, problem)
    final_fitness = fitness(final, problem)
    history.append(final_fitness)
    logger.debug("Sparrow search: dim %d, fitness %.6g -> %.6g", n, history[0], final_fitness)
    return SharingResult(z=final, fitness=final_fitness, history=history)


def sharing_summary(problem: SharingProblem, z: ArrayLike) -> tuple[ClusterUsage, ...]:
    """Interfered slots against budget for every cluster the epoch could reach."""
    counts = interfered_slots(np.asarray(z, dtype=bool), problem)
    return tuple(
        ClusterUsage(int(j), int(used), int(budget))
        for j, used, budget in zip(problem.clusters, counts, problem.budgets, strict=True)
    )
