"""
Independent constraint checks for a recorded epoch decision.

The validator only reads the decision and the facts of its epoch (visibility,
conflict pairs, cluster INR and budgets); it shares no code with the policies
that produced the decision.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from leobeam.core.models import ConflictPair, EpochDecision

logger = logging.getLogger(__name__)

CONSTRAINTS = (
    "visibility",
    "slot_range",
    "single_beam_per_cell",
    "single_cell_per_beam",
    "beam_budget",
    "beam_without_serving",
    "interbeam_conflict",
    "sharing_without_beam",
    "terrestrial_budget",
)


class Violation(NamedTuple):
    epoch: int
    slot: int | None
    constraint: str
    message: str

    def __str__(self) -> str:
        where = f"epoch {self.epoch}" if self.slot is None else f"epoch {self.epoch} slot {self.slot}"
        return f"{where}: {self.constraint}: {self.message}"


@dataclass(frozen=True)
class DecisionContext:
    """
    Facts an epoch decision is checked against.

    visible[c] lists the satellites cell c can see. cluster_inr maps a cluster id to
    the linear INR each cell's serving link would add at that cluster in the
    terrestrial band; only clusters that can be pushed over the threshold are listed.
    """

    visible: tuple[tuple[int, ...], ...]
    conflicts: frozenset[ConflictPair]
    beams: int
    polarization_count: int
    slots: int
    cross_pol_isolated: bool = True
    inr_threshold: float = 0.0
    budgets: Mapping[int, int] = field(default_factory=dict)
    cluster_inr: Mapping[int, tuple[float, ...]] = field(default_factory=dict)


def _check_serving(decision: EpochDecision, context: DecisionContext) -> Iterable[Violation]:
    for cell, sat in enumerate(decision.serving):
        if sat < 0:
            yield Violation(decision.epoch, None, "visibility", f"cell {cell} has no serving satellite")
        elif cell >= len(context.visible) or sat not in context.visible[cell]:
            yield Violation(
                decision.epoch, None, "visibility", f"cell {cell} served by invisible satellite {sat}"
            )


def _check_beams(decision: EpochDecision, context: DecisionContext) -> Iterable[Violation]:
    epoch = decision.epoch
    per_cell: Counter[tuple[int, int]] = Counter()
    per_beam: Counter[tuple[int, int, int]] = Counter()
    per_sat: Counter[tuple[int, int]] = Counter()

    for act in decision.beams:
        if not 0 <= act.slot < context.slots:
            yield Violation(epoch, act.slot, "slot_range", f"slot outside 0..{context.slots - 1}")
        if not 0 <= act.beam < context.beams:
            yield Violation(
                epoch, act.slot, "beam_budget", f"satellite {act.satellite} has no beam {act.beam}"
            )
        if not 0 <= act.cell < len(decision.serving) or decision.serving[act.cell] != act.satellite:
            yield Violation(
                epoch,
                act.slot,
                "beam_without_serving",
                f"satellite {act.satellite} lights cell {act.cell} it does not serve",
            )
        per_cell[(act.slot, act.cell)] += 1
        per_beam[(act.slot, act.satellite, act.beam)] += 1
        per_sat[(act.slot, act.satellite)] += 1

    for (slot, cell), count in sorted(per_cell.items()):
        if count > 1:
            yield Violation(epoch, slot, "single_beam_per_cell", f"cell {cell} holds {count} beams")
    for (slot, sat, beam), count in sorted(per_beam.items()):
        if count > 1:
            yield Violation(
                epoch, slot, "single_cell_per_beam", f"beam {beam} of satellite {sat} serves {count} cells"
            )
    for (slot, sat), count in sorted(per_sat.items()):
        if count > context.beams:
            yield Violation(
                epoch, slot, "beam_budget", f"satellite {sat} uses {count} of {context.beams} beams"
            )


def _check_conflicts(decision: EpochDecision, context: DecisionContext) -> Iterable[Violation]:
    lit: dict[tuple[int, int], list[int]] = {}
    for act in decision.beams:
        lit.setdefault((act.slot, act.cell), []).append(act.beam)
    slots = sorted({act.slot for act in decision.beams})
    for pair in sorted(context.conflicts):
        for slot in slots:
            beams_a = lit.get((slot, pair.cell_a), [])
            beams_b = lit.get((slot, pair.cell_b), [])
            for beam_a in beams_a:
                for beam_b in beams_b:
                    same = beam_a % context.polarization_count == beam_b % context.polarization_count
                    if same or not context.cross_pol_isolated:
                        yield Violation(
                            decision.epoch,
                            slot,
                            "interbeam_conflict",
                            f"cells {pair.cell_a} and {pair.cell_b} share a polarization",
                        )


def _check_sharing(decision: EpochDecision, context: DecisionContext) -> Iterable[Violation]:
    lit = {(act.slot, act.satellite, act.cell) for act in decision.beams}
    shared: set[tuple[int, int]] = set()
    for act in decision.sharing:
        if (act.slot, act.satellite, act.cell) not in lit:
            yield Violation(
                decision.epoch,
                act.slot,
                "sharing_without_beam",
                f"cell {act.cell} uses the terrestrial band without a beam",
            )
        shared.add((act.slot, act.cell))

    for cluster in sorted(context.cluster_inr):
        inr = context.cluster_inr[cluster]
        per_slot: dict[int, float] = {}
        for slot, cell in sorted(shared):
            if 0 <= cell < len(inr):
                per_slot[slot] = per_slot.get(slot, 0.0) + inr[cell]
        interfered = sum(1 for total in per_slot.values() if total > context.inr_threshold)
        budget = context.budgets.get(cluster, 0)
        if interfered > budget:
            yield Violation(
                decision.epoch,
                None,
                "terrestrial_budget",
                f"cluster {cluster} interfered in {interfered} slots, budget {budget}",
            )


def validate_decision(decision: EpochDecision, context: DecisionContext) -> list[Violation]:
    """All violated constraints of one decision; empty when the decision is valid."""
    violations = [
        *_check_serving(decision, context),
        *_check_beams(decision, context),
        *_check_conflicts(decision, context),
        *_check_sharing(decision, context),
    ]
    if violations:
        logger.warning("Epoch %d: %d constraint violations", decision.epoch, len(violations))
    return violations
