"""Tests for handover triggering, entropy-weighted assignment and swap matching."""

from __future__ import annotations

import math

import numpy as np
import pytest

from leobeam.analysis.oracles import brute_force_assignment
from leobeam.core.errors import InfeasibleScenarioError
from leobeam.core.models import BeamActivation, EpochDecision
from leobeam.core.scenario import HandoverConfig
from leobeam.operations.baselines import baseline_load_balance
from leobeam.operations.handover import (
    decision_utilization,
    delta_prime,
    entropy_assign,
    entropy_weights,
    handover_epoch,
    imbalance_index,
    perturb_assignment,
    serving_imbalance,
    should_trigger,
    swap_matching,
    utilization_rate,
)


def _no_remaining(sats: np.ndarray) -> np.ndarray:
    raise AssertionError(f"remaining visibility requested for {sats}")


def test_utilization_rate():
    """Busy beam-slots over the beam-slots of serving satellites."""
    assert utilization_rate(2 * 4 * 200, 2, 4, 200) == 1.0
    assert utilization_rate(0, 2, 4, 200) == 0.0
    assert utilization_rate(800, 2, 4, 200) == 0.5
    assert utilization_rate(0, 0, 4, 200) == 0.0

    decision = EpochDecision(
        epoch=1,
        serving=(0, 0, 1),
        beams=(BeamActivation(0, 0, 0, 0), BeamActivation(0, 1, 2, 0)),
    )
    assert decision_utilization(decision, 2, 2) == pytest.approx(2 / 8)


def test_imbalance_index():
    """Max over min satellite load, with an infinite sentinel for an idle server."""
    assert imbalance_index([4e6, 2e6]) == 2.0
    assert imbalance_index([3.0, 3.0, 3.0]) == 1.0
    assert imbalance_index([5.0, 0.0]) == math.inf

    assert serving_imbalance(np.array([0, 0, 2]), np.array([1.0, 1.0, 4.0])) == 2.0


def test_should_trigger():
    """Lost cells are mandatory; rebalancing needs both indicators under threshold."""
    config = HandoverConfig(sigma0=0.9, tau0=2.0)

    assert should_trigger([], 0.95, 3.0, config) == should_trigger(set(), 0.95, 3.0, config)
    assert not should_trigger([], 0.95, 3.0, config).global_rebalance
    assert should_trigger([], 0.5, 1.5, config).global_rebalance
    assert not should_trigger([], 0.5, 2.5, config).global_rebalance

    decision = should_trigger([7], 0.95, 3.0, config)
    assert decision.mandatory == frozenset({7})


def test_entropy_weights():
    """A constant attribute gets no weight; all-constant falls back to uniform."""
    attributes = np.array([[1.0, 5.0, 0.2], [2.0, 5.0, 0.9], [3.0, 5.0, 0.4]])
    weights = entropy_weights(attributes)

    assert weights[1] == 0.0
    assert weights.sum() == pytest.approx(1.0)
    assert np.all(weights >= 0)

    assert entropy_weights(np.ones((3, 3))) == pytest.approx(np.full(3, 1 / 3))
    assert entropy_weights(np.ones((1, 3))) == pytest.approx(np.full(3, 1 / 3))


def test_entropy_assign():
    """A single candidate is forced; identical candidates go to the lowest id."""
    candidates = np.array([[False, True], [True, True], [False, True]])
    loads = np.zeros(3)
    queues = np.array([1.0, 1.0])
    elevation = np.full((3, 2), 0.8)
    remaining = np.full((3, 2), 100.0)

    assignment = entropy_assign([0, 1], candidates, loads, queues, elevation, remaining)
    assert assignment[0] == 1
    # satellite 1 now carries cell 0, so cell 1 prefers an idle one: 0 and 2 tie
    assert assignment[1] == 0

    with pytest.raises(InfeasibleScenarioError):
        entropy_assign([0], np.zeros((2, 1), dtype=bool), np.zeros(2), queues, elevation, remaining)


def test_entropy_assign_prefers_longer_visibility():
    """With equal loads and elevations the satellite staying visible longer wins."""
    candidates = np.ones((2, 1), dtype=bool)
    elevation = np.full((2, 1), 0.7)
    remaining = np.array([[30.0], [300.0]])

    for mode in ("entropy", "fixed"):
        assignment = entropy_assign([0], candidates, np.zeros(2), np.ones(1), elevation, remaining, mode)
        assert assignment[0] == 1


def test_delta_prime():
    """Load term of two unit queues: 0.5 on one satellite, 0 when split."""
    queues = np.ones(2)
    virtual = np.zeros(2)

    assert delta_prime(np.array([0, 0]), queues, virtual, None, 0.004, satellites=[0, 1]) == pytest.approx(0.5)
    assert delta_prime(np.array([0, 1]), queues, virtual, None, 0.004, satellites=[0, 1]) == pytest.approx(0.0)
    assert delta_prime(np.array([0, 1]), np.zeros(2), virtual, None, 0.004, [0, 1]) == 0.0

    # a handover against a positive virtual queue costs M (1 - H_bar)
    value = delta_prime(
        np.array([1, 1]), np.zeros(2), np.array([0.5, 0.0]), np.array([0, 1]), 0.004, [0, 1]
    )
    assert value == pytest.approx(0.5 * 0.996)



def test_delta_prime_counts_idle_candidates():
    """A candidate satellite that serves nobody still adds a quarter to the load term."""
    queues = np.ones(2)
    virtual = np.zeros(2)

    assert delta_prime(np.array([0, 0]), queues, virtual, None, 0.004, [0, 1]) == pytest.approx(0.5)
    assert delta_prime(np.array([0, 0]), queues, virtual, None, 0.004, [0, 1, 2]) == pytest.approx(0.75)




def test_delta_prime_load_term_maximal_on_one_satellite():
    """With no virtual queue, stacking both cells is the worst of all assignments."""
    queues = np.ones(2)
    virtual = np.zeros(2)
    values = [
        delta_prime(np.array(choice), queues, virtual, None, 0.004, satellites=[0, 1])
        for choice in ((0, 0), (0, 1), (1, 0), (1, 1))
    ]
    assert max(values) == values[0] == values[3]


def test_swap_matching_moves_one_cell():
    """Two cells on one satellite with an empty visible neighbor: one cell moves."""
    config = HandoverConfig(swap_iterations=5)
    candidates = np.ones((2, 2), dtype=bool)
    result = swap_matching(
        np.array([0, 0]), np.ones(2), np.zeros(2), None, candidates, config, 0.004, perturb=False
    )

    assert sorted(result.serving.tolist()) == [0, 1]
    assert result.history[0] == pytest.approx(0.5)
    assert result.history[-1] == pytest.approx(0.0)
    assert result.accepted == 1


def test_swap_matching_fixed_point_and_visibility():
    """A balanced assignment is stable; swaps onto invisible satellites are never taken."""
    config = HandoverConfig(swap_iterations=5)
    stable = swap_matching(
        np.array([0, 1]), np.ones(2), np.zeros(2), None, np.ones((2, 2), dtype=bool), config, 0.004, perturb=False
    )
    assert stable.serving.tolist() == [0, 1]
    assert stable.accepted == 0

    # satellite 1 is invisible to both cells
    blocked = np.array([[True, True], [False, False]])
    result = swap_matching(
        np.array([0, 0]), np.ones(2), np.zeros(2), None, blocked, config, 0.004, perturb=False
    )
    assert result.serving.tolist() == [0, 0]


def test_swap_matching_history_never_increases():
    """Every accepted swap strictly lowers the objective."""
    rng = np.random.default_rng(5)
    candidates = rng.random((4, 6)) < 0.7
    candidates[0] = True
    queues = rng.uniform(1.0, 10.0, 6)
    virtual = rng.uniform(0.0, 1.0, 6)
    previous = np.zeros(6, dtype=int)
    config = HandoverConfig(swap_iterations=20, perturb_fraction=0.5)

    result = swap_matching(previous, queues, virtual, previous, candidates, config, 0.004, rng)

    assert all(b < a for a, b in zip(result.history, result.history[1:], strict=False))
    assert all(candidates[s, c] for c, s in enumerate(result.serving))

    oracle_serving, oracle_value = brute_force_assignment(candidates, queues, virtual, previous, 0.004)
    satellites = np.flatnonzero(candidates.any(axis=1))
    assert oracle_value <= delta_prime(result.serving, queues, virtual, previous, 0.004, satellites) + 1e-12
    assert all(candidates[s, c] for c, s in enumerate(oracle_serving))


def test_perturb_assignment_stays_feasible():
    """Perturbed cells land on candidate satellites only."""
    candidates = np.array([[True, False, True], [False, True, True]])
    perturbed = perturb_assignment(np.array([0, 1, 0]), candidates, 1.0, np.random.default_rng(2))
    assert all(candidates[s, c] for c, s in enumerate(perturbed))

    unchanged = perturb_assignment(np.array([0, 1, 0]), candidates, 0.0, np.random.default_rng(2))
    assert unchanged.tolist() == [0, 1, 0]


def test_baseline_load_balance():
    """Least-loaded candidate, ties to the lowest id, forced when only one is visible."""
    candidates = np.ones((2, 1), dtype=bool)

    assert baseline_load_balance([0], np.array([10.0, 2.0]), candidates) == {0: 1}
    assert baseline_load_balance([0], np.array([3.0, 3.0]), candidates) == {0: 0}
    assert baseline_load_balance([0], np.array([0.0, 9.0]), np.array([[False], [True]])) == {0: 1}

    with pytest.raises(InfeasibleScenarioError):
        baseline_load_balance([0], np.zeros(2), np.zeros((2, 1), dtype=bool))


def test_handover_epoch_first_epoch_assigns_everyone():
    """The first epoch assigns every cell and records no handover events."""
    candidates = np.array([[True, True], [True, False]])
    outcome = handover_epoch(
        1,
        None,
        candidates,
        np.ones(2),
        np.zeros(2),
        0.0,
        0.0,
        np.full((2, 2), 0.8),
        lambda sats: np.full((len(sats), 2), 60.0),
        HandoverConfig(),
        0.004,
        np.random.default_rng(0),
    )

    assert outcome.events == []
    assert outcome.trigger.mandatory == frozenset({0, 1})
    assert all(candidates[s, c] for c, s in enumerate(outcome.serving))


def test_swap_matching_reaches_optimum_on_two_satellites():
    """With two satellites and at most four cells the swaps end at the exhaustive optimum."""
    rng = np.random.default_rng(11)
    config = HandoverConfig(swap_iterations=50)
    for trial in range(60):
        cells = 1 + trial % 4
        candidates = np.ones((2, cells), dtype=bool)
        queues = rng.uniform(1.0, 10.0, cells)
        virtual = rng.uniform(0.0, 1.0, cells)
        initial = rng.integers(0, 2, cells)

        result = swap_matching(initial, queues, virtual, None, candidates, config, 0.004, perturb=False)
        _, optimum = brute_force_assignment(candidates, queues, virtual, None, 0.004)

        value = delta_prime(result.serving, queues, virtual, None, 0.004, [0, 1])
        assert value == pytest.approx(optimum, abs=1e-9)
        assert result.history[-1] == pytest.approx(value, abs=1e-9)


def test_handover_epoch_first_epoch_balances_expected_load():
    """With empty queues the first assignment spreads the expected arrivals over both satellites."""
    candidates = np.ones((2, 4), dtype=bool)
    expected = np.array([4.0, 3.0, 2.0, 1.0])
    for policy in ("proposed", "load_balance"):
        outcome = handover_epoch(
            1,
            None,
            candidates,
            np.zeros(4),
            np.zeros(4),
            0.0,
            0.0,
            np.array([[0.9, 0.9, 0.9, 0.9], [0.3, 0.3, 0.3, 0.3]]),
            lambda sats: np.array([[300.0] * 4, [30.0] * 4])[sats],
            HandoverConfig(),
            0.004,
            np.random.default_rng(0),
            policy=policy,
            expected=expected,
        )

        loads = np.bincount(outcome.serving, weights=expected, minlength=2)
        assert loads.tolist() == [5.0, 5.0]


def test_handover_epoch_keeps_servers_without_trigger():
    """Busy, balanced epochs with every server still visible change nothing."""
    previous = np.array([0, 1])
    outcome = handover_epoch(
        5,
        previous,
        np.ones((2, 2), dtype=bool),
        np.ones(2),
        np.zeros(2),
        0.95,
        1.0,
        np.full((2, 2), 0.8),
        _no_remaining,
        HandoverConfig(),
        0.004,
        np.random.default_rng(0),
    )

    assert outcome.serving.tolist() == [0, 1]
    assert outcome.events == []
    assert not outcome.trigger.global_rebalance
    assert outcome.delta_history == []


def test_handover_epoch_replaces_lost_server():
    """A cell whose satellite left view is handed over to a visible candidate."""
    previous = np.array([0, 1])
    candidates = np.array([[False, False], [True, True], [True, False]])
    outcome = handover_epoch(
        9,
        previous,
        candidates,
        np.array([2.0, 1.0]),
        np.zeros(2),
        0.95,
        3.0,
        np.full((3, 2), 0.8),
        lambda sats: np.full((len(sats), 2), 60.0),
        HandoverConfig(),
        0.004,
        np.random.default_rng(0),
        policy="entropy_only",
    )

    assert outcome.trigger.mandatory == frozenset({0})
    assert outcome.serving[1] == 1
    assert outcome.serving[0] in (1, 2)
    assert [(e.cell, e.from_sat, e.reason) for e in outcome.events] == [(0, 0, "visibility")]

    with pytest.raises(InfeasibleScenarioError) as excinfo:
        handover_epoch(
            10,
            previous,
            np.array([[False, True], [False, True]]),
            np.ones(2),
            np.zeros(2),
            0.0,
            0.0,
            np.zeros((2, 2)),
            _no_remaining,
            HandoverConfig(),
            0.004,
            np.random.default_rng(0),
        )
    assert excinfo.value.epoch == 10
    assert excinfo.value.cell == 0
