"""
Epoch loop: geometry, handover, beam hopping, spectrum sharing, queue updates.

Each epoch runs the three decision stages in order. A later stage never changes an
earlier stage's decision: beam hopping schedules the serving satellites chosen by
handover, and spectrum sharing only adds the terrestrial band to scheduled beams.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from funlog import log_calls

from leobeam.analysis.metrics import MetricsFrame, MetricsRecorder, metrics_summary
from leobeam.analysis.validator import DecisionContext, Violation, validate_decision
from leobeam.core.config import DEFAULT_SUMMARY_WINDOW, METRICS_FILE, REFERENCE_V, SUMMARY_FILE, TRACE_FILE
from leobeam.core.models import ConflictPair, EpochDecision, GroundSite, RandomStreams
from leobeam.core.scenario import ScenarioConfig
from leobeam.core.utils import db_to_linear
from leobeam.filesystem.outputs import TraceWriter, read_arrival_trace, write_metrics_csv, write_summary
from leobeam.network.traffic import (
    ArrivalModel,
    ArrivalTrace,
    TrafficState,
    draw_cluster_loads,
    epoch_penalty,
    handover_increments,
    p0_objective_term,
    sample_arrivals,
    slot_budgets,
)
from leobeam.operations.baselines import baseline_greedy_share, greedy_hop_epoch, no_sharing
from leobeam.operations.beamhop import BeamHopResult, beamhop_epoch
from leobeam.operations.handover import decision_utilization, handover_epoch, serving_imbalance
from leobeam.operations.spectrum import (
    SharingProblem,
    SharingResult,
    build_sharing_problem,
    shared_bits,
    sharing_summary,
    solve_sharing,
)
from leobeam.physics.geometry import (
    build_snapshot,
    hex_cell_sites,
    remaining_visibility,
    scatter_cluster_sites,
    serving_candidates,
)
from leobeam.physics.linkbudget import (
    conflict_pairs,
    rx_pattern,
    slot_capacity_bits,
    terrestrial_contributions,
    terrestrial_noise,
    tx_pattern,
)

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int], None]


@dataclass
class EpochRecord:
    decision: EpochDecision
    context: DecisionContext
    frame: MetricsFrame
    violations: list[Violation]


@dataclass
class SimulationResult:
    frames: list[MetricsFrame]
    summary: dict[str, Any]
    violations: list[Violation] = field(default_factory=list)
    out_dir: str | None = None


class Simulator:
    """Holds the state of one run and advances it an epoch at a time."""

    def __init__(self, config: ScenarioConfig, arrival_trace: ArrivalTrace | None = None):
        self.config: ScenarioConfig = config
        self.streams: RandomStreams = RandomStreams.from_seed(config.seed)
        self.shell = config.shell.to_orbit_shell()
        self.cells: list[GroundSite] = hex_cell_sites(config.layout)
        self.clusters: list[GroundSite] = scatter_cluster_sites(config.layout, self.streams.layout)

        radio = config.radio
        weights = config.layout.normalized_weights()
        self.arrival_model: ArrivalModel = ArrivalModel.from_config(
            config.arrivals, weights, config.epoch_duration_s
        )
        if arrival_trace is None and config.arrivals.trace_path:
            arrival_trace = read_arrival_trace(config.arrivals.trace_path, len(self.cells))
        self.arrival_trace: ArrivalTrace | None = arrival_trace

        self.state: TrafficState = TrafficState.initial(weights, radio.target_snr_db)
        snr = db_to_linear(self.state.target_snr_db)
        self.rates_w1: np.ndarray = slot_capacity_bits(radio.sat_bandwidth_hz, radio.slot_duration_s, snr)
        self.rates_w2: np.ndarray = slot_capacity_bits(radio.terr_bandwidth_hz, radio.slot_duration_s, snr)
        self.inr_threshold: float = float(db_to_linear(radio.inr_terr_db))
        self.terr_noise: float = terrestrial_noise(radio)
        self.tx = tx_pattern(radio)
        self.rx = rx_pattern(radio)

        self.static_loads: np.ndarray | None = None
        if config.cluster_load.mode == "static":
            self.static_loads = draw_cluster_loads(config.cluster_load, len(self.clusters), self.streams.loads)

        self.recorder: MetricsRecorder = MetricsRecorder()
        self.sigma: float = 0.0
        self.tau: float = 0.0

    def _cluster_loads(self) -> np.ndarray:
        if self.static_loads is not None:
            return self.static_loads
        return draw_cluster_loads(self.config.cluster_load, len(self.clusters), self.streams.loads)

    def _arrivals(self, epoch: int) -> np.ndarray:
        if self.arrival_trace is not None:
            return self.arrival_trace.arrivals(epoch)
        return sample_arrivals(self.arrival_model, epoch, self.streams.arrivals)

    def _expected_arrivals(self) -> np.ndarray:
        if self.arrival_trace is not None:
            return self.arrival_trace.mean_arrivals()
        return self.arrival_model.mean_arrivals()

    def _beamhop(
        self, serving: np.ndarray, conflicts: frozenset[ConflictPair], queues: np.ndarray
    ) -> BeamHopResult:
        cfg = self.config
        hop = beamhop_epoch if cfg.policy.beamhop == "proposed" else greedy_hop_epoch
        return hop(
            serving,
            conflicts,
            queues,
            cfg.slots_per_epoch,
            self.rates_w1,
            cfg.beams_per_satellite,
            cfg.radio.polarization_count,
            cfg.radio.cross_pol_isolated,
        )

    def _share(self, problem: SharingProblem) -> SharingResult:
        policy = self.config.policy.spectrum
        if policy == "proposed":
            return solve_sharing(problem, self.config.sparrow, self.streams.sparrow)
        if policy == "greedy_share":
            return baseline_greedy_share(problem)
        return no_sharing(problem)

    def step(self, epoch: int) -> EpochRecord:
        cfg = self.config
        state = self.state
        h_bar = cfg.lyapunov.h_bar

        snapshot = build_snapshot(
            self.shell, self.cells, self.clusters, epoch, cfg.epoch_duration_s, cfg.min_elevation_rad
        )
        previous = state.previous_serving()
        candidates = serving_candidates(snapshot, cfg.serving_candidates, previous)
        queues = state.queues.copy()
        virtual = state.virtual_queues.copy()

        def remaining(sats: np.ndarray) -> np.ndarray:
            return remaining_visibility(
                self.shell,
                self.cells,
                sats,
                snapshot.time_s,
                cfg.min_elevation_rad,
                cfg.handover.visibility_step_s,
                cfg.handover.visibility_horizon_s,
            )

        outcome = handover_epoch(
            epoch,
            previous,
            candidates,
            queues,
            virtual,
            self.sigma,
            self.tau,
            snapshot.elevation,
            remaining,
            cfg.handover,
            h_bar,
            self.streams.handover,
            cfg.policy.handover,
            load_weight=cfg.lyapunov.V / REFERENCE_V,
            expected=self._expected_arrivals(),
        )
        serving = outcome.serving

        conflicts = conflict_pairs(
            snapshot, serving, state.target_snr_db, cfg.radio, cfg.beams_per_satellite, self.tx, self.rx
        )
        hop = self._beamhop(serving, conflicts, queues)
        served_w1 = queues - hop.residual

        budgets = slot_budgets(self._cluster_loads(), cfg.slots_per_epoch)
        links = [(int(serving[c]), c) for c in range(len(self.cells))]
        cell_inr = (
            terrestrial_contributions(snapshot, links, state.target_snr_db, cfg.radio, self.tx)
            / self.terr_noise
        )
        problem = build_sharing_problem(
            hop.schedule, hop.residual, serving, cell_inr, budgets, self.inr_threshold, self.rates_w2
        )
        sharing = self._share(problem)
        served_w2 = shared_bits(sharing.z, problem)
        served = served_w1 + served_w2

        arrivals = self._arrivals(epoch)
        p0 = p0_objective_term(served, queues)
        drift = handover_increments(previous, serving) - h_bar
        penalty = epoch_penalty(served, queues, virtual, drift, cfg.lyapunov.V)
        state.advance(serving, served, arrivals, h_bar)

        decision = EpochDecision(
            epoch=epoch,
            serving=tuple(int(s) for s in serving),
            beams=hop.schedule.activations(),
            sharing=sharing.activations(problem),
            events=tuple(outcome.events),
            mandatory=tuple(sorted(outcome.trigger.mandatory)),
            rebalanced=bool(outcome.delta_history),
            cluster_usage=sharing_summary(problem, sharing.z),
        )

        # inputs to the next epoch's trigger
        self.sigma = decision_utilization(decision, cfg.beams_per_satellite, cfg.slots_per_epoch)
        self.tau = serving_imbalance(serving, state.queues)

        reachable = np.flatnonzero(cell_inr.sum(axis=0) > self.inr_threshold)
        context = DecisionContext(
            visible=tuple(
                tuple(int(s) for s in snapshot.visible_satellites(c)) for c in range(len(self.cells))
            ),
            conflicts=conflicts,
            beams=cfg.beams_per_satellite,
            polarization_count=cfg.radio.polarization_count,
            slots=cfg.slots_per_epoch,
            cross_pol_isolated=cfg.radio.cross_pol_isolated,
            inr_threshold=self.inr_threshold,
            budgets={int(j): int(budgets[j]) for j in reachable},
            cluster_inr={int(j): tuple(float(x) for x in cell_inr[:, j]) for j in reachable},
        )
        violations = validate_decision(decision, context)

        frame = self.recorder.record(
            epoch=epoch,
            p0_term=p0,
            queues=state.queues,
            handovers=state.handovers,
            virtual=state.virtual_queues,
            utilization=self.sigma,
            imbalance=self.tau,
            served_w1_bits=float(served_w1.sum()),
            served_w2_bits=float(served_w2.sum()),
            handover_events=len(outcome.events),
            arrivals_bits=float(arrivals.sum()),
            penalty=penalty,
        )
        logger.debug(
            "Epoch %d: %d handovers, %d beam-slots, %d shared slots, mean queue %.0f b",
            epoch,
            len(outcome.events),
            len(decision.beams),
            len(decision.sharing),
            frame.mean_queue_bits,
        )
        return EpochRecord(decision, context, frame, violations)


def run_summary(config: ScenarioConfig, frames: list[MetricsFrame], violations: int) -> dict[str, Any]:
    summary = metrics_summary(frames, min(DEFAULT_SUMMARY_WINDOW, len(frames)))
    summary.update(
        {
            "seed": config.seed,
            "V": config.lyapunov.V,
            "arrival_rate_bps": config.arrivals.mean_total_rate_bps,
            "policy_handover": config.policy.handover,
            "policy_beamhop": config.policy.beamhop,
            "policy_spectrum": config.policy.spectrum,
            "violations": violations,
        }
    )
    return summary


@log_calls(level="info", show_timing_only=True)
def run(
    config: ScenarioConfig,
    out_dir: str | None = None,
    progress_callback: ProgressCallback | None = None,
    arrival_trace: ArrivalTrace | None = None,
) -> SimulationResult:
    """
    Simulate every epoch of a scenario. When out_dir is given the metrics CSV, the
    decisions trace and the summary are written there.

    Raises InfeasibleScenarioError when a cell has no visible satellite.
    """
    simulator = Simulator(config, arrival_trace)
    violations: list[Violation] = []
    writer = TraceWriter(os.path.join(out_dir, TRACE_FILE)) if out_dir else nullcontext()

    with writer as trace:
        for epoch in range(1, config.epochs + 1):
            record = simulator.step(epoch)
            violations.extend(record.violations)
            if trace is not None:
                trace.write(record.decision, record.context)
            if progress_callback:
                progress_callback(epoch, config.epochs)

    frames = simulator.recorder.frames
    summary = run_summary(config, frames, len(violations))
    if out_dir:
        write_metrics_csv(frames, os.path.join(out_dir, METRICS_FILE))
        write_summary(summary, os.path.join(out_dir, SUMMARY_FILE))
    if violations:
        logger.warning("Run finished with %d constraint violations", len(violations))
    return SimulationResult(frames=frames, summary=summary, violations=violations, out_dir=out_dir)
