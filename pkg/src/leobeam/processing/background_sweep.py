"""
Background execution of parameter sweeps.

Each (value, seed) pair is an independent run with its own scenario, random
streams and output subdirectory. Worker threads take jobs from a shared queue and
put finished outcomes on a ready queue; a None marks the end of the sweep.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import queue
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

from leobeam.core.errors import LeoBeamError, ScenarioError
from leobeam.core.scenario import ScenarioConfig
from leobeam.processing.simulator import run

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("V", "arrival_rate")


@dataclass(frozen=True)
class SweepJob:
    index: int
    parameter: str
    value: float
    seed: int
    config: ScenarioConfig
    out_dir: str | None = None


@dataclass
class SweepOutcome:
    job: SweepJob
    summary: dict[str, Any] | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self) -> dict[str, Any]:
        """Summary fields tagged with the swept parameter, value and seed."""
        row: dict[str, Any] = dict(self.summary or {})
        row.update(parameter=self.job.parameter, value=self.job.value, seed=self.job.seed)
        return row


def apply_parameter(config: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "V":
        return dataclasses.replace(config, lyapunov=dataclasses.replace(config.lyapunov, V=float(value)))
    if parameter == "arrival_rate":
        return dataclasses.replace(
            config, arrivals=dataclasses.replace(config.arrivals, mean_total_rate_bps=float(value))
        )
    raise ScenarioError(f"unknown sweep parameter '{parameter}' (choose from {', '.join(SWEEP_PARAMETERS)})")


def build_sweep_jobs(
    config: ScenarioConfig,
    parameter: str,
    values: Sequence[float],
    seeds: Sequence[int],
    out_root: str | None = None,
) -> list[SweepJob]:
    """One job per (value, seed), values outermost."""
    jobs: list[SweepJob] = []
    for value in values:
        swept = apply_parameter(config, parameter, value)
        for seed in seeds:
            out_dir = os.path.join(out_root, f"{parameter}_{value:g}", f"seed_{seed}") if out_root else None
            jobs.append(
                SweepJob(
                    index=len(jobs),
                    parameter=parameter,
                    value=float(value),
                    seed=seed,
                    config=dataclasses.replace(swept, seed=seed),
                    out_dir=out_dir,
                )
            )
    return jobs


class BackgroundSweep:
    """Runs sweep jobs on worker threads and queues their outcomes."""

    def __init__(
        self,
        jobs: Sequence[SweepJob],
        ready_queue: queue.Queue[SweepOutcome | None],
        progress_callback: Callable[[int, int], None] | None = None,
        workers: int = 1,
    ):
        self.jobs: list[SweepJob] = list(jobs)
        self.ready_queue: queue.Queue[SweepOutcome | None] = ready_queue
        self.progress_callback: Callable[[int, int], None] | None = progress_callback
        self.workers: int = max(1, min(workers, len(self.jobs) or 1))
        self.completed_count: int = 0
        self.total_count: int = len(self.jobs)
        self.running: bool = True
        self.threads: list[threading.Thread] = []
        self._pending: queue.Queue[SweepJob] = queue.Queue()
        self._lock: threading.Lock = threading.Lock()
        self._active: int = 0

    def start(self):
        """Start the worker threads."""
        for job in self.jobs:
            self._pending.put(job)
        self._active = self.workers
        for _ in range(self.workers):
            thread = threading.Thread(target=self._sweep_worker, daemon=True)
            self.threads.append(thread)
            thread.start()

    def stop(self):
        """Stop after the runs in progress finish."""
        self.running = False
        for thread in self.threads:
            thread.join(timeout=1.0)

    def get_progress(self) -> tuple[int, int]:
        return self.completed_count, self.total_count

    def _run_job(self, job: SweepJob) -> SweepOutcome:
        try:
            if job.out_dir:
                os.makedirs(job.out_dir, exist_ok=True)
            result = run(job.config, job.out_dir)
            return SweepOutcome(job=job, summary=result.summary)
        except LeoBeamError as e:
            logger.warning("Sweep run %s=%g seed %d failed: %s", job.parameter, job.value, job.seed, e)
            return SweepOutcome(job=job, error=str(e))
        except Exception as e:
            logger.exception("Sweep run %s=%g seed %d crashed", job.parameter, job.value, job.seed)
            return SweepOutcome(job=job, error=f"{type(e).__name__}: {e}")

    def _sweep_worker(self):
        try:
            while self.running:
                try:
                    job = self._pending.get_nowait()
                except queue.Empty:
                    break
                outcome = self._run_job(job)
                with self._lock:
                    self.completed_count += 1
                    done = self.completed_count
                self.ready_queue.put(outcome)
                if self.progress_callback:
                    try:
                        self.progress_callback(done, self.total_count)
                    except Exception:
                        logger.exception("Sweep progress callback failed")
        finally:
            # the last worker out signals completion
            with self._lock:
                self._active -= 1
                last = self._active == 0
            if last:
                self.ready_queue.put(None)


def run_sweep(
    jobs: Sequence[SweepJob],
    workers: int = 1,
    progress_callback: Callable[[int, int], None] | None = None,
) -> list[SweepOutcome]:
    """Run every job and return the outcomes in job order."""
    ready: queue.Queue[SweepOutcome | None] = queue.Queue()
    sweep = BackgroundSweep(jobs, ready, progress_callback, workers)
    sweep.start()
    outcomes: list[SweepOutcome] = []
    while True:
        outcome = ready.get()
        if outcome is None:
            break
        outcomes.append(outcome)
    sweep.stop()
    return sorted(outcomes, key=lambda o: o.job.index)
