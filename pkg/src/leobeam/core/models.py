"""
Core data models for the beam management simulator.

This module contains the terminal color palette and the immutable records passed
between the geometry, decision and output layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from typing_extensions import override

from leobeam.core.errors import ScenarioError


# ANSI color codes
class Colors:
    """ANSI color codes for terminal output formatting."""

    RED: str = "\033[91m"
    GREEN: str = "\033[92m"
    YELLOW: str = "\033[93m"
    CYAN: str = "\033[96m"
    BLUE: str = "\033[94m"
    BOLD_WHITE: str = "\033[97;1m"
    GREY: str = "\033[2m"
    RESET: str = "\033[0m"

    @classmethod
    def disable(cls):  # pyright: ignore[reportConstantRedefinition]
        """Disable all color codes."""
        cls.RED = ""  # pyright: ignore[reportConstantRedefinition]
        cls.GREEN = ""  # pyright: ignore[reportConstantRedefinition]
        cls.YELLOW = ""  # pyright: ignore[reportConstantRedefinition]
        cls.CYAN = ""  # pyright: ignore[reportConstantRedefinition]
        cls.BLUE = ""  # pyright: ignore[reportConstantRedefinition]
        cls.BOLD_WHITE = ""  # pyright: ignore[reportConstantRedefinition]
        cls.GREY = ""  # pyright: ignore[reportConstantRedefinition]
        cls.RESET = ""  # pyright: ignore[reportConstantRedefinition]


class SiteKind(Enum):
    BEAM_CELL = "beam_cell"
    CLUSTER_CENTER = "cluster_center"


@dataclass(frozen=True)
class OrbitShell:
    """A Walker-delta shell of circular orbits."""

    plane_count: int
    sats_per_plane: int
    altitude_m: float
    inclination_rad: float
    epoch0_phase: float = 0.0
    walker_phasing: int = 1

    def __post_init__(self):
        if self.plane_count < 1 or self.sats_per_plane < 1:
            raise ScenarioError("orbit shell needs at least one plane and one satellite per plane")
        if self.altitude_m <= 0:
            raise ScenarioError(f"orbit altitude must be positive, got {self.altitude_m}")
        if not 0.0 <= self.inclination_rad <= math.pi:
            raise ScenarioError(f"inclination must lie in [0, pi], got {self.inclination_rad}")

    @property
    def satellite_count(self) -> int:
        return self.plane_count * self.sats_per_plane


@dataclass(frozen=True)
class GroundSite:
    """An earth-fixed point: a beam cell center or a terrestrial cluster center."""

    latitude_rad: float
    longitude_rad: float
    kind: SiteKind = SiteKind.BEAM_CELL

    def __post_init__(self):
        if abs(self.latitude_rad) > math.pi / 2:
            raise ScenarioError(f"latitude out of range: {self.latitude_rad}")
        if abs(self.longitude_rad) > math.pi:
            raise ScenarioError(f"longitude out of range: {self.longitude_rad}")


@dataclass(frozen=True, eq=False)
class ConstellationSnapshot:
    """
    Satellite geometry frozen for one epoch.

    All arrays are read-only. Satellite-to-site matrices are indexed [satellite, site].
    """

    epoch: int
    time_s: float
    min_elevation_rad: float
    sat_positions: np.ndarray  # (S, 3) earth-fixed, meters
    cell_positions: np.ndarray  # (C, 3)
    cluster_positions: np.ndarray  # (J, 3)
    cell_distances: np.ndarray  # (S, C)
    cluster_distances: np.ndarray  # (S, J)
    elevation: np.ndarray  # (S, C), radians
    visibility: np.ndarray  # (S, C), bool

    @property
    def satellite_count(self) -> int:
        return int(self.sat_positions.shape[0])

    @property
    def cell_count(self) -> int:
        return int(self.cell_positions.shape[0])

    @property
    def cluster_count(self) -> int:
        return int(self.cluster_positions.shape[0])

    def visible_satellites(self, cell: int) -> np.ndarray:
        """Ids of satellites visible from a cell, ascending."""
        return np.flatnonzero(self.visibility[:, cell])


class ConflictPair(NamedTuple):
    """Two served cells that cannot share a co-polarized beam in the same slot."""

    sat_a: int
    cell_a: int
    sat_b: int
    cell_b: int


class BeamActivation(NamedTuple):
    slot: int
    satellite: int
    cell: int
    beam: int


class SharingActivation(NamedTuple):
    slot: int
    satellite: int
    cell: int


class HandoverEvent(NamedTuple):
    epoch: int
    cell: int
    from_sat: int
    to_sat: int
    reason: str  # "visibility" or "rebalance"


class ClusterUsage(NamedTuple):
    cluster: int
    interfered_slots: int
    budget: int


@dataclass(frozen=True)
class CellState:
    """Per-cell view of the traffic and handover bookkeeping at an epoch boundary."""

    cell_id: int
    queue_bits: float
    virtual_queue: float
    handovers: int
    serving_satellite: int | None
    target_snr_db: float
    demand_weight: float


@dataclass(frozen=True)
class EpochDecision:
    """Serving satellites, beam schedule and terrestrial-band occupancy of one epoch."""

    epoch: int
    serving: tuple[int, ...]
    beams: tuple[BeamActivation, ...] = ()
    sharing: tuple[SharingActivation, ...] = ()
    events: tuple[HandoverEvent, ...] = ()
    mandatory: tuple[int, ...] = ()
    rebalanced: bool = False
    cluster_usage: tuple[ClusterUsage, ...] = ()

    @override
    def __repr__(self) -> str:
        return (
            f"EpochDecision(epoch={self.epoch}, cells={len(self.serving)}, "
            f"beams={len(self.beams)}, sharing={len(self.sharing)}, events={len(self.events)})"
        )


@dataclass
class RandomStreams:
    """Independent generators spawned from one scenario seed."""

    layout: np.random.Generator
    arrivals: np.random.Generator
    loads: np.random.Generator
    handover: np.random.Generator
    sparrow: np.random.Generator
    seed: int = field(default=0)

    @classmethod
    def from_seed(cls, seed: int) -> RandomStreams:
        children = np.random.SeedSequence(seed).spawn(5)
        layout, arrivals, loads, handover, sparrow = (np.random.default_rng(s) for s in children)
        return cls(layout, arrivals, loads, handover, sparrow, seed=seed)
