"""
Constellation geometry: circular-orbit propagation, earth-fixed sites, visibility,
distances and off-axis angles.

The earth is a sphere of radius EARTH_RADIUS_M. Orbits are circular Walker-delta
shells without perturbations; earth rotation is applied when converting inertial
positions to the earth-fixed frame.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike

from leobeam.core.config import EARTH_MU, EARTH_RADIUS_M, EARTH_ROTATION_RATE
from leobeam.core.errors import GeometryDomainError, ScenarioError
from leobeam.core.models import ConstellationSnapshot, GroundSite, OrbitShell, SiteKind
from leobeam.core.scenario import LayoutConfig

logger = logging.getLogger(__name__)

ANGLE_TOLERANCE = 1e-9


def mean_motion(shell: OrbitShell) -> float:
    """Angular rate of a circular orbit in rad/s."""
    radius = EARTH_RADIUS_M + shell.altitude_m
    return math.sqrt(EARTH_MU / radius**3)


def orbital_period(shell: OrbitShell) -> float:
    return 2.0 * math.pi / mean_motion(shell)


def propagate(
    shell: OrbitShell, time_s: float, satellites: ArrayLike | None = None
) -> np.ndarray:
    """
    Inertial positions of the shell's satellites at time_s.

    Satellite id s belongs to plane s // sats_per_plane, slot s % sats_per_plane.
    Returns an (n, 3) array in meters; `satellites` selects a subset of ids.
    """
    if time_s < 0:
        raise ValueError(f"time must be non-negative, got {time_s}")

    ids = (
        np.arange(shell.satellite_count)
        if satellites is None
        else np.asarray(satellites, dtype=int)
    )
    plane = ids // shell.sats_per_plane
    slot = ids % shell.sats_per_plane
    planes = shell.plane_count
    per_plane = shell.sats_per_plane

    raan = 2.0 * math.pi * plane / planes
    arg_lat = (
        2.0 * math.pi * slot / per_plane
        + 2.0 * math.pi * shell.walker_phasing * plane / (planes * per_plane)
        + shell.epoch0_phase
        + mean_motion(shell) * time_s
    )

    radius = EARTH_RADIUS_M + shell.altitude_m
    cos_i, sin_i = math.cos(shell.inclination_rad), math.sin(shell.inclination_rad)
    cos_o, sin_o = np.cos(raan), np.sin(raan)
    cos_u, sin_u = np.cos(arg_lat), np.sin(arg_lat)

    return radius * np.column_stack(
        (
            cos_o * cos_u - sin_o * sin_u * cos_i,
            sin_o * cos_u + cos_o * sin_u * cos_i,
            sin_u * sin_i,
        )
    )


def inertial_to_earth_fixed(positions: np.ndarray, time_s: float) -> np.ndarray:
    """Rotate inertial positions into the earth-fixed frame at time_s."""
    angle = EARTH_ROTATION_RATE * time_s
    c, s = math.cos(angle), math.sin(angle)
    rotation = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    return positions @ rotation.T


def site_positions(sites: Sequence[GroundSite]) -> np.ndarray:
    """Earth-fixed positions of ground sites as an (n, 3) array."""
    if not sites:
        return np.zeros((0, 3))
    lat = np.array([s.latitude_rad for s in sites])
    lon = np.array([s.longitude_rad for s in sites])
    return EARTH_RADIUS_M * np.column_stack(
        (np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat))
    )


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def elevation_angles(sat_positions: np.ndarray, ground_positions: np.ndarray) -> np.ndarray:
    """Elevation of each satellite above each site's local horizon, (S, N) radians."""
    if ground_positions.shape[0] == 0:
        return np.zeros((sat_positions.shape[0], 0))
    up = ground_positions / np.linalg.norm(ground_positions, axis=1, keepdims=True)
    delta = sat_positions[:, None, :] - ground_positions[None, :, :]
    ranges = np.linalg.norm(delta, axis=-1)
    sin_el = np.einsum("snk,nk->sn", delta, up) / ranges
    return np.arcsin(np.clip(sin_el, -1.0, 1.0))


def off_axis_angles(adjacent_a: ArrayLike, adjacent_b: ArrayLike, opposite: ArrayLike) -> np.ndarray:
    """
    Angle between the two adjacent sides of a triangle by the law of cosines.

    Raises GeometryDomainError when the sides do not form a triangle within tolerance.
    """
    a = np.asarray(adjacent_a, dtype=float)
    b = np.asarray(adjacent_b, dtype=float)
    c = np.asarray(opposite, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0) or np.any(c < 0):
        raise GeometryDomainError("adjacent sides must be positive and the opposite side non-negative")
    cosine = (a * a + b * b - c * c) / (2.0 * a * b)
    if np.any(np.abs(cosine) > 1.0 + ANGLE_TOLERANCE):
        raise GeometryDomainError("distances do not form a triangle")
    return np.arccos(np.clip(cosine, -1.0, 1.0))


def off_axis_angle_tx(d_sc: float, d_sc2: float, d_cc2: float) -> float:
    """Angle at a satellite between its boresight cell and another cell."""
    return float(off_axis_angles(d_sc, d_sc2, d_cc2))


def off_axis_angle_rx(d_sc: float, d_s2c: float, d_ss2: float) -> float:
    """Angle at a cell between its serving satellite and another satellite."""
    return float(off_axis_angles(d_sc, d_s2c, d_ss2))


def build_snapshot(
    shell: OrbitShell,
    cells: Sequence[GroundSite],
    clusters: Sequence[GroundSite],
    epoch: int,
    epoch_duration_s: float,
    min_elevation_rad: float,
) -> ConstellationSnapshot:
    """Geometry of the constellation at the start of a 1-based epoch."""
    if epoch < 1:
        raise ValueError(f"epochs are numbered from 1, got {epoch}")

    time_s = (epoch - 1) * epoch_duration_s
    sats = inertial_to_earth_fixed(propagate(shell, time_s), time_s)
    cell_pos = site_positions(cells)
    cluster_pos = site_positions(clusters)
    elevation = elevation_angles(sats, cell_pos)

    arrays = {
        "sat_positions": sats,
        "cell_positions": cell_pos,
        "cluster_positions": cluster_pos,
        "cell_distances": pairwise_distances(sats, cell_pos),
        "cluster_distances": pairwise_distances(sats, cluster_pos),
        "elevation": elevation,
        "visibility": elevation >= min_elevation_rad,
    }
    for value in arrays.values():
        value.setflags(write=False)

    return ConstellationSnapshot(
        epoch=epoch,
        time_s=time_s,
        min_elevation_rad=min_elevation_rad,
        **arrays,
    )


def remaining_visibility(
    shell: OrbitShell,
    cells: Sequence[GroundSite],
    satellites: ArrayLike,
    time_s: float,
    min_elevation_rad: float,
    step_s: float,
    horizon_s: float,
) -> np.ndarray:
    """
    Seconds each satellite stays above the elevation mask of each cell.

    Forward-propagates in steps of step_s; pairs still visible at the horizon report
    horizon_s. Returns an (n_satellites, n_cells) array.
    """
    ids = np.asarray(satellites, dtype=int)
    ground = site_positions(cells)
    steps = int(horizon_s // step_s)
    remaining = np.full((ids.size, ground.shape[0]), float(steps) * step_s)
    still_visible = np.ones_like(remaining, dtype=bool)

    for k in range(1, steps + 1):
        t = time_s + k * step_s
        positions = inertial_to_earth_fixed(propagate(shell, t, ids), t)
        visible = elevation_angles(positions, ground) >= min_elevation_rad
        lost = still_visible & ~visible
        remaining[lost] = (k - 1) * step_s
        still_visible &= visible
        if not still_visible.any():
            break

    return remaining


def _local_to_site(
    x_m: float, y_m: float, anchor_lat: float, anchor_lon: float, kind: SiteKind
) -> GroundSite:
    lat = anchor_lat + y_m / EARTH_RADIUS_M
    lon = anchor_lon + x_m / (EARTH_RADIUS_M * math.cos(anchor_lat))
    lon = (lon + math.pi) % (2.0 * math.pi) - math.pi
    return GroundSite(latitude_rad=lat, longitude_rad=lon, kind=kind)


def hex_cell_offsets(layout: LayoutConfig) -> np.ndarray:
    """Local east/north offsets in meters of the hexagonal cell centers, row-major."""
    d = layout.cell_spacing_m
    offsets: list[tuple[float, float]] = []
    for row in range(layout.cell_rows):
        for col in range(layout.cell_columns):
            x = col * d + (d / 2.0 if row % 2 else 0.0)
            y = row * d * math.sqrt(3.0) / 2.0
            offsets.append((x, y))
    return np.array(offsets)


def hex_cell_sites(layout: LayoutConfig) -> list[GroundSite]:
    """Beam-cell centers on a hexagonal grid anchored at the first cell."""
    lat0 = math.radians(layout.anchor_lat_deg)
    lon0 = math.radians(layout.anchor_lon_deg)
    return [
        _local_to_site(x, y, lat0, lon0, SiteKind.BEAM_CELL) for x, y in hex_cell_offsets(layout)
    ]


def scatter_cluster_sites(
    layout: LayoutConfig, rng: np.random.Generator, max_attempts: int = 1000
) -> list[GroundSite]:
    """
    Terrestrial cluster centers drawn uniformly within cluster_spread_m of the cell
    centers, cluster_count / cell_count per cell, at least cluster_separation_m apart.
    """
    offsets = hex_cell_offsets(layout)
    cells = offsets.shape[0]
    base, extra = divmod(layout.cluster_count, cells)
    placed: list[np.ndarray] = []

    for cell in range(cells):
        for _ in range(base + (1 if cell < extra else 0)):
            for _attempt in range(max_attempts):
                radius = layout.cluster_spread_m * math.sqrt(rng.random())
                angle = 2.0 * math.pi * rng.random()
                point = offsets[cell] + radius * np.array([math.cos(angle), math.sin(angle)])
                if all(np.hypot(*(point - p)) >= layout.cluster_separation_m for p in placed):
                    placed.append(point)
                    break
            else:
                raise ScenarioError(
                    f"could not place cluster {len(placed)} with "
                    f"{layout.cluster_separation_m:.0f} m separation"
                )

    logger.debug("Placed %d clusters around %d cells", len(placed), cells)
    lat0 = math.radians(layout.anchor_lat_deg)
    lon0 = math.radians(layout.anchor_lon_deg)
    return [
        _local_to_site(float(p[0]), float(p[1]), lat0, lon0, SiteKind.CLUSTER_CENTER)
        for p in placed
    ]


def serving_candidates(
    snapshot: ConstellationSnapshot,
    limit: int,
    previous: np.ndarray | None = None,
) -> np.ndarray:
    """
    Candidate mask (S, C): the `limit` highest-elevation visible satellites of each
    cell (all visible when limit is 0), plus the previous server while still visible.
    """
    visibility = snapshot.visibility
    if limit <= 0:
        mask = visibility.copy()
    else:
        masked = np.where(visibility, snapshot.elevation, -np.inf)
        # stable sort on negated elevation keeps the lowest id first among equals
        order = np.argsort(-masked, axis=0, kind="stable")[:limit]
        mask = np.zeros_like(visibility)
        np.put_along_axis(mask, order, True, axis=0)
        mask &= visibility

    if previous is not None:
        cells = np.flatnonzero(previous >= 0)
        sats = previous[cells]
        keep = visibility[sats, cells]
        mask[sats[keep], cells[keep]] = True

    return mask
