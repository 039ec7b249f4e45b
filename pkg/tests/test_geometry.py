"""Tests for orbit propagation, site layout, visibility and off-axis angles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from leobeam.core.config import EARTH_RADIUS_M
from leobeam.core.errors import GeometryDomainError, ScenarioError
from leobeam.core.models import GroundSite, OrbitShell, SiteKind
from leobeam.core.scenario import LayoutConfig, ShellConfig
from leobeam.physics.geometry import (
    build_snapshot,
    hex_cell_offsets,
    hex_cell_sites,
    off_axis_angle_rx,
    off_axis_angle_tx,
    orbital_period,
    propagate,
    remaining_visibility,
    scatter_cluster_sites,
    serving_candidates,
)


def _single_satellite(inclination_rad: float = 0.0) -> OrbitShell:
    return OrbitShell(plane_count=1, sats_per_plane=1, altitude_m=550_000.0, inclination_rad=inclination_rad)


def test_propagate_phase_zero():
    """A phase-0 satellite starts on the equatorial crossing point."""
    position = propagate(_single_satellite(math.radians(53.0)), 0.0)

    assert position.shape == (1, 3)
    assert position[0] == pytest.approx([EARTH_RADIUS_M + 550_000.0, 0.0, 0.0], abs=1e-6)


def test_propagate_is_periodic():
    """Positions repeat after one orbital period in the inertial frame."""
    shell = ShellConfig(plane_count=3, sats_per_plane=4).to_orbit_shell()
    start = propagate(shell, 0.0)
    later = propagate(shell, orbital_period(shell))

    assert np.max(np.abs(start - later)) < 1e-2


def test_propagate_reference_shell_radius():
    """Every satellite of the 30x40 shell sits at R_e + 550 km."""
    shell = ShellConfig().to_orbit_shell()
    positions = propagate(shell, 0.0)

    assert positions.shape == (1200, 3)
    assert np.linalg.norm(positions, axis=1) == pytest.approx(np.full(1200, 6_928_137.0), rel=1e-12)


def test_propagate_rejects_negative_time():
    """Time runs forward from the scenario epoch."""
    with pytest.raises(ValueError):
        propagate(_single_satellite(), -1.0)


def test_propagate_subset_matches_full():
    """Selecting satellite ids returns the same rows as the full shell."""
    shell = ShellConfig(plane_count=4, sats_per_plane=5).to_orbit_shell()
    full = propagate(shell, 123.0)
    subset = propagate(shell, 123.0, [3, 17])

    assert subset == pytest.approx(full[[3, 17]])


def test_off_axis_angles():
    """Law-of-cosines angles on degenerate, equilateral and right triangles."""
    assert off_axis_angle_tx(600e3, 600e3, 0.0) == pytest.approx(0.0)
    assert off_axis_angle_tx(1000e3, 1000e3, 1000e3) == pytest.approx(math.pi / 3)
    assert off_axis_angle_tx(600e3, 800e3, 1000e3) == pytest.approx(math.pi / 2)

    assert off_axis_angle_rx(700e3, 700e3, 0.0) == pytest.approx(0.0)
    assert off_axis_angle_rx(550e3, 550e3, 550e3) == pytest.approx(math.pi / 3)
    assert off_axis_angle_rx(600e3, 800e3, 1000e3) == pytest.approx(math.pi / 2)


def test_off_axis_angle_symmetric_in_adjacent_sides():
    """Swapping the two adjacent sides does not change the angle."""
    assert off_axis_angle_tx(600e3, 750e3, 400e3) == pytest.approx(off_axis_angle_tx(750e3, 600e3, 400e3))


def test_off_axis_angle_rejects_non_triangle():
    """Sides that cannot close a triangle raise a domain error."""
    with pytest.raises(GeometryDomainError):
        off_axis_angle_tx(1.0, 1.0, 3.0)
    with pytest.raises(GeometryDomainError):
        off_axis_angle_rx(0.0, 1.0, 1.0)


def test_snapshot_zenith_and_horizon():
    """A satellite overhead is visible; one on the horizon is not."""
    shell = _single_satellite()
    horizon_angle = math.acos(EARTH_RADIUS_M / (EARTH_RADIUS_M + 550_000.0))
    cells = [
        GroundSite(0.0, 0.0),
        GroundSite(0.0, horizon_angle),
    ]
    snapshot = build_snapshot(shell, cells, [], 1, 0.2, math.radians(35.0))

    assert snapshot.time_s == 0.0
    assert snapshot.elevation[0, 0] == pytest.approx(math.pi / 2)
    assert snapshot.elevation[0, 1] == pytest.approx(0.0, abs=1e-6)
    assert snapshot.visibility[0].tolist() == [True, False]
    assert snapshot.cell_distances[0, 0] == pytest.approx(550_000.0)
    assert snapshot.cluster_count == 0


def test_snapshot_time_follows_epoch():
    """Epoch f starts (f - 1) epoch durations after the scenario epoch."""
    shell = _single_satellite()
    snapshot = build_snapshot(shell, [GroundSite(0.0, 0.0)], [], 6, 0.2, 0.0)

    assert snapshot.epoch == 6
    assert snapshot.time_s == pytest.approx(1.0)

    with pytest.raises(ValueError):
        build_snapshot(shell, [GroundSite(0.0, 0.0)], [], 0, 0.2, 0.0)


def test_snapshot_is_pure_and_read_only():
    """Two builds agree exactly and the arrays cannot be written."""
    shell = ShellConfig().to_orbit_shell()
    cells = hex_cell_sites(LayoutConfig())
    first = build_snapshot(shell, cells, [], 3, 0.2, math.radians(35.0))
    second = build_snapshot(shell, cells, [], 3, 0.2, math.radians(35.0))

    assert np.array_equal(first.sat_positions, second.sat_positions)
    assert np.array_equal(first.visibility, second.visibility)
    assert np.array_equal(first.visibility, first.elevation >= math.radians(35.0))
    with pytest.raises(ValueError):
        first.visibility[0, 0] = True


def test_reference_scenario_cells_see_several_satellites():
    """At a 10 degree mask every reference cell sees at least two satellites."""
    shell = ShellConfig().to_orbit_shell()
    cells = hex_cell_sites(LayoutConfig())
    snapshot = build_snapshot(shell, cells, [], 1, 0.2, math.radians(10.0))

    assert snapshot.cell_count == 20
    assert snapshot.visibility.sum(axis=0).min() >= 2
    visible = snapshot.visibility
    assert np.all(snapshot.cell_distances[visible] >= 550_000.0 - 1e-6)


def test_hex_layout_spacing():
    """Neighbors on a row and across rows are one spacing apart."""
    layout = LayoutConfig(cell_rows=2, cell_columns=3, cell_spacing_m=34_600.0)
    offsets = hex_cell_offsets(layout)

    assert offsets.shape == (6, 2)
    assert np.hypot(*(offsets[1] - offsets[0])) == pytest.approx(34_600.0)
    assert np.hypot(*(offsets[3] - offsets[0])) == pytest.approx(34_600.0)

    sites = hex_cell_sites(layout)
    assert sites[0].latitude_rad == pytest.approx(math.radians(20.0))
    assert sites[0].longitude_rad == pytest.approx(math.radians(30.0))
    assert all(site.kind is SiteKind.BEAM_CELL for site in sites)


def test_cluster_scatter_is_seeded_and_separated():
    """Clusters are reproducible from the seed and respect the minimum separation."""
    layout = LayoutConfig(cell_rows=2, cell_columns=2, cluster_count=10)
    first = scatter_cluster_sites(layout, np.random.default_rng(7))
    second = scatter_cluster_sites(layout, np.random.default_rng(7))

    assert first == second
    assert len(first) == 10
    assert all(site.kind is SiteKind.CLUSTER_CENTER for site in first)

    impossible = LayoutConfig(
        cell_rows=1, cell_columns=1, cluster_count=50, cluster_spread_m=1_000.0, cluster_separation_m=5_000.0
    )
    with pytest.raises(ScenarioError):
        scatter_cluster_sites(impossible, np.random.default_rng(0), max_attempts=20)


def test_serving_candidates_keep_previous_server():
    """Candidates are the best-elevation satellites plus the still-visible previous server."""
    shell = ShellConfig().to_orbit_shell()
    cells = hex_cell_sites(LayoutConfig(cell_rows=1, cell_columns=2))
    snapshot = build_snapshot(shell, cells, [], 1, 0.2, math.radians(10.0))

    top = serving_candidates(snapshot, 1)
    assert top.sum(axis=0).tolist() == [1, 1]
    assert int(np.argmax(top[:, 0])) == int(np.argmax(np.where(snapshot.visibility[:, 0], snapshot.elevation[:, 0], -np.inf)))

    low = snapshot.visible_satellites(0)[-1]
    previous = np.array([low, -1])
    mask = serving_candidates(snapshot, 1, previous)
    assert mask[low, 0]

    everything = serving_candidates(snapshot, 0)
    assert np.array_equal(everything, snapshot.visibility)


def test_remaining_visibility_horizon():
    """A satellite that stays overhead reports the full horizon."""
    # geostationary-like altitude and zero inclination keep the satellite near the cell
    shell = OrbitShell(plane_count=1, sats_per_plane=1, altitude_m=35_786_000.0, inclination_rad=0.0)
    remaining = remaining_visibility(shell, [GroundSite(0.0, 0.0)], [0], 0.0, math.radians(10.0), 10.0, 60.0)

    assert remaining.shape == (1, 1)
    assert remaining[0, 0] == pytest.approx(60.0)

    low = _single_satellite()
    far = remaining_visibility(low, [GroundSite(0.0, math.pi / 2)], [0], 0.0, math.radians(10.0), 10.0, 60.0)
    assert far[0, 0] == pytest.approx(0.0)
