"""Tests for gain patterns, channel gains, capacities, interference and conflict pairs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from leobeam.core.config import EARTH_RADIUS_M, SPEED_OF_LIGHT
from leobeam.core.models import ConflictPair, ConstellationSnapshot, GroundSite
from leobeam.core.scenario import RadioConfig
from leobeam.core.utils import db_to_linear
from leobeam.physics.geometry import elevation_angles, pairwise_distances, site_positions
from leobeam.physics.linkbudget import (
    ParabolicGainPattern,
    TabulatedGainPattern,
    capacity_ceiling_bps,
    channel_gain,
    conflict_pairs,
    dynamic_conflict_threshold,
    interbeam_interference,
    link_powers,
    noise_power,
    slot_capacity_bits,
    snr_db,
    terrestrial_contributions,
    terrestrial_interference,
    tx_power_for_target_snr,
)

ALTITUDE = 550_000.0


def _satellite_over(lat_deg: float, lon_deg: float) -> np.ndarray:
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    radius = EARTH_RADIUS_M + ALTITUDE
    return radius * np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])


def _snapshot(
    satellites: list[np.ndarray], cells: list[GroundSite], clusters: list[GroundSite] | None = None
) -> ConstellationSnapshot:
    """Snapshot with visibility down to the horizon."""
    sats = np.array(satellites)
    cell_pos = site_positions(cells)
    cluster_pos = site_positions(clusters or [])
    elevation = elevation_angles(sats, cell_pos)
    return ConstellationSnapshot(
        epoch=1,
        time_s=0.0,
        min_elevation_rad=0.0,
        sat_positions=sats,
        cell_positions=cell_pos,
        cluster_positions=cluster_pos,
        cell_distances=pairwise_distances(sats, cell_pos),
        cluster_distances=pairwise_distances(sats, cluster_pos),
        elevation=elevation,
        visibility=elevation >= 0.0,
    )


def _site(lat_deg: float, lon_deg: float) -> GroundSite:
    return GroundSite(math.radians(lat_deg), math.radians(lon_deg))


def test_parabolic_pattern():
    """Zero attenuation on boresight, 12 dB at the beamwidth, capped at the floor."""
    pattern = ParabolicGainPattern(38.5, math.radians(2.0), 30.0)

    assert float(pattern.attenuation_db(0.0)) == 0.0
    assert float(pattern.attenuation_db(math.radians(2.0))) == pytest.approx(12.0)
    assert float(pattern.attenuation_db(math.radians(45.0))) == 30.0
    assert float(pattern.gain_db(0.0)) == 38.5

    angles = np.linspace(0.0, math.radians(20.0), 50)
    assert np.all(np.diff(pattern.attenuation_db(angles)) >= 0)


def test_tabulated_pattern():
    """Tables interpolate, stay non-decreasing and fall to the floor past the last angle."""
    pattern = TabulatedGainPattern(30.0, 0.1, 25.0, [0.0, 0.1, 0.2], [0.0, 3.0, 2.0])

    assert float(pattern.attenuation_db(0.05)) == pytest.approx(1.5)
    assert float(pattern.attenuation_db(0.2)) == pytest.approx(3.0)
    assert float(pattern.attenuation_db(1.0)) == 25.0

    with pytest.raises(ValueError):
        TabulatedGainPattern(30.0, 0.1, 25.0, [0.1, 0.2], [0.0, 3.0])
    with pytest.raises(ValueError):
        TabulatedGainPattern(30.0, 0.1, 25.0, [0.0, 0.0], [0.0, 3.0])


def test_channel_gain():
    """Free-space gain: inverse square, 173.28 dB loss at 550 km and 20 GHz."""
    gain = float(channel_gain(550e3, 20e9))

    assert float(channel_gain(1100e3, 20e9)) == pytest.approx(gain / 4)
    assert -10 * math.log10(gain) == pytest.approx(173.28, abs=0.01)

    wavelength = SPEED_OF_LIGHT / 20e9
    assert float(channel_gain(1.0, 20e9)) == pytest.approx((wavelength / (4 * math.pi)) ** 2)

    with pytest.raises(ValueError):
        channel_gain(0.0, 20e9)


def test_tx_power_reproduces_target_snr():
    """Inverting the SNR formula and substituting back returns the target."""
    radio = RadioConfig()
    gain = float(channel_gain(600e3, radio.carrier_hz))
    noise = noise_power(radio, radio.sat_bandwidth_hz)
    peak = float(db_to_linear(radio.tx_peak_gain_db + radio.rx_peak_gain_db))

    unit = float(tx_power_for_target_snr(0.0, gain, radio.sat_bandwidth_hz, radio))
    assert unit * peak * gain == pytest.approx(noise)

    power = float(tx_power_for_target_snr(12.0, gain, radio.sat_bandwidth_hz, radio))
    assert power * peak * gain / noise == pytest.approx(15.8489, rel=1e-5)
    assert float(snr_db(power, gain, radio.sat_bandwidth_hz, radio)) == pytest.approx(12.0, abs=1e-9)

    assert float(tx_power_for_target_snr(-math.inf, gain, radio.sat_bandwidth_hz, radio)) == 0.0


def test_slot_capacity_bits():
    """W T log2(1 + SNR) per slot."""
    snr = 10**1.2

    assert float(slot_capacity_bits(200e6, 1e-3, 0.0)) == 0.0
    assert float(slot_capacity_bits(200e6, 1e-3, snr)) == pytest.approx(2e5 * math.log2(1 + snr))
    assert float(slot_capacity_bits(200e6, 1e-3, snr)) == pytest.approx(814_926, rel=1e-4)
    assert float(slot_capacity_bits(80e6, 1e-3, snr)) == pytest.approx(325_970, rel=1e-4)
    assert float(slot_capacity_bits(80e6, 1e-3, snr)) < float(slot_capacity_bits(200e6, 1e-3, snr))

    with pytest.raises(ValueError):
        slot_capacity_bits(200e6, 1e-3, -1.0)


def test_capacity_ceiling():
    """Eight beams at 12 dB carry 6.52 Gbps, 8.08 Gbps with 60% terrestrial sharing."""
    radio = RadioConfig()

    assert capacity_ceiling_bps(8, radio) == pytest.approx(6.52e9, rel=0.005)
    assert capacity_ceiling_bps(8, radio, sharing_fraction=0.6) == pytest.approx(8.08e9, rel=0.01)


def test_interbeam_interference():
    """Co-located interferers deliver the victim's carrier power, attenuated by isolation."""
    cells = [_site(0.0, 0.0)]
    snapshot = _snapshot([_satellite_over(0.0, 0.0)], cells)
    radio = RadioConfig(cross_pol_isolation_db=30.0)
    target = np.array([12.0])
    powers = link_powers(snapshot, target, radio.sat_bandwidth_hz, radio)
    carrier = float(db_to_linear(12.0)) * noise_power(radio, radio.sat_bandwidth_hz)

    assert interbeam_interference((0, 0, 0), [], snapshot, powers, radio) == 0.0
    # same satellite, same cell, same polarization: no attenuation at all
    assert interbeam_interference((0, 0, 0), [(0, 0, 2)], snapshot, powers, radio) == pytest.approx(carrier)
    # other polarization through 30 dB of isolation
    assert interbeam_interference((0, 0, 0), [(0, 0, 1)], snapshot, powers, radio) == pytest.approx(
        carrier * 1e-3
    )
    both = interbeam_interference((0, 0, 0), [(0, 0, 1), (0, 0, 2)], snapshot, powers, radio)
    assert both == pytest.approx(carrier * 1.001)

    isolated = RadioConfig()
    assert interbeam_interference((0, 0, 0), [(0, 0, 1)], snapshot, powers, isolated) == 0.0


def test_dynamic_conflict_threshold():
    """Equal SNRs and gains leave I_th - 10 log10(S B) - SNR."""
    cells = [_site(0.0, 0.0), _site(0.0, 0.3)]
    snapshot = _snapshot([_satellite_over(0.0, 0.1), _satellite_over(0.0, 0.2)], cells)
    radio = RadioConfig(inr_beam_db=-5.0)
    serving = np.array([0, 0])
    target = np.array([12.0, 12.0])

    assert snapshot.visibility[:, 0].sum() == 2
    threshold = dynamic_conflict_threshold(0, 1, serving, snapshot, target, radio, beams=4)
    assert threshold == pytest.approx(-5.0 - 10 * math.log10(8) - 12.0)
    assert threshold == pytest.approx(-26.031, abs=1e-3)


def test_conflict_pairs():
    """Neighboring cells on one satellite conflict; distant ones are deeply attenuated."""
    radio = RadioConfig()
    target = np.array([12.0, 12.0])

    near = _snapshot([_satellite_over(0.0, 0.0)], [_site(0.0, 0.0), _site(0.0, 0.01)])
    pairs = conflict_pairs(near, np.array([0, 0]), target, radio, beams=4)
    assert pairs == frozenset({ConflictPair(0, 0, 0, 1)})

    far = _snapshot([_satellite_over(0.0, 0.0)], [_site(0.0, 0.0), _site(0.0, 2.0)])
    assert conflict_pairs(far, np.array([0, 0]), target, radio, beams=4) == frozenset()


def test_terrestrial_interference():
    """A beam aimed at the cluster center delivers its full power into the terrestrial band."""
    radio = RadioConfig()
    cells = [_site(0.0, 0.0), _site(0.0, 0.3)]
    clusters = [_site(0.0, 0.0)]
    snapshot = _snapshot([_satellite_over(0.0, 0.0)], cells, clusters)
    target = np.array([12.0, 12.0])

    assert terrestrial_interference(0, [], snapshot, target, radio) == 0.0

    expected = (
        float(db_to_linear(12.0))
        * noise_power(radio, radio.terr_bandwidth_hz)
        * float(db_to_linear(radio.terr_peak_gain_db - radio.rx_peak_gain_db))
    )
    aimed = terrestrial_interference(0, [(0, 0)], snapshot, target, radio)
    assert aimed == pytest.approx(expected)

    other = terrestrial_interference(0, [(0, 1)], snapshot, target, radio)
    assert 0 < other < aimed
    assert terrestrial_interference(0, [(0, 0), (0, 1)], snapshot, target, radio) == pytest.approx(aimed + other)

    contributions = terrestrial_contributions(snapshot, [(0, 0), (0, 1)], target, radio)
    assert contributions.shape == (2, 1)
