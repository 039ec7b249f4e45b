"""
Link budget: antenna gain patterns, free-space channel gains, target-SNR transmit
powers, slot capacities, inter-beam and satellite-to-terrestrial interference, and
the dynamic inter-beam conflict threshold.

Gains and powers are linear unless the name ends in _db.
"""

from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from typing_extensions import override

from leobeam.core.config import SPEED_OF_LIGHT
from leobeam.core.models import ConflictPair, ConstellationSnapshot
from leobeam.core.scenario import RadioConfig
from leobeam.core.utils import db_to_linear
from leobeam.physics.geometry import off_axis_angle_rx, off_axis_angle_tx, off_axis_angles

logger = logging.getLogger(__name__)


class GainPattern(ABC):
    """Antenna gain as a function of off-axis angle."""

    def __init__(self, peak_gain_db: float, half_power_beamwidth_rad: float, floor_attenuation_db: float):
        self.peak_gain_db: float = peak_gain_db
        self.half_power_beamwidth_rad: float = half_power_beamwidth_rad
        self.floor_attenuation_db: float = floor_attenuation_db

    @abstractmethod
    def attenuation_db(self, theta: ArrayLike) -> np.ndarray:
        """Non-negative attenuation relative to peak, capped at the floor."""

    def gain_db(self, theta: ArrayLike) -> np.ndarray:
        return self.peak_gain_db - self.attenuation_db(theta)

    def attenuation_linear(self, theta: ArrayLike) -> np.ndarray:
        return db_to_linear(-self.attenuation_db(theta))

    @property
    def peak_gain(self) -> float:
        return float(db_to_linear(self.peak_gain_db))


class ParabolicGainPattern(GainPattern):
    """attenuation(θ) = min(12 (θ / θ3dB)², floor)."""

    @override
    def attenuation_db(self, theta: ArrayLike) -> np.ndarray:
        ratio = np.abs(np.asarray(theta, dtype=float)) / self.half_power_beamwidth_rad
        return np.minimum(12.0 * ratio**2, self.floor_attenuation_db)


class TabulatedGainPattern(GainPattern):
    """Attenuation interpolated from a measured or standardized table."""

    def __init__(
        self,
        peak_gain_db: float,
        half_power_beamwidth_rad: float,
        floor_attenuation_db: float,
        angles_rad: Sequence[float],
        attenuations_db: Sequence[float],
    ):
        super().__init__(peak_gain_db, half_power_beamwidth_rad, floor_attenuation_db)
        angles = np.asarray(angles_rad, dtype=float)
        values = np.asarray(attenuations_db, dtype=float)
        if angles.ndim != 1 or angles.shape != values.shape or angles.size < 2:
            raise ValueError("pattern table needs matching 1-D angle and attenuation arrays")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("pattern table angles must be strictly increasing")
        if angles[0] != 0.0 or values[0] != 0.0:
            raise ValueError("pattern table must start at 0 rad with 0 dB attenuation")
        # keep the profile non-decreasing up to the floor
        self.angles_rad: np.ndarray = angles
        self.attenuations_db: np.ndarray = np.minimum(
            np.maximum.accumulate(values), floor_attenuation_db
        )

    @override
    def attenuation_db(self, theta: ArrayLike) -> np.ndarray:
        theta = np.abs(np.asarray(theta, dtype=float))
        return np.interp(
            theta, self.angles_rad, self.attenuations_db, right=self.floor_attenuation_db
        )


def tx_pattern(radio: RadioConfig) -> GainPattern:
    return ParabolicGainPattern(
        radio.tx_peak_gain_db, math.radians(radio.tx_beamwidth_deg), radio.pattern_floor_db
    )


def rx_pattern(radio: RadioConfig) -> GainPattern:
    return ParabolicGainPattern(
        radio.rx_peak_gain_db, math.radians(radio.rx_beamwidth_deg), radio.pattern_floor_db
    )


def channel_gain(distance_m: ArrayLike, carrier_hz: float) -> np.ndarray:
    """Free-space gain (c / (4π d f))²."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * d * carrier_hz)) ** 2


def link_peak_gain(radio: RadioConfig) -> float:
    """Product of the satellite transmit and cell receive peak gains."""
    return float(db_to_linear(radio.tx_peak_gain_db + radio.rx_peak_gain_db))


def noise_power(radio: RadioConfig, bandwidth_hz: float, temperature_k: float | None = None) -> float:
    temperature = radio.rx_temperature_k if temperature_k is None else temperature_k
    return radio.boltzmann * temperature * bandwidth_hz


def tx_power_for_target_snr(
    target_snr_db: ArrayLike, gain: ArrayLike, bandwidth_hz: float, radio: RadioConfig
) -> np.ndarray:
    """Transmit power that makes P·G·h / (k·T·W) equal the target SNR."""
    snr = db_to_linear(target_snr_db)
    return snr * noise_power(radio, bandwidth_hz) / (link_peak_gain(radio) * np.asarray(gain, dtype=float))


def snr_db(power_w: ArrayLike, gain: ArrayLike, bandwidth_hz: float, radio: RadioConfig) -> np.ndarray:
    """Noise-limited SNR in dB of a link at peak gains."""
    received = np.asarray(power_w, dtype=float) * link_peak_gain(radio) * np.asarray(gain, dtype=float)
    return 10.0 * np.log10(received / noise_power(radio, bandwidth_hz))


def slot_capacity_bits(bandwidth_hz: float, slot_s: float, snr_linear: ArrayLike) -> np.ndarray:
    """Bits carried in one slot: W · T · log2(1 + SNR)."""
    snr = np.asarray(snr_linear, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    return bandwidth_hz * slot_s * np.log2(1.0 + snr)


def capacity_ceiling_bps(
    beams: int, radio: RadioConfig, snr_db_value: float | None = None, sharing_fraction: float = 0.0
) -> float:
    """
    Interference-free aggregate rate with every beam busy in every slot, plus the
    terrestrial band on every beam for `sharing_fraction` of the slots.
    """
    snr = float(db_to_linear(radio.target_snr_db if snr_db_value is None else snr_db_value))
    spectral = math.log2(1.0 + snr)
    return beams * spectral * (radio.sat_bandwidth_hz + radio.terr_bandwidth_hz * sharing_fraction)


def link_powers(
    snapshot: ConstellationSnapshot,
    target_snr_db: ArrayLike,
    bandwidth_hz: float,
    radio: RadioConfig,
) -> np.ndarray:
    """Target-SNR transmit power for every (satellite, cell) pair, (S, C)."""
    gains = channel_gain(snapshot.cell_distances, radio.carrier_hz)
    return tx_power_for_target_snr(np.asarray(target_snr_db)[None, :], gains, bandwidth_hz, radio)


def _polarization_factor(beam_a: int, beam_b: int, radio: RadioConfig) -> float:
    if beam_a % radio.polarization_count == beam_b % radio.polarization_count:
        return 1.0
    if radio.cross_pol_isolated:
        return 0.0
    return float(db_to_linear(-radio.cross_pol_isolation_db))


def interbeam_interference(
    victim: tuple[int, int, int],
    active: Iterable[tuple[int, int, int]],
    snapshot: ConstellationSnapshot,
    powers: np.ndarray,
    radio: RadioConfig,
    tx: GainPattern | None = None,
    rx: GainPattern | None = None,
) -> float:
    """
    Interference in watts received by the victim link (satellite, cell, beam) from
    co-channel active links. Different polarizations contribute only through a finite
    cross-polarization isolation.
    """
    tx = tx or tx_pattern(radio)
    rx = rx or rx_pattern(radio)
    s, c, b = victim
    d = snapshot.cell_distances
    peak = link_peak_gain(radio)
    total = 0.0

    for s2, c2, b2 in active:
        if (s2, c2, b2) == victim:
            continue
        factor = _polarization_factor(b, b2, radio)
        if factor == 0.0:
            continue
        d_cc2 = float(np.linalg.norm(snapshot.cell_positions[c] - snapshot.cell_positions[c2]))
        d_ss2 = float(np.linalg.norm(snapshot.sat_positions[s] - snapshot.sat_positions[s2]))
        theta_tx = off_axis_angle_tx(d[s2, c2], d[s2, c], d_cc2)
        theta_rx = off_axis_angle_rx(d[s, c], d[s2, c], d_ss2)
        h = float(channel_gain(d[s2, c], radio.carrier_hz))
        total += (
            factor
            * powers[s2, c2]
            * peak
            * float(tx.attenuation_linear(theta_tx))
            * float(rx.attenuation_linear(theta_rx))
            * h
        )
    return total


def dynamic_conflict_threshold(
    cell: int,
    other: int,
    serving: np.ndarray,
    snapshot: ConstellationSnapshot,
    target_snr_db: np.ndarray,
    radio: RadioConfig,
    beams: int,
) -> float:
    """Gain threshold in dB above which `other`'s beam interferes too strongly with `cell`."""
    visible = int(snapshot.visibility[:, cell].sum())
    delta = 10.0 ** ((target_snr_db[cell] - target_snr_db[other]) / 10.0)
    h_own = float(channel_gain(snapshot.cell_distances[serving[cell], cell], radio.carrier_hz))
    h_other = float(channel_gain(snapshot.cell_distances[serving[other], cell], radio.carrier_hz))
    return (
        radio.inr_beam_db
        - 10.0 * math.log10(max(visible, 1) * beams)
        - float(target_snr_db[other])
        - 10.0 * math.log10(h_own / (delta * h_other))
    )


def coupling_gain_db(
    victim_cell: int,
    interferer_cell: int,
    serving: np.ndarray,
    snapshot: ConstellationSnapshot,
    tx: GainPattern,
    rx: GainPattern,
) -> float:
    """Relative gain (≤ 0 dB) of the interferer's beam toward the victim cell."""
    s, s2 = int(serving[victim_cell]), int(serving[interferer_cell])
    c, c2 = victim_cell, interferer_cell
    d = snapshot.cell_distances
    d_cc2 = float(np.linalg.norm(snapshot.cell_positions[c] - snapshot.cell_positions[c2]))
    d_ss2 = float(np.linalg.norm(snapshot.sat_positions[s] - snapshot.sat_positions[s2]))
    theta_tx = off_axis_angle_tx(d[s2, c2], d[s2, c], d_cc2)
    theta_rx = off_axis_angle_rx(d[s, c], d[s2, c], d_ss2)
    return -float(tx.attenuation_db(theta_tx) + rx.attenuation_db(theta_rx))


def conflict_pairs(
    snapshot: ConstellationSnapshot,
    serving: np.ndarray,
    target_snr_db: np.ndarray,
    radio: RadioConfig,
    beams: int,
    tx: GainPattern | None = None,
    rx: GainPattern | None = None,
) -> frozenset[ConflictPair]:
    """
    Pairs of served cells whose co-polarized beams would break the inter-beam INR
    threshold in either direction. Each pair is stored once with cell_a < cell_b.
    """
    tx = tx or tx_pattern(radio)
    rx = rx or rx_pattern(radio)
    pairs: set[ConflictPair] = set()
    for c, c2 in itertools.combinations(range(len(serving)), 2):
        conflict = False
        for victim, interferer in ((c, c2), (c2, c)):
            gain = coupling_gain_db(victim, interferer, serving, snapshot, tx, rx)
            threshold = dynamic_conflict_threshold(
                victim, interferer, serving, snapshot, target_snr_db, radio, beams
            )
            if gain >= threshold:
                conflict = True
                break
        if conflict:
            pairs.add(ConflictPair(int(serving[c]), c, int(serving[c2]), c2))
    logger.debug("Epoch %d: %d conflict pairs", snapshot.epoch, len(pairs))
    return frozenset(pairs)


def terrestrial_noise(radio: RadioConfig) -> float:
    return noise_power(radio, radio.terr_bandwidth_hz, radio.terr_temperature_k)


def terrestrial_contributions(
    snapshot: ConstellationSnapshot,
    links: Sequence[tuple[int, int]],
    target_snr_db: np.ndarray,
    radio: RadioConfig,
    tx: GainPattern | None = None,
) -> np.ndarray:
    """
    Interference in watts each (satellite, cell) link radiates in the terrestrial band
    onto each cluster center, (len(links), J). The terrestrial receive gain is pinned
    at its peak.
    """
    tx = tx or tx_pattern(radio)
    J = snapshot.cluster_count
    if not links or J == 0:
        return np.zeros((len(links), J))

    sats = np.array([s for s, _ in links])
    cells = np.array([c for _, c in links])
    d_sc = snapshot.cell_distances[sats, cells]
    d_sg = snapshot.cluster_distances[sats]
    d_cg = np.linalg.norm(
        snapshot.cell_positions[cells][:, None, :] - snapshot.cluster_positions[None, :, :], axis=-1
    )
    theta = off_axis_angles(d_sc[:, None], d_sg, d_cg)

    h_sc = channel_gain(d_sc, radio.carrier_hz)
    power = tx_power_for_target_snr(target_snr_db[cells], h_sc, radio.terr_bandwidth_hz, radio)
    h_sg = channel_gain(d_sg, radio.carrier_hz)
    g_tx = db_to_linear(radio.tx_peak_gain_db)
    g_terr = db_to_linear(radio.terr_peak_gain_db)
    return power[:, None] * g_tx * tx.attenuation_linear(theta) * g_terr * h_sg


def terrestrial_interference(
    cluster: int,
    active: Iterable[tuple[int, int]],
    snapshot: ConstellationSnapshot,
    target_snr_db: np.ndarray,
    radio: RadioConfig,
    tx: GainPattern | None = None,
) -> float:
    """Aggregate interference in watts at one cluster center from active (satellite, cell) links."""
    links = list(active)
    if not links:
        return 0.0
    contributions = terrestrial_contributions(snapshot, links, target_snr_db, radio, tx)
    return float(contributions[:, cluster].sum())
