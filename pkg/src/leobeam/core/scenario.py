"""
Scenario configuration: frozen dataclasses, TOML loading and dotted overrides.

A scenario file holds one TOML table per sub-configuration plus top-level keys:

    epochs = 2000
    slots_per_epoch = 200

    [radio]
    target_snr_db = 12.0

    [policy]
    handover = "load_balance"

Unknown keys and wrong value types are rejected with a ScenarioError naming the key.
"""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from leobeam.core import config
from leobeam.core.errors import ScenarioError
from leobeam.core.models import OrbitShell


def _require(condition: bool, message: str):
    if not condition:
        raise ScenarioError(message)


@dataclass(frozen=True)
class ShellConfig:
    plane_count: int = config.DEFAULT_PLANE_COUNT
    sats_per_plane: int = config.DEFAULT_SATS_PER_PLANE
    altitude_m: float = config.DEFAULT_ALTITUDE_M
    inclination_deg: float = config.DEFAULT_INCLINATION_DEG
    phase_deg: float = 0.0
    walker_phasing: int = config.DEFAULT_WALKER_PHASING

    def __post_init__(self):
        # OrbitShell carries the invariants
        self.to_orbit_shell()

    def to_orbit_shell(self) -> OrbitShell:
        return OrbitShell(
            plane_count=self.plane_count,
            sats_per_plane=self.sats_per_plane,
            altitude_m=self.altitude_m,
            inclination_rad=math.radians(self.inclination_deg),
            epoch0_phase=math.radians(self.phase_deg),
            walker_phasing=self.walker_phasing,
        )


@dataclass(frozen=True)
class LayoutConfig:
    """Hexagonal beam-cell grid and terrestrial clusters scattered around it."""

    cell_rows: int = config.DEFAULT_CELL_ROWS
    cell_columns: int = config.DEFAULT_CELL_COLUMNS
    cell_spacing_m: float = config.DEFAULT_CELL_SPACING_M
    cell_radius_m: float = config.DEFAULT_CELL_RADIUS_M
    anchor_lat_deg: float = config.DEFAULT_ANCHOR_LAT_DEG
    anchor_lon_deg: float = config.DEFAULT_ANCHOR_LON_DEG
    cluster_count: int = config.DEFAULT_CLUSTER_COUNT
    cluster_spread_m: float = config.DEFAULT_CLUSTER_SPREAD_M
    cluster_separation_m: float = config.DEFAULT_CLUSTER_SEPARATION_M
    demand_weights: tuple[float, ...] = ()

    def __post_init__(self):
        _require(self.cell_rows >= 1 and self.cell_columns >= 1, "layout needs at least one cell")
        _require(self.cell_spacing_m > 0, "layout.cell_spacing_m must be positive")
        _require(self.cluster_count >= 0, "layout.cluster_count must be non-negative")
        _require(self.cluster_spread_m > 0, "layout.cluster_spread_m must be positive")
        _require(abs(self.anchor_lat_deg) < 90, "layout.anchor_lat_deg must be inside (-90, 90)")
        if self.demand_weights:
            _require(
                len(self.demand_weights) == self.cell_count,
                f"layout.demand_weights has {len(self.demand_weights)} entries "
                f"for {self.cell_count} cells",
            )
            _require(
                all(w >= 0 for w in self.demand_weights) and sum(self.demand_weights) > 0,
                "layout.demand_weights must be non-negative with a positive sum",
            )

    @property
    def cell_count(self) -> int:
        return self.cell_rows * self.cell_columns

    def normalized_weights(self) -> tuple[float, ...]:
        """Demand weights summing to one; the built-in table for the default grid, else uniform."""
        if self.demand_weights:
            raw = self.demand_weights
        elif self.cell_count == len(config.DEMAND_WEIGHTS):
            raw = config.DEMAND_WEIGHTS
        else:
            raw = (1.0,) * self.cell_count
        total = math.fsum(raw)
        return tuple(w / total for w in raw)


@dataclass(frozen=True)
class RadioConfig:
    carrier_hz: float = config.DEFAULT_CARRIER_HZ
    sat_bandwidth_hz: float = config.DEFAULT_SAT_BANDWIDTH_HZ
    terr_bandwidth_hz: float = config.DEFAULT_TERR_BANDWIDTH_HZ
    slot_duration_s: float = config.DEFAULT_SLOT_DURATION_S
    tx_peak_gain_db: float = config.DEFAULT_TX_PEAK_GAIN_DB
    rx_peak_gain_db: float = config.DEFAULT_RX_PEAK_GAIN_DB
    terr_peak_gain_db: float = config.DEFAULT_TERR_PEAK_GAIN_DB
    tx_beamwidth_deg: float = config.DEFAULT_TX_HALF_POWER_BEAMWIDTH_DEG
    rx_beamwidth_deg: float = config.DEFAULT_RX_HALF_POWER_BEAMWIDTH_DEG
    pattern_floor_db: float = config.DEFAULT_PATTERN_FLOOR_DB
    boltzmann: float = config.BOLTZMANN
    rx_temperature_k: float = config.DEFAULT_RX_TEMPERATURE_K
    terr_temperature_k: float = config.DEFAULT_TERR_TEMPERATURE_K
    inr_beam_db: float = config.DEFAULT_INR_BEAM_DB
    inr_terr_db: float = config.DEFAULT_INR_TERR_DB
    target_snr_db: float = config.DEFAULT_TARGET_SNR_DB
    polarization_count: int = config.DEFAULT_POLARIZATION_COUNT
    cross_pol_isolation_db: float = config.DEFAULT_CROSS_POL_ISOLATION_DB

    def __post_init__(self):
        _require(
            self.sat_bandwidth_hz > 0 and self.terr_bandwidth_hz > 0,
            "radio bandwidths must be positive",
        )
        _require(self.slot_duration_s > 0, "radio.slot_duration_s must be positive")
        _require(self.carrier_hz > 0, "radio.carrier_hz must be positive")
        _require(
            self.tx_beamwidth_deg > 0 and self.rx_beamwidth_deg > 0,
            "radio beamwidths must be positive",
        )
        _require(self.pattern_floor_db >= 0, "radio.pattern_floor_db must be non-negative")
        _require(self.polarization_count in (1, 2), "radio.polarization_count must be 1 or 2")
        _require(self.cross_pol_isolation_db >= 0, "radio.cross_pol_isolation_db must be >= 0")

    @property
    def cross_pol_isolated(self) -> bool:
        return math.isinf(self.cross_pol_isolation_db)


@dataclass(frozen=True)
class ArrivalConfig:
    mean_total_rate_bps: float = config.DEFAULT_ARRIVAL_RATE_BPS
    distribution: str = "poisson_batch"
    packet_bits: int = config.DEFAULT_PACKET_BITS
    trace_path: str = ""

    def __post_init__(self):
        _require(self.mean_total_rate_bps >= 0, "arrivals.mean_total_rate_bps must be >= 0")
        _require(
            self.distribution in ("poisson_batch", "deterministic"),
            f"arrivals.distribution must be poisson_batch or deterministic, got {self.distribution!r}",
        )
        _require(self.packet_bits > 0, "arrivals.packet_bits must be positive")


@dataclass(frozen=True)
class LyapunovConfig:
    V: float = config.DEFAULT_V
    h_bar: float = config.DEFAULT_H_BAR

    def __post_init__(self):
        _require(self.V >= 0, "lyapunov.V must be >= 0")
        _require(0 < self.h_bar < 1, "lyapunov.h_bar must lie in (0, 1)")


@dataclass(frozen=True)
class HandoverConfig:
    sigma0: float = config.DEFAULT_SIGMA0
    tau0: float = config.DEFAULT_TAU0
    swap_iterations: int = config.DEFAULT_SWAP_ITERATIONS
    perturb_fraction: float = config.DEFAULT_PERTURB_FRACTION
    attribute_weights: str = "entropy"
    visibility_step_s: float = config.DEFAULT_VISIBILITY_STEP_S
    visibility_horizon_s: float = config.DEFAULT_VISIBILITY_HORIZON_S

    def __post_init__(self):
        _require(0 <= self.sigma0 <= 1, "handover.sigma0 must lie in [0, 1]")
        _require(self.tau0 >= 1, "handover.tau0 must be >= 1")
        _require(self.swap_iterations >= 1, "handover.swap_iterations must be >= 1")
        _require(0 <= self.perturb_fraction <= 1, "handover.perturb_fraction must lie in [0, 1]")
        _require(
            self.attribute_weights in ("entropy", "fixed"),
            "handover.attribute_weights must be entropy or fixed",
        )
        _require(
            self.visibility_step_s > 0 and self.visibility_horizon_s >= self.visibility_step_s,
            "handover visibility step must be positive and not exceed the horizon",
        )


@dataclass(frozen=True)
class SparrowConfig:
    population: int = config.DEFAULT_POPULATION
    max_iterations: int = config.DEFAULT_MAX_ITERATIONS
    local_search_iterations: int = config.DEFAULT_LOCAL_SEARCH_ITERATIONS
    producers: int = config.DEFAULT_PRODUCERS
    spectators: int = config.DEFAULT_SPECTATORS
    mutation_bits: int = config.DEFAULT_MUTATION_BITS
    crossover_bits_max: int = config.DEFAULT_CROSSOVER_BITS_MAX

    def __post_init__(self):
        _require(self.population >= 2, "sparrow.population must be >= 2")
        _require(self.max_iterations >= 0, "sparrow.max_iterations must be >= 0")
        _require(self.producers >= 1, "sparrow.producers must be >= 1")
        _require(self.spectators >= 0, "sparrow.spectators must be >= 0")
        _require(
            self.producers + self.spectators <= self.population,
            "sparrow.producers + sparrow.spectators must not exceed sparrow.population",
        )
        _require(
            0 <= self.local_search_iterations < self.population,
            "sparrow.local_search_iterations must lie in [0, population)",
        )
        _require(self.mutation_bits >= 1, "sparrow.mutation_bits must be >= 1")
        _require(self.crossover_bits_max >= 1, "sparrow.crossover_bits_max must be >= 1")


@dataclass(frozen=True)
class ClusterLoadConfig:
    low: float = config.DEFAULT_CLUSTER_LOAD_RANGE[0]
    high: float = config.DEFAULT_CLUSTER_LOAD_RANGE[1]
    mode: str = "per_epoch"

    def __post_init__(self):
        _require(0 <= self.low <= self.high <= 1, "cluster_load range must satisfy 0 <= low <= high <= 1")
        _require(self.mode in ("static", "per_epoch"), "cluster_load.mode must be static or per_epoch")


@dataclass(frozen=True)
class PolicyConfig:
    handover: str = "proposed"
    beamhop: str = "proposed"
    spectrum: str = "proposed"

    def __post_init__(self):
        _require(
            self.handover in config.HANDOVER_POLICIES,
            f"policy.handover must be one of {', '.join(config.HANDOVER_POLICIES)}",
        )
        _require(
            self.beamhop in config.BEAMHOP_POLICIES,
            f"policy.beamhop must be one of {', '.join(config.BEAMHOP_POLICIES)}",
        )
        _require(
            self.spectrum in config.SPECTRUM_POLICIES,
            f"policy.spectrum must be one of {', '.join(config.SPECTRUM_POLICIES)}",
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one simulation run."""

    shell: ShellConfig = field(default_factory=ShellConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    arrivals: ArrivalConfig = field(default_factory=ArrivalConfig)
    lyapunov: LyapunovConfig = field(default_factory=LyapunovConfig)
    handover: HandoverConfig = field(default_factory=HandoverConfig)
    sparrow: SparrowConfig = field(default_factory=SparrowConfig)
    cluster_load: ClusterLoadConfig = field(default_factory=ClusterLoadConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    epochs: int = config.DEFAULT_EPOCHS
    slots_per_epoch: int = config.DEFAULT_SLOTS_PER_EPOCH
    beams_per_satellite: int = config.DEFAULT_BEAMS_PER_SATELLITE
    serving_candidates: int = config.DEFAULT_SERVING_CANDIDATES
    min_elevation_deg: float = config.DEFAULT_MIN_ELEVATION_DEG
    seed: int = 0

    def __post_init__(self):
        _require(self.epochs >= 1, "epochs must be >= 1")
        _require(self.slots_per_epoch >= 1, "slots_per_epoch must be >= 1")
        _require(self.beams_per_satellite >= 1, "beams_per_satellite must be >= 1")
        _require(self.serving_candidates >= 0, "serving_candidates must be >= 0")
        _require(0 <= self.min_elevation_deg < 90, "min_elevation_deg must lie in [0, 90)")
        _require(self.seed >= 0, "seed must be non-negative")

    @property
    def epoch_duration_s(self) -> float:
        return self.slots_per_epoch * self.radio.slot_duration_s

    @property
    def min_elevation_rad(self) -> float:
        return math.radians(self.min_elevation_deg)


def _type_hints(cls: type) -> dict[str, Any]:
    return typing.get_type_hints(cls)


def _coerce(value: Any, hint: Any, key: str) -> Any:
    """Check a raw TOML value against a dataclass field annotation."""
    if dataclasses.is_dataclass(hint) and isinstance(hint, type):
        if not isinstance(value, dict):
            raise ScenarioError(f"{key} must be a table")
        return _build(hint, value, key)  # pyright: ignore[reportUnknownArgumentType]

    origin = typing.get_origin(hint)
    if origin in (Union, types.UnionType):
        errors: list[str] = []
        for option in typing.get_args(hint):
            try:
                return _coerce(value, option, key)
            except ScenarioError as e:
                errors.append(str(e))
        raise ScenarioError("; ".join(errors))
    if origin is tuple:
        if not isinstance(value, list | tuple):
            raise ScenarioError(f"{key} must be an array")
        (item_hint, _ellipsis) = typing.get_args(hint)
        return tuple(
            _coerce(item, item_hint, f"{key}[{i}]")
            for i, item in enumerate(value)  # pyright: ignore[reportUnknownArgumentType, reportUnknownVariableType]
        )
    if hint is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{key} must be a boolean")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{key} must be an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ScenarioError(f"{key} must be a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{key} must be a string, got {value!r}")
        return value
    raise ScenarioError(f"{key} has an unsupported type")


def _build(cls: type, data: dict[str, Any], prefix: str = ""):
    hints = _type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        dotted = f"{prefix}.{key}" if prefix else key
        if key not in known:
            raise ScenarioError(f"unknown key '{dotted}'")
        kwargs[key] = _coerce(value, hints[key], dotted)
    return cls(**kwargs)


def scenario_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a validated ScenarioConfig from nested plain data."""
    return typing.cast(ScenarioConfig, _build(ScenarioConfig, data))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a scenario TOML file."""
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as e:
        raise ScenarioError(f"scenario file '{path}' does not exist") from e
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from e
    return scenario_from_dict(data)


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split 'a.b=value' into its key path and a TOML-parsed value (bare strings allowed)."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ScenarioError(f"override '{text}' must look like key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(scenario: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Return a new scenario with dotted key=value overrides applied and re-validated."""
    if not overrides:
        return scenario
    data = dataclasses.asdict(scenario)
    for text in overrides:
        path, value = parse_override(text)
        node = data
        for part in path[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                raise ScenarioError(f"unknown key '{'.'.join(path)}'")
            node = typing.cast(dict[str, Any], child)
        if path[-1] not in node or isinstance(node[path[-1]], dict):
            raise ScenarioError(f"unknown key '{'.'.join(path)}'")
        node[path[-1]] = value
    return scenario_from_dict(data)


def with_policy(scenario: ScenarioConfig, stage: str, name: str) -> ScenarioConfig:
    """Replace the policy of one decision stage."""
    if stage not in ("handover", "beamhop", "spectrum"):
        raise ScenarioError(f"unknown policy stage '{stage}'")
    return dataclasses.replace(
        scenario, policy=dataclasses.replace(scenario.policy, **{stage: name})
    )
