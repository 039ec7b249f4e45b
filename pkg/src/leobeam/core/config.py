"""
Configuration constants and default scenario values for the beam management simulator.

This module centralizes physical constants, the default constellation and radio
parameters, and the normalized transmission demand of the beam cells.
"""

import math

# Physical constants
SPEED_OF_LIGHT = 299_792_458.0  # m/s
BOLTZMANN = 1.380649e-23  # J/K
EARTH_RADIUS_M = 6_378_137.0
EARTH_MU = 3.986004418e14  # m^3/s^2
EARTH_ROTATION_RATE = 7.2921159e-5  # rad/s

# Constellation
DEFAULT_PLANE_COUNT = 30
DEFAULT_SATS_PER_PLANE = 40
DEFAULT_ALTITUDE_M = 550_000.0
DEFAULT_INCLINATION_DEG = 53.0
DEFAULT_WALKER_PHASING = 1
DEFAULT_MIN_ELEVATION_DEG = 35.0
DEFAULT_BEAMS_PER_SATELLITE = 4
DEFAULT_SERVING_CANDIDATES = 2  # 0 means every visible satellite is a candidate

# Cell and cluster layout
DEFAULT_CELL_ROWS = 4
DEFAULT_CELL_COLUMNS = 5
DEFAULT_CELL_SPACING_M = 34_600.0  # inter-center distance
DEFAULT_CELL_RADIUS_M = 34_600.0
DEFAULT_ANCHOR_LAT_DEG = 20.0
DEFAULT_ANCHOR_LON_DEG = 30.0
DEFAULT_CLUSTER_COUNT = 200
DEFAULT_CLUSTER_SPREAD_M = 50_000.0
DEFAULT_CLUSTER_SEPARATION_M = 10_000.0
DEFAULT_CLUSTER_LOAD_RANGE = (0.4, 0.6)

# Radio
DEFAULT_CARRIER_HZ = 20e9
DEFAULT_SAT_BANDWIDTH_HZ = 200e6
DEFAULT_TERR_BANDWIDTH_HZ = 80e6
DEFAULT_SLOT_DURATION_S = 1e-3
DEFAULT_TX_PEAK_GAIN_DB = 38.5
DEFAULT_RX_PEAK_GAIN_DB = 20.0
DEFAULT_TERR_PEAK_GAIN_DB = 0.0
DEFAULT_TX_HALF_POWER_BEAMWIDTH_DEG = 2.0
DEFAULT_RX_HALF_POWER_BEAMWIDTH_DEG = 18.0
DEFAULT_PATTERN_FLOOR_DB = 30.0
DEFAULT_RX_TEMPERATURE_K = 290.0
DEFAULT_TERR_TEMPERATURE_K = 290.0
DEFAULT_INR_BEAM_DB = -5.0
DEFAULT_INR_TERR_DB = -10.0
DEFAULT_TARGET_SNR_DB = 12.0
DEFAULT_POLARIZATION_COUNT = 2
DEFAULT_CROSS_POL_ISOLATION_DB = math.inf

# Timing
DEFAULT_SLOTS_PER_EPOCH = 200
DEFAULT_EPOCHS = 2000
FULL_SCALE_EPOCHS = 20000

# Traffic
DEFAULT_ARRIVAL_RATE_BPS = 6.52e9
DEFAULT_PACKET_BITS = 10_000
DEFAULT_V = 100.0
REFERENCE_V = 100.0  # V at which the handover load term carries unit weight
DEFAULT_H_BAR = 0.004

# Handover
DEFAULT_SIGMA0 = 0.9
DEFAULT_TAU0 = 2.0
DEFAULT_SWAP_ITERATIONS = 20
DEFAULT_PERTURB_FRACTION = 0.1
DEFAULT_VISIBILITY_STEP_S = 5.0
DEFAULT_VISIBILITY_HORIZON_S = 900.0

# Sparrow search
DEFAULT_POPULATION = 50
DEFAULT_MAX_ITERATIONS = 100
DEFAULT_LOCAL_SEARCH_ITERATIONS = 10
DEFAULT_PRODUCERS = 10
DEFAULT_SPECTATORS = 10
DEFAULT_MUTATION_BITS = 4
DEFAULT_CROSSOVER_BITS_MAX = 3
TENT_PARAMETER = 0.7
SAFETY_THRESHOLD = 0.8
POSITION_BOUND = 5.0

# Metrics
DEFAULT_SUMMARY_WINDOW = 500
DIVERGENCE_GROWTH_FRACTION = 0.1

# Normalized transmission demand among beam cells (row-major cell order)
DEMAND_WEIGHTS = (
    2.21e-2,
    6.36e-2,
    6.36e-2,
    3.25e-2,
    7.40e-2,
    3.25e-2,
    2.09e-2,
    4.28e-2,
    4.29e-2,
    5.32e-2,
    8.44e-2,
    4.28e-2,
    3.25e-2,
    2.21e-2,
    6.36e-2,
    7.40e-2,
    3.12e-2,
    8.44e-2,
    4.28e-2,
    7.40e-2,
)

# Policy selectors per decision stage
HANDOVER_POLICIES = ("proposed", "load_balance", "entropy_only")
BEAMHOP_POLICIES = ("proposed", "greedy_hop")
SPECTRUM_POLICIES = ("proposed", "greedy_share", "none")

# Output file names
METRICS_FILE = "metrics.csv"
TRACE_FILE = "decisions.trace"
SUMMARY_FILE = "summary.json"
SWEEP_FILE = "sweep.csv"
REPORT_FILE = "comparison.csv"
