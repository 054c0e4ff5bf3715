"""
Constants for coopadmm.
"""

import math

# Vehicle model
DEFAULT_WHEELBASE = 2.5  # meters
DEFAULT_TAU_S = 0.1  # seconds
DEFAULT_VEHICLE_LENGTH = 2.5  # meters
DEFAULT_VEHICLE_WIDTH = 1.6  # meters

STATE_DIM = 4
INPUT_DIM = 2
POSITION_DIM = 2

# Input box
DEFAULT_STEER_BOUND = 0.6  # radians
DEFAULT_ACCEL_BOUND = 3.0  # m/s^2

# Coupling
DEFAULT_D_SAFE = 3.0  # meters
DEFAULT_D_CMU = math.inf

# ADMM
DEFAULT_HORIZON = 100
DEFAULT_SIGMA = 10.0
DEFAULT_EPS = 0.01
DEFAULT_ADMM_MAX_ITER = 100

# DDP
DEFAULT_DDP_MAX_ITER = 100
DEFAULT_DDP_TOL = 1e-6
DEFAULT_DDP_REG_INIT = 1e-6
DEFAULT_DDP_REG_MIN = 1e-8
DEFAULT_DDP_REG_MAX = 1e8
DEFAULT_DDP_ALPHA_MIN = 1e-4
DEFAULT_STATE_PENALTY = 1e3
DDP_ROUNDOFF_TOL = 1e-12  # predicted reduction below this, relative to the cost, is noise

# SDP
DEFAULT_SDP_TOL = 1e-7
DEFAULT_SDP_MAX_ITER = 200
SDP_STEP_FRACTION = 0.99
SDP_INFEASIBLE_FACTOR = 1e6
SDP_DIVERGENCE_NORM = 1e12

# Extraction and projection
RANK_ONE_TOL = 1e-5
EXTRACTION_SAMPLES = 64
POLISH_CANDIDATES = 4
ORACLE_STARTS = 32
FEASIBILITY_TOL = 1e-6
MIQP_PRUNE_TOL = 1e-9
MIQP_HALFPLANES = 4

# Road and reference
DEFAULT_LANE_WIDTH = 4.0  # meters
DEFAULT_SPEED = 5.0  # m/s
DEFAULT_ARM_LENGTH = 20.0  # meters
DEFAULT_TURN_RADIUS = 1.5 * DEFAULT_LANE_WIDTH  # meters

# Runtime
THREADS_ENV_VAR = "COOP_ADMM_THREADS"
DEFAULT_SETTINGS_FILE = "coopadmm.ini"
DEFAULT_OUT_DIR = "out"
PROGRESS_BUFFER_SIZE = 1000
FLOAT_FORMAT = ".17g"

# Exit codes
EXIT_CONVERGED = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

BACKENDS = ("sdr", "miqp", "oracle")
LAYOUTS = ("junction", "intersection")
MANEUVERS = ("left", "right", "straight")
