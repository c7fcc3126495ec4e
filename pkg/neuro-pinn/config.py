"""Configuration constants for neuron parameter estimation."""

# Environment
OUT_DIR_ENV = "NEURO_PINN_OUT_DIR"      # default output directory
LOG_LEVEL_ENV = "NEURO_PINN_LOG_LEVEL"  # default log level
DEFAULT_OUT_DIR = "runs"
TOOL_VERSION = "0.3.0"

# Seeds (all randomness flows from these three)
DATA_SEED = 0       # observation noise
NET_SEED = 1        # network initialization
BATCH_SEED = 2      # mini-batch sampling

# Data generation
V_INIT = -60.0      # mV, initial voltage for every model
CA_INIT = 1.0       # initial calcium for the bursting model
T_DISCARD = 0.0     # ms integrated and dropped before the first sample

# Frequency selection
FFT_ENERGY = "centered"  # "centered" removes the mean first; "raw" ranks the DC bin with the rest

# Network
RWF_MU = 0.5
RWF_SIGMA = 0.1

# Adam
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Stage 1 (voltage pre-training)
STAGE1_LR0 = 1e-3
STAGE1_DECAY_FACTOR = 0.5
STAGE1_DECAY_EVERY = 10_000
STAGE1_ITERS = 20_000

# Stage 2 (physics-informed training)
STAGE2_DECAY_FACTOR = 0.5

# Stage 2 loss balancing
BALANCE_ALPHA = 0.9
BALANCE_EPS = 1e-6
BALANCE_UPDATE_EVERY = 1_000

# Training bookkeeping
LOG_EVERY = 100            # iterations between loss-history rows
CHECKPOINT_EVERY = 50_000  # iterations between stage-2 checkpoints
CHUNK_SIZE = 250           # fixed reduction chunk, keeps threaded runs bitwise equal

# Numerics
JACOBIAN_REL_STEP = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
EVENT_TOL = 1e-4           # bifurcation-parameter bracket for fold/Hopf refinement
SEED_GRID_POINTS = 64      # parameter values seeded by Newton multi-start
SEED_RANDOM_STARTS = 8     # random starts per seed value (besides the V grid)
ARCLENGTH_DS0 = 0.01       # scaled units
ARCLENGTH_DS_MIN = 1e-6
ARCLENGTH_DS_MAX = 0.02
BIF_SEED = 0

# Orbit sampling
ORBIT_SAMPLE_DT = 0.1            # ms between recorded V samples
OSCILLATION_MIN_AMPLITUDE = 1.0  # mV; below this an attractor is quiescent
PERIOD_BLOWUP_FACTOR = 10.0      # period > factor * median marks onset/offset

# Per-model defaults
MODEL_DEFAULTS = {
    "sml": {
        "regime": "hopf",
        "sim_dt": 0.1,          # ms
        "duration": 200.0,      # ms (0.2 s, 2001 samples)
        "stride": 1,
        "fft_p": 95.0,
        "widths": [50, 50],
        "batch": 500,
        "stage2_lr0_theta": 1e-4,
        "stage2_decay_every": 100_000,
        "stage2_lr_lambda": 1e-4,
        "stage2_iters": 800_000,
        "bif_param": "I_app",
        "bif_range": (0.0, 250.0),
        "t_transient": 2000.0,
        "t_measure": 2000.0,
    },
    "bml": {
        "regime": "square-wave",
        "sim_dt": 0.1,
        "duration": 2000.0,     # ms (2 s, 20001 samples)
        "stride": 1,
        "fft_p": 99.0,
        "widths": [50, 50, 50],
        "batch": 1000,
        "stage2_lr0_theta": 1e-4,
        "stage2_decay_every": 100_000,
        "stage2_lr_lambda": 1e-4,
        "stage2_iters": 1_000_000,
        "bif_param": "I_app",
        "bif_range": (0.0, 200.0),
        "t_transient": 2000.0,
        "t_measure": 2000.0,
    },
    "pbc": {
        "regime": "pbc-default",
        "sim_dt": 0.01,
        "duration": 6000.0,     # ms (6 s, 60001 samples after stride)
        "stride": 10,
        "fft_p": 99.92,
        "widths": [50, 50, 50],
        "batch": 1000,
        "stage2_lr0_theta": 1e-3,
        "stage2_decay_every": 25_000,
        "stage2_lr_lambda": 1e-3,
        "stage2_iters": 200_000,
        "bif_param": "h",
        "bif_range": (0.0, 1.0),
        "t_transient": 4000.0,
        "t_measure": 4000.0,
    },
}
