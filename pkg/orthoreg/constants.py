"""
Constants and default values for orthoreg.

This module centralizes all default configuration values used throughout the package.
"""

# ===========================
# Numeric Core Defaults
# ===========================

# Off-diagonal tolerance of the Jacobi solver, relative to the Frobenius norm
JACOBI_REL_TOL = 1e-12

# Maximum number of cyclic Jacobi sweeps before giving up
JACOBI_MAX_SWEEPS = 100

# Allowed asymmetry of an input to the symmetric eigensolver
SYMMETRY_TOL = 1e-9

# Below this norm the first power-iteration iterate counts as zero
POWER_ITER_DEGENERATE_NORM = 1e-12

# Number of multiplications in the spectral norm estimator
POWER_ITER_STEPS = 2


# ===========================
# Regularizer Defaults
# ===========================

# Regularization weight recipes per backbone, keyed by regularizer kind.
# "toy" is retuned for the desk-scale MLP harness; the others follow the
# published recipe for each backbone.
GAMMA_RECIPES = {
    "toy": {"so": 1e-3, "srip": 1e-1},
    "resnet18": {"so": 1e-6, "srip": 1e-3},
    "resnet50": {"so": 1e-6, "srip": 1e-3},
    "wideresnet28w2": {"so": 1e-6, "srip": 1e-4},
    "vit-tiny": {"so": 1e-5},
    "vit-small": {"so": 1e-5},
    "vit-base": {"so": 1e-6},
}

# Recipe used when a RegularizerConfig is built without a preset
DEFAULT_GAMMA_PRESET = "resnet18"

# Recipe used by the training harness
DEFAULT_TRAIN_GAMMA_PRESET = "toy"

# Feature whitening weights: variance term gets vicreg_gamma, covariance term
# gets vicreg_gamma * VICREG_COV_RATIO
DEFAULT_VICREG_GAMMA = 1.0
VICREG_COV_RATIO = 0.004
DEFAULT_VICREG_THRESHOLD = 1.0
DEFAULT_VICREG_EPSILON = 1e-4

# Full VICReg objective weights (invariance, variance, covariance)
VICREG_SIM_WEIGHT = 25.0
VICREG_VAR_WEIGHT = 25.0
VICREG_COV_WEIGHT = 1.0


# ===========================
# Spectra Defaults
# ===========================

# Largest eigenvalue at or below which a spectrum is reported as degenerate
DEGENERATE_EIGENVALUE = 1e-15

# Normalized-eigenvalue thresholds for the decay summary
DEFAULT_DECAY_THRESHOLDS = (1e-2, 1e-4)

# Axis of a weight matrix treated as samples
DEFAULT_WEIGHT_AXIS = "rows"

# Column order of the eigenvalue CSV export
REPORT_CSV_COLUMNS = ("stage", "index", "raw", "normalized", "nonpositive_flag")


# ===========================
# Harness Defaults
# ===========================

DEFAULT_SEED = 0
DEFAULT_METHOD = "byol"

DEFAULT_N_SAMPLES = 5000
DEFAULT_DATA_DIM = 20
DEFAULT_N_CLUSTERS = 4
DEFAULT_CLUSTER_STD = 1.0
CLUSTER_CENTER_RANGE = 3.0

DEFAULT_NOISE_STD = 0.5
DEFAULT_MASK_PROB = 0.2

DEFAULT_HIDDEN_DIM = 64
DEFAULT_REPR_DIM = 32
DEFAULT_PROJ_DIM = 16
DEFAULT_PROJ_HIDDEN_DIM = 64

DEFAULT_EPOCHS = 200
DEFAULT_BATCH_SIZE = 256
DEFAULT_LR = 0.05
DEFAULT_EMA_TAU = 0.99
DEFAULT_TEMPERATURE = 0.5

DEFAULT_PROBE_EPOCHS = 300
DEFAULT_PROBE_LR = 0.5
PROBE_TEST_FRACTION = 0.2
PROBE_TOP_K = 5

# Added to cosine and normalization denominators
COSINE_EPS = 1e-12


# ===========================
# Checkpoint Format
# ===========================

MATX_MAGIC = b"MATX"
MATX_VERSION = 1
MATX_DTYPE_REAL64 = 1
MANIFEST_FILE = "manifest.json"


# ===========================
# Run Directory Layout
# ===========================

RESOLVED_CONFIG_FILE = "resolved_config.cfg"
TRAIN_LOG_FILE = "train_log.json"
BUNDLE_DIR = "checkpoint"
REPORT_JSON_FILE = "collapse_report.json"
REPORT_CSV_FILE = "collapse_report.csv"

# Environment variable supplying a fallback seed
SEED_ENV_VAR = "ORTHO_SEED"
DEBUG_ENV_VAR = "ORTHO_DEBUG"
