import math

# numeric_core
PIVOT_RATIO = 1e-12
ASYMMETRY_RTOL = 1e-8
RANK_TOL = 1e-10
CHI2_MAX_NEWTON = 100
CHI2_XTOL = 1e-13
FD_GRADIENT_STEP = float(2.220446049250313e-16 ** (1.0 / 3.0))
FD_HESSIAN_STEP = float(2.220446049250313e-16 ** (1.0 / 4.0))

# inference
RESTRICTION_TOL = 1e-8
CI_REL_WIDTH = 1e-6
CI_MAX_SPAN = 1e6
CI_EXTRA_DOUBLINGS = 2

# optimize
MAX_ITER = 500
GTOL = 1e-8
STALL_TOL = 1e-6
ARMIJO = 1e-4
SHRINK = 0.5
MIN_STEP = 1e-16
ACTIVE_TOL = 1e-12

# models
ARCH_OMEGA_FLOOR = 1e-8
ARCH_ALPHA_CAP = 0.9999
EC_SIGMA2_V_FLOOR = 1e-10
EC_FD_STEP = 1e-6
DIGAMMA_ONE = -0.5772157  # Γ'(1)
EULER_GAMMA = 0.5772156649015329
GUMBEL_SD = math.pi / math.sqrt(6.0)

# montecarlo
DEFAULT_LEVELS = (0.05, 0.10)
DESK_SIZE_REPLICATIONS = 1000
DESK_POWER_REPLICATIONS = 500
KS_BAND_CONSTANT = 1.36
CALIBRATION_QUANTILES = (0.90, 0.95, 0.99)
COVARIATE_STREAM = 7_919
POWER_GRID = (-8.0, -7.0, -6.0, -5.0, -4.0, -3.0, -2.0)

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"
