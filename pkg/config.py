import os
from dotenv import load_dotenv

load_dotenv()

# ---------------------------------------------------------------------------
# Residual tolerances
# ---------------------------------------------------------------------------
RESIDUAL_ATOL = float(os.environ.get("CONTACT_RESIDUAL_ATOL", "1e-9"))
RESIDUAL_RTOL = float(os.environ.get("CONTACT_RESIDUAL_RTOL", "1e-9"))
# Quantities computed through numerical quadrature (non-constant m in the
# free particle example) are checked against this looser tolerance.
QUADRATURE_TOL = float(os.environ.get("CONTACT_QUADRATURE_TOL", "1e-6"))
QUADRATURE_NODES = int(os.environ.get("CONTACT_QUADRATURE_NODES", "32"))
DENOMINATOR_FLOOR = float(os.environ.get("CONTACT_DENOMINATOR_FLOOR", "1e-12"))

# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
SAMPLE_COUNT = int(os.environ.get("CONTACT_SAMPLE_COUNT", "100"))
SAMPLE_SEED = int(os.environ.get("CONTACT_SAMPLE_SEED", "0"))
# Give up after this many draws per requested sample.
SAMPLE_ATTEMPT_FACTOR = int(os.environ.get("CONTACT_SAMPLE_ATTEMPT_FACTOR", "20"))
DEFAULT_BOX_HALF_WIDTH = float(os.environ.get("CONTACT_DEFAULT_BOX_HALF_WIDTH", "2.0"))

# ---------------------------------------------------------------------------
# Differentiation and linear algebra
# ---------------------------------------------------------------------------
# <= 0 means cbrt(eps) * max(1, |x|)
FD_STEP = float(os.environ.get("CONTACT_FD_STEP", "0"))
JACOBIAN_COND_LIMIT = float(os.environ.get("CONTACT_JACOBIAN_COND_LIMIT", "1e12"))
REGULARITY_THRESHOLD = float(os.environ.get("CONTACT_REGULARITY_THRESHOLD", "1e-12"))
NEWTON_TOL = float(os.environ.get("CONTACT_NEWTON_TOL", "1e-12"))
NEWTON_MAX_ITER = int(os.environ.get("CONTACT_NEWTON_MAX_ITER", "50"))

# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------
RK4_STEP = float(os.environ.get("CONTACT_RK4_STEP", "1e-3"))
ADAPTIVE_RTOL = float(os.environ.get("CONTACT_ADAPTIVE_RTOL", "1e-8"))
ADAPTIVE_ATOL = float(os.environ.get("CONTACT_ADAPTIVE_ATOL", "1e-10"))
MAX_STEPS = int(os.environ.get("CONTACT_MAX_STEPS", "1000000"))
STEP_SAFETY = 0.9
STEP_MIN_FACTOR = 0.2
STEP_MAX_FACTOR = 5.0
INTEGRATION_WORKERS = int(os.environ.get("CONTACT_INTEGRATION_WORKERS", "4"))

# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------
SCHEMA_VERSION = 1
FLOAT_FORMAT = ".17g"
LOG_LEVEL = os.environ.get("CONTACT_LOG_LEVEL", "INFO").upper()
