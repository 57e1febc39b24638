"""Application-wide constants."""

LOGGER_NAME = "fqflats"

# Field construction
MAX_EXTENSION_DEGREE = 4  # irreducibility is checked exhaustively up to here

# Size budgets
MAX_FLATS = 20_000  # per graph part
MAX_GRAM_ENTRIES = 400_000_000
MAX_DENSE = 2_000  # largest side for dense pair scans and eigensolves
BUDGET_ENV_VAR = "FQFLATS_BUDGET"

# Numerics
DEFAULT_TOL = 1e-9
JACOBI_MAX_SWEEPS = 60
JACOBI_CROSS_CHECK_MAX = 150  # largest Gram side also solved by Jacobi during verify
SHARPNESS_TOL = 1e-6  # |lambda3 - sqrt(q)| allowed for point-line graphs of the plane
EXPONENT_WINDOW = (0.5, 3.0)  # measured/q^exponent range accepted as leading order
CLOSE_TO_EXPECTED = 0.5  # relative deviation under which I(P,H) counts as near expected
FLOOR_SLACK = 1e-6  # measured constants are floats; ceil(c*n) tolerates this much overshoot

# Sampling
DEFAULT_SEED = 42
MIXING_SAMPLES = 1000
INCIDENCE_SAMPLES = 200
RICH_SAMPLES = 50
ORACLE_SAMPLES = 500
RICH_THRESHOLDS = (2, 3)

# Report writer
WRITER_QUEUE_SIZE = 10000
WRITER_THREAD_TIMEOUT = 60  # seconds
QUEUE_GET_TIMEOUT = 0.1  # seconds
WRITER_BUFFER_RECORDS = 256

# Exit codes
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# Default verification grid: (q, d, k, h)
GRID_SHAPES = ((2, 0, 1), (3, 0, 1), (3, 0, 2), (4, 0, 3), (4, 1, 3))
GRID_ORDERS = (3, 5, 9)
GRID_MAX_D = {9: 3}
