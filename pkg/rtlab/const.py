"""Constants for rtlab."""
from fractions import Fraction

TOOL_NAME = "rtlab"
TOOL_VERSION = "0.1.0"
REPORT_SCHEMA_VERSION = "1.0"

# Pipeline defaults
DEFAULT_NU = Fraction(1, 500)
DESK_NU = Fraction(1, 20)
MAX_NU = Fraction(1, 15)  # exclusive, 15 * nu < 1

# Exact enumeration limits
DEFAULT_ENUMERATION_LIMIT = 10**8  # subset pairs
EXTRACTION_EXACT_LIMIT = 10**5  # subset pairs, per extraction step
CONVEXITY_SIDE_LIMIT = 12
ENUMERATION_CHUNK = 4096  # rows per numpy batch

# Sampled refuter
DEFAULT_REFUTER_TRIALS = 24
STOPPING_REFUTER_TRIALS = 10**5
MAX_DESCENT_ROUNDS = 64

# Oracle budgets
DEFAULT_NODE_LIMIT = 2_000_000
DEFAULT_TIME_LIMIT = None  # seconds
SUITE_ORACLE_NODES = 200_000

# Bollobas-Erdos geometry. Cross pairs need cosine > 0.58 and same-class pairs
# cosine < -0.334, which leaves no room for a K4; about 0.153 and 0.291 of the
# pairs are edges in dimension 4 (e(G) near 4400 at n = 200).
BE_DEFAULT_DIM = 4
BE_DEFAULT_NEAR = 0.9165
BE_DEFAULT_FAR = 1.6334

# Environment
ENV_THREADS = "RTLAB_THREADS"

# CLI exit codes
EXIT_OK = 0
EXIT_CLAIM_FAILED = 1
EXIT_USAGE = 2
