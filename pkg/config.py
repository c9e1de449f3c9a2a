"""
Default configuration for modattach.
Every value here can be overridden from the command line.
"""

# Index files
MAX_LEVEL = 255  # one byte per module in a v1 index

# Loader settings
DEFAULT_WORKERS = 4  # stage3 is only worth it from 4 cores up
DEFAULT_STRATEGY = "stage0"

# Simulated latency (microseconds)
LOAD_BASE_US = 50.0
LOAD_PER_KB_US = 2.0
DEP_QUERY_US = 20.0  # cost of one lsmod/modinfo style dependency lookup

# Benchmark settings
DEFAULT_REPETITIONS = 5
DEFAULT_BENCH_STRATEGIES = ("stage0", "stage1", "stage2", "stage3")
COMPOSITE_LOADS = 4  # loads per registration in the composite scenario
EXPECTED_V1_IMPROVEMENT = "~150%"

# Bench history (None disables persistence)
DATABASE_PATH = None

# Fixture generation
GEN_GATED_FRACTION = 0.6
GEN_BASE_FRACTION = 0.03
GEN_SIZE_RANGE_KB = (1, 256)

# Logging
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
