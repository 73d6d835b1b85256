# CDP canvas defaults
DEFAULT_IMAGE_SIZE = 32
SUPPORTED_IMAGE_SIZES = (16, 32, 64)
DEFAULT_MIX = 0.3

# Fraction of the dataset held out for evaluation
EVAL_FRACTION = 0.1

# Contrastive training defaults
DEFAULT_TEMPERATURE = 0.3
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_EVAL_INTERVAL = 100

# Post-training estimation defaults
DEFAULT_K_EST = 256
DEFAULT_ESTIMATION_TEMPERATURE = 0.1
DEFAULT_THEOREM_EPSILON = 0.15

# Slack allowed on the log2(2K - 1) ceiling before a value counts as a violation
BOUND_TOLERANCE = 1e-9

# Packed dataset format
PACKED_MAGIC = b"CDP1"
PACKED_FORMAT_VERSION = 1

# Checkpoint format
CHECKPOINT_MAGIC = b"MIRG"
CHECKPOINT_VERSION = 1

# Default config file consumed by the sweep commands
DEFAULT_CONFIG_FILE = "sweep.toml"
