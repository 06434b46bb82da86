"""Constants for the ring-mpc engine."""

PROTOCOL_VERSION = 1

# Protocol configuration
PARTY_COUNT = 3
CORRUPTION_THRESHOLD = 1
PARTY_IDS = (1, 2, 3)

# Default values
DEFAULT_NAME = "ring-mpc"
DEFAULT_LANE_COUNT = 128
DEFAULT_TIMEOUT_SECONDS = 30.0
DEFAULT_OUTPUT_PARTY = 1
DEFAULT_SESSION_ID = "ring-mpc"
DEFAULT_INPUT_SOURCE = "dealer-file"
DEFAULT_MAX_FRAME_BYTES = 64 * 1024 * 1024
DEFAULT_BENCH_REPETITIONS = 1
DEFAULT_LOG_LEVEL = "WARNING"

# Configuration keys
CONF_PARTY_ID = "party_id"
CONF_LISTEN_ADDRESS = "listen_address"
CONF_SUCCESSOR_ADDRESS = "successor_address"
CONF_CIRCUIT_PATH = "circuit_path"
CONF_LANE_COUNT = "lane_count"
CONF_SEED = "seed"
CONF_TIMEOUT_SECONDS = "timeout_seconds"
CONF_OUTPUT_PARTY = "output_party"
CONF_INPUT_SOURCE = "input_source"
CONF_INPUT_FILE = "input_file"
CONF_INPUT_ASSIGNMENT = "input_assignment"
CONF_SESSION_ID = "session_id"

INPUT_SOURCE_DEALER_FILE = "dealer-file"
INPUT_SOURCE_PARTY_FILE = "party-file"
INPUT_SOURCES = (INPUT_SOURCE_DEALER_FILE, INPUT_SOURCE_PARTY_FILE)

# Sidecar metadata keys
META_INPUT_GROUP_ROLES = "input_group_roles"
META_BIT_ORDER = "bit_order"
META_KNOWN_ANSWER_VECTORS = "known_answer_vectors"
META_DESCRIPTION = "description"
BIT_ORDER_LSB_FIRST = "lsb_first"
BIT_ORDER_MSB_FIRST = "msb_first"
ROLE_AES128_KEY_SCHEDULE = "aes128_key_schedule"

# Environment
ENV_LOG_LEVEL = "RING_MPC_LOG_LEVEL"
ENV_AES_CIRCUIT = "RING_MPC_AES_CIRCUIT"

# Assets
ASSET_FETCH_TIMEOUT_SECONDS = 60.0

# Wire protocol
FRAME_HEADER_SIZE = 5
MSG_KEY_EXCHANGE = 0x01
MSG_AND_ROUND = 0x02
MSG_INPUT_SHARES = 0x03
MSG_OUTPUT_REVEAL = 0x04
MSG_CONTROL = 0x05
MESSAGE_TYPES = {
    MSG_KEY_EXCHANGE: "KEY_EXCHANGE",
    MSG_AND_ROUND: "AND_ROUND",
    MSG_INPUT_SHARES: "INPUT_SHARES",
    MSG_OUTPUT_REVEAL: "OUTPUT_REVEAL",
    MSG_CONTROL: "CONTROL",
}

# Correlated randomness
PRF_KEY_BYTES = 16
PRF_BLOCK_BITS = 128
PRF_BLOCK_BYTES = 16
COUNTER_LIMIT = 1 << 128
# Counter blocks with the top bit set are reserved for input masking pads.
INPUT_PAD_DOMAIN = 1 << 127

# Share file format
SHARE_FILE_MAGIC = b"RMPC"
SHARE_FILE_VERSION = 1

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_TRANSPORT = 4
EXIT_DESYNC = 5
EXIT_ENGINE = 6

# Performance model
ANDS_PER_AES = 5440
TCP_IP_OVERHEAD = 0.0274
AND_MODULE_WIDTH = 128
INITIATION_INTERVAL = 6
FPGA_CLOCK_HZ = 125_000_000
HIGH_CLOCK_HZ = 200_000_000
SATURATION_CLOCK_HZ = 78_130_000
PER_INSTANCE_UTILIZATION_PERCENT = 1.32
REALISTIC_USABLE_FRACTION = 0.70
MEASURED_CPU_USAGE = 0.733
MAX_CPU_CORES = 20

# Units of measurement
UNIT_GBPS = "Gbps"
UNIT_PERCENTAGE = "%"
UNIT_SECONDS = "s"
