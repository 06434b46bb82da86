"""Three-party replicated secret sharing over a ring of parties.

Boolean circuits in Bristol fashion are evaluated on lane-vectorized shares; XOR,
INV and EQW gates are local and every AND layer costs one message per party.
"""

from .circuit import Circuit, eval_clear, layerize, load_circuit, parse_bristol
from .const import PROTOCOL_VERSION
from .engine import run_circuit, run_local_simulation
from .exceptions import RingMpcError
from .sharing import BitVector, ReplicatedShare, ShareBundle, reconstruct, split_secret

__version__ = "1.0.0"

__all__ = [
    "BitVector",
    "Circuit",
    "PROTOCOL_VERSION",
    "ReplicatedShare",
    "RingMpcError",
    "ShareBundle",
    "eval_clear",
    "layerize",
    "load_circuit",
    "parse_bristol",
    "reconstruct",
    "run_circuit",
    "run_local_simulation",
    "split_secret",
]
