"""Test configuration for pytest."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ring_mpc.circuit import Circuit, Gate, GateKind, parse_bristol  # noqa: E402
from ring_mpc.const import ENV_AES_CIRCUIT  # noqa: E402
from ring_mpc.randomness import RandomSource  # noqa: E402

CIRCUITS_DIR = Path(__file__).resolve().parent.parent / "circuits"


def bundled_circuit(name: str) -> Path:
    """Path of a circuit shipped in circuits/."""
    return CIRCUITS_DIR / f"{name}.txt"


def random_circuit(
    seed: int,
    n_inputs: int = 6,
    n_gates: int = 40,
    n_outputs: int = 4,
    and_share: float = 0.4,
) -> Circuit:
    """A random well-formed circuit: every gate reads earlier wires only."""
    rng = np.random.default_rng(seed)
    gates = []
    for index in range(n_gates):
        output = n_inputs + index
        roll = rng.random()
        if roll < and_share:
            kind = GateKind.AND
        elif roll < and_share + 0.35:
            kind = GateKind.XOR
        elif roll < and_share + 0.5:
            kind = GateKind.INV
        else:
            kind = GateKind.EQW
        arity = 2 if kind in (GateKind.AND, GateKind.XOR) else 1
        inputs = tuple(int(w) for w in rng.integers(0, output, size=arity))
        gates.append(Gate(kind, inputs, output))
    return Circuit(
        gate_count=n_gates,
        wire_count=n_inputs + n_gates,
        input_groups=(n_inputs,),
        output_groups=(n_outputs,),
        gates=tuple(gates),
    )


@pytest.fixture
def minimal_and():
    """out = a AND b."""
    return parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 1 2 AND\n")


@pytest.fixture
def full_adder_path():
    return bundled_circuit("full_adder")


@pytest.fixture
def comparator_path():
    return bundled_circuit("comparator8")


@pytest.fixture
def rng():
    """Seeded randomness so failures reproduce."""
    return RandomSource(1234, "tests")


@pytest.fixture
def aes_circuit_path():
    """Key-expanded AES-128 circuit, if one has been placed next to its sidecar."""
    candidates = [os.environ.get(ENV_AES_CIRCUIT), bundled_circuit("aes_128_expanded")]
    for candidate in candidates:
        if candidate and Path(candidate).is_file():
            return Path(candidate)
    pytest.skip(
        f"AES-128 circuit not available (run `ring-mpc circuit fetch` or set "
        f"{ENV_AES_CIRCUIT})"
    )
