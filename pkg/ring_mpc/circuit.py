"""Bristol-fashion boolean circuits.

Parses and re-checks circuit files, schedules gates into AND-depth layers, evaluates
circuits in the clear (the correctness oracle for the MPC engine) and reads the `.meta`
sidecar that pins down how hex values map onto input and output wires.

Format:
    line 1: gate_count wire_count
    line 2: niv size_1 ... size_niv
    line 3: nov size_1 ... size_nov
    then one gate per line: n_in n_out in_1 [in_2] out KIND

The older two-header form (line 2: n1 n2 n_out) is also accepted.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .aes_schedule import expand_aes128_key
from .config import METADATA_SCHEMA, parse_key_value_text
from .config import validate as validate_schema
from .const import (
    BIT_ORDER_MSB_FIRST,
    META_BIT_ORDER,
    META_DESCRIPTION,
    META_INPUT_GROUP_ROLES,
    META_KNOWN_ANSWER_VECTORS,
    ROLE_AES128_KEY_SCHEDULE,
)
from .exceptions import (
    CircuitError,
    CircuitHeaderError,
    CircuitParseError,
    ConfigError,
    DoubleAssignmentError,
    InputLengthError,
    UnsupportedGateError,
    UseBeforeDefineError,
    WireRangeError,
)
from .sharing import BitVector

_LOGGER = logging.getLogger(__name__)


class GateKind(str, enum.Enum):
    """Gate kinds the protocol can evaluate."""

    AND = "AND"
    XOR = "XOR"
    INV = "INV"
    EQW = "EQW"


GATE_ARITY = {GateKind.AND: 2, GateKind.XOR: 2, GateKind.INV: 1, GateKind.EQW: 1}
LOCAL_KINDS = frozenset({GateKind.XOR, GateKind.INV, GateKind.EQW})


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: tuple[int, ...]
    output: int


@dataclass(frozen=True)
class Circuit:
    """Parsed circuit; immutable once built."""

    gate_count: int
    wire_count: int
    input_groups: tuple[int, ...]
    output_groups: tuple[int, ...]
    gates: tuple[Gate, ...]

    @property
    def input_wire_count(self) -> int:
        return sum(self.input_groups)

    @property
    def output_wire_count(self) -> int:
        return sum(self.output_groups)

    @property
    def output_wires(self) -> range:
        """Outputs are the last wires, in group order."""
        return range(self.wire_count - self.output_wire_count, self.wire_count)

    @property
    def and_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.AND)


class LayerKind(str, enum.Enum):
    AND = "and"
    LOCAL = "local"


@dataclass(frozen=True)
class Layer:
    """Gates that can run together; an AND layer is one communication round."""

    kind: LayerKind
    depth: int
    gates: tuple[int, ...]


@dataclass(frozen=True)
class Layering:
    layers: tuple[Layer, ...]
    and_depth: int

    @property
    def and_layers(self) -> tuple[Layer, ...]:
        return tuple(layer for layer in self.layers if layer.kind is LayerKind.AND)


@dataclass
class CircuitReport:
    """Result of validate(); `errors` is empty for a sound circuit."""

    errors: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class CircuitStats:
    gate_count: int
    wire_count: int
    and_count: int
    xor_count: int
    inv_count: int
    eqw_count: int
    and_depth: int
    input_groups: tuple[int, ...]
    output_groups: tuple[int, ...]

    @property
    def counts(self) -> dict[str, int]:
        return {
            GateKind.AND.value: self.and_count,
            GateKind.XOR.value: self.xor_count,
            GateKind.INV.value: self.inv_count,
            GateKind.EQW.value: self.eqw_count,
        }

    def as_dict(self) -> dict[str, object]:
        return {
            "gates": self.gate_count,
            "wires": self.wire_count,
            "counts": self.counts,
            "and_depth": self.and_depth,
            "inputs": list(self.input_groups),
            "outputs": list(self.output_groups),
        }


def _ints(tokens: Sequence[str], line_number: int, what: str) -> list[int]:
    try:
        values = [int(t) for t in tokens]
    except ValueError as err:
        raise CircuitHeaderError(
            f"malformed {what}: {' '.join(tokens)!r}", line_number
        ) from err
    if any(v < 0 for v in values):
        raise CircuitHeaderError(f"negative value in {what}", line_number)
    return values


def _group_line(tokens: Sequence[str], line_number: int, what: str) -> tuple[int, ...]:
    values = _ints(tokens, line_number, what)
    if not values or len(values) != values[0] + 1:
        raise CircuitHeaderError(
            f"{what} declares {values[0] if values else '?'} groups "
            f"but lists {max(len(values) - 1, 0)} sizes",
            line_number,
        )
    sizes = tuple(values[1:])
    if any(size == 0 for size in sizes):
        raise CircuitHeaderError(f"{what} has an empty group", line_number)
    return sizes


def _is_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


def parse_bristol(text: str) -> Circuit:
    """Parse Bristol-fashion text into a Circuit, with line-numbered diagnostics."""
    lines = [
        (number, raw.split())
        for number, raw in enumerate(text.splitlines(), start=1)
        if raw.strip()
    ]
    if len(lines) < 2:
        raise CircuitHeaderError("missing header lines", lines[0][0] if lines else 1)

    first_no, first = lines[0]
    header = _ints(first, first_no, "gate/wire header")
    if len(header) != 2:
        raise CircuitHeaderError("expected 'gate_count wire_count'", first_no)
    gate_count, wire_count = header

    second_no, second = lines[1]
    legacy = (
        len(second) == 3
        and all(_is_int(t) for t in second)
        and (len(lines) == 2 or not _is_int(lines[2][1][-1]))
    )
    if legacy:
        n1, n2, n_out = _ints(second, second_no, "input/output header")
        input_groups = tuple(n for n in (n1, n2) if n)
        output_groups = (n_out,)
        body = lines[2:]
        _LOGGER.debug("Legacy two-line Bristol header detected")
    else:
        if len(lines) < 3:
            raise CircuitHeaderError("missing output header line", second_no)
        input_groups = _group_line(second, second_no, "input header")
        third_no, third = lines[2]
        output_groups = _group_line(third, third_no, "output header")
        body = lines[3:]

    n_inputs = sum(input_groups)
    if n_inputs + gate_count > wire_count:
        raise CircuitHeaderError(
            f"{n_inputs} input wires plus {gate_count} gates exceed {wire_count} wires",
            first_no,
        )
    if sum(output_groups) > wire_count:
        raise CircuitHeaderError("more output wires than wires", first_no)

    defined = bytearray(wire_count)
    defined[:n_inputs] = b"\x01" * n_inputs
    gates = []
    for number, tokens in body:
        gate = _parse_gate(tokens, number, wire_count, defined)
        defined[gate.output] = 1
        gates.append(gate)

    if len(gates) != gate_count:
        raise CircuitHeaderError(
            f"header declares {gate_count} gates, file has {len(gates)}", first_no
        )
    for wire in range(wire_count - sum(output_groups), wire_count):
        if not defined[wire]:
            raise CircuitParseError(f"output wire {wire} is never assigned")

    return Circuit(
        gate_count=gate_count,
        wire_count=wire_count,
        input_groups=input_groups,
        output_groups=output_groups,
        gates=tuple(gates),
    )


def _parse_gate(
    tokens: list[str], number: int, wire_count: int, defined: bytearray
) -> Gate:
    if len(tokens) < 4:
        raise CircuitParseError(f"malformed gate line {' '.join(tokens)!r}", number)
    kind_name = tokens[-1].upper()
    if kind_name not in GateKind.__members__:
        hint = " (multi-output AND is not supported)" if kind_name == "MAND" else ""
        raise UnsupportedGateError(f"unsupported gate kind {tokens[-1]}{hint}", number)
    kind = GateKind(kind_name)
    try:
        n_in, n_out, *wires = (int(t) for t in tokens[:-1])
    except ValueError as err:
        raise CircuitParseError("non-integer field in gate line", number) from err
    if n_out != 1 or n_in != GATE_ARITY[kind] or len(wires) != n_in + n_out:
        raise CircuitParseError(
            f"{kind.value} needs {GATE_ARITY[kind]} inputs and 1 output", number
        )
    *inputs, output = wires
    for wire in inputs:
        if not 0 <= wire < wire_count or not defined[wire]:
            raise UseBeforeDefineError(f"use of wire {wire} before definition", number)
    if not 0 <= output < wire_count:
        raise WireRangeError(f"wire {output} outside 0..{wire_count - 1}", number)
    if defined[output]:
        raise DoubleAssignmentError(f"wire {output} assigned twice", number)
    return Gate(kind, tuple(inputs), output)


def load_circuit(path: str | Path) -> Circuit:
    """Read and parse a circuit file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise CircuitError(f"cannot read circuit {path}: {err}") from err
    circuit = parse_bristol(text)
    _LOGGER.info(
        "📄 Loaded circuit %s: %d gates (%d AND), %d wires",
        path.name,
        circuit.gate_count,
        circuit.and_count,
        circuit.wire_count,
    )
    return circuit


def serialize_bristol(c: Circuit) -> str:
    """Write a circuit back out in Bristol-fashion form."""
    lines = [
        f"{c.gate_count} {c.wire_count}",
        " ".join(str(v) for v in (len(c.input_groups), *c.input_groups)),
        " ".join(str(v) for v in (len(c.output_groups), *c.output_groups)),
        "",
    ]
    for gate in c.gates:
        wires = " ".join(str(w) for w in (*gate.inputs, gate.output))
        lines.append(f"{len(gate.inputs)} 1 {wires} {gate.kind.value}")
    return "\n".join(lines) + "\n"


def validate(c: Circuit) -> CircuitReport:
    """Re-check every Circuit invariant without trusting the parser."""
    report = CircuitReport()
    n_inputs = c.input_wire_count
    if c.gate_count != len(c.gates):
        report.errors.append(f"gate_count {c.gate_count} != {len(c.gates)} gates")
    if n_inputs + len(c.gates) > c.wire_count:
        report.errors.append("input wires plus gate outputs exceed wire_count")
    if c.output_wire_count > c.wire_count:
        report.errors.append("output groups exceed wire_count")

    assigned = [False] * c.wire_count
    for wire in range(min(n_inputs, c.wire_count)):
        assigned[wire] = True
    for index, gate in enumerate(c.gates):
        errors = report.errors
        if len(gate.inputs) != GATE_ARITY.get(gate.kind, -1):
            errors.append(f"gate {index}: wrong arity for {gate.kind}")
        for wire in gate.inputs:
            if not 0 <= wire < c.wire_count or not assigned[wire]:
                errors.append(f"gate {index}: wire {wire} used before definition")
        if not 0 <= gate.output < c.wire_count:
            errors.append(f"gate {index}: output wire {gate.output} out of range")
            continue
        if assigned[gate.output]:
            errors.append(f"gate {index}: wire {gate.output} assigned twice")
        assigned[gate.output] = True
    for wire in c.output_wires:
        if 0 <= wire < c.wire_count and not assigned[wire]:
            report.errors.append(f"output wire {wire} never assigned")
    return report


def layerize(c: Circuit) -> Layering:
    """Group gates into layers ordered by (AND depth, local sub-level).

    AND gates of one depth share a single layer. A local gate sits in the earliest
    layer after its inputs exist; local chains at the same depth get successive
    sub-levels so no gate reads a same-layer output.
    """
    depth = [0] * c.wire_count
    sub = [0] * c.wire_count
    groups: dict[tuple[int, int], list[int]] = {}
    and_depth = 0
    for index, gate in enumerate(c.gates):
        d_in = max(depth[w] for w in gate.inputs)
        if gate.kind is GateKind.AND:
            d, s = d_in + 1, 0
            and_depth = max(and_depth, d)
        else:
            d = d_in
            s = 1 + max((sub[w] for w in gate.inputs if depth[w] == d), default=0)
        depth[gate.output], sub[gate.output] = d, s
        groups.setdefault((d, s), []).append(index)

    layers = tuple(
        Layer(
            kind=LayerKind.AND if s == 0 else LayerKind.LOCAL,
            depth=d,
            gates=tuple(groups[(d, s)]),
        )
        for d, s in sorted(groups)
    )
    return Layering(layers=layers, and_depth=and_depth)


def as_lane_matrix(c: Circuit, inputs: BitVector | np.ndarray) -> np.ndarray:
    """Coerce evaluator inputs to a bool matrix of shape (input wires, lanes)."""
    arr = inputs.bits if isinstance(inputs, BitVector) else np.asarray(inputs)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] != c.input_wire_count:
        got = arr.shape[0] if arr.ndim else 0
        raise InputLengthError(
            f"circuit has {c.input_wire_count} input wires, got {got}"
        )
    return arr.astype(bool)


def _apply(gate: Gate, values: np.ndarray) -> None:
    first = values[gate.inputs[0]]
    if gate.kind is GateKind.AND:
        values[gate.output] = first & values[gate.inputs[1]]
    elif gate.kind is GateKind.XOR:
        values[gate.output] = first ^ values[gate.inputs[1]]
    elif gate.kind is GateKind.INV:
        values[gate.output] = ~first
    else:
        values[gate.output] = first


def eval_clear(
    c: Circuit, inputs: BitVector | np.ndarray, layering: Layering | None = None
) -> np.ndarray:
    """Plaintext evaluation; returns a bool matrix of shape (output wires, lanes)."""
    return eval_wires(c, inputs, layering)[c.wire_count - c.output_wire_count :]


def eval_wires(
    c: Circuit, inputs: BitVector | np.ndarray, layering: Layering | None = None
) -> np.ndarray:
    """Like eval_clear, but returns the value of every wire."""
    matrix = as_lane_matrix(c, inputs)
    values = np.zeros((c.wire_count, matrix.shape[1]), dtype=bool)
    values[: c.input_wire_count] = matrix
    if layering is None:
        for gate in c.gates:
            _apply(gate, values)
    else:
        for layer in layering.layers:
            for index in layer.gates:
                _apply(c.gates[index], values)
    return values


def stats(c: Circuit) -> CircuitStats:
    """Exact gate counts by kind plus AND depth."""
    counts = Counter(g.kind for g in c.gates)
    return CircuitStats(
        gate_count=c.gate_count,
        wire_count=c.wire_count,
        and_count=counts[GateKind.AND],
        xor_count=counts[GateKind.XOR],
        inv_count=counts[GateKind.INV],
        eqw_count=counts[GateKind.EQW],
        and_depth=layerize(c).and_depth,
        input_groups=c.input_groups,
        output_groups=c.output_groups,
    )


# Sidecar metadata


@dataclass(frozen=True)
class KnownAnswer:
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]


@dataclass(frozen=True)
class CircuitMetadata:
    input_group_roles: tuple[str, ...] = ()
    bit_order: str = "lsb_first"
    known_answer_vectors: tuple[KnownAnswer, ...] = ()
    description: str = ""


def _hex_list(text: str) -> tuple[int, ...]:
    return tuple(int(v.strip(), 16) for v in text.split(",") if v.strip())


def parse_metadata(text: str, source: str = "<metadata>") -> CircuitMetadata:
    values = validate_schema(METADATA_SCHEMA, parse_key_value_text(text, source))
    vectors = []
    for entry in values[META_KNOWN_ANSWER_VECTORS].split(";"):
        if not entry.strip():
            continue
        left, sep, right = entry.partition("->")
        if not sep:
            raise ConfigError(f"{source}: known answer {entry!r} lacks '->'")
        try:
            vectors.append(KnownAnswer(_hex_list(left), _hex_list(right)))
        except ValueError as err:
            raise ConfigError(f"{source}: bad hex in {entry!r}") from err
    return CircuitMetadata(
        input_group_roles=values[META_INPUT_GROUP_ROLES],
        bit_order=values[META_BIT_ORDER],
        known_answer_vectors=tuple(vectors),
        description=values[META_DESCRIPTION],
    )


def metadata_path_for(circuit_path: str | Path) -> Path:
    return Path(circuit_path).with_suffix(".meta")


def load_metadata(circuit_path: str | Path) -> CircuitMetadata:
    """Sidecar for a circuit file; defaults when no sidecar exists."""
    path = metadata_path_for(circuit_path)
    if not path.exists():
        _LOGGER.debug("No sidecar metadata at %s, using defaults", path)
        return CircuitMetadata()
    return parse_metadata(path.read_text(encoding="utf-8"), str(path))


def _value_to_bits(value: int, width: int, bit_order: str) -> np.ndarray:
    if value < 0 or value >> width:
        raise InputLengthError(f"value {value:#x} does not fit in {width} bits")
    bits = BitVector.from_int(value, width).bits
    return bits[::-1] if bit_order == BIT_ORDER_MSB_FIRST else bits


def _bits_to_value(bits: np.ndarray, bit_order: str) -> int:
    if bit_order == BIT_ORDER_MSB_FIRST:
        bits = bits[::-1]
    return BitVector.from_array(np.array(bits, dtype=bool)).to_int()


def encode_inputs(
    c: Circuit, meta: CircuitMetadata, values: Sequence[int]
) -> np.ndarray:
    """Map one hex value per input group onto the input wires."""
    if len(values) != len(c.input_groups):
        raise InputLengthError(
            f"circuit has {len(c.input_groups)} input groups, got {len(values)} values"
        )
    parts = [encode_group(c, meta, index, value) for index, value in enumerate(values)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=bool)


def encode_group(
    c: Circuit, meta: CircuitMetadata, index: int, value: int
) -> np.ndarray:
    """Bits of one input group (0-based index), honoring its role and bit order."""
    width = c.input_groups[index]
    roles = meta.input_group_roles
    role = roles[index] if index < len(roles) else ""
    if role == ROLE_AES128_KEY_SCHEDULE:
        if value >> 128:
            raise InputLengthError(f"AES-128 key {value:#x} is wider than 128 bits")
        schedule = expand_aes128_key(value.to_bytes(16, "big"))
        value = int.from_bytes(schedule, "big")
    return _value_to_bits(value, width, meta.bit_order)


def group_offsets(groups: Sequence[int]) -> list[int]:
    """Start wire of each group."""
    offsets, total = [], 0
    for width in groups:
        offsets.append(total)
        total += width
    return offsets


def encode_lane_inputs(
    c: Circuit, meta: CircuitMetadata, rows: Sequence[Sequence[int]]
) -> np.ndarray:
    """One row of group values per lane -> matrix (input wires, lanes)."""
    columns = [encode_inputs(c, meta, row) for row in rows]
    return np.stack(columns, axis=1)


def decode_outputs(c: Circuit, meta: CircuitMetadata, column: np.ndarray) -> list[int]:
    """Output wire bits of one lane -> one integer per output group."""
    values, offset = [], 0
    for width in c.output_groups:
        values.append(_bits_to_value(column[offset : offset + width], meta.bit_order))
        offset += width
    return values


def known_answer_results(c: Circuit, meta: CircuitMetadata) -> list[bool]:
    """Evaluate each sidecar known-answer vector in the clear; True where it matches."""
    results = []
    for vector in meta.known_answer_vectors:
        outputs = eval_clear(c, encode_lane_inputs(c, meta, [list(vector.inputs)]))
        results.append(decode_outputs(c, meta, outputs[:, 0]) == list(vector.outputs))
    return results
