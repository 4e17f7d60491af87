"""Gate-level circuit representation, depth metrics and basis decomposition."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

ONE_QUBIT = frozenset({"I", "X", "Y", "Z", "SX", "H", "RX", "RZ"})
TWO_QUBIT = frozenset({"CNOT", "CZ", "SWAP", "RZZ"})
PARAMETRIC = frozenset({"RX", "RZ", "RZZ"})
GATE_KINDS = ONE_QUBIT | TWO_QUBIT | {"BARRIER"}

# target gate set of decompose_to_basis; Y and Z are kept so twirled circuits stay legal
BASIS_GATES = frozenset({"X", "SX", "RX", "RZ", "CZ", "RZZ"})
PAULI_FRAME_GATES = frozenset({"I", "Y", "Z"})


@dataclass(frozen=True)
class Gate:
    """One operation. ``qubits`` are ordered; for CNOT the first is the control.

    Two-qubit matrices use the ordering |q0 q1> with ``qubits[0]`` as the more
    significant bit of the 4x4 block.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if self.kind in ONE_QUBIT and len(qubits) != 1:
            raise ValueError(f"{self.kind} acts on one qubit")
        if self.kind in TWO_QUBIT:
            if len(qubits) != 2 or qubits[0] == qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits")
        if self.kind == "BARRIER" and len(set(qubits)) != len(qubits):
            raise ValueError("duplicate qubit in barrier")
        if any(q < 0 for q in qubits):
            raise ValueError("negative qubit index")
        if self.kind in PARAMETRIC:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.angle)

    def to_line(self) -> str:
        parts = [self.kind, *map(str, self.qubits)]
        if self.angle is not None:
            parts.append(repr(self.angle))
        return " ".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "Gate":
        parts = line.split()
        kind = parts[0]
        if kind in PARAMETRIC:
            return cls(kind, tuple(int(p) for p in parts[1:-1]), float(parts[-1]))
        return cls(kind, tuple(int(p) for p in parts[1:]))


_S2 = 1 / math.sqrt(2)
_FIXED = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "SX": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    """Unitary of a gate kind. RZ(a) = exp(-i a Z/2), RX(a) = exp(-i a X/2), RZZ(a) = exp(-i a ZZ/2)."""
    if kind in _FIXED:
        return _FIXED[kind].copy()
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if kind == "RX":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RZZ":
        e, f = np.exp(-0.5j * angle), np.exp(0.5j * angle)
        return np.diag([e, f, f, e])
    raise ValueError(f"no matrix for gate kind {kind!r}")


@dataclass(frozen=True)
class QuantumCircuit:
    """Ordered gate list over ``n_qubits`` qubits.

    ``tags`` optionally labels every gate with a block index (non-decreasing),
    which builders use to mark Trotter layers.
    """

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    tags: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit width must be positive")
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g.to_line()} exceeds width {self.n_qubits}")
        if self.tags is not None:
            tags = tuple(int(t) for t in self.tags)
            if len(tags) != len(gates):
                raise ValueError("one tag per gate required")
            if any(b < a for a, b in zip(tags, tags[1:])):
                raise ValueError("layer tags must be monotone")
            object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "QuantumCircuit") -> "QuantumCircuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("width mismatch")
        return QuantumCircuit(self.n_qubits, self.gates + other.gates)

    def __mul__(self, reps: int) -> "QuantumCircuit":
        return QuantumCircuit(self.n_qubits, self.gates * reps)

    def without_barriers(self) -> "QuantumCircuit":
        return QuantumCircuit(self.n_qubits, tuple(g for g in self.gates if g.kind != "BARRIER"))

    def kinds(self) -> set[str]:
        return {g.kind for g in self.gates}

    # text format: header "QUBITS n", then one gate per line "KIND q... [angle]"
    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}"]
        lines += [g.to_line() for g in self.gates]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuantumCircuit":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("QUBITS"):
            raise ValueError("missing QUBITS header")
        n = int(lines[0].split()[1])
        return cls(n, tuple(Gate.from_line(ln) for ln in lines[1:]))

    def to_dict(self) -> dict:
        gates = []
        for g in self.gates:
            entry = {"kind": g.kind, "qubits": list(g.qubits)}
            if g.angle is not None:
                entry["angle"] = g.angle
            gates.append(entry)
        return {"n_qubits": self.n_qubits, "gates": gates}

    @classmethod
    def from_dict(cls, data: dict) -> "QuantumCircuit":
        gates = tuple(
            Gate(e["kind"], tuple(e["qubits"]), e.get("angle")) for e in data["gates"]
        )
        return cls(int(data["n_qubits"]), gates)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuantumCircuit":
        return cls.from_dict(json.loads(text))


class CircuitBuilder:
    """Mutable helper for assembling a QuantumCircuit."""

    def __init__(self, n_qubits: int):
        self.n_qubits = n_qubits
        self.gates: list[Gate] = []

    def add(self, kind: str, *qubits: int, angle: float | None = None) -> "CircuitBuilder":
        self.gates.append(Gate(kind, qubits, angle))
        return self

    def extend(self, gates: Iterable[Gate], offset: int = 0) -> "CircuitBuilder":
        for g in gates:
            self.gates.append(Gate(g.kind, tuple(q + offset for q in g.qubits), g.angle))
        return self

    def barrier(self, qubits: Sequence[int] | None = None) -> "CircuitBuilder":
        if qubits is None:
            qubits = range(self.n_qubits)
        self.gates.append(Gate("BARRIER", tuple(qubits)))
        return self

    def build(self) -> QuantumCircuit:
        return QuantumCircuit(self.n_qubits, tuple(self.gates))


# ---------------------------------------------------------------- metrics


def asap_layers(c: QuantumCircuit) -> list[int]:
    """As-soon-as-possible layer (1-based) of every gate; barriers get layer 0.

    A barrier pushes the frontier of its qubits to their common maximum so no
    later gate on those qubits can share a layer with an earlier one.
    """
    frontier = [0] * c.n_qubits
    layers = []
    for g in c.gates:
        if g.kind == "BARRIER":
            qs = g.qubits or tuple(range(c.n_qubits))
            top = max(frontier[q] for q in qs)
            for q in qs:
                frontier[q] = top
            layers.append(0)
            continue
        layer = 1 + max(frontier[q] for q in g.qubits)
        for q in g.qubits:
            frontier[q] = layer
        layers.append(layer)
    return layers


def depth(c: QuantumCircuit, filter: Callable[[Gate], bool] | None = None) -> int:
    """ASAP depth; with ``filter``, the number of layers holding a matching gate."""
    layers = asap_layers(c)
    if filter is None:
        return max(layers, default=0)
    return len({lay for g, lay in zip(c.gates, layers) if g.kind != "BARRIER" and filter(g)})


def is_two_qubit(g: Gate) -> bool:
    return g.is_two_qubit


@dataclass(frozen=True)
class DepthReport:
    depth: int
    two_qubit_depth: int
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_gates(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "two_qubit_depth": self.two_qubit_depth,
            "counts": dict(sorted(self.counts.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerow(["depth", self.depth])
        w.writerow(["two_qubit_depth", self.two_qubit_depth])
        for kind, n in sorted(self.counts.items()):
            w.writerow([f"count_{kind}", n])
        return buf.getvalue()


def gate_counts(c: QuantumCircuit) -> DepthReport:
    counts: dict[str, int] = {}
    for g in c.gates:
        if g.kind != "BARRIER":
            counts[g.kind] = counts.get(g.kind, 0) + 1
    return DepthReport(depth(c), depth(c, is_two_qubit), counts)


# ---------------------------------------------------------------- decomposition


def _decompose_gate(g: Gate) -> list[Gate]:
    k, q = g.kind, g.qubits
    if k in BASIS_GATES or k in PAULI_FRAME_GATES:
        return [g]
    if k == "H":
        # H = e^{i pi/2} RZ(pi/2) SX RZ(pi/2)
        return [Gate("RZ", q, math.pi / 2), Gate("SX", q), Gate("RZ", q, math.pi / 2)]
    if k == "CNOT":
        ctrl, tgt = q
        return [*_decompose_gate(Gate("H", (tgt,))), Gate("CZ", (ctrl, tgt)),
                *_decompose_gate(Gate("H", (tgt,)))]
    if k == "SWAP":
        a, b = q
        out: list[Gate] = []
        for cx in ((a, b), (b, a), (a, b)):
            out += _decompose_gate(Gate("CNOT", cx))
        return out
    if k == "BARRIER":
        return [g]
    raise ValueError(f"cannot decompose gate kind {k!r}")


def decompose_to_basis(c: QuantumCircuit, keep_barriers: bool = False) -> QuantumCircuit:
    """Rewrite into {X, SX, RX, RZ, CZ, RZZ} (plus Pauli frame gates), equal up to global phase."""
    out: list[Gate] = []
    for g in c.gates:
        if g.kind == "BARRIER":
            if keep_barriers:
                out.append(g)
            continue
        out += _decompose_gate(g)
    return QuantumCircuit(c.n_qubits, tuple(out))


def is_basis_circuit(c: QuantumCircuit) -> bool:
    allowed = BASIS_GATES | PAULI_FRAME_GATES | {"BARRIER"}
    return all(g.kind in allowed for g in c.gates)


# ---------------------------------------------------------------- dense oracle

MAX_UNITARY_QUBITS = 10


def _apply_on_rows(u: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Left-multiply ``u`` by gate ``g`` acting on the row index.

    Rows are viewed as n binary axes with qubit 0 last (least significant);
    the gate block contracts against its wires' axes and the result axes
    are moved back into place.
    """
    m = g.matrix()
    k = len(g.qubits)
    t = u.reshape((2,) * n + (u.shape[1],))
    axes = [n - 1 - q for q in g.qubits]
    block = m.reshape((2,) * (2 * k))
    out = np.tensordot(block, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes).reshape(u.shape)


def circuit_unitary(c: QuantumCircuit) -> np.ndarray:
    """Dense unitary of the whole circuit (test-scale oracle, width <= 10)."""
    n = c.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"circuit_unitary limited to {MAX_UNITARY_QUBITS} qubits, got {n}")
    u = np.eye(2**n, dtype=complex)
    for g in c.gates:
        if g.kind == "BARRIER" or g.kind == "I":
            continue
        u = _apply_on_rows(u, g, n)
    return u


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| with phi chosen from the largest entry of b."""
    k = int(np.argmax(np.abs(b)))
    ref = b.flat[k]
    if abs(ref) == 0:
        return float(np.max(np.abs(a)))
    ph = a.flat[k] / ref
    ph = ph / abs(ph) if abs(ph) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))
