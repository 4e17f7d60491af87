"""Dense statevector backend.

Amplitude index bit ``q`` is the value of qubit ``q`` (qubit 0 least
significant).  Gates are applied by reshaping the amplitude array so the
addressed qubits become their own axes; consecutive gates on the same one or
two wires are fused into a single 2x2 or 4x4 block before application.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .circuit import Gate, QuantumCircuit
from .model import BasisState
from .pauli import PauliTermSum, expectation_dense

NORM_TOL = 1e-10
IMAG_TOL = 1e-10


class StateVector:
    """Mutable pure state on ``n_qubits`` qubits."""

    def __init__(self, amplitudes: np.ndarray, copy: bool = True):
        amps = np.array(amplitudes, dtype=complex, copy=copy).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size != 2**n:
            raise ValueError("amplitude count must be a power of two")
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, copy=False)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes, copy=True)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_bytes(self) -> bytes:
        """Little-endian (re, im) float64 pairs, index order as in memory."""
        if self.n_qubits > 20:
            raise ValueError("raw dump limited to 20 qubits")
        return self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "StateVector":
        return cls(np.frombuffer(data, dtype="<c16"))


def init_basis(state: BasisState) -> StateVector:
    amps = np.zeros(2**state.n_qubits, dtype=complex)
    amps[state.index] = 1.0
    return StateVector(amps, copy=False)


# ---------------------------------------------------------------- kernels


def apply_1q(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 block to qubit ``q``; returns the (possibly new) array.

    ``amps`` may also be a batch of shape ``(rows, 2**n)``; the leading
    dimension folds into the untouched high qubits.
    """
    if q == 0:
        # a single GEMM beats batched 2x2 products when the trailing axis is trivial
        return (amps.reshape(-1, 2) @ m.T).reshape(amps.shape)
    return np.matmul(m, amps.reshape(-1, 2, 2**q)).reshape(amps.shape)


def apply_2q(amps: np.ndarray, n: int, a: int, b: int, m: np.ndarray) -> np.ndarray:
    """Apply a 4x4 block with ``a`` as the more significant gate wire (batch-aware)."""
    if a < b:
        # reorder the block so the higher qubit index is the leading wire
        m = m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        a, b = b, a
    hi, lo = a, b
    if hi == 1:
        return (amps.reshape(-1, 4) @ m.T).reshape(amps.shape)
    if hi == lo + 1:
        view = amps.reshape(-1, 4, 2**lo)
        return np.matmul(m, view).reshape(amps.shape)
    view = amps.reshape(-1, 2, 2 ** (hi - lo - 1), 2, 2**lo)
    t = m.reshape(2, 2, 2, 2)
    return np.einsum("pqrs,irjsk->ipjqk", t, view, optimize=True).reshape(amps.shape)


def apply_diagonal_2q(amps: np.ndarray, a: int, b: int, d: np.ndarray) -> np.ndarray:
    """Multiply by a diagonal two-qubit gate given its 4 diagonal entries."""
    phases = d.reshape(2, 2)
    if a < b:
        phases = phases.T
        a, b = b, a
    view = amps.reshape(-1, 2, 2 ** (a - b - 1), 2, 2**b)
    return (view * phases[None, :, None, :, None]).reshape(amps.shape)


def _is_diagonal(m: np.ndarray) -> bool:
    return not np.any(m - np.diag(np.diag(m)))


def _apply_block(amps: np.ndarray, n: int, qubits: tuple[int, ...], m: np.ndarray) -> np.ndarray:
    if len(qubits) == 1:
        return apply_1q(amps, n, qubits[0], m)
    if _is_diagonal(m):
        return apply_diagonal_2q(amps, qubits[0], qubits[1], np.diag(m))
    return apply_2q(amps, n, qubits[0], qubits[1], m)


@dataclass
class FusedOp:
    qubits: tuple[int, ...]
    matrix: np.ndarray


def _lift(m: np.ndarray, qubits: tuple[int, int], q: int) -> np.ndarray:
    """Embed a 1-qubit matrix on wire ``q`` into the 4x4 space of ``qubits``."""
    out = np.zeros((2, 2, 2, 2), dtype=complex)
    if q == qubits[0]:
        out[:, 0, :, 0] = m
        out[:, 1, :, 1] = m
    else:
        out[0, :, 0, :] = m
        out[1, :, 1, :] = m
    return out.reshape(4, 4)


def _as_pair(m: np.ndarray, src: tuple[int, int], dst: tuple[int, int]) -> np.ndarray:
    if src == dst:
        return m
    return m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def fuse(gates: Iterable[Gate]) -> list[FusedOp]:
    """Greedy fusion into blocks acting on at most two qubits.

    Pending single-qubit gates are folded into the next two-qubit gate on their
    wire; a two-qubit gate merges into the previous block when that block is
    the most recent operation on both of its wires.
    """
    ops: list[FusedOp] = []
    pending: dict[int, np.ndarray] = {}
    last: dict[int, int] = {}
    for g in gates:
        if g.kind in ("BARRIER", "I"):
            continue
        m = g.matrix()
        if len(g.qubits) == 1:
            q = g.qubits[0]
            pending[q] = m @ pending[q] if q in pending else m
            continue
        pair = g.qubits
        for q in pair:
            if q in pending:
                m = m @ _lift(pending.pop(q), pair, q)
        a, b = pair
        prev = last.get(a)
        if prev is not None and last.get(b) == prev and set(ops[prev].qubits) == {a, b}:
            blk = ops[prev]
            blk.matrix = m @ _as_pair(blk.matrix, blk.qubits, pair)
            blk.qubits = pair
            continue
        ops.append(FusedOp(pair, m))
        last[a] = last[b] = len(ops) - 1
    for q, m in sorted(pending.items()):
        ops.append(FusedOp((q,), m))
    return ops


def apply_gate(s: StateVector, g: Gate) -> StateVector:
    """Apply one gate in place and return the state."""
    if any(q >= s.n_qubits for q in g.qubits):
        raise ValueError(f"gate {g.to_line()} out of range for {s.n_qubits} qubits")
    if g.kind in ("BARRIER", "I"):
        return s
    s.amplitudes = _apply_block(s.amplitudes, s.n_qubits, g.qubits, g.matrix())
    return s


def apply_circuit(s: StateVector, c: QuantumCircuit, fused: bool = True) -> StateVector:
    """Apply a whole circuit in place (fusing gates unless ``fused=False``)."""
    if c.n_qubits != s.n_qubits:
        raise ValueError(f"circuit width {c.n_qubits} != state width {s.n_qubits}")
    if not fused:
        for g in c.gates:
            apply_gate(s, g)
        return s
    amps = s.amplitudes
    for op in fuse(c.gates):
        amps = _apply_block(amps, s.n_qubits, op.qubits, op.matrix)
    s.amplitudes = amps
    return s


def apply_fused(s: StateVector, ops: list[FusedOp]) -> StateVector:
    amps = s.amplitudes
    for op in ops:
        amps = _apply_block(amps, s.n_qubits, op.qubits, op.matrix)
    s.amplitudes = amps
    return s


# ---------------------------------------------------------------- measurement


def expectation(s: StateVector, o: PauliTermSum) -> float:
    """<s|o|s> for a Hermitian Pauli sum; raises if an imaginary part survives."""
    if o.n_qubits != s.n_qubits:
        raise ValueError(f"operator width {o.n_qubits} != state width {s.n_qubits}")
    val = expectation_dense(o, s.amplitudes)
    scale = max(1.0, sum(abs(c) for c, _ in o.terms))
    if abs(val.imag) > IMAG_TOL * scale:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return float(val.real)


@dataclass(frozen=True)
class ReadoutNoise:
    """Independent per-qubit flips: ``p01`` = P(read 1 | 0), ``p10`` = P(read 0 | 1)."""

    p01: float | tuple[float, ...] = 0.0
    p10: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        for p in np.atleast_1d(self.p01).tolist() + np.atleast_1d(self.p10).tolist():
            if not 0.0 <= p <= 1.0:
                raise ValueError("readout flip probabilities must lie in [0, 1]")

    def rates(self, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
        p01 = np.broadcast_to(np.asarray(self.p01, dtype=float), (n_qubits,))
        p10 = np.broadcast_to(np.asarray(self.p10, dtype=float), (n_qubits,))
        return p01, p10

    @property
    def is_trivial(self) -> bool:
        return not (np.any(np.asarray(self.p01)) or np.any(np.asarray(self.p10)))


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so shot experiments replay bit-exactly."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox stream for the work item ``keys`` under ``seed``.

    The stream depends only on ``(seed, keys)``, so work items give the same
    draws whether they run serially or on separate workers.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and keys must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a sub-task that itself derives further streams."""
    entropy = [int(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` basis indices from a probability vector (multinomial)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(probs, 0.0, None)
    p = p / p.sum()
    counts = rng.multinomial(shots, p)
    return np.repeat(np.arange(p.size, dtype=np.int64), counts)


def apply_readout(
    indices: np.ndarray, n_qubits: int, noise: ReadoutNoise | None, rng: np.random.Generator
) -> np.ndarray:
    """Flip each bit of each recorded index independently per the readout channel."""
    if noise is None or noise.is_trivial:
        return indices
    p01, p10 = noise.rates(n_qubits)
    out = indices.copy()
    for q in range(n_qubits):
        bit = (indices >> q) & 1
        u = rng.random(indices.size)
        flip = np.where(bit == 1, u < p10[q], u < p01[q])
        out ^= flip.astype(np.int64) << q
    return out


def bitstring(index: int, n_qubits: int) -> str:
    """Character ``k`` is qubit ``k``."""
    return "".join(str((index >> q) & 1) for q in range(n_qubits))


def sample_counts(
    s: StateVector, shots: int, readout_noise: ReadoutNoise | None = None, seed=0
) -> dict[str, int]:
    """Histogram of measured bitstrings (character k = qubit k)."""
    rng = make_rng(seed)
    idx = sample_indices(s.probabilities(), shots, rng)
    idx = apply_readout(idx, s.n_qubits, readout_noise, rng)
    values, counts = np.unique(idx, return_counts=True)
    return {bitstring(int(v), s.n_qubits): int(c) for v, c in zip(values, counts)}


def counts_to_csv(counts: dict[str, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bitstring", "count"])
    for key in sorted(counts):
        w.writerow([key, counts[key]])
    return buf.getvalue()
