"""Qubit-level matrix product states driven by circuits (TEBD-style).

Each site tensor has shape ``(left bond, 2, right bond)``.  Two-qubit gates
must act on neighbouring sites; the pair is contracted, the gate applied and
the result split again by SVD.  Singular values are dropped smallest-first
while the discarded weight stays within ``cutoff``, then the bond is capped at
``chi_max``.  Every split is recorded in a :class:`TruncationLog`.

A Hubbard site of the fermion lattice corresponds to two consecutive qubits
(spin up on the even qubit, spin down on the odd one), so a site-level bond of
dimension chi sits between qubits ``2j + 1`` and ``2j + 2``.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .circuit import QuantumCircuit
from .model import BasisState
from .pauli import PauliTermSum, _SINGLE
from .statevector import FusedOp, StateVector, fuse

# singular values below this fraction of the largest are numerically zero
SVD_FLOOR = 1e-14


@dataclass
class MpsState:
    tensors: list[np.ndarray]
    center: int
    chi_max: int
    cutoff: float

    def __post_init__(self):
        if self.chi_max < 1:
            raise ValueError("chi_max must be a positive integer")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError("cutoff must lie in [0, 1)")
        if not self.tensors:
            raise ValueError("an MPS needs at least one site")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for a, b in zip(self.tensors, self.tensors[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError("bond dimension mismatch between neighbouring tensors")
        if not 0 <= self.center < len(self.tensors):
            raise ValueError("orthogonality center out of range")

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        """Dimensions of the N - 1 internal links, left to right."""
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dims(), default=1)

    def copy(self) -> "MpsState":
        return MpsState(list(self.tensors), self.center, self.chi_max, self.cutoff)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))


@dataclass(frozen=True)
class TruncationRecord:
    step: int
    link: int
    eps: float
    chi: int
    spectrum: tuple[float, ...] | None = None


@dataclass
class TruncationLog:
    """Per-split truncation records plus per-sweep wall time.

    ``link`` ``k`` is the bond between qubits ``k`` and ``k + 1``.  ``eps`` is
    the discarded squared singular-value weight divided by the total weight.
    """

    records: list[TruncationRecord] = field(default_factory=list)
    sweep_seconds: dict[int, float] = field(default_factory=dict)

    def add(self, rec: TruncationRecord) -> None:
        if not 0.0 <= rec.eps < 1.0 or rec.chi < 1:
            raise ValueError(f"invalid truncation record {rec}")
        self.records.append(rec)

    def extend(self, other: "TruncationLog") -> None:
        self.records.extend(other.records)
        for k, v in other.sweep_seconds.items():
            self.sweep_seconds[k] = self.sweep_seconds.get(k, 0.0) + v

    def total_discarded(self) -> float:
        return float(sum(r.eps for r in self.records))

    def max_eps(self) -> float:
        return max((r.eps for r in self.records), default=0.0)

    def sweep_maxima(self) -> dict[int, tuple[int, float]]:
        """step -> (largest retained bond, largest eps) over that step's splits."""
        out: dict[int, tuple[int, float]] = {}
        for r in self.records:
            chi, eps = out.get(r.step, (0, 0.0))
            out[r.step] = (max(chi, r.chi), max(eps, r.eps))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "link", "eps", "chi"])
        for r in self.records:
            w.writerow([r.step, r.link, repr(r.eps), r.chi])
        return buf.getvalue()


def discarded_weight(spectrum: np.ndarray, kept: int) -> float:
    """Squared weight of the discarded tail over the total squared weight."""
    w = np.asarray(spectrum, dtype=float) ** 2
    total = w.sum()
    return float(w[kept:].sum() / total) if total > 0 else 0.0


def choose_rank(s: np.ndarray, chi_max: int, cutoff: float) -> int:
    """Cutoff first (largest discard within ``cutoff``), then the cap."""
    w = s**2
    total = w.sum()
    # tail[k] = weight of s[k:]
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    ok = np.flatnonzero(tail <= cutoff * total)
    keep = max(1, int(ok[0]))
    nonzero = int(np.count_nonzero(s > SVD_FLOOR * s[0])) if s.size else 0
    return max(1, min(keep, nonzero, chi_max))


def mps_from_basis(state: BasisState, chi_max: int = 1024, cutoff: float = 0.0) -> MpsState:
    tensors = []
    for bit in state.bits:
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, bit, 0] = 1.0
        tensors.append(t)
    return MpsState(tensors, 0, chi_max, cutoff)


def to_statevector(m: MpsState) -> StateVector:
    """Contract the chain into amplitudes (qubit 0 least significant)."""
    if m.n_qubits > 24:
        raise ValueError("dense contraction limited to 24 qubits")
    psi = m.tensors[0].reshape(2, -1)
    for t in m.tensors[1:]:
        psi = (psi @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
    # C-order index is s_0 s_1 ... s_{N-1}, i.e. qubit 0 most significant
    arr = psi.reshape((2,) * m.n_qubits).transpose(range(m.n_qubits - 1, -1, -1))
    return StateVector(arr.reshape(-1))


# ---------------------------------------------------------------- canonical form


def _move_center(tensors: list[np.ndarray], center: int, target: int) -> int:
    while center < target:
        a = tensors[center]
        l, d, r = a.shape
        q, rr = np.linalg.qr(a.reshape(l * d, r))
        tensors[center] = q.reshape(l, d, -1)
        tensors[center + 1] = np.tensordot(rr, tensors[center + 1], axes=(1, 0))
        center += 1
    while center > target:
        a = tensors[center]
        l, d, r = a.shape
        q, rr = np.linalg.qr(a.reshape(l, d * r).T)
        tensors[center] = q.T.reshape(-1, d, r)
        tensors[center - 1] = np.tensordot(tensors[center - 1], rr.T, axes=(2, 0))
        center -= 1
    return center


def _apply_one(m: MpsState, q: int, u: np.ndarray) -> None:
    m.tensors[q] = np.einsum("ab,lbr->lar", u, m.tensors[q])


def _apply_two(
    m: MpsState, qubits: tuple[int, int], u: np.ndarray, go_right: bool,
    log: TruncationLog, step: int, record_spectra: bool,
) -> None:
    a, b = qubits
    i = min(a, b)
    if abs(a - b) != 1:
        raise ValueError(f"two-qubit gate on non-adjacent qubits {qubits}")
    g = u.reshape(2, 2, 2, 2)
    if a > b:
        g = g.transpose(1, 0, 3, 2)
    m.center = _move_center(m.tensors, m.center, i if m.center <= i else i + 1)
    A, B = m.tensors[i], m.tensors[i + 1]
    theta = np.tensordot(A, B, axes=(2, 0))  # l, s_i, s_j, r
    theta = np.einsum("pqst,lstr->lpqr", g, theta)
    l, _, _, r = theta.shape
    U, s, Vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
    k = choose_rank(s, m.chi_max, m.cutoff)
    eps = discarded_weight(s, k)
    s_kept = s[:k] / np.linalg.norm(s[:k])
    U, Vh = U[:, :k], Vh[:k]
    if go_right:
        m.tensors[i] = U.reshape(l, 2, k)
        m.tensors[i + 1] = (s_kept[:, None] * Vh).reshape(k, 2, r)
        m.center = i + 1
    else:
        m.tensors[i] = (U * s_kept[None, :]).reshape(l, 2, k)
        m.tensors[i + 1] = Vh.reshape(k, 2, r)
        m.center = i
    spectrum = tuple(float(x) for x in s) if record_spectra else None
    log.add(TruncationRecord(step, i, min(eps, np.nextafter(1.0, 0.0)), k, spectrum))


def check_adjacent(c: QuantumCircuit) -> None:
    for g in c.gates:
        if g.kind != "BARRIER" and len(g.qubits) == 2 and abs(g.qubits[0] - g.qubits[1]) != 1:
            raise ValueError(f"gate {g.to_line()} acts on non-adjacent qubits")


def apply_ops_mps(
    m: MpsState, ops: list[FusedOp], step: int = 0, record_spectra: bool = False
) -> tuple[MpsState, TruncationLog]:
    out = m.copy()
    log = TruncationLog()
    t0 = time.perf_counter()
    two = [k for k, op in enumerate(ops) if len(op.qubits) == 2]
    nxt = {two[n]: two[n + 1] for n in range(len(two) - 1)}
    for k, op in enumerate(ops):
        if len(op.qubits) == 1:
            _apply_one(out, op.qubits[0], op.matrix)
            continue
        i = min(op.qubits)
        # leave the center on whichever side the next two-qubit block needs
        go_right = k not in nxt or min(ops[nxt[k]].qubits) > i
        _apply_two(out, op.qubits, op.matrix, go_right, log, step, record_spectra)
    log.sweep_seconds[step] = time.perf_counter() - t0
    return out, log


def apply_circuit_mps(
    m: MpsState, c: QuantumCircuit, step: int = 0, record_spectra: bool = False
) -> tuple[MpsState, TruncationLog]:
    """Apply ``c`` to a copy of ``m``; consecutive gates on one pair are fused.

    Records carry ``step`` so incremental runs can tag each Trotter step.
    """
    if c.n_qubits != m.n_qubits:
        raise ValueError(f"circuit width {c.n_qubits} != MPS width {m.n_qubits}")
    check_adjacent(c)
    return apply_ops_mps(m, fuse(c.gates), step, record_spectra)


# ---------------------------------------------------------------- measurement


def _term_value(m: MpsState, letters: str) -> complex:
    support = [q for q, ch in enumerate(letters) if ch != "I"]
    if not support:
        return complex(m.norm() ** 2)
    lo = min(support[0], m.center)
    hi = max(support[-1], m.center)
    env = np.eye(m.tensors[lo].shape[0], dtype=complex)
    for q in range(lo, hi + 1):
        t = m.tensors[q]
        ch = letters[q]
        top = t if ch == "I" else np.einsum("ab,lbr->lar", _SINGLE[ch], t)
        env = np.einsum("xy,xsa,ysb->ab", env, t.conj(), top, optimize=True)
    return complex(np.trace(env))


def expectation_mps(m: MpsState, o: PauliTermSum) -> float:
    """Sum of exact per-term contractions between the support and the center."""
    if o.n_qubits != m.n_qubits:
        raise ValueError(f"operator width {o.n_qubits} != MPS width {m.n_qubits}")
    total = 0.0 + 0.0j
    for coeff, letters in o.terms:
        total += coeff * _term_value(m, letters)
    scale = max(1.0, sum(abs(c) for c, _ in o.terms))
    if abs(total.imag) > 1e-9 * scale:
        raise ValueError(f"expectation has imaginary part {total.imag:.3e}")
    return float(total.real)
