"""Pauli strings and weighted Pauli sums.

A Pauli string is stored as a plain letter string over ``IXYZ`` where the
character at position ``k`` acts on qubit ``k``.  Amplitude indices use the
opposite visual convention: qubit 0 is the least significant bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

PAULI_LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# coefficient magnitudes at or below this are dropped by canonicalization
ZERO_COEFF = 1e-15


def validate_pauli_string(letters: str, n_qubits: int | None = None) -> str:
    if not letters or any(ch not in PAULI_LETTERS for ch in letters):
        raise ValueError(f"invalid Pauli string {letters!r}")
    if n_qubits is not None and len(letters) != n_qubits:
        raise ValueError(f"Pauli string {letters!r} has length {len(letters)}, expected {n_qubits}")
    return letters


def pauli_on(n_qubits: int, ops: dict[int, str]) -> str:
    """Letter string with the given single-qubit letters and identity elsewhere."""
    letters = ["I"] * n_qubits
    for q, p in ops.items():
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} out of range for width {n_qubits}")
        letters[q] = p
    return "".join(letters)


def pauli_masks(letters: str) -> tuple[int, int, int]:
    """Return ``(x_mask, z_mask, n_y)`` for the symplectic form P = i^n_y X^x Z^z."""
    x = z = 0
    n_y = 0
    for q, ch in enumerate(letters):
        if ch in "XY":
            x |= 1 << q
        if ch in "ZY":
            z |= 1 << q
        if ch == "Y":
            n_y += 1
    return x, z, n_y


def pauli_matrix(letters: str) -> np.ndarray:
    """Dense matrix of a Pauli string, qubit 0 least significant."""
    out = np.ones((1, 1), dtype=complex)
    for ch in letters:
        # later qubits are more significant, so they go on the left
        out = np.kron(_SINGLE[ch], out)
    return out


def parity(values: np.ndarray, mask: int) -> np.ndarray:
    """Bit parity of ``values & mask`` as an int array of 0/1."""
    return (np.bitwise_count(values & np.uint64(mask)) & 1).astype(np.int8)


@dataclass(frozen=True)
class PauliTermSum:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits.

    Terms are kept canonical: merged duplicates, zero coefficients dropped,
    sorted lexicographically on the letter string.
    """

    n_qubits: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        merged: dict[str, float] = {}
        for coeff, letters in self.terms:
            validate_pauli_string(letters, self.n_qubits)
            c = float(coeff)
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient on {letters}")
            merged[letters] = merged.get(letters, 0.0) + c
        canon = tuple(
            (c, s) for s, c in sorted(merged.items()) if abs(c) > ZERO_COEFF
        )
        object.__setattr__(self, "terms", canon)

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[float, str]]) -> "PauliTermSum":
        return cls(n_qubits, tuple(terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "PauliTermSum") -> "PauliTermSum":
        if other.n_qubits != self.n_qubits:
            raise ValueError("width mismatch")
        return PauliTermSum(self.n_qubits, self.terms + other.terms)

    def __mul__(self, scalar: float) -> "PauliTermSum":
        return PauliTermSum(self.n_qubits, tuple((scalar * c, s) for c, s in self.terms))

    __rmul__ = __mul__

    def coefficient(self, letters: str) -> float:
        for c, s in self.terms:
            if s == letters:
                return c
        return 0.0

    def without_identity(self) -> "PauliTermSum":
        ident = "I" * self.n_qubits
        return PauliTermSum(self.n_qubits, tuple(t for t in self.terms if t[1] != ident))

    def identity_coefficient(self) -> float:
        return self.coefficient("I" * self.n_qubits)

    def is_diagonal(self) -> bool:
        return all(set(s) <= {"I", "Z"} for _, s in self.terms)

    def max_interaction_range(self) -> int:
        """Largest distance between two non-identity letters of any term."""
        best = 0
        for _, s in self.terms:
            support = [q for q, ch in enumerate(s) if ch != "I"]
            if support:
                best = max(best, support[-1] - support[0])
        return best

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > 12:
            raise ValueError("dense conversion limited to 12 qubits")
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for c, s in self.terms:
            out += c * pauli_matrix(s)
        return out

    # serialization: {"n_qubits": N, "terms": ["-0.5 XIXI", ...]}
    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [f"{c!r} {s}" for c, s in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PauliTermSum":
        terms = []
        for entry in data["terms"]:
            coeff, letters = entry.split()
            terms.append((float(coeff), letters))
        return cls(int(data["n_qubits"]), tuple(terms))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PauliTermSum":
        return cls.from_dict(json.loads(text))


_INDEX_CACHE: dict[int, np.ndarray] = {}


def _index_array(n_qubits: int) -> np.ndarray:
    """``arange(2**n)`` as uint64, cached for the most recent width only."""
    arr = _INDEX_CACHE.get(n_qubits)
    if arr is None:
        _INDEX_CACHE.clear()
        arr = np.arange(2**n_qubits, dtype=np.uint64)
        _INDEX_CACHE[n_qubits] = arr
    return arr


def xor_shift(v: np.ndarray, x: int, n_qubits: int) -> np.ndarray:
    """Return ``w`` with ``w[c] = v[c ^ x]`` (axis flips instead of a gather)."""
    if x == 0:
        return v
    axes = tuple(n_qubits - 1 - q for q in range(n_qubits) if (x >> q) & 1)
    return np.flip(v.reshape((2,) * n_qubits), axis=axes).reshape(-1)


class CompiledPauliSum:
    """Pauli sum grouped by X-mask for matrix-free action.

    For each distinct flip mask ``x`` the operator acts as
    ``(H v)[c] = f_x[c] * v[c ^ x]`` with
    ``f_x[c] = sum_k coeff_k * i^ny_k * (-1)^{|(c ^ x) & z_k|}``.
    Full-length phase tables are built lazily; :meth:`phases_at` evaluates them
    on any subset of indices.
    """

    def __init__(self, op: PauliTermSum):
        self.n_qubits = op.n_qubits
        groups: dict[int, list[tuple[complex, int]]] = {}
        for coeff, letters in op.terms:
            x, z, n_y = pauli_masks(letters)
            groups.setdefault(x, []).append((coeff * (1j**n_y), z))
        self.masks = tuple(sorted(groups))
        self.groups = {x: tuple(groups[x]) for x in self.masks}
        self._full: dict[int, np.ndarray] = {}

    def phases_at(self, x: int, indices: np.ndarray) -> np.ndarray:
        src = indices.astype(np.uint64) ^ np.uint64(x)
        out = np.zeros(indices.shape, dtype=complex)
        for c, z in self.groups[x]:
            out += c * (1.0 - 2.0 * parity(src, z))
        if np.all(out.imag == 0):
            return out.real.copy()
        return out

    def full_phases(self, x: int) -> np.ndarray:
        f = self._full.get(x)
        if f is None:
            f = self.phases_at(x, _index_array(self.n_qubits))
            self._full[x] = f
        return f

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(v.shape, dtype=complex)
        for x in self.masks:
            out += self.full_phases(x) * xor_shift(v, x, self.n_qubits)
        return out


def compile_pauli_sum(op: PauliTermSum) -> CompiledPauliSum:
    return CompiledPauliSum(op)


def expectation_dense(op: PauliTermSum, psi: np.ndarray) -> complex:
    """Matrix-free <psi|op|psi> on a raw amplitude vector; complex result."""
    n = op.n_qubits
    idx = _index_array(n)
    total = 0.0 + 0.0j
    conj = psi.conj()
    probs = None
    for coeff, letters in op.terms:
        x, z, n_y = pauli_masks(letters)
        if x == 0:
            if probs is None:
                probs = (conj * psi).real
            sign = 1.0 - 2.0 * parity(idx, z) if z else 1.0
            total += coeff * np.sum(probs * sign)
            continue
        sign = 1.0 - 2.0 * parity(idx ^ np.uint64(x), z) if z else 1.0
        total += coeff * (1j**n_y) * np.dot(conj, sign * xor_shift(psi, x, n))
    return complex(total)


def diagonal_values(op: PauliTermSum) -> np.ndarray:
    """Eigenvalue of a Z-diagonal operator on every computational basis state."""
    if not op.is_diagonal():
        raise ValueError("operator is not diagonal in the Z basis")
    idx = _index_array(op.n_qubits)
    out = np.zeros(idx.shape, dtype=float)
    for coeff, letters in op.terms:
        _, z, _ = pauli_masks(letters)
        out += coeff * (1.0 - 2.0 * parity(idx, z))
    return out
