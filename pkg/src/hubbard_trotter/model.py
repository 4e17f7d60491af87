"""Fermi-Hubbard chain on qubits.

Site ``j`` with spin up lives on qubit ``2j`` and spin down on qubit ``2j+1``.
Each spin species carries its own Jordan-Wigner string, so same-spin hopping
between neighbouring sites is a plain XX+YY coupling between qubits two apart.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .pauli import PauliTermSum, pauli_on


@dataclass(frozen=True)
class HubbardParams:
    """Open-boundary chain of ``L`` sites with uniform couplings (hbar = 1)."""

    L: int
    t: float = 1.0
    U: float = 1.0
    mu_up: float = 0.0
    mu_down: float = 0.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L!r}")
        for name in ("t", "U", "mu_up", "mu_down"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def n_qubits(self) -> int:
        return 2 * self.L


@dataclass(frozen=True)
class BasisState:
    """Computational basis state; ``bits[k]`` is the value of qubit ``k``."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be a non-empty sequence of 0/1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, text: str) -> "BasisState":
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def zeros(cls, n_qubits: int) -> "BasisState":
        return cls((0,) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        return sum(b << q for q, b in enumerate(self.bits))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "bits": str(self)})

    @classmethod
    def from_json(cls, text: str) -> "BasisState":
        data = json.loads(text)
        state = cls.from_string(data["bits"])
        if state.n_qubits != data["n_qubits"]:
            raise ValueError("bit string length does not match n_qubits")
        return state


def _check_L(L: int) -> int:
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L!r}")
    return int(L)


def hopping_terms(L: int, t: float, bonds=None) -> list[tuple[float, str]]:
    """-t/2 (XX + YY) on (2j, 2j+2) and (2j+1, 2j+3) for each bond j."""
    n = 2 * L
    if bonds is None:
        bonds = range(L - 1)
    terms = []
    for j in bonds:
        for q in (2 * j, 2 * j + 1):
            for p in "XY":
                terms.append((-t / 2, pauli_on(n, {q: p, q + 2: p})))
    return terms


def interaction_terms(L: int, U: float, include_identity: bool = True) -> list[tuple[float, str]]:
    n = 2 * L
    terms = []
    for j in range(L):
        a, b = 2 * j, 2 * j + 1
        if include_identity:
            terms.append((U / 4, "I" * n))
        terms.append((U / 4, pauli_on(n, {a: "Z", b: "Z"})))
        terms.append((-U / 4, pauli_on(n, {a: "Z"})))
        terms.append((-U / 4, pauli_on(n, {b: "Z"})))
    return terms


def chemical_terms(
    L: int, mu_up: float, mu_down: float, include_identity: bool = True
) -> list[tuple[float, str]]:
    n = 2 * L
    terms = []
    for j in range(L):
        for q, mu in ((2 * j, mu_up), (2 * j + 1, mu_down)):
            if include_identity:
                terms.append((mu / 2, "I" * n))
            terms.append((-mu / 2, pauli_on(n, {q: "Z"})))
    return terms


def build_hamiltonian(p: HubbardParams, include_identity: bool = True) -> PauliTermSum:
    """Qubit Hamiltonian of the chain on 2L qubits.

    Identity terms only shift the energy; pass ``include_identity=False`` to
    drop them.
    """
    L = _check_L(p.L)
    terms = (
        hopping_terms(L, p.t)
        + interaction_terms(L, p.U, include_identity)
        + chemical_terms(L, p.mu_up, p.mu_down, include_identity)
    )
    return PauliTermSum(2 * L, tuple(terms))


def hamiltonian_parts(p: HubbardParams) -> dict[str, PauliTermSum]:
    """Split the identity-free Hamiltonian into the pieces one Trotter step exponentiates.

    ``hop_even`` holds the bonds (j, j+1) with even j, ``hop_odd`` the odd ones.
    Terms inside each part commute.
    """
    L = _check_L(p.L)
    n = 2 * L
    return {
        "mu": PauliTermSum(n, tuple(chemical_terms(L, p.mu_up, p.mu_down, False))),
        "U": PauliTermSum(n, tuple(interaction_terms(L, p.U, False))),
        "hop_even": PauliTermSum(n, tuple(hopping_terms(L, p.t, range(0, L - 1, 2)))),
        "hop_odd": PauliTermSum(n, tuple(hopping_terms(L, p.t, range(1, L - 1, 2)))),
    }


def neel_operator(L: int) -> PauliTermSum:
    """Staggered magnetization (1/4L) sum_j (-1)^j (Z_{2j+1} - Z_{2j})."""
    L = _check_L(L)
    n = 2 * L
    c = 1.0 / (4 * L)
    terms = []
    for j in range(L):
        s = c if j % 2 == 0 else -c
        terms.append((s, pauli_on(n, {2 * j + 1: "Z"})))
        terms.append((-s, pauli_on(n, {2 * j: "Z"})))
    return PauliTermSum(n, tuple(terms))


def total_number_operator(L: int) -> PauliTermSum:
    L = _check_L(L)
    n = 2 * L
    terms = [(0.5, "I" * n)] * n
    terms += [(-0.5, pauli_on(n, {k: "Z"})) for k in range(n)]
    return PauliTermSum(n, tuple(terms))


def total_sz_operator(L: int) -> PauliTermSum:
    L = _check_L(L)
    n = 2 * L
    terms = []
    for j in range(L):
        terms.append((0.25, pauli_on(n, {2 * j + 1: "Z"})))
        terms.append((-0.25, pauli_on(n, {2 * j: "Z"})))
    return PauliTermSum(n, tuple(terms))


def site_spin_xy_operator(L: int, j: int, axis: str) -> PauliTermSum:
    """In-plane spin of site ``j``; carries a Z string over qubits 0..2j-1."""
    L = _check_L(L)
    if not 0 <= j < L:
        raise ValueError(f"site {j} out of range for L={L}")
    n = 2 * L
    prefix = {q: "Z" for q in range(2 * j)}
    a, b = 2 * j, 2 * j + 1
    if axis == "x":
        pairs = [(0.25, "X", "X"), (0.25, "Y", "Y")]
    elif axis == "y":
        pairs = [(0.25, "X", "Y"), (-0.25, "Y", "X")]
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    terms = [(c, pauli_on(n, {**prefix, a: pa, b: pb})) for c, pa, pb in pairs]
    return PauliTermSum(n, tuple(terms))


def neel_state(L: int) -> BasisState:
    """Up electron on even sites, down electron on odd sites: |1001 1001 ...>."""
    L = _check_L(L)
    bits = []
    for j in range(L):
        bits += [1, 0] if j % 2 == 0 else [0, 1]
    return BasisState(tuple(bits))
