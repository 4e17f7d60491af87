"""Pauli twirling of CZ gates.

A twirl is a quadruple ``(P1, P2, P3, P4)``: ``P1`` and ``P2`` act on the
first and second CZ wire before the gate, ``P3`` and ``P4`` after it, chosen
so that ``(P3 x P4) CZ (P1 x P2)`` equals CZ up to a global phase.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from ..circuit import Gate, QuantumCircuit, is_basis_circuit
from ..pauli import pauli_matrix
from ..statevector import derive_rng

Quadruple = tuple[str, str, str, str]

_CZ = np.diag([1, 1, 1, -1]).astype(complex)
# symplectic bits (x, z) so that products ignore phase via XOR
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_FROM_BITS = {v: k for k, v in _BITS.items()}


def _pair(first: str, second: str) -> np.ndarray:
    # the first CZ wire is the more significant factor of the 4x4 block
    return np.kron(pauli_matrix(first), pauli_matrix(second))


def is_cz_twirl(quad: Quadruple, tol: float = 1e-12) -> bool:
    p1, p2, p3, p4 = quad
    m = _pair(p3, p4) @ _CZ @ _pair(p1, p2)
    # m is unitary, so it is proportional to CZ iff |tr(CZ^dag m)| = 4
    return abs(abs(np.trace(_CZ.conj().T @ m)) - 4.0) < tol


@lru_cache(maxsize=1)
def _twirl_set() -> tuple[Quadruple, ...]:
    return tuple(q for q in itertools.product("IXYZ", repeat=4) if is_cz_twirl(q))


def cz_twirl_set() -> list[Quadruple]:
    """All valid CZ twirls, found by exhausting the 256 Pauli quadruples."""
    return list(_twirl_set())


def compose_twirls(a: Quadruple, b: Quadruple) -> Quadruple:
    """Twirl ``b`` nested inside twirl ``a``: wire-wise Pauli products up to phase."""
    out = []
    for pa, pb in zip(a, b):
        xa, za = _BITS[pa]
        xb, zb = _BITS[pb]
        out.append(_FROM_BITS[(xa ^ xb, za ^ zb)])
    return tuple(out)


def twirl_circuit(c: QuantumCircuit, rng: np.random.Generator) -> QuantumCircuit:
    table = _twirl_set()
    gates: list[Gate] = []
    for g in c.gates:
        if g.kind != "CZ":
            gates.append(g)
            continue
        a, b = g.qubits
        p1, p2, p3, p4 = table[int(rng.integers(len(table)))]
        gates += [Gate(p, (q,)) for p, q in ((p1, a), (p2, b)) if p != "I"]
        gates.append(g)
        gates += [Gate(p, (q,)) for p, q in ((p3, a), (p4, b)) if p != "I"]
    return QuantumCircuit(c.n_qubits, tuple(gates))


def pauli_twirl(c: QuantumCircuit, instances: int, seed: int = 0) -> list[QuantumCircuit]:
    """``instances`` randomly twirled copies of a basis-form circuit.

    Instance ``i`` draws from its own stream, so instance lists are prefixes of
    each other when only ``instances`` changes.
    """
    if not is_basis_circuit(c):
        raise ValueError("twirling needs a basis-form circuit (CZ as the only entangler)")
    if instances < 1:
        raise ValueError("instances must be >= 1")
    return [twirl_circuit(c, derive_rng(seed, i)) for i in range(instances)]
