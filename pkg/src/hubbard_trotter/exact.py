"""Reference continuous-time evolution exp(-i H tau)|psi> without building H.

The Hamiltonian is compiled into flip-mask groups (see
:func:`hubbard_trotter.pauli.compile_pauli_sum`) and exponentiated with a
restarted Lanczos method whose step size adapts to an a-posteriori error
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .pauli import CompiledPauliSum, PauliTermSum, compile_pauli_sum
from .statevector import StateVector


class KrylovConvergenceError(RuntimeError):
    """Raised when the Krylov exponential cannot reach the requested tolerance."""


class SparseHamiltonian:
    """Matrix-free Hermitian operator; identity terms are dropped (global phase only)."""

    def __init__(self, op: PauliTermSum):
        self.op = op.without_identity()
        self.energy_shift = op.identity_coefficient()
        self.n_qubits = op.n_qubits
        self._compiled: CompiledPauliSum = compile_pauli_sum(self.op)

    @property
    def compiled(self) -> CompiledPauliSum:
        return self._compiled

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self._compiled.matvec(v)

    def norm_bound(self) -> float:
        return sum(abs(c) for c, _ in self.op.terms)

    def restricted(self, support: np.ndarray) -> "RestrictedAction":
        return RestrictedAction.build(self._compiled, support)


@dataclass
class RestrictedAction:
    """H acting on the smallest basis subset closed under H that contains ``support``.

    Every basis state reachable from the support through nonzero matrix elements
    is collected by a breadth-first search over the flip masks.  For the
    Hubbard Hamiltonian from a basis state this is one fixed-particle-number
    sector, far smaller than the full space.  ``neighbors[k, i]`` is the
    position of ``basis[i] ^ masks[k]`` (or ``-1`` where the element vanishes).
    """

    n_qubits: int
    basis: np.ndarray
    neighbors: np.ndarray
    phases: np.ndarray

    @classmethod
    def build(cls, comp: CompiledPauliSum, support: np.ndarray) -> "RestrictedAction":
        n = comp.n_qubits
        seen = np.zeros(2**n, dtype=bool)
        frontier = np.unique(np.asarray(support, dtype=np.uint64))
        seen[frontier] = True
        chunks = [frontier]
        off_masks = [x for x in comp.masks if x != 0]
        while frontier.size:
            found = []
            for x in off_masks:
                cand = frontier ^ np.uint64(x)
                cand = cand[~seen[cand]]
                if cand.size == 0:
                    continue
                # <cand|H|frontier> = f_x[cand]; keep only nonzero links
                cand = cand[np.abs(comp.phases_at(x, cand)) > 0]
                seen[cand] = True
                found.append(cand)
            frontier = np.unique(np.concatenate(found)) if found else np.empty(0, np.uint64)
            chunks.append(frontier)
        basis = np.sort(np.concatenate(chunks))
        position = np.full(2**n, -1, dtype=np.int64)
        position[basis] = np.arange(basis.size)
        neighbors = np.empty((len(comp.masks), basis.size), dtype=np.int64)
        phases = np.empty((len(comp.masks), basis.size), dtype=complex)
        for k, x in enumerate(comp.masks):
            f = comp.phases_at(x, basis)
            nb = position[basis ^ np.uint64(x)]
            live = np.abs(f) > 0
            neighbors[k] = np.where(live, nb, -1)
            phases[k] = np.where(live, f, 0.0)
        if np.any(neighbors < -1) or np.any((neighbors == -1) & (phases != 0)):
            raise RuntimeError("restricted basis is not closed under H")
        neighbors[neighbors < 0] = 0  # phase is zero there, any valid index works
        return cls(n, basis, neighbors, phases)

    @property
    def dim(self) -> int:
        return int(self.basis.size)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("ki,ki->i", self.phases, v[self.neighbors])

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return full[self.basis]

    def expand(self, sub: np.ndarray) -> np.ndarray:
        out = np.zeros(2**self.n_qubits, dtype=complex)
        out[self.basis] = sub
        return out


def matvec(h: SparseHamiltonian, v: StateVector) -> StateVector:
    if v.n_qubits != h.n_qubits:
        raise ValueError(f"state width {v.n_qubits} != operator width {h.n_qubits}")
    return StateVector(h.matvec(v.amplitudes), copy=False)


def _tridiagonal(alphas, betas) -> np.ndarray:
    k = len(alphas)
    off = np.asarray(betas[: k - 1])
    return np.diag(alphas) + np.diag(off, 1) + np.diag(off, -1)


def _lanczos_step(apply: Callable[[np.ndarray], np.ndarray], v: np.ndarray, dt: float, m: int):
    """One Krylov step of length ``dt``; returns (new vector, error estimate)."""
    beta0 = np.linalg.norm(v)
    V = np.empty((m, v.size), dtype=complex)
    V[0] = v / beta0
    alphas: list[float] = []
    betas: list[float] = []
    for j in range(m):
        w = apply(V[j])
        a = float(np.vdot(V[j], w).real)
        alphas.append(a)
        # full reorthogonalization (applied twice) keeps the basis clean
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        if b < 1e-14 * max(1.0, abs(a)):
            # invariant subspace: the exponential is exact inside it
            coef = scipy.linalg.expm(-1j * dt * _tridiagonal(alphas, betas))[:, 0]
            return beta0 * (coef @ V[: j + 1]), 0.0
        betas.append(b)
        if j < m - 1:
            V[j + 1] = w / b
    coef = scipy.linalg.expm(-1j * dt * _tridiagonal(alphas, betas))[:, 0]
    err = beta0 * betas[-1] * abs(coef[-1])
    return beta0 * (coef @ V), float(err)


def evolve_exact(
    h: SparseHamiltonian,
    psi0: StateVector,
    tau: float,
    tol: float = 1e-10,
    krylov_dim: int = 30,
    max_substeps: int = 100_000,
    restrict: bool = True,
) -> StateVector:
    """exp(-i H tau) psi0 (energy shift omitted) with adaptive Lanczos substeps.

    The summed per-substep error estimates stay below ``tol``; a substep that
    cannot be made accurate raises :class:`KrylovConvergenceError`.  With
    ``restrict`` the Krylov vectors live on the basis states reachable from
    the support of ``psi0``, which is exact because H never leaves that set.
    """
    if psi0.n_qubits != h.n_qubits:
        raise ValueError(f"state width {psi0.n_qubits} != operator width {h.n_qubits}")
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    if krylov_dim < 2:
        raise ValueError("krylov_dim must be at least 2")
    full = psi0.amplitudes.astype(complex, copy=True)
    if tau == 0:
        return StateVector(full, copy=False)
    sub = None
    if restrict:
        support = np.flatnonzero(full).astype(np.uint64)
        sub = h.restricted(support)
        if sub.dim > full.size // 2:
            sub = None
    apply = sub.matvec if sub is not None else h.matvec
    v = sub.restrict(full) if sub is not None else full
    m = min(krylov_dim, v.size)

    sign = 1.0 if tau > 0 else -1.0
    remaining = abs(tau)
    dt = min(remaining, m / (2.0 * max(h.norm_bound(), 1e-300)) * 4)
    min_dt = abs(tau) * 1e-9
    steps = 0
    while remaining > 0:
        dt = min(dt, remaining)
        budget = tol * dt / abs(tau)
        new, err = _lanczos_step(apply, v, sign * dt, m)
        if err <= budget:
            v = new
            remaining -= dt
            steps += 1
            if err < 0.1 * budget:
                dt *= 1.5
        else:
            dt *= 0.5
            if dt < min_dt:
                raise KrylovConvergenceError(
                    f"Krylov step size underflow at dimension {krylov_dim}"
                )
        if steps > max_substeps:
            raise KrylovConvergenceError("too many Krylov substeps")
    out = sub.expand(v) if sub is not None else v
    return StateVector(out, copy=False)
