"""Twirled readout error extinction (TREX).

Before measurement every qubit is flipped with probability 1/2 (an X gate
chosen by a random mask) and the recorded bits are XORed with the same mask
afterwards.  Averaged over masks, any per-qubit readout channel becomes
symmetric, so each Z-string expectation is only rescaled by
``prod_q (1 - p01_q - p10_q)``.  That factor can be measured on ``|0...0>``
and divided out (``calibrate=True``).
"""

from __future__ import annotations

import numpy as np

from ..circuit import QuantumCircuit
from ..pauli import PauliTermSum, diagonal_values
from ..statevector import derive_rng
from .noise import (
    NoiseModel,
    TrajectoryEnsemble,
    measure,
    readout_distribution,
    simulate_trajectories,
    term_means,
)


def _require_diagonal(o: PauliTermSum) -> None:
    if not o.is_diagonal():
        raise ValueError("TREX needs a Z-diagonal observable; rotate the basis first")


def trex_term_means(
    ens: TrajectoryEnsemble,
    o_diag: PauliTermSum,
    samples: int,
    shots: int,
    noise: NoiseModel,
    seed: int,
    key: tuple[int, ...] = (),
) -> dict[str, float]:
    """Mask-averaged Z-string means; ``shots`` are split evenly over ``samples`` masks.

    Random draws come from streams derived from ``(seed, *key)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = ens.n_qubits
    per = max(1, shots // samples)
    masks = derive_rng(seed, *key, 0).integers(0, 2**n, size=samples)
    acc: dict[str, float] = {}
    for k, mask in enumerate(masks.tolist()):
        idx = measure(ens, per, noise, derive_rng(seed, *key, 1, k), flip_mask=mask) ^ mask
        for s, v in term_means(idx, o_diag).items():
            acc[s] = acc.get(s, 0.0) + v / samples
    return acc


def trex_calibration(
    n_qubits: int,
    o_diag: PauliTermSum,
    noise: NoiseModel,
    samples: int,
    shots: int,
    seed: int,
    key: tuple[int, ...] = (),
) -> dict[str, float]:
    """Measured rescaling of each Z-string, obtained by running TREX on ``|0...0>``."""
    _require_diagonal(o_diag)
    ens = TrajectoryEnsemble(n_qubits, np.eye(1, 2**n_qubits), np.array([1]))
    factors = trex_term_means(ens, o_diag, samples, shots, noise, seed, key)
    for s, f in factors.items():
        if s != "I" * n_qubits and f <= 0.05:
            raise ValueError(f"calibration factor {f:.3g} for {s} too small to divide by")
    return factors


def combine(o_diag: PauliTermSum, means: dict[str, float], factors: dict[str, float] | None) -> float:
    total = 0.0
    for c, s in o_diag.terms:
        if set(s) == {"I"}:
            total += c
            continue
        total += c * means[s] / (factors[s] if factors else 1.0)
    return float(total)


def apply_trex(
    c: QuantumCircuit,
    o_diagonal: PauliTermSum,
    samples: int = 10,
    shots: int = 4000,
    noise: NoiseModel | None = None,
    seed: int = 0,
    calibrate: bool = False,
    trajectories: int | None = None,
) -> float:
    """TREX estimate of a Z-diagonal observable.

    Without calibration the result is the symmetrized (rescaled) estimate;
    with it, each Z-string is divided by its measured rescaling factor.
    """
    _require_diagonal(o_diagonal)
    if o_diagonal.n_qubits != c.n_qubits:
        raise ValueError("observable and circuit widths differ")
    noise = noise if noise is not None else NoiseModel.noiseless()
    ens = simulate_trajectories(c, noise, trajectories or shots, derive_rng(seed, 0))
    means = trex_term_means(ens, o_diagonal, samples, shots, noise, seed, (1,))
    factors = None
    if calibrate:
        factors = trex_calibration(c.n_qubits, o_diagonal, noise, samples, shots, seed, (2,))
    return combine(o_diagonal, means, factors)


def trex_expected(probs: np.ndarray, o_diag: PauliTermSum, noise: NoiseModel) -> float:
    """Exact mean of the uncalibrated TREX estimator over all masks (N <= 12).

    Independent of the sampling code: every mask is enumerated, the flipped
    distribution goes through the mask-gate error and the readout channel, and
    the mask is XORed back before evaluating the observable.
    """
    _require_diagonal(o_diag)
    n = o_diag.n_qubits
    if n > 12:
        raise ValueError("mask enumeration limited to 12 qubits")
    values = diagonal_values(o_diag)
    idx = np.arange(2**n)
    flip_p = (2.0 / 3.0) * noise.p1
    total = 0.0
    for mask in range(2**n):
        q = probs[idx ^ mask]
        for bit in range(n):
            if (mask >> bit) & 1 and flip_p:
                q = (1 - flip_p) * q + flip_p * q[idx ^ (1 << bit)]
        q = readout_distribution(q, noise, n)
        total += float(q @ values[idx ^ mask])
    return total / 2**n


def trex_factor(z_string: str, noise: NoiseModel) -> float:
    """Analytic rescaling of one Z-string under TREX: prod (1 - p01 - p10)(1 - 2 p1 / 3).

    A mask X gate exists on a qubit for half of the masks; when present its
    X or Y error (probability 2 p1 / 3) flips the bit.
    """
    n = len(z_string)
    p01, p10 = noise.readout.rates(n)
    f = 1.0
    for q, ch in enumerate(z_string):
        if ch == "Z":
            f *= (1.0 - p01[q] - p10[q]) * (1.0 - 2.0 * noise.p1 / 3.0)
    return f
