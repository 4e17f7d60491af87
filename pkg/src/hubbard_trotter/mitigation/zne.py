"""Zero-noise extrapolation: CZ folding and fits to the zero-noise limit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import QuantumCircuit, is_basis_circuit


class ZneFitError(RuntimeError):
    """The requested fit is not determined by the data; raw values are attached."""

    def __init__(self, message: str, factors, values):
        super().__init__(f"{message} (factors={list(factors)}, values={list(values)})")
        self.factors = tuple(factors)
        self.values = tuple(values)


def fold_cz(c: QuantumCircuit, k: int) -> QuantumCircuit:
    """Replace every CZ by ``k`` copies (CZ is self-inverse, so G G^dag G = G G G)."""
    if k < 1 or k % 2 == 0:
        raise ValueError("fold factor must be an odd positive integer")
    if not is_basis_circuit(c):
        raise ValueError("folding needs a basis-form circuit")
    gates = []
    for g in c.gates:
        gates.extend([g] * k if g.kind == "CZ" else [g])
    return QuantumCircuit(c.n_qubits, tuple(gates))


@dataclass(frozen=True)
class ZneFit:
    model: str
    value: float
    params: tuple[float, ...]
    residuals: tuple[float, ...]
    factors: tuple[int, ...]
    values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "value": self.value,
            "params": list(self.params),
            "residuals": list(self.residuals),
            "factors": list(self.factors),
            "values": list(self.values),
        }


def extrapolate(factors, values, model: str = "linear") -> ZneFit:
    """Fit ``values`` against noise scale ``factors`` and evaluate at zero.

    ``linear`` and ``quadratic`` are least-squares polynomials.  ``exponential``
    fits ``a * b**k`` through a straight line in ``log|y|`` and needs values of
    one sign.  A single factor returns its value unchanged.
    """
    x = np.asarray(factors, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size == 0:
        raise ZneFitError("factors and values must be equally long and non-empty", x, y)
    if not np.all(np.isfinite(y)):
        raise ZneFitError("non-finite raw values", x, y)
    if x.size == 1:
        return ZneFit("none", float(y[0]), (float(y[0]),), (0.0,), tuple(factors), tuple(values))
    distinct = np.unique(x).size
    if model in ("linear", "quadratic"):
        deg = 1 if model == "linear" else 2
        if distinct < deg + 1:
            raise ZneFitError(f"{model} fit needs {deg + 1} distinct factors", x, y)
        coef = np.polynomial.polynomial.polyfit(x, y, deg)
        fitted = np.polynomial.polynomial.polyval(x, coef)
        value = float(coef[0])
        params = tuple(float(c) for c in coef)
    elif model == "exponential":
        if distinct < 2:
            raise ZneFitError("exponential fit needs 2 distinct factors", x, y)
        if not (np.all(y > 0) or np.all(y < 0)):
            raise ZneFitError("exponential fit needs values of one sign", x, y)
        sign = float(np.sign(y[0]))
        slope, intercept = np.polyfit(x, np.log(np.abs(y)), 1)
        a, b = sign * float(np.exp(intercept)), float(np.exp(slope))
        fitted = a * b**x
        value = a
        params = (a, b)
    else:
        raise ValueError(f"unknown ZNE model {model!r}")
    resid = tuple(float(r) for r in (y - fitted))
    return ZneFit(model, value, params, resid, tuple(int(k) for k in factors), tuple(float(v) for v in y))
