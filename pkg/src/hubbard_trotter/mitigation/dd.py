"""Dynamical decoupling: X pairs in idle windows.

Gates are scheduled as soon as possible using a duration table (barriers
synchronize their wires and take no time).  An idle window on a wire is the
gap between two consecutive gates on it, or between its last gate and the end
of the circuit.  Waiting before a wire's first gate is not treated as a window,
because the wire still holds a basis state there.  A window of length ``T``
that fits two X pulses receives the sequence (tau/4, X, tau/2, X, tau/4) with
``tau = T - 2 d_X``.  Zero-duration frame gates (RZ, Z) end windows, since an X
pair cannot straddle them without changing the circuit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..circuit import Gate, QuantumCircuit

log = logging.getLogger(__name__)

# nanoseconds; representative superconducting-device values
DEFAULT_DURATIONS: dict[str, float] = {
    "I": 0.0,
    "RZ": 0.0,
    "Z": 0.0,
    "X": 32.0,
    "Y": 32.0,
    "SX": 32.0,
    "RX": 32.0,
    "H": 32.0,
    "CZ": 68.0,
    "RZZ": 68.0,
    "CNOT": 132.0,
    "SWAP": 396.0,
}


@dataclass(frozen=True)
class IdleWindow:
    qubit: int
    start: float
    end: float
    before: int | None  # index of the gate that ends the window; None = circuit end

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass
class DDSchedule:
    total_time: float
    windows: list[IdleWindow] = field(default_factory=list)
    filled: list[IdleWindow] = field(default_factory=list)
    skipped: list[IdleWindow] = field(default_factory=list)
    pulses: list[tuple[int, float]] = field(default_factory=list)  # (qubit, start time)

    def to_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "windows": len(self.windows),
            "filled": len(self.filled),
            "skipped": len(self.skipped),
            "pulses": [[q, t] for q, t in self.pulses],
        }


def _duration(g: Gate, durations: dict[str, float]) -> float:
    try:
        return float(durations[g.kind])
    except KeyError:
        raise ValueError(f"no duration configured for gate kind {g.kind}") from None


def asap_times(c: QuantumCircuit, durations: dict[str, float] | None = None) -> tuple[list[float], float]:
    """Start time of every gate (barriers included) and the overall end time."""
    durations = {**DEFAULT_DURATIONS, **(durations or {})}
    ready = [0.0] * c.n_qubits
    starts: list[float] = []
    for g in c.gates:
        t = max(ready[q] for q in g.qubits)
        starts.append(t)
        end = t if g.kind == "BARRIER" else t + _duration(g, durations)
        for q in g.qubits:
            ready[q] = end
    return starts, max(ready, default=0.0)


def plan_dd(c: QuantumCircuit, durations: dict[str, float] | None = None) -> DDSchedule:
    table = {**DEFAULT_DURATIONS, **(durations or {})}
    starts, total = asap_times(c, table)
    d_x = table["X"]
    sched = DDSchedule(total)
    last_end: list[float | None] = [None] * c.n_qubits
    for i, g in enumerate(c.gates):
        if g.kind == "BARRIER":
            continue
        for q in g.qubits:
            if last_end[q] is not None and starts[i] > last_end[q]:
                sched.windows.append(IdleWindow(q, last_end[q], starts[i], i))
            last_end[q] = starts[i] + _duration(g, table)
    for q, end in enumerate(last_end):
        if end is not None and total > end:
            sched.windows.append(IdleWindow(q, end, total, None))
    for w in sched.windows:
        if w.length >= 2 * d_x:
            tau = w.length - 2 * d_x
            sched.filled.append(w)
            sched.pulses.append((w.qubit, w.start + tau / 4))
            sched.pulses.append((w.qubit, w.start + tau / 4 + d_x + tau / 2))
        else:
            sched.skipped.append(w)
    if sched.skipped:
        log.debug("DD skipped %d idle windows shorter than two X pulses", len(sched.skipped))
    return sched


def insert_dd(c: QuantumCircuit, durations: dict[str, float] | None = None) -> QuantumCircuit:
    """Circuit with an X pair in every idle window long enough to hold one.

    Nothing else acts on the wire inside the window, so the pair multiplies
    to the identity and the circuit's unitary is unchanged.
    """
    sched = plan_dd(c, durations)
    before: dict[int, list[int]] = {}
    trailing: list[int] = []
    for w in sched.filled:
        if w.before is None:
            trailing.append(w.qubit)
        else:
            before.setdefault(w.before, []).append(w.qubit)
    gates: list[Gate] = []
    for i, g in enumerate(c.gates):
        for q in before.get(i, []):
            gates += [Gate("X", (q,)), Gate("X", (q,))]
        gates.append(g)
    for q in trailing:
        gates += [Gate("X", (q,)), Gate("X", (q,))]
    return QuantumCircuit(c.n_qubits, tuple(gates))
