"""First-order, second-order and merged second-order Trotter circuits.

Every gadget keeps the gate layout of the published circuits, with angles
oriented so that each piece implements exp(-i H_part dt) for the qubit
Hamiltonian in :mod:`hubbard_trotter.model`.

Blocks (chemical layer, interaction layer, each hopping layer) are separated by
full-width barriers.  Under ASAP layering this gives per-step depths of
1 (chemical) + 4 (interaction) + 9 + 9 (hopping layers) = 23 for first order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import CircuitBuilder, Gate, QuantumCircuit
from .model import HubbardParams, neel_state

ORDERS = ("first", "second", "second-optimized")


@dataclass(frozen=True)
class TrotterPlan:
    order: str
    r: int
    dt: float
    params: HubbardParams
    prepare_neel: bool = False

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")

    @property
    def tau(self) -> float:
        return self.r * self.dt

    @property
    def theta_t(self) -> float:
        return self.params.t * self.dt

    @property
    def theta_U(self) -> float:
        return self.params.U * self.dt

    @property
    def beta_up(self) -> float:
        return self.params.mu_up * self.dt

    @property
    def beta_down(self) -> float:
        return self.params.mu_down * self.dt


# ---------------------------------------------------------------- gadgets


def u_t_gadget(theta: float) -> QuantumCircuit:
    """Hopping gadget, exp(+i theta/2 (XX + YY)) up to global phase.

    Local qubit 0 is the even (2j) wire, qubit 1 the odd one.
    """
    b = CircuitBuilder(2)
    b.add("CNOT", 1, 0)
    b.add("H", 1)
    b.add("RZ", 1, angle=-theta + math.pi / 2)
    b.add("CNOT", 1, 0)
    b.add("RZ", 0, angle=theta)
    b.add("H", 1)
    b.add("CNOT", 1, 0)
    b.add("RX", 0, angle=math.pi / 2)
    b.add("RX", 1, angle=-math.pi / 2)
    return b.build()


def u_U_gadget(theta: float) -> QuantumCircuit:
    """On-site interaction gadget, exp(-i theta/4 (ZZ - ZI - IZ)) up to global phase."""
    b = CircuitBuilder(2)
    b.add("RZ", 0, angle=-theta / 2)
    b.add("RZ", 1, angle=-theta / 2)
    b.add("CNOT", 0, 1)
    b.add("RZ", 1, angle=theta / 2)
    b.add("CNOT", 0, 1)
    return b.build()


def u_mu_gadget(beta_up: float, beta_down: float) -> QuantumCircuit:
    """Chemical potential on one site, exp(-i (beta_up n_up + beta_down n_down)) up to phase."""
    b = CircuitBuilder(2)
    b.add("RZ", 0, angle=-beta_up)
    b.add("RZ", 1, angle=-beta_down)
    return b.build()


# ---------------------------------------------------------------- layers


def _check_L(L: int) -> None:
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L!r}")


def hopping_blocks(L: int, which: str) -> list[int]:
    """Bonds (j, j+1) handled by a hopping layer: even j for layer1, odd j for layer2."""
    _check_L(L)
    if which not in ("layer1", "layer2"):
        raise ValueError("which must be 'layer1' or 'layer2'")
    start = 0 if which == "layer1" else 1
    return list(range(start, L - 1, 2))


def hopping_layer(L: int, theta: float, which: str) -> QuantumCircuit:
    """SWAP(2j+1, 2j+2), then U_t on (2j, 2j+1) and (2j+2, 2j+3), then SWAP again.

    The SWAP brings both spin-up (and both spin-down) wires of bond j next to
    each other so the hop becomes nearest-neighbour.
    """
    blocks = hopping_blocks(L, which)
    gadget = u_t_gadget(theta)
    b = CircuitBuilder(2 * L)
    for j in blocks:
        b.add("SWAP", 2 * j + 1, 2 * j + 2)
    for j in blocks:
        b.extend(gadget.gates, offset=2 * j)
        b.extend(gadget.gates, offset=2 * j + 2)
    for j in blocks:
        b.add("SWAP", 2 * j + 1, 2 * j + 2)
    return b.build()


def interaction_layer(L: int, theta: float) -> QuantumCircuit:
    _check_L(L)
    gadget = u_U_gadget(theta)
    b = CircuitBuilder(2 * L)
    for j in range(L):
        b.extend(gadget.gates, offset=2 * j)
    return b.build()


def chemical_layer(L: int, beta_up: float, beta_down: float) -> QuantumCircuit:
    _check_L(L)
    gadget = u_mu_gadget(beta_up, beta_down)
    b = CircuitBuilder(2 * L)
    for j in range(L):
        b.extend(gadget.gates, offset=2 * j)
    return b.build()


def neel_preparation(L: int) -> QuantumCircuit:
    bits = neel_state(L).bits
    b = CircuitBuilder(2 * L)
    for q, bit in enumerate(bits):
        if bit:
            b.add("X", q)
    return b.build()


def _join(n_qubits: int, blocks: list[QuantumCircuit]) -> QuantumCircuit:
    """Concatenate blocks, each followed by a full barrier; tags number the blocks."""
    gates: list[Gate] = []
    tags: list[int] = []
    barrier = Gate("BARRIER", tuple(range(n_qubits)))
    for i, blk in enumerate(blocks):
        gates.extend(blk.gates)
        gates.append(barrier)
        tags.extend([i] * (len(blk.gates) + 1))
    return QuantumCircuit(n_qubits, tuple(gates), tuple(tags))


# ---------------------------------------------------------------- steps


@dataclass(frozen=True)
class TrotterSchedule:
    """circuit(r) = prep + head + first + (r - 1) * step + tail, as block lists."""

    n_qubits: int
    prep: list[QuantumCircuit]
    head: list[QuantumCircuit]
    first: list[QuantumCircuit]
    step: list[QuantumCircuit]
    tail: list[QuantumCircuit]

    def blocks(self, r: int) -> list[QuantumCircuit]:
        return self.prep + self.head + self.first + self.step * (r - 1) + self.tail

    def circuit(self, r: int) -> QuantumCircuit:
        return _join(self.n_qubits, self.blocks(r))


def _first_step(L: int, th_t: float, th_U: float, b_up: float, b_dn: float) -> list[QuantumCircuit]:
    return [
        chemical_layer(L, b_up, b_dn),
        interaction_layer(L, th_U),
        hopping_layer(L, th_t, "layer1"),
        hopping_layer(L, th_t, "layer2"),
    ]


def _second_step(L: int, th_t: float, th_U: float, b_up: float, b_dn: float) -> list[QuantumCircuit]:
    h = 0.5
    return [
        interaction_layer(L, h * th_U),
        chemical_layer(L, h * b_up, h * b_dn),
        hopping_layer(L, h * th_t, "layer1"),
        hopping_layer(L, h * th_t, "layer2"),
        hopping_layer(L, h * th_t, "layer2"),
        hopping_layer(L, h * th_t, "layer1"),
        chemical_layer(L, h * b_up, h * b_dn),
        interaction_layer(L, h * th_U),
    ]


def _merged_core(L: int, th_t: float, b_up: float, b_dn: float) -> list[QuantumCircuit]:
    # two adjacent half-angle layer2 blocks merged into one full-angle block
    h = 0.5
    return [
        chemical_layer(L, h * b_up, h * b_dn),
        hopping_layer(L, h * th_t, "layer1"),
        hopping_layer(L, th_t, "layer2"),
        hopping_layer(L, h * th_t, "layer1"),
        chemical_layer(L, h * b_up, h * b_dn),
    ]


def trotter_schedule(plan: TrotterPlan) -> TrotterSchedule:
    p = plan.params
    L = p.L
    args = (plan.theta_t, plan.theta_U, plan.beta_up, plan.beta_down)
    prep = [neel_preparation(L)] if plan.prepare_neel else []
    if plan.order == "first":
        step = _first_step(L, *args)
        return TrotterSchedule(2 * L, prep, [], step, step, [])
    if plan.order == "second":
        step = _second_step(L, *args)
        return TrotterSchedule(2 * L, prep, [], step, step, [])
    core = _merged_core(L, plan.theta_t, plan.beta_up, plan.beta_down)
    half_U = [interaction_layer(L, 0.5 * plan.theta_U)]
    full_U = [interaction_layer(L, plan.theta_U)]
    return TrotterSchedule(2 * L, prep, half_U, core, full_U + core, half_U)


def first_order_circuit(plan: TrotterPlan) -> QuantumCircuit:
    if plan.order != "first":
        raise ValueError("plan.order must be 'first'")
    return trotter_schedule(plan).circuit(plan.r)


def second_order_circuit(plan: TrotterPlan) -> QuantumCircuit:
    if plan.order != "second":
        raise ValueError("plan.order must be 'second'")
    return trotter_schedule(plan).circuit(plan.r)


def optimized_second_order_circuit(plan: TrotterPlan) -> QuantumCircuit:
    if plan.order != "second-optimized":
        raise ValueError("plan.order must be 'second-optimized'")
    return trotter_schedule(plan).circuit(plan.r)


def build_circuit(plan: TrotterPlan) -> QuantumCircuit:
    return trotter_schedule(plan).circuit(plan.r)
