"""Stochastic Pauli noise and batched trajectory simulation.

A trajectory is one run of the circuit in which each noisy gate may be
followed by a random Pauli error.  Trajectories are sampled up front, and
identical error patterns are simulated once.  Every erroneous pattern starts
as a copy of the error-free state at its first error, so the shared prefix is
computed only once.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..circuit import Gate, QuantumCircuit, circuit_unitary, decompose_to_basis, is_basis_circuit
from ..pauli import PauliTermSum, diagonal_values, parity
from ..statevector import FusedOp, ReadoutNoise, _apply_block, apply_readout, derive_rng, fuse

# frame changes are free on hardware, so they carry no gate error
VIRTUAL_GATES = frozenset({"RZ", "Z", "I", "BARRIER"})

_PAULI_1Q = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

# scales of the published device calibration: median CZ and readout error
TABLE_CZ_ERROR = 2.521e-3
TABLE_READOUT_ERROR = 8.972e-3


def _check_prob(name: str, value) -> None:
    for p in np.atleast_1d(np.asarray(value, dtype=float)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus independent readout flips.

    ``p2`` is the probability of a uniformly drawn non-identity two-qubit Pauli
    after each two-qubit gate; ``p1`` likewise (three Paulis) after each
    physical single-qubit gate.  ``cz_overrotation`` adds a coherent
    ``RZ(angle)`` on both wires after every CZ.
    """

    p2: float = TABLE_CZ_ERROR
    p1: float = 0.0
    p01: float | tuple[float, ...] = 0.0
    p10: float | tuple[float, ...] = 0.0
    cz_overrotation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        _check_prob("p2", self.p2)
        _check_prob("p1", self.p1)
        _check_prob("p01", self.p01)
        _check_prob("p10", self.p10)
        if not math.isfinite(self.cz_overrotation):
            raise ValueError("cz_overrotation must be finite")
        for name in ("p01", "p10"):
            value = getattr(self, name)
            if isinstance(value, list):
                object.__setattr__(self, name, tuple(float(v) for v in value))

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(p2=0.0)

    @classmethod
    def table_scale(cls, seed: int = 0) -> "NoiseModel":
        """Device-calibration scale: CZ error 2.5e-3, asymmetric readout around 9e-3."""
        return cls(
            p2=TABLE_CZ_ERROR,
            p01=0.6 * TABLE_READOUT_ERROR,
            p10=1.4 * TABLE_READOUT_ERROR,
            seed=seed,
        )

    @property
    def readout(self) -> ReadoutNoise:
        return ReadoutNoise(self.p01, self.p10)

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0 or self.cz_overrotation != 0

    def gate_error(self, g: Gate) -> float:
        if g.kind in VIRTUAL_GATES:
            return 0.0
        return self.p2 if len(g.qubits) == 2 else self.p1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        fields = {k: data[k] for k in ("p2", "p1", "p01", "p10", "cz_overrotation", "seed") if k in data}
        return cls(**fields)


# ---------------------------------------------------------------- programs


@dataclass
class NoisyProgram:
    """Fused gate segments, each followed by a noise slot (or none at the end)."""

    n_qubits: int
    segments: list[list[FusedOp]]
    slots: list[tuple[tuple[int, ...], float]]


def _split_past(pending: list[Gate], wires: tuple[int, ...]) -> tuple[list[Gate], list[Gate]]:
    """Split pending gates into the causal past of ``wires`` and the rest.

    Scanning backwards, a gate belongs to the past if it touches a wire already
    in the set; its wires then join the set.  Every other gate commutes with
    the past and with an error on ``wires``, so it can wait for a later segment.
    """
    live = set(wires)
    past, rest = [], []
    for g in reversed(pending):
        if live.intersection(g.qubits):
            past.append(g)
            live.update(g.qubits)
        else:
            rest.append(g)
    return past[::-1], rest[::-1]


def compile_noisy(c: QuantumCircuit, noise: NoiseModel) -> NoisyProgram:
    segments: list[list[FusedOp]] = []
    slots: list[tuple[tuple[int, ...], float]] = []
    pending: list[Gate] = []
    for g in c.gates:
        if g.kind == "BARRIER":
            continue
        pending.append(g)
        if g.kind == "CZ" and noise.cz_overrotation:
            for q in g.qubits:
                pending.append(Gate("RZ", (q,), noise.cz_overrotation))
        p = noise.gate_error(g)
        if p > 0:
            past, pending = _split_past(pending, g.qubits)
            segments.append(fuse(past))
            slots.append((g.qubits, p))
    segments.append(fuse(pending))
    return NoisyProgram(c.n_qubits, segments, slots)


# ---------------------------------------------------------------- trajectories


@dataclass
class TrajectoryEnsemble:
    """Distinct trajectory outcomes and how many sampled trajectories share each."""

    n_qubits: int
    probs: np.ndarray  # (rows, 2**n) outcome distributions
    weights: np.ndarray  # (rows,) trajectory multiplicities

    @property
    def n_trajectories(self) -> int:
        return int(self.weights.sum())

    def mean_probs(self) -> np.ndarray:
        return (self.weights[:, None] * self.probs).sum(axis=0) / self.n_trajectories


def _sample_events(program: NoisyProgram, n_traj: int, rng: np.random.Generator):
    """Error events as parallel arrays (trajectory, slot, code)."""
    rows, slots, codes = [], [], []
    by_p: dict[tuple[float, int], list[int]] = {}
    for s, (qubits, p) in enumerate(program.slots):
        by_p.setdefault((p, len(qubits)), []).append(s)
    for (p, width), slot_ids in sorted(by_p.items()):
        pool = len(slot_ids) * n_traj
        k = int(rng.binomial(pool, p))
        if k == 0:
            continue
        flat = np.sort(rng.choice(pool, size=k, replace=False))
        slot_arr = np.asarray(slot_ids)[flat // n_traj]
        rows.append(flat % n_traj)
        slots.append(slot_arr)
        codes.append(rng.integers(1, 4**width, size=k))
    if not rows:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(rows), np.concatenate(slots), np.concatenate(codes)


def _apply_pauli_code(block: np.ndarray, n: int, qubits: tuple[int, ...], code: int) -> np.ndarray:
    for k, q in enumerate(qubits):
        letter = (code >> (2 * k)) & 3
        if letter:
            block = _apply_block(block, n, (q,), _PAULI_1Q[letter])
    return block


def simulate_trajectories(
    c: QuantumCircuit, noise: NoiseModel, n_traj: int, rng: np.random.Generator
) -> TrajectoryEnsemble:
    """Run ``n_traj`` noisy trajectories from ``|0...0>``."""
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    n = c.n_qubits
    program = compile_noisy(c, noise)
    t_idx, s_idx, codes = _sample_events(program, n_traj, rng)

    # group events per trajectory into hashable patterns
    order = np.lexsort((s_idx, t_idx))
    t_idx, s_idx, codes = t_idx[order], s_idx[order], codes[order]
    patterns: dict[tuple, int] = {}
    traj_pattern = np.zeros(n_traj, dtype=np.int64)
    bounds = (np.flatnonzero(np.diff(t_idx)) + 1).tolist()
    t_list, s_list, c_list = t_idx.tolist(), s_idx.tolist(), codes.tolist()
    for a, b in zip([0] + bounds, bounds + [len(t_list)]):
        if a == b:
            continue
        key = tuple(zip(s_list[a:b], c_list[a:b]))
        pid = patterns.setdefault(key, len(patterns) + 1)
        traj_pattern[t_list[a]] = pid
    weights = np.bincount(traj_pattern, minlength=len(patterns) + 1)

    # row 0 is error-free; pattern rows are spawned at their first error slot
    keys = sorted(patterns, key=lambda k: k[0][0])
    row_of = {patterns[k]: r + 1 for r, k in enumerate(keys)}
    spawn_at: dict[int, int] = {}
    events_at: dict[int, list[tuple[int, int]]] = {}
    for k in keys:
        row = row_of[patterns[k]]
        spawn_at[k[0][0]] = spawn_at.get(k[0][0], 0) + 1
        for slot, code in k:
            events_at.setdefault(slot, []).append((row, code))

    states = np.zeros((len(keys) + 1, 2**n), dtype=complex)
    states[0, 0] = 1.0
    active = 1
    for seg_id, segment in enumerate(program.segments):
        block = states[:active]
        for op in segment:
            block = _apply_block(block, n, op.qubits, op.matrix)
        states[:active] = block
        if seg_id == len(program.slots):
            break
        grow = spawn_at.get(seg_id, 0)
        if grow:
            states[active : active + grow] = states[0]
            active += grow
        qubits = program.slots[seg_id][0]
        hits = events_at.get(seg_id)
        if hits:
            arr = np.asarray(hits)
            for code in np.unique(arr[:, 1]):
                rows = arr[arr[:, 1] == code, 0]
                states[rows] = _apply_pauli_code(states[rows], n, qubits, int(code))
    probs = np.abs(states) ** 2
    weights_by_row = np.zeros(len(keys) + 1, dtype=np.int64)
    weights_by_row[0] = weights[0]
    for k in keys:
        weights_by_row[row_of[patterns[k]]] = weights[patterns[k]]
    return TrajectoryEnsemble(n, probs, weights_by_row)


def sample_outcomes(ens: TrajectoryEnsemble, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Measured basis indices: shots spread evenly over trajectories, then Born sampling."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    T = ens.n_trajectories
    base, extra = divmod(shots, T)
    per_row = ens.weights * base
    if extra:
        traj_rows = np.repeat(np.arange(ens.weights.size), ens.weights)
        chosen = rng.choice(T, size=extra, replace=False)
        per_row = per_row + np.bincount(traj_rows[chosen], minlength=ens.weights.size)
    live = per_row > 0
    p = ens.probs[live]
    p = p / p.sum(axis=1, keepdims=True)
    counts = rng.multinomial(per_row[live], p).sum(axis=0)
    return np.repeat(np.arange(counts.size, dtype=np.int64), counts)


def measure(
    ens: TrajectoryEnsemble,
    shots: int,
    noise: NoiseModel,
    rng: np.random.Generator,
    flip_mask: int = 0,
) -> np.ndarray:
    """Recorded bit patterns after optional pre-measurement X flips and readout noise.

    ``flip_mask`` models X gates on the masked qubits just before measurement;
    each such X carries the single-qubit error rate (its X or Y errors flip the
    bit back).  The mask is *not* undone here.
    """
    idx = sample_outcomes(ens, shots, rng)
    if flip_mask:
        idx = idx ^ flip_mask
        if noise.p1 > 0:
            for q in range(ens.n_qubits):
                if (flip_mask >> q) & 1:
                    hit = rng.random(idx.size) < (2.0 / 3.0) * noise.p1
                    idx = idx ^ (hit.astype(np.int64) << q)
    return apply_readout(idx, ens.n_qubits, noise.readout, rng)


# ---------------------------------------------------------------- observables


@dataclass(frozen=True)
class MeasurementGroup:
    """Qubit-wise commuting terms measured in one rotated basis."""

    basis: str  # per-qubit letter in {I, X, Y, Z}
    terms: tuple[tuple[float, str], ...]

    def rotation(self) -> list[Gate]:
        """Gates mapping the group's basis onto Z (X via H, Y via S-dagger then H)."""
        gates = []
        for q, ch in enumerate(self.basis):
            if ch == "X":
                gates.append(Gate("H", (q,)))
            elif ch == "Y":
                gates += [Gate("RZ", (q,), -math.pi / 2), Gate("H", (q,))]
        return gates

    def diagonal(self, n_qubits: int) -> PauliTermSum:
        mapped = [(c, "".join("Z" if ch != "I" else "I" for ch in s)) for c, s in self.terms]
        return PauliTermSum(n_qubits, tuple(mapped))


def measurement_groups(o: PauliTermSum) -> tuple[float, list[MeasurementGroup]]:
    """Greedy qubit-wise commuting partition; returns (identity offset, groups)."""
    offset = o.identity_coefficient()
    groups: list[tuple[list[str], list[tuple[float, str]]]] = []
    for c, s in o.without_identity().terms:
        for basis, members in groups:
            if all(b == "I" or ch == "I" or b == ch for b, ch in zip(basis, s)):
                for q, ch in enumerate(s):
                    if ch != "I":
                        basis[q] = ch
                members.append((c, s))
                break
        else:
            groups.append((list(s), [(c, s)]))
    return offset, [MeasurementGroup("".join(b), tuple(m)) for b, m in groups]


def with_rotation(c: QuantumCircuit, group: MeasurementGroup, basis_form: bool) -> QuantumCircuit:
    extra = group.rotation()
    if not extra:
        return c
    rot = QuantumCircuit(c.n_qubits, tuple(extra))
    if basis_form:
        rot = decompose_to_basis(rot)
    return c + rot


def term_means(indices: np.ndarray, o_diag: PauliTermSum) -> dict[str, float]:
    """Per-term sample mean of the +-1 parity for a Z-diagonal operator."""
    idx = indices.astype(np.uint64)
    out = {}
    for _, s in o_diag.terms:
        z = sum(1 << q for q, ch in enumerate(s) if ch == "Z")
        out[s] = float(np.mean(1.0 - 2.0 * parity(idx, z))) if z else 1.0
    return out


def estimate_diagonal(indices: np.ndarray, o_diag: PauliTermSum) -> float:
    values = diagonal_values(o_diag)
    return float(np.mean(values[indices]))


def noisy_expectation(
    c: QuantumCircuit,
    o: PauliTermSum,
    noise: NoiseModel,
    shots: int,
    seed: int = 0,
    trajectories: int | None = None,
) -> float:
    """Monte-Carlo estimate of <o> under the noise model.

    Each measurement group gets ``shots`` shots drawn from ``trajectories``
    sampled trajectories (one per shot by default, which is the physical
    model exactly).
    """
    if o.n_qubits != c.n_qubits:
        raise ValueError(f"operator width {o.n_qubits} != circuit width {c.n_qubits}")
    offset, groups = measurement_groups(o)
    total = offset
    basis_form = is_basis_circuit(c)
    for g_id, group in enumerate(groups):
        circ = with_rotation(c, group, basis_form)
        ens = simulate_trajectories(circ, noise, trajectories or shots, derive_rng(seed, g_id, 0))
        idx = measure(ens, shots, noise, derive_rng(seed, g_id, 1))
        total += estimate_diagonal(idx, group.diagonal(c.n_qubits))
    return float(total)


def _noisy_density(c: QuantumCircuit, noise: NoiseModel, rho: np.ndarray) -> np.ndarray:
    n = c.n_qubits
    paulis = {0: np.eye(2, dtype=complex), **_PAULI_1Q}

    def embed(ops: dict[int, np.ndarray]) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for q in range(n):
            out = np.kron(ops.get(q, np.eye(2)), out)
        return out

    for g in c.gates:
        if g.kind == "BARRIER":
            continue
        U = circuit_unitary(QuantumCircuit(n, (g,)))
        rho = U @ rho @ U.conj().T
        if g.kind == "CZ" and noise.cz_overrotation:
            for q in g.qubits:
                V = circuit_unitary(QuantumCircuit(n, (Gate("RZ", (q,), noise.cz_overrotation),)))
                rho = V @ rho @ V.conj().T
        p = noise.gate_error(g)
        if p > 0:
            width = len(g.qubits)
            mixed = np.zeros_like(rho)
            for code in range(1, 4**width):
                P = embed({q: paulis[(code >> (2 * k)) & 3] for k, q in enumerate(g.qubits)})
                mixed += P @ rho @ P.conj().T
            rho = (1 - p) * rho + p / (4**width - 1) * mixed
    return rho


def readout_distribution(probs: np.ndarray, noise: NoiseModel, n_qubits: int) -> np.ndarray:
    """Push an outcome distribution through the independent readout channel."""
    p01, p10 = noise.readout.rates(n_qubits)
    for q in range(n_qubits):
        flip = np.array([[1 - p01[q], p10[q]], [p01[q], 1 - p10[q]]])
        probs = np.einsum("ab,ibj->iaj", flip, probs.reshape(-1, 2, 2**q)).reshape(-1)
    return probs


def exact_noisy_expectation(c: QuantumCircuit, o: PauliTermSum, noise: NoiseModel) -> float:
    """Density-matrix reference for small circuits (N <= 6), readout included.

    Independent of the trajectory code: each channel is an explicit Kraus sum
    on the full density matrix.  Basis rotations for non-diagonal terms pass
    through the same noisy gates as in :func:`noisy_expectation`.
    """
    n = c.n_qubits
    if n > 6:
        raise ValueError("density-matrix reference limited to 6 qubits")
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    rho = _noisy_density(c, noise, rho)
    offset, groups = measurement_groups(o)
    total = offset
    basis_form = is_basis_circuit(c)
    for group in groups:
        rot = with_rotation(QuantumCircuit(n, ()), group, basis_form)
        probs = np.real(np.diag(_noisy_density(rot, noise, rho)))
        probs = readout_distribution(probs, noise, n)
        total += float(probs @ diagonal_values(group.diagonal(n)))
    return float(total)
