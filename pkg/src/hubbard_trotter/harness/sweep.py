"""Sweeps over Trotter step counts on the configured backend.

Deterministic backends evolve incrementally: the state after ``r`` steps is
reused for ``r + 1``, and only the closing block of the merged second-order
circuit is applied to a copy before measuring.  The noisy backend rebuilds
the full circuit for each ``r`` and repeats it ``instances`` times with
seeds derived from ``(seed, r, instance, observable)``, so the merged result
does not depend on worker scheduling.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..circuit import QuantumCircuit, decompose_to_basis, gate_counts
from ..exact import SparseHamiltonian, evolve_exact
from ..mitigation import mitigated_pipeline, noisy_expectation
from ..model import (
    BasisState,
    build_hamiltonian,
    neel_operator,
    neel_state,
    total_number_operator,
    total_sz_operator,
)
from ..mps import TruncationLog, apply_circuit_mps, expectation_mps, mps_from_basis
from ..pauli import PauliTermSum
from ..results import ExperimentPoint, ResultSet
from ..statevector import apply_circuit, derive_seed, expectation, init_basis
from ..trotter import TrotterPlan, TrotterSchedule, _join, trotter_schedule
from .config import ExperimentConfig

log = logging.getLogger(__name__)


class CapabilityError(RuntimeError):
    """The chosen backend cannot handle the configured problem size."""


def observable(name: str, cfg: ExperimentConfig) -> PauliTermSum:
    L = cfg.params.L
    if name == "neel":
        return neel_operator(L)
    if name == "n_total":
        return total_number_operator(L)
    if name == "sz_total":
        return total_sz_operator(L)
    if name == "energy":
        return build_hamiltonian(cfg.params)
    raise ValueError(f"unknown observable {name!r}")


def check_capability(cfg: ExperimentConfig) -> None:
    """Raise :class:`CapabilityError` if the backend's size cap is exceeded."""
    n = cfg.n_qubits
    caps = {
        "statevector": cfg.limits.statevector_qubits,
        "exact": cfg.limits.exact_qubits,
        "noisy": cfg.limits.noisy_qubits,
    }
    cap = caps.get(cfg.backend)
    if cap is not None and n > cap:
        raise CapabilityError(
            f"backend {cfg.backend!r} is capped at {cap} qubits; L={cfg.params.L} needs {n}"
        )


def schedule_for(cfg: ExperimentConfig, prepare_neel: bool = False) -> TrotterSchedule:
    plan = TrotterPlan(cfg.plan.order, 1, cfg.plan.dt, cfg.params, prepare_neel)
    return trotter_schedule(plan)


def initial_state(cfg: ExperimentConfig) -> BasisState:
    if cfg.plan.prepare_neel:
        return neel_state(cfg.params.L)
    return BasisState.zeros(cfg.n_qubits)


def circuit_metrics(c: QuantumCircuit) -> dict:
    """Layered depth and gate counts, plus the two-qubit counts after basis rewriting."""
    report = gate_counts(c)
    basis = gate_counts(decompose_to_basis(c)).counts
    return {
        "depth": report.depth,
        "two_qubit_depth": report.two_qubit_depth,
        "counts": dict(sorted(report.counts.items())),
        "cz_count": basis.get("CZ", 0),
        "rzz_count": basis.get("RZZ", 0),
    }


def _summary(values: dict[str, list[float]], primary: str) -> tuple[float, float, list[float], dict]:
    obs = {
        name: {"value": float(np.mean(v)), "spread": float(np.std(v))}
        for name, v in values.items()
    }
    main = values[primary]
    return obs[primary]["value"], obs[primary]["spread"], [float(x) for x in main], obs


def _deterministic_point(cfg, r, vals, depth, diag, t0) -> ExperimentPoint:
    value, spread, values, obs = _summary({k: [v] for k, v in vals.items()}, cfg.observables[0])
    return ExperimentPoint(
        value=value,
        spread=spread,
        values=values,
        r=r,
        tau=r * cfg.plan.dt,
        depth=depth,
        diagnostics={"observables": obs, **diag},
        wall_time=time.perf_counter() - t0,
    )


def _trotter_points(cfg: ExperimentConfig, evolve, measure):
    """Drive an incremental Trotter evolution.

    ``evolve(state, blocks, r, branch)`` returns the evolved state; ``branch``
    marks the closing block that is applied to a throwaway copy.
    """
    sched = schedule_for(cfg)
    ops = {name: observable(name, cfg) for name in cfg.observables}
    state = None
    for r in range(1, cfg.plan.r_max + 1):
        t0 = time.perf_counter()
        blocks = sched.head + sched.first if r == 1 else sched.step
        state = evolve(state, blocks, r, False)
        if r < cfg.plan.r_min:
            continue
        final = evolve(state, sched.tail, r, True) if sched.tail else state
        vals, diag, timings = measure(final, ops, r)
        point = _deterministic_point(cfg, r, vals, circuit_metrics(sched.circuit(r)), diag, t0)
        point.timings = timings
        yield point


def _run_statevector(cfg: ExperimentConfig) -> ResultSet:
    n = cfg.n_qubits

    def evolve(state, blocks, r, branch):
        if state is None:
            state = init_basis(initial_state(cfg))
        elif branch:
            state = state.copy()
        return apply_circuit(state, _join(n, blocks)) if blocks else state

    def measure(state, ops, r):
        return {k: expectation(state, o) for k, o in ops.items()}, {}, {}

    return ResultSet(cfg.record(), list(_trotter_points(cfg, evolve, measure)))


def _run_mps(cfg: ExperimentConfig) -> ResultSet:
    n = cfg.n_qubits
    main = TruncationLog()
    branches: dict[int, TruncationLog] = {}

    def evolve(state, blocks, r, branch):
        if state is None:
            state = mps_from_basis(initial_state(cfg), cfg.mps.chi_max, cfg.mps.cutoff)
        if not blocks:
            return state
        out, step_log = apply_circuit_mps(state, _join(n, blocks), step=r)
        (branches.setdefault(r, TruncationLog()) if branch else main).extend(step_log)
        return out

    def measure(state, ops, r):
        # main holds steps 1..r; the branch holds this r's closing block
        branch = branches.get(r, TruncationLog())
        here = TruncationLog([rec for rec in main.records if rec.step == r] + branch.records)
        chi, eps = here.sweep_maxima().get(r, (state.max_bond(), 0.0))
        seconds = main.sweep_seconds.get(r, 0.0) + branch.sweep_seconds.get(r, 0.0)
        diag = {
            "max_link_dim": int(state.max_bond()),
            "step_max_link_dim": int(chi),
            "max_trunc_err": float(eps),
            "cumulative_discarded": main.total_discarded() + branch.total_discarded(),
            "bond_dims": [int(d) for d in state.bond_dims()],
            "truncation_log": "truncation_log.csv",
        }
        timings = {"sweep_seconds": float(seconds)}
        return {k: expectation_mps(state, o) for k, o in ops.items()}, diag, timings

    points = list(_trotter_points(cfg, evolve, measure))
    full = TruncationLog()
    for r in sorted({rec.step for rec in main.records} | set(branches)):
        full.extend(TruncationLog([rec for rec in main.records if rec.step == r]))
        full.extend(branches.get(r, TruncationLog()))
    full.sweep_seconds = {p.r: p.timings["sweep_seconds"] for p in points}
    return ResultSet(cfg.record(), points, attachments={"truncation_log": full})


def _run_exact(cfg: ExperimentConfig) -> ResultSet:
    h = SparseHamiltonian(build_hamiltonian(cfg.params))
    ops = {name: observable(name, cfg) for name in cfg.observables}
    psi = init_basis(initial_state(cfg))
    tau_prev = 0.0
    points = []
    for r in cfg.plan.r_values:
        t0 = time.perf_counter()
        tau = r * cfg.plan.dt
        psi = evolve_exact(h, psi, tau - tau_prev, tol=cfg.exact.tol, krylov_dim=cfg.exact.krylov_dim)
        tau_prev = tau
        vals = {k: expectation(psi, o) for k, o in ops.items()}
        points.append(_deterministic_point(cfg, r, vals, None, {}, t0))
    return ResultSet(cfg.record(), points)


@dataclass(frozen=True)
class _NoisyItem:
    r: int
    instance: int
    obs_index: int
    circuit: QuantumCircuit
    operator: PauliTermSum
    seed: int


def _noisy_work(args: tuple[_NoisyItem, ExperimentConfig]) -> tuple[float, dict, float]:
    item, cfg = args
    t0 = time.perf_counter()
    if cfg.mitigation is None:
        v = noisy_expectation(item.circuit, item.operator, cfg.noise, cfg.shots, item.seed)
        return v, {}, time.perf_counter() - t0
    pt = mitigated_pipeline(item.circuit, item.operator, cfg.noise, cfg.mitigation, cfg.shots, item.seed)
    diag = {"zne": pt.diagnostics["zne"]} if "zne" in pt.diagnostics else {}
    return pt.value, diag, time.perf_counter() - t0


def _run_noisy(cfg: ExperimentConfig) -> ResultSet:
    sched = schedule_for(cfg, prepare_neel=cfg.plan.prepare_neel)
    ops = [observable(name, cfg) for name in cfg.observables]
    items: list[_NoisyItem] = []
    circuits: dict[int, QuantumCircuit] = {}
    for r in cfg.plan.r_values:
        circuits[r] = sched.circuit(r)
        basis = decompose_to_basis(circuits[r])
        for i in range(cfg.instances):
            for k, o in enumerate(ops):
                items.append(_NoisyItem(r, i, k, basis, o, derive_seed(cfg.seed, r, i, k)))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_noisy_work, [(it, cfg) for it in items]))
    else:
        results = [_noisy_work((it, cfg)) for it in items]

    merged: dict[tuple[int, int, int], tuple[float, dict, float]] = {
        (it.r, it.instance, it.obs_index): res for it, res in zip(items, results)
    }
    points = []
    trotter_sched = schedule_for(cfg)
    for r in cfg.plan.r_values:
        values = {
            name: [merged[(r, i, k)][0] for i in range(cfg.instances)]
            for k, name in enumerate(cfg.observables)
        }
        value, spread, vals, obs = _summary(values, cfg.observables[0])
        diag: dict = {"observables": obs}
        fits = [merged[(r, i, 0)][1].get("zne") for i in range(cfg.instances)]
        if any(f is not None for f in fits):
            diag["zne"] = fits
        wall = sum(merged[(r, i, k)][2] for i in range(cfg.instances) for k in range(len(ops)))
        points.append(
            ExperimentPoint(
                value=value,
                spread=spread,
                values=vals,
                r=r,
                tau=r * cfg.plan.dt,
                depth=circuit_metrics(trotter_sched.circuit(r)),
                diagnostics=diag,
                wall_time=wall,
            )
        )
    return ResultSet(cfg.record(), points)


_RUNNERS = {
    "statevector": _run_statevector,
    "exact": _run_exact,
    "mps": _run_mps,
    "noisy": _run_noisy,
}


def run_sweep(cfg: ExperimentConfig) -> ResultSet:
    """Evaluate the configured observables for every ``r`` in the plan's range."""
    check_capability(cfg)
    log.info(
        "sweep %s: backend=%s L=%d order=%s r=%d..%d",
        cfg.name, cfg.backend, cfg.params.L, cfg.plan.order, cfg.plan.r_min, cfg.plan.r_max,
    )
    return _RUNNERS[cfg.backend](cfg)
