from __future__ import annotations

import math

import numpy as np
import pytest

from hubbard_trotter.circuit import (
    CircuitBuilder,
    Gate,
    QuantumCircuit,
    circuit_unitary,
    decompose_to_basis,
    gate_counts,
    phase_aligned_distance,
)
from hubbard_trotter.mitigation import (
    MitigationPlan,
    NoiseModel,
    ZneFitError,
    apply_trex,
    compose_twirls,
    cz_twirl_set,
    exact_noisy_expectation,
    extrapolate,
    factor_values,
    fold_cz,
    insert_dd,
    is_cz_twirl,
    mitigated_pipeline,
    noisy_expectation,
    pauli_twirl,
    plan_dd,
    trex_calibration,
    trex_expected,
    trex_factor,
    zne_estimate,
)
from hubbard_trotter.mitigation.noise import measurement_groups, simulate_trajectories
from hubbard_trotter.model import HubbardParams, neel_operator
from hubbard_trotter.pauli import PauliTermSum
from hubbard_trotter.statevector import StateVector, apply_circuit, derive_rng, expectation
from hubbard_trotter.trotter import TrotterPlan, build_circuit

from strategies import basis_circuit

Z0 = PauliTermSum(2, ((1.0, "ZI"),))


def _trotter_basis(L=4, r=4, dt=0.1):
    return decompose_to_basis(build_circuit(TrotterPlan("first", r, dt, HubbardParams(L), prepare_neel=True)))


def _ideal(c, o):
    return expectation(apply_circuit(StateVector.zeros(c.n_qubits), c), o)


def _all_ones(n):
    return QuantumCircuit(n, tuple(Gate("X", (q,)) for q in range(n)))


def _z_sum(n):
    return PauliTermSum(n, tuple((1.0, "I" * q + "Z" + "I" * (n - q - 1)) for q in range(n)))


# ---------------------------------------------------------------- noise model


def test_noise_model_validation_and_serialization():
    with pytest.raises(ValueError):
        NoiseModel(p2=1.5)
    with pytest.raises(ValueError):
        NoiseModel(p01=(0.1, -0.1))
    with pytest.raises(ValueError):
        NoiseModel(cz_overrotation=float("nan"))
    m = NoiseModel.table_scale(seed=3)
    assert m.p2 == pytest.approx(2.521e-3)
    assert m.p01 != m.p10 and 0.5 * (m.p01 + m.p10) == pytest.approx(8.972e-3)
    assert NoiseModel.from_dict(m.to_dict()) == m
    assert NoiseModel(p01=[0.1, 0.2]).p01 == (0.1, 0.2)
    assert not NoiseModel.noiseless().has_gate_noise


def test_virtual_gates_are_noise_free():
    m = NoiseModel(p2=0.1, p1=0.2)
    assert m.gate_error(Gate("RZ", (0,), 0.3)) == 0.0
    assert m.gate_error(Gate("SX", (0,))) == 0.2
    assert m.gate_error(Gate("CZ", (0, 1))) == 0.1


def test_noiseless_estimate_matches_ideal_within_shot_noise():
    c = _trotter_basis()
    o = neel_operator(4)
    shots = 20_000
    est = noisy_expectation(c, o, NoiseModel.noiseless(), shots, seed=1)
    # Neel observable values lie in [-1/2, 1/2]
    assert abs(est - _ideal(c, o)) < 5 * 0.5 / math.sqrt(shots)


def test_non_diagonal_terms_are_rotated():
    c = decompose_to_basis(CircuitBuilder(2).add("H", 0).add("CZ", 0, 1).add("H", 1).build())
    o = PauliTermSum(2, ((0.5, "XZ"), (0.25, "ZX"), (0.3, "YY"), (1.0, "II")))
    assert len(measurement_groups(o)[1]) >= 2
    shots = 40_000
    est = noisy_expectation(c, o, NoiseModel.noiseless(), shots, seed=2)
    assert abs(est - _ideal(c, o)) < 5 * 1.05 / math.sqrt(shots)


def _depolarize_dense(rho, p, qubits, n):
    """15-Pauli channel written out on the full density matrix."""
    letters = {0: np.eye(2), 1: np.array([[0, 1], [1, 0]]), 2: np.array([[0, -1j], [1j, 0]]), 3: np.diag([1, -1])}
    out = (1 - p) * rho
    for a in range(4):
        for b in range(4):
            if a == b == 0:
                continue
            ops = [np.eye(2)] * n
            ops[qubits[0]], ops[qubits[1]] = letters[a], letters[b]
            P = np.ones((1, 1))
            for op in ops:
                P = np.kron(op, P)
            out = out + p / 15 * P @ rho @ P.conj().T
    return out


def test_single_cz_attenuation_matches_channel_oracle():
    p = 0.3
    c = CircuitBuilder(2).add("X", 1).add("CZ", 0, 1).build()
    noise = NoiseModel(p2=p)
    psi = circuit_unitary(c) @ np.eye(4)[0]
    rho = _depolarize_dense(np.outer(psi, psi.conj()), p, (0, 1), 2)
    o = PauliTermSum(2, ((1.0, "IZ"),))
    oracle = float(np.real(np.trace(o.to_dense() @ rho)))
    # eight of the fifteen Paulis anticommute with Z on the measured qubit
    assert oracle == pytest.approx(-(1 - 16 * p / 15), abs=1e-12)
    assert exact_noisy_expectation(c, o, noise) == pytest.approx(oracle, abs=1e-12)
    shots = 50_000
    est = noisy_expectation(c, o, noise, shots, seed=5)
    assert abs(est - oracle) < 5 / math.sqrt(shots)


def test_trajectory_estimate_matches_density_reference():
    rng = np.random.default_rng(21)
    c = basis_circuit(4, 30, rng)
    o = PauliTermSum(4, ((0.7, "ZZII"), (-0.4, "IXIZ"), (0.2, "IIIY")))
    noise = NoiseModel(p2=0.05, p1=0.01, p01=0.03, p10=0.06)
    shots = 40_000
    est = noisy_expectation(c, o, noise, shots, seed=3)
    assert abs(est - exact_noisy_expectation(c, o, noise)) < 5 * 1.3 / math.sqrt(shots)


def test_full_depolarizing_washes_out_the_signal():
    o = neel_operator(2)
    values = []
    for r in (1, 4):
        c = decompose_to_basis(build_circuit(TrotterPlan("first", r, 0.1, HubbardParams(2), prepare_neel=True)))
        values.append(noisy_expectation(c, o, NoiseModel(p2=1.0), 8000, seed=r))
    assert abs(values[1]) < 0.03
    assert abs(values[1]) <= abs(values[0]) + 0.03


def test_trajectory_sampling_reproducible():
    c = _trotter_basis(L=2, r=2)
    noise = NoiseModel(p2=0.05)
    a = simulate_trajectories(c, noise, 200, derive_rng(4, 0))
    b = simulate_trajectories(c, noise, 200, derive_rng(4, 0))
    assert np.array_equal(a.probs, b.probs) and np.array_equal(a.weights, b.weights)
    assert a.n_trajectories == 200
    assert noisy_expectation(c, neel_operator(2), noise, 500, seed=7) == noisy_expectation(
        c, neel_operator(2), noise, 500, seed=7
    )


# ---------------------------------------------------------------- twirling


def test_twirl_set_by_brute_force():
    quads = cz_twirl_set()
    assert len(quads) == 16
    assert ("I", "I", "I", "I") in quads
    for q in quads:
        assert is_cz_twirl(q)


def test_quoted_nontrivial_quadruple_adjudicated():
    # Z before and after on the first wire cancels, leaving an unmatched X on it
    assert not is_cz_twirl(("Z", "X", "Z", "X"))
    assert is_cz_twirl(("Z", "X", "I", "X"))
    assert is_cz_twirl(("I", "X", "Z", "X"))


def test_twirl_set_is_closed_under_composition():
    quads = set(cz_twirl_set())
    for a in quads:
        assert compose_twirls(a, ("I",) * 4) == a
        for b in quads:
            assert compose_twirls(a, b) in quads


def test_twirled_instances_are_unitary_equal():
    rng = np.random.default_rng(30)
    worst = 0.0
    for k in range(100):
        c = basis_circuit(int(rng.integers(2, 7)), 20, rng)
        (t,) = pauli_twirl(c, 1, seed=k)
        worst = max(worst, phase_aligned_distance(circuit_unitary(t), circuit_unitary(c)))
    assert worst < 1e-10


def test_twirl_instances_are_deterministic_prefixes():
    c = _trotter_basis(L=2, r=1)
    a = pauli_twirl(c, 3, seed=9)
    b = pauli_twirl(c, 5, seed=9)
    assert a == b[:3]
    assert len({x.gates for x in b}) > 1
    with pytest.raises(ValueError):
        pauli_twirl(CircuitBuilder(2).add("CNOT", 0, 1).build(), 2)
    with pytest.raises(ValueError):
        pauli_twirl(c, 0)


def test_twirling_has_no_effect_without_noise():
    c = _trotter_basis(L=2, r=2)
    o = neel_operator(2)
    ref = _ideal(c, o)
    for t in pauli_twirl(c, 4, seed=1):
        assert _ideal(t, o) == pytest.approx(ref, abs=1e-12)


def _with_overrotation(c, eps):
    gates = []
    for g in c.gates:
        gates.append(g)
        if g.kind == "CZ":
            gates += [Gate("RZ", (q,), eps) for q in g.qubits]
    return QuantumCircuit(c.n_qubits, tuple(gates))


def test_twirling_turns_coherent_error_into_weak_random_noise():
    n_cz, eps = 40, 0.05
    b = CircuitBuilder(2).add("SX", 0).add("SX", 1)
    for _ in range(n_cz):
        b.add("CZ", 0, 1)
    c = b.add("SX", 0).add("SX", 1).build()
    o = PauliTermSum(2, ((0.5, "ZI"), (0.5, "IZ")))
    ideal = _ideal(c, o)
    coherent = abs(_ideal(_with_overrotation(c, eps), o) - ideal)
    twirled = [_ideal(_with_overrotation(t, eps), o) for t in pauli_twirl(c, 200, seed=2)]
    averaged = abs(np.mean(twirled) - ideal)
    assert coherent > 0.5
    assert averaged < coherent / 5


# ---------------------------------------------------------------- folding and DD


def test_folding_preserves_unitary_and_scales_cz():
    rng = np.random.default_rng(4)
    for _ in range(100):
        c = basis_circuit(4, 15, rng)
        for k in (3, 5):
            f = fold_cz(c, k)
            assert phase_aligned_distance(circuit_unitary(f), circuit_unitary(c)) < 1e-10
            assert gate_counts(f).counts.get("CZ", 0) == k * gate_counts(c).counts.get("CZ", 0)
    with pytest.raises(ValueError):
        fold_cz(c, 2)
    with pytest.raises(ValueError):
        fold_cz(CircuitBuilder(2).add("SWAP", 0, 1).build(), 3)


def test_dd_leaves_busy_circuits_alone():
    c = CircuitBuilder(2).add("SX", 0).add("SX", 1).add("CZ", 0, 1).build()
    assert insert_dd(c) == c
    assert plan_dd(c).windows == []


def test_dd_fills_an_idle_wire_during_a_cz_chain():
    b = CircuitBuilder(3).add("SX", 2).add("CZ", 0, 1)
    for _ in range(4):
        b.add("CZ", 0, 1)
    c = b.add("SX", 0).add("CZ", 1, 2).build()
    sched = plan_dd(c)
    # wire 0 waits 36 ns at the end, too short for a pulse pair
    assert len(sched.filled) == 1 and sched.filled[0].qubit == 2
    assert [w.qubit for w in sched.skipped] == [0]
    out = insert_dd(c)
    added = [g for g in out.gates if g.kind == "X"]
    assert len(added) == 2 and all(g.qubits == (2,) for g in added)
    w = sched.filled[0]
    tau = w.length - 2 * 32.0
    starts = sorted(t for _, t in sched.pulses)
    assert starts == pytest.approx([w.start + tau / 4, w.start + tau / 4 + 32.0 + tau / 2])
    assert phase_aligned_distance(circuit_unitary(out), circuit_unitary(c)) < 1e-12


def test_dd_skips_short_windows():
    c = CircuitBuilder(2).add("SX", 0).add("SX", 1).add("SX", 0).add("CZ", 0, 1).build()
    sched = plan_dd(c)
    assert len(sched.skipped) == 1 and not sched.filled
    assert insert_dd(c) == c
    custom = insert_dd(c, {"X": 10.0})
    assert sum(g.kind == "X" for g in custom.gates) == 2


def test_dd_preserves_unitaries_of_random_circuits():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        c = basis_circuit(int(rng.integers(2, 7)), 25, rng)
        worst = max(worst, phase_aligned_distance(circuit_unitary(insert_dd(c)), circuit_unitary(c)))
    assert worst < 1e-10


# ---------------------------------------------------------------- TREX


def test_trex_without_readout_noise_matches_plain_estimate():
    c = _all_ones(3)
    o = _z_sum(3)
    shots = 8000
    assert apply_trex(c, o, shots=shots, seed=1) == pytest.approx(-3.0)
    c2 = decompose_to_basis(CircuitBuilder(3).add("H", 0).add("CZ", 0, 1).add("H", 1).build())
    plain = noisy_expectation(c2, o, NoiseModel.noiseless(), shots, seed=2)
    trex = apply_trex(c2, o, shots=shots, seed=2)
    assert abs(trex - plain) < 5 * math.sqrt(2 * 3 / shots)


def _trex_sigma(f, shots, samples, p01, p10):
    # shot noise plus the spread from drawing only ``samples`` random masks
    return math.sqrt((1 - f**2) / shots + (p10 - p01) ** 2 / samples)


def test_trex_rescaling_recovers_true_value_on_all_ones():
    n = 4
    p01, p10 = (0.02, 0.01, 0.03, 0.02), (0.05, 0.08, 0.04, 0.06)
    noise = NoiseModel(p2=0.0, p01=p01, p10=p10)
    c = _all_ones(n)
    shots, samples = 40_000, 400
    for q in range(n):
        letters = "I" * q + "Z" + "I" * (n - q - 1)
        o = PauliTermSum(n, ((1.0, letters),))
        f = trex_factor(letters, noise)
        est = apply_trex(c, o, samples=samples, shots=shots, noise=noise, seed=q)
        sigma = _trex_sigma(f, shots, samples, p01[q], p10[q]) / f
        assert abs(est / f - (-1.0)) < 3 * sigma


def test_trex_analytic_mean_is_exactly_rescaled():
    n = 3
    noise = NoiseModel(p2=0.0, p1=0.01, p01=0.04, p10=0.09)
    psi = apply_circuit(StateVector.zeros(n), decompose_to_basis(CircuitBuilder(n).add("H", 0).add("CZ", 0, 1).add("H", 1).add("X", 2).build()))
    probs = psi.probabilities()
    o = PauliTermSum(n, ((0.5, "ZZI"), (-0.3, "IIZ"), (0.2, "ZIZ"), (0.4, "III")))
    expected = 0.4
    for c_, s in o.without_identity().terms:
        true = float(probs @ np.array([(-1) ** bin(i & sum(1 << q for q, ch in enumerate(s) if ch == "Z")).count("1") for i in range(2**n)]))
        expected += c_ * true * trex_factor(s, noise)
    assert trex_expected(probs, o, noise) == pytest.approx(expected, abs=1e-12)


def test_trex_calibration_matches_analytic_factor():
    n = 3
    noise = NoiseModel(p2=0.0, p01=0.03, p10=0.07)
    o = _z_sum(n)
    shots, samples = 60_000, 600
    cal = trex_calibration(n, o, noise, samples=samples, shots=shots, seed=4)
    for _, s in o.terms:
        f = trex_factor(s, noise)
        assert abs(cal[s] - f) < 4 * _trex_sigma(f, shots, samples, 0.03, 0.07)


def test_calibrated_trex_is_unbiased():
    n = 3
    noise = NoiseModel(p2=0.0, p01=0.02, p10=0.05)
    o = _z_sum(n)
    shots = 40_000
    est = apply_trex(_all_ones(n), o, samples=400, shots=shots, noise=noise, seed=6, calibrate=True)
    assert est == pytest.approx(-3.0, abs=0.05)


def test_trex_rejects_non_diagonal_observables():
    with pytest.raises(ValueError):
        apply_trex(_all_ones(2), PauliTermSum(2, ((1.0, "XI"),)))
    with pytest.raises(ValueError):
        apply_trex(_all_ones(2), _z_sum(3))


# ---------------------------------------------------------------- ZNE


def test_extrapolation_fits_recover_exact_data():
    ks = [1, 3, 5]
    lin = extrapolate(ks, [0.9 - 0.1 * k for k in ks])
    assert lin.value == pytest.approx(0.9) and max(map(abs, lin.residuals)) < 1e-12
    quad = extrapolate(ks, [0.8 - 0.05 * k + 0.01 * k * k for k in ks], "quadratic")
    assert quad.value == pytest.approx(0.8)
    exp = extrapolate(ks, [-0.5 * 0.9**k for k in ks], "exponential")
    assert exp.value == pytest.approx(-0.5) and exp.params[1] == pytest.approx(0.9)
    assert extrapolate(ks, [0.3, 0.3, 0.3]).value == pytest.approx(0.3)


def test_extrapolation_degenerate_cases_report_raw_values():
    with pytest.raises(ZneFitError) as err:
        extrapolate([1, 3], [0.2, 0.1], "quadratic")
    assert err.value.values == (0.2, 0.1)
    with pytest.raises(ZneFitError):
        extrapolate([1, 1], [0.2, 0.1])
    with pytest.raises(ZneFitError):
        extrapolate([1, 3, 5], [0.2, -0.1, 0.05], "exponential")
    with pytest.raises(ZneFitError):
        extrapolate([1, 3], [0.2, float("nan")])
    with pytest.raises(ZneFitError):
        extrapolate([], [])
    with pytest.raises(ValueError):
        extrapolate([1, 3], [0.2, 0.1], "cubic")
    single = extrapolate([1], [0.42])
    assert single.value == 0.42


def test_plan_validation_and_round_trip():
    for bad in ((3, 5), (1, 2), (1, 5, 3), ()):
        with pytest.raises(ValueError):
            MitigationPlan(zne_factors=bad)
    with pytest.raises(ValueError):
        MitigationPlan(zne_fit="cubic")
    with pytest.raises(ValueError):
        MitigationPlan(trex_samples=0)
    with pytest.raises(ValueError):
        MitigationPlan(trajectories=0)
    p = MitigationPlan(zne_factors=[1, 3], trajectories=50, dd_durations={"X": 20.0})
    assert p.zne_factors == (1, 3)
    assert MitigationPlan.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        MitigationPlan.from_dict({"bogus": 1})
    d = MitigationPlan()
    assert (d.trex_samples, d.twirl_instances, d.zne_factors, d.zne_fit) == (10, 10, (1, 3, 5), "linear")


def test_noiseless_factors_agree():
    c = _trotter_basis(L=2, r=2)
    o = neel_operator(2)
    plan = MitigationPlan(twirl_instances=2, trex_enabled=False, trajectories=1)
    raw, _, _ = factor_values(c, o, NoiseModel.noiseless(), plan, 20_000, seed=3)
    ref = _ideal(c, o)
    for v in raw.values():
        assert abs(v - ref) < 5 * 0.5 / math.sqrt(20_000)
    res = zne_estimate(c, o, NoiseModel.noiseless(), plan, 20_000, seed=3)
    assert abs(res.value - ref) < 0.03


def test_single_factor_zne_is_the_raw_estimator():
    c = _trotter_basis(L=2, r=2)
    o = neel_operator(2)
    noise = NoiseModel(p2=0.02, p01=0.01, p10=0.02)
    plan = MitigationPlan(zne_factors=(1,), twirl_instances=3, trajectories=50)
    res = zne_estimate(c, o, noise, plan, 2000, seed=1)
    raw, _, table = factor_values(c, o, noise, plan, 2000, seed=1)
    assert res.value == raw[1] == float(table[:, 0].mean())
    assert res.fit.model == "none"


def test_exponential_zne_recovers_exact_under_cz_depolarizing():
    c = _trotter_basis()
    o = neel_operator(4)
    exact = _ideal(c, o)
    plan = MitigationPlan(
        trajectories=2000, dd_enabled=False, trex_enabled=False, twirl_enabled=False, zne_fit="exponential"
    )
    res = zne_estimate(c, o, NoiseModel(p2=2.5e-3), plan, shots=50_000, seed=0)
    assert res.raw[1] > res.raw[3] > res.raw[5] > 0
    assert abs(res.value - exact) < 0.02 * abs(exact)


# ---------------------------------------------------------------- pipeline


def test_disabled_pipeline_is_the_noisy_estimate():
    c = _trotter_basis(L=2, r=2)
    o = neel_operator(2)
    noise = NoiseModel(p2=0.01, p01=0.02, p10=0.03)
    point = mitigated_pipeline(c, o, noise, MitigationPlan.disabled(), 3000, seed=4)
    assert point.value == noisy_expectation(c, o, noise, 3000, 4)
    assert point.diagnostics["stages"] == []


def test_pipeline_without_noise_matches_ideal():
    c = _trotter_basis(L=2, r=2)
    o = neel_operator(2)
    plan = MitigationPlan(twirl_instances=3, trex_samples=4, trajectories=1)
    point = mitigated_pipeline(c, o, NoiseModel.noiseless(), plan, 8000, seed=2)
    assert abs(point.value - _ideal(c, o)) < 0.05
    assert point.diagnostics["stages"] == ["dd", "trex", "twirl", "zne"]
    assert set(point.diagnostics["zne"]["raw"]) == {"1", "3", "5"}


def test_pipeline_parallel_matches_serial():
    c = _trotter_basis(L=2, r=1)
    o = neel_operator(2)
    noise = NoiseModel(p2=0.02, p01=0.01, p10=0.02)
    plan = MitigationPlan(twirl_instances=2, trex_samples=3, trajectories=20)
    a = mitigated_pipeline(c, o, noise, plan, 600, seed=5, workers=1)
    b = mitigated_pipeline(c, o, noise, plan, 600, seed=5, workers=2)
    assert a.value == b.value
    assert a.diagnostics == b.diagnostics
