"""Natural-gradient machinery: derivatives, metric, update rule, optimizer."""
import math

import numpy as np
import pytest

from isingdefect.ansatz import (
    AnsatzSpec,
    gate_generators,
    init_params,
    parameter_count,
    prepare_state,
)
from isingdefect.model import ModelParams, build_hamiltonian, exact_ground
from isingdefect.qng import (
    OptimizeOptions,
    OptimizerState,
    derivative_state,
    gradient_exact,
    metric_exact,
    optimize,
    qng_step,
    trace_to_csv,
)
from isingdefect.statevector import expectation, inner


def random_point(spec, seed, scale=1.2):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, parameter_count(spec))


def test_derivative_norm_is_one():
    spec = AnsatzSpec(L=3, N=2)
    params = random_point(spec, 0)
    for p in range(parameter_count(spec)):
        assert derivative_state(spec, params, p).norm() == pytest.approx(1.0, abs=1e-12)


def test_derivative_of_stabilizer_rotation_is_pure_gauge():
    # X rotations act on |+...+> at zero angles: derivative is -i psi
    spec = AnsatzSpec(L=2, N=1)
    params = np.zeros(5)
    psi = prepare_state(spec, params)
    for p in (1, 2):  # the two X-rotation slots
        d = derivative_state(spec, params, p)
        assert np.allclose(d.amplitudes, -1j * psi.amplitudes, atol=1e-14)


def test_derivative_matches_finite_difference():
    spec = AnsatzSpec(L=3, N=1)
    params = random_point(spec, 5)
    eps = 1e-5
    for p in range(parameter_count(spec)):
        up, dn = params.copy(), params.copy()
        up[p] += eps
        dn[p] -= eps
        fd = (prepare_state(spec, up).amplitudes - prepare_state(spec, dn).amplitudes) / (
            2 * eps
        )
        got = derivative_state(spec, params, p).amplitudes
        assert np.max(np.abs(got - fd)) < 1e-8


def test_insertion_before_own_gate_is_equivalent():
    # -iO_p commutes with exp(-i t O_p), so either side of gate p agrees
    from isingdefect.ansatz import apply_gates_raw, prepare_truncated
    from isingdefect.qng import minus_i_times
    from isingdefect.statevector import pauli_apply_raw

    spec = AnsatzSpec(L=3, N=1)
    params = random_point(spec, 6)
    gens = gate_generators(spec)
    for p in [0, 3, 7]:
        before = prepare_truncated(spec, params, p, include_cut=False)
        amps = pauli_apply_raw(before.amplitudes, minus_i_times(gens[p]))
        apply_gates_raw(amps, spec, params, p, None)
        assert np.allclose(amps, derivative_state(spec, params, p).amplitudes, atol=1e-12)


@pytest.mark.parametrize("L", [2, 4])
def test_gradient_matches_finite_difference(L):
    spec = AnsatzSpec(L=L, N=2)
    mp = ModelParams(L=L, b=0, v=0.9)
    H = build_hamiltonian(mp)
    params = random_point(spec, L)
    grad = gradient_exact(spec, params, H)
    eps = 1e-5
    for p in range(parameter_count(spec)):
        up, dn = params.copy(), params.copy()
        up[p] += eps
        dn[p] -= eps
        fd = (
            expectation(prepare_state(spec, up), H)
            - expectation(prepare_state(spec, dn), H)
        ) / (2 * eps)
        assert abs(grad[p] - fd) < 1e-6


def test_gradient_z_components_vanish_at_zero_params():
    spec = AnsatzSpec(L=2, N=1)
    H = build_hamiltonian(ModelParams(L=2, b=0))
    grad = gradient_exact(spec, np.zeros(5), H)
    assert abs(grad[3]) < 1e-12 and abs(grad[4]) < 1e-12


def test_metric_diagonal_examples_at_zero_params():
    # Rz direction on |+>: g = 1; Rx direction stabilizes |+>: g = 0
    spec = AnsatzSpec(L=2, N=1)
    g = metric_exact(spec, np.zeros(5))
    assert g[3, 3] == pytest.approx(1.0, abs=1e-12)
    assert g[1, 1] == pytest.approx(0.0, abs=1e-12)


def test_gauge_direction_gives_zero_row_and_column():
    spec = AnsatzSpec(L=2, N=1)
    g = metric_exact(spec, np.zeros(5))
    for p in (1, 2):  # X rotations on the stabilized state
        assert np.max(np.abs(g[p, :])) < 1e-12
        assert np.max(np.abs(g[:, p])) < 1e-12


def test_metric_matches_naive_assembly():
    spec = AnsatzSpec(L=2, N=1)
    params = random_point(spec, 9)
    psi = prepare_state(spec, params)
    P = parameter_count(spec)
    derivs = [derivative_state(spec, params, p) for p in range(P)]
    naive = np.empty((P, P))
    for p in range(P):
        for q in range(P):
            G = inner(derivs[p], derivs[q]) - inner(derivs[p], psi) * inner(
                psi, derivs[q]
            )
            naive[p, q] = G.real
    assert np.allclose(metric_exact(spec, params), naive, atol=1e-12)


def test_metric_matches_fidelity_hessian():
    spec = AnsatzSpec(L=3, N=1)
    params = random_point(spec, 13)
    P = parameter_count(spec)
    base = prepare_state(spec, params)

    def fid(shift):
        return abs(inner(base, prepare_state(spec, params + shift))) ** 2

    def hess(p, q, eps):
        ep = np.zeros(P)
        eq = np.zeros(P)
        ep[p] = eps
        eq[q] = eps
        return (
            fid(ep + eq) - fid(ep - eq) - fid(-ep + eq) + fid(-ep - eq)
        ) / (4 * eps * eps)

    got = metric_exact(spec, params)
    eps = 2e-3
    for p in range(P):
        for q in range(p, P):
            coarse = hess(p, q, eps)
            fine = hess(p, q, eps / 2)
            oracle = -0.5 * (4 * fine - coarse) / 3  # Richardson step
            assert abs(got[p, q] - oracle) < 1e-6


def test_metric_symmetric_and_psd():
    spec = AnsatzSpec(L=4, N=2)
    for seed in range(3):
        g = metric_exact(spec, random_point(spec, seed))
        assert np.max(np.abs(g - g.T)) < 1e-12
        assert np.linalg.eigvalsh(g).min() > -1e-10


def test_qng_step_identity_metric_is_vanilla_descent():
    params = np.array([0.3, -0.2, 1.0])
    grad = np.array([1.0, -2.0, 0.5])
    state = OptimizerState(params=params, energy=0.0, learning_rate=0.05)
    out = qng_step(state, grad, np.eye(3), lam=0.0)
    assert np.allclose(out.params, params - 0.05 * grad, atol=1e-14)
    assert out.iteration == 1


def test_qng_step_regularization_floor():
    # singular 1x1 metric: the shift alone sets the scale, d = 0.1/1e-3 = 100
    state = OptimizerState(params=np.array([0.0]), energy=0.0, learning_rate=0.05)
    out = qng_step(state, np.array([0.1]), np.array([[0.0]]), lam=1e-3)
    assert out.params[0] == pytest.approx(-5.0, abs=1e-12)


def test_qng_step_halves_until_energy_drops():
    # f(x) = x^2 from x=3 with eta=1.5 overshoots; one halving lands at -1.5
    state = OptimizerState(params=np.array([3.0]), energy=9.0, learning_rate=1.5)
    out = qng_step(
        state,
        np.array([6.0]),
        np.eye(1),
        energy_fn=lambda q: float(q[0] ** 2),
        lam=0.0,
    )
    assert out.params[0] == pytest.approx(-1.5, abs=1e-12)
    assert out.energy == pytest.approx(2.25, abs=1e-12)


def test_qng_step_rejects_hopeless_direction():
    state = OptimizerState(params=np.array([1.0]), energy=5.0, learning_rate=1.0)
    out = qng_step(
        state, np.array([1.0]), np.eye(1), energy_fn=lambda q: 100.0, lam=0.0
    )
    assert out.params[0] == 1.0
    assert out.energy == 5.0


def test_qng_step_escalates_and_surfaces_failure():
    state = OptimizerState(params=np.array([0.0]), energy=0.0)
    # negative-definite metric still solves after escalation
    out = qng_step(state, np.array([1.0]), np.array([[-1.0]]), lam=1e-4)
    assert np.isfinite(out.params[0])
    with pytest.raises(RuntimeError, match="lambda"):
        qng_step(state, np.array([1.0]), np.array([[math.nan]]))


def test_optimize_small_chain_to_exact_energy():
    spec = AnsatzSpec(L=2, N=1)
    state, trace = optimize(
        spec,
        ModelParams(L=2, b=0),
        OptimizeOptions(use_oracle=False, max_iters=500),
    )
    assert state.converged
    assert state.energy == pytest.approx(-math.sqrt(5), abs=1e-6)


def test_optimize_reaches_per_mille_accuracy_l8():
    mp = ModelParams(L=8, b=0, v=0.0)
    spec = AnsatzSpec(L=8, N=4)
    state, trace = optimize(spec, mp)
    assert state.converged
    target = exact_ground(mp).ground_energy
    assert abs(state.energy - target) / abs(target) < 1e-3


def test_optimize_defect_case_l8():
    mp = ModelParams(L=8, b=0, v=4.0)
    spec = AnsatzSpec(L=8, N=4)
    state, trace = optimize(spec, mp)
    assert state.converged
    target = exact_ground(mp).ground_energy
    assert abs(state.energy - target) / abs(target) < 1e-3


def test_natural_gradient_beats_plain_descent():
    mp = ModelParams(L=4, b=0, v=0.0)
    spec = AnsatzSpec(L=4, N=2)
    qng_state, qng_trace = optimize(spec, mp, OptimizeOptions(max_iters=400))
    gd_state, gd_trace = optimize(
        spec, mp, OptimizeOptions(max_iters=400, plain_gradient=True)
    )
    assert qng_state.converged
    assert len(qng_trace) < len(gd_trace)


def test_energy_trace_monotone_under_safeguard():
    mp = ModelParams(L=4, b=0, v=0.0)
    spec = AnsatzSpec(L=4, N=2)
    _, trace = optimize(spec, mp)
    energies = np.array([r.energy for r in trace])
    assert np.all(np.diff(energies) <= 1e-9)


def test_trace_csv_shape():
    mp = ModelParams(L=2, b=0)
    spec = AnsatzSpec(L=2, N=1)
    state, trace = optimize(spec, mp, OptimizeOptions(max_iters=40))
    csv = trace_to_csv(trace)
    lines = csv.strip().split("\n")
    assert lines[0] == "iter,energy,grad_norm,rel_error"
    assert len(lines) == len(trace) + 1
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert float(first[3]) >= 0  # oracle mode fills the column


def test_optimize_flags_non_convergence():
    mp = ModelParams(L=4, b=0, v=0.0)
    spec = AnsatzSpec(L=4, N=2)
    state, trace = optimize(spec, mp, OptimizeOptions(max_iters=3))
    assert not state.converged
    assert len(trace) == 3


def test_optimize_rejects_mismatched_boundary():
    with pytest.raises(ValueError):
        optimize(AnsatzSpec(L=4, N=2, boundary="open"), ModelParams(L=4, b=1))
