"""Layered circuit: ordering, counts, truncation, periodicity."""
import numpy as np
import pytest

from isingdefect.ansatz import (
    AnsatzSpec,
    for_model,
    gate_generators,
    gates,
    init_params,
    parameter_count,
    prepare_state,
    prepare_truncated,
)
from isingdefect.model import ModelParams
from isingdefect.statevector import plus_state

import oracles


def test_parameter_counts():
    assert parameter_count(AnsatzSpec(L=12, N=6, boundary="periodic")) == 216
    assert parameter_count(AnsatzSpec(L=12, N=6, boundary="open")) == 210
    assert parameter_count(AnsatzSpec(L=2, N=1, boundary="open")) == 5


def test_layer_ordering():
    spec = AnsatzSpec(L=3, N=2, boundary="periodic")
    gens = gate_generators(spec)
    per_layer = len(gens) // 2
    assert gens[:per_layer] == gens[per_layer:]
    letters = [tuple(sorted(g.ops.items())) for g in gens[:per_layer]]
    assert letters == [
        ((0, "Z"), (1, "Z")),
        ((1, "Z"), (2, "Z")),
        ((0, "Z"), (2, "Z")),  # wrap bond last among bonds
        ((0, "X"),),
        ((1, "X"),),
        ((2, "X"),),
        ((0, "Z"),),
        ((1, "Z"),),
        ((2, "Z"),),
    ]


def test_open_chain_drops_wrap_bond():
    gens = gate_generators(AnsatzSpec(L=3, N=1, boundary="open"))
    assert len(gens) == 8
    assert ((0, "Z"), (2, "Z")) not in [tuple(sorted(g.ops.items())) for g in gens]


def test_zero_angles_leave_plus_state():
    spec = AnsatzSpec(L=4, N=2)
    state = prepare_state(spec, np.zeros(parameter_count(spec)))
    assert np.allclose(state.amplitudes, plus_state(4).amplitudes, atol=1e-15)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_matches_dense_gate_product(boundary):
    spec = AnsatzSpec(L=3, N=2, boundary=boundary)
    rng = np.random.default_rng(7)
    params = rng.uniform(-1.5, 1.5, parameter_count(spec))
    psi = plus_state(3).amplitudes
    for g, t in zip(gate_generators(spec), params):
        U = oracles.dense_rotation(oracles.kron_chain(g.ops, 3), t)
        psi = U @ psi
    got = prepare_state(spec, params)
    assert np.allclose(got.amplitudes, psi, atol=1e-12)
    assert got.norm() == pytest.approx(1.0, abs=1e-12)


def test_truncation_prefixes():
    spec = AnsatzSpec(L=3, N=1)
    params = init_params(spec, seed=3) * 50  # visible angles
    gens = gate_generators(spec)
    psi = plus_state(3).amplitudes
    for cut, (g, t) in enumerate(zip(gens, params)):
        before = prepare_truncated(spec, params, cut, include_cut=False)
        assert np.allclose(before.amplitudes, psi, atol=1e-12)
        psi = oracles.dense_rotation(oracles.kron_chain(g.ops, 3), t) @ psi
        after = prepare_truncated(spec, params, cut, include_cut=True)
        assert np.allclose(after.amplitudes, psi, atol=1e-12)
    assert np.allclose(prepare_state(spec, params).amplitudes, psi, atol=1e-12)


def test_angle_shift_by_two_pi_is_identity():
    spec = AnsatzSpec(L=2, N=2)
    params = init_params(spec, seed=1)
    base = prepare_state(spec, params)
    for p in [0, 4, 9]:
        shifted = params.copy()
        shifted[p] += 2 * np.pi
        assert np.allclose(
            prepare_state(spec, shifted).amplitudes, base.amplitudes, atol=1e-12
        )


def test_init_params_bounds_and_determinism():
    spec = AnsatzSpec(L=12, N=6, boundary="periodic")
    a = init_params(spec, seed=11)
    b = init_params(spec, seed=11)
    c = init_params(spec, seed=12)
    assert a.shape == (216,)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(np.abs(a) <= 0.01)


def test_for_model_follows_boundary():
    assert for_model(ModelParams(L=12, b=1)) == AnsatzSpec(12, 6, "periodic")
    assert for_model(ModelParams(L=12, b=0)) == AnsatzSpec(12, 6, "open")


def test_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(L=1, N=1)
    with pytest.raises(ValueError):
        AnsatzSpec(L=4, N=0)
    with pytest.raises(ValueError):
        AnsatzSpec(L=4, N=1, boundary="twisted")
    spec = AnsatzSpec(L=2, N=1)
    with pytest.raises(ValueError):
        prepare_state(spec, np.zeros(4))
    with pytest.raises(ValueError):
        prepare_truncated(spec, np.zeros(5), 5)
    with pytest.raises(ValueError):
        gates(spec, np.zeros(6))
