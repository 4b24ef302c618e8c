"""Layered variational circuit over the all-plus product state.

Each layer applies, in circuit time order, ZZ-bond rotations on ascending
bonds, then X rotations, then Z rotations on every site:

    U^a = U_Z^a U_X^a U_ZZ^a,   U = U^N ... U^1

Parameters are ordered exactly as the gates fire, layer by layer:
[theta_1..theta_nb, zeta_1..zeta_L, phi_1..phi_L] per layer, where nb is the
bond count (L-1 open, L periodic, the wrap bond Z_L Z_1 last). One angle per
gate, R(t) = exp(-i t G), so the count is (3L-1)N open and 3LN periodic.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import PauliString
from .statevector import RotationGate, StateVector, plus_state, rotation_apply_raw

_BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class AnsatzSpec:
    L: int
    N: int
    boundary: str = "open"

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("ansatz needs at least two sites")
        if self.N < 1:
            raise ValueError("need at least one layer")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")


def for_model(params) -> AnsatzSpec:
    """Spec matched to a model: boundary from b, depth N = L // 2."""
    return AnsatzSpec(L=params.L, N=max(1, params.L // 2), boundary=params.boundary)


def parameter_count(spec: AnsatzSpec) -> int:
    bonds = spec.L if spec.boundary == "periodic" else spec.L - 1
    return spec.N * (bonds + 2 * spec.L)


@lru_cache(maxsize=32)
def gate_generators(spec: AnsatzSpec) -> tuple[PauliString, ...]:
    """Generators in firing order; index p pairs with parameter p."""
    layer = []
    for i in range(spec.L - 1):
        layer.append(PauliString.from_ops({i: "Z", i + 1: "Z"}))
    if spec.boundary == "periodic":
        layer.append(PauliString.from_ops({spec.L - 1: "Z", 0: "Z"}))
    for i in range(spec.L):
        layer.append(PauliString.from_ops({i: "X"}))
    for i in range(spec.L):
        layer.append(PauliString.from_ops({i: "Z"}))
    return tuple(layer * spec.N)


def gates(spec: AnsatzSpec, params) -> list[RotationGate]:
    gens = gate_generators(spec)
    if len(params) != len(gens):
        raise ValueError(f"expected {len(gens)} parameters, got {len(params)}")
    return [RotationGate(g, float(t)) for g, t in zip(gens, params)]


def apply_gates_raw(batch, spec: AnsatzSpec, params, start=0, stop=None) -> None:
    """In-place gates [start, stop) on a raw amplitude batch."""
    gens = gate_generators(spec)
    stop = len(gens) if stop is None else stop
    for p in range(start, stop):
        rotation_apply_raw(batch, RotationGate(gens[p], float(params[p])))


def prepare_state(spec: AnsatzSpec, params) -> StateVector:
    if len(params) != parameter_count(spec):
        raise ValueError("parameter count mismatch")
    state = plus_state(spec.L)
    apply_gates_raw(state.amplitudes, spec, params)
    return state


def prepare_truncated(spec: AnsatzSpec, params, cut: int, include_cut=True) -> StateVector:
    """State after gates 0..cut (inclusive) or 0..cut-1 (include_cut=False)."""
    P = parameter_count(spec)
    if not 0 <= cut < P:
        raise ValueError("cut outside parameter range")
    if len(params) != P:
        raise ValueError("parameter count mismatch")
    state = plus_state(spec.L)
    apply_gates_raw(state.amplitudes, spec, params, 0, cut + 1 if include_cut else cut)
    return state


def init_params(spec: AnsatzSpec, seed: int = 0) -> np.ndarray:
    """Near-identity start: angles uniform in [-0.01, 0.01]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.01, 0.01, parameter_count(spec))
