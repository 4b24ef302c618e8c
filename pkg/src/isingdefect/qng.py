"""Quantum natural gradient with exact statevector arithmetic.

The metric is the real part of

    G_pq = <d_p psi|d_q psi> - <d_p psi|psi><psi|d_q psi>

and the update solves (g + lam I) d = grad, then steps Theta -> Theta - eta d.
Derivative states come from a single batched sweep: every prefix state rides
through the remaining gates together, so one optimization step costs one pass
of the circuit over a (P+1)-row batch instead of P separate circuit runs.

Regularization and step-halving are deterministic safeguards: lam starts at
1e-4 and escalates tenfold when the shifted solve is not positive definite,
and a step that raises the energy by more than 1e-9 is halved up to 8 times
before being rejected outright.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .ansatz import AnsatzSpec, gate_generators, init_params, parameter_count, prepare_state
from .model import ModelParams, build_hamiltonian, exact_ground
from .paulis import PauliString, WeightedPauliSum
from .statevector import (
    RotationGate,
    StateVector,
    expectation,
    pauli_apply_raw,
    plus_state,
    rotation_apply_raw,
    sum_apply_raw,
)


def minus_i_times(g: PauliString) -> PauliString:
    """-i * g, still a single unit-modulus string."""
    return PauliString(g.x, g.z, (g.e + 3) % 4)


def derivative_state(spec: AnsatzSpec, params, p: int) -> StateVector:
    """U^p_> (-i O_p) U^p_<= |psi_0>; unit norm because O_p is unitary."""
    P = parameter_count(spec)
    if not 0 <= p < P:
        raise IndexError("parameter index out of range")
    gens = gate_generators(spec)
    state = plus_state(spec.L)
    amps = state.amplitudes
    for k in range(p + 1):
        rotation_apply_raw(amps, RotationGate(gens[k], float(params[k])))
    amps = pauli_apply_raw(amps, minus_i_times(gens[p]))
    for k in range(p + 1, P):
        rotation_apply_raw(amps, RotationGate(gens[k], float(params[k])))
    return StateVector(spec.L, amps)


def _sweep(spec: AnsatzSpec, params):
    """(psi, D) with D[p] the derivative state for parameter p, one pass."""
    gens = gate_generators(spec)
    P = len(gens)
    if len(params) != P:
        raise ValueError("parameter count mismatch")
    dim = 1 << spec.L
    D = np.empty((P + 1, dim), dtype=np.complex128)
    D[0] = plus_state(spec.L).amplitudes
    for p, g in enumerate(gens):
        rotation_apply_raw(D[: p + 1], RotationGate(g, float(params[p])))
        D[p + 1] = pauli_apply_raw(D[0], minus_i_times(g))
    return D[0], D[1:]


def gradient_exact(spec: AnsatzSpec, params, H: WeightedPauliSum) -> np.ndarray:
    """Component p is 2 Re <d_p psi| H |psi>."""
    if not H.is_hermitian():
        raise ValueError("H must be hermitian")
    psi, D = _sweep(spec, params)
    hpsi = sum_apply_raw(psi, H)
    return 2.0 * np.real(D.conj() @ hpsi)


def metric_exact(spec: AnsatzSpec, params) -> np.ndarray:
    psi, D = _sweep(spec, params)
    P = D.shape[0]
    # Re<d_p|d_q> is the plain dot product of the interleaved real views
    Dr = D.view(np.float64).reshape(P, -1)
    g = Dr @ Dr.T
    w = D.conj() @ psi  # <d_p psi|psi>
    g -= np.outer(w.real, w.real) + np.outer(w.imag, w.imag)
    return 0.5 * (g + g.T)


@dataclass
class OptimizerState:
    params: np.ndarray
    iteration: int = 0
    energy: float = math.nan
    grad_norm: float = math.nan
    learning_rate: float = 0.05
    converged: bool = False


def qng_step(state: OptimizerState, grad, metric, energy_fn=None, lam=1e-4) -> OptimizerState:
    """One natural-gradient update; energy_fn enables the halving safeguard."""
    grad = np.asarray(grad, dtype=np.float64)
    metric = np.asarray(metric, dtype=np.float64)
    P = grad.size
    if metric.shape != (P, P):
        raise ValueError("metric dimensions do not match gradient")
    lam_cur = lam
    direction = None
    for _ in range(7):
        shifted = metric + lam_cur * np.eye(P)
        try:
            cand = scipy.linalg.solve(shifted, grad, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            cand = None
        if cand is not None and np.all(np.isfinite(cand)):
            direction = cand
            break
        lam_cur = 1e-4 if lam_cur == 0.0 else lam_cur * 10
    if direction is None:
        raise RuntimeError(f"metric solve failed even at lambda={lam_cur:g}")

    eta = state.learning_rate
    new_params = state.params - eta * direction
    new_energy = state.energy
    if energy_fn is not None and math.isfinite(state.energy):
        accepted = False
        for _ in range(9):  # full step plus 8 halvings
            new_energy = energy_fn(new_params)
            if new_energy <= state.energy + 1e-9:
                accepted = True
                break
            eta *= 0.5
            new_params = state.params - eta * direction
        if not accepted:
            new_params = state.params
            new_energy = state.energy
    return replace(
        state,
        params=new_params,
        iteration=state.iteration + 1,
        energy=new_energy,
    )


@dataclass
class OptimizeOptions:
    eta: float = 0.05
    max_iters: int = 500
    lam: float = 1e-4
    seed: int = 0
    rel_tol: float = 1e-3
    grad_tol: float = 1e-6
    use_oracle: bool | None = None  # None: on whenever the dense solver fits
    plain_gradient: bool = False  # identity metric, for head-to-head baselines


@dataclass
class TraceRow:
    iteration: int
    energy: float
    grad_norm: float
    rel_error: float = math.nan


def trace_to_csv(trace) -> str:
    lines = ["iter,energy,grad_norm,rel_error"]
    for r in trace:
        lines.append(f"{r.iteration},{r.energy:.17g},{r.grad_norm:.17g},{r.rel_error:.17g}")
    return "\n".join(lines) + "\n"


def optimize(spec: AnsatzSpec, model_params: ModelParams, options: OptimizeOptions | None = None):
    """Ground-state search; returns (final OptimizerState, trace rows)."""
    opts = options or OptimizeOptions()
    if spec.L != model_params.L:
        raise ValueError("ansatz and model sizes differ")
    if spec.boundary != model_params.boundary:
        raise ValueError("ansatz boundary must match the model's")
    H = build_hamiltonian(model_params)
    use_oracle = opts.use_oracle
    if use_oracle is None:
        use_oracle = model_params.L <= 14
    target = exact_ground(model_params).ground_energy if use_oracle else None

    def energy_fn(params):
        return expectation(prepare_state(spec, params), H)

    P = parameter_count(spec)
    state = OptimizerState(
        params=init_params(spec, opts.seed), learning_rate=opts.eta
    )
    identity = np.eye(P) if opts.plain_gradient else None
    trace = []
    best = None
    for _ in range(opts.max_iters):
        psi, D = _sweep(spec, state.params)
        hpsi = sum_apply_raw(psi, H)
        energy = float(np.vdot(psi, hpsi).real)
        grad = 2.0 * np.real(D.conj() @ hpsi)
        state.energy = energy
        state.grad_norm = float(np.linalg.norm(grad))
        rel = math.nan if target is None else abs(energy - target) / abs(target)
        trace.append(TraceRow(state.iteration, energy, state.grad_norm, rel))
        if best is None or energy < best.energy:
            best = replace(state, params=state.params.copy())
        if target is not None and rel < opts.rel_tol:
            state.converged = True
            break
        if state.grad_norm < opts.grad_tol:
            state.converged = True
            break
        if identity is not None:
            metric = identity
        else:
            Dr = D.view(np.float64).reshape(P, -1)
            metric = Dr @ Dr.T
            w = D.conj() @ psi
            metric -= np.outer(w.real, w.real) + np.outer(w.imag, w.imag)
        state = qng_step(state, grad, metric, energy_fn=energy_fn, lam=opts.lam)
    if state.converged:
        return state, trace
    best.converged = False
    return best, trace
