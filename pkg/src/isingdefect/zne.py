"""Noise injection, gate folding, and zero-noise extrapolation.

Noise is stochastic-Pauli (depolarizing) per two-qubit gate: after the gate
fires, with probability p2 one of the 15 non-identity two-qubit Paulis on the
gate's support is applied, drawn uniformly. The channel average is estimated
by trajectory Monte Carlo: a batch of pure statevectors evolves through the
circuit, each sampling its own error record, and the observable is averaged
across the batch. Density matrices at 4^L are never formed.

Amplification folds trailing two-qubit gates G -> G G^dag G, which leaves
the noiseless circuit exact while multiplying its noise exposure. With n2
two-qubit gates, k = floor((factor-1) n2/2 + 0.5) folds bring the count as
close as possible to factor * n2; the achieved factor (n2 + 2k)/n2 is the
honest abscissa and is what the extrapolation fits against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzSpec, gates as ansatz_gates
from .measure import EstimateRecord
from .paulis import PauliString, WeightedPauliSum
from .statevector import (
    RotationGate,
    pauli_apply_raw,
    plus_state,
    rotation_apply_raw,
    sum_apply_raw,
)

_LETTERS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    p2: float = 0.01
    p1: float = 0.0

    def __post_init__(self):
        if not (0 <= self.p2 < 1 and 0 <= self.p1 < 1):
            raise ValueError("error probabilities must lie in [0, 1)")


def _default_factors():
    return tuple(round(1.0 + 0.2 * i, 1) for i in range(11))


@dataclass(frozen=True)
class ZneSchedule:
    factors: tuple = ()
    degree: int = 2
    amplification: str = "fold-from-back"

    def __post_init__(self):
        factors = tuple(self.factors) or _default_factors()
        object.__setattr__(self, "factors", factors)
        if factors[0] != 1.0:
            raise ValueError("first noise factor must be 1.0")
        if any(b <= a for a, b in zip(factors, factors[1:])):
            raise ValueError("noise factors must be strictly increasing")
        if self.degree < 1:
            raise ValueError("extrapolation degree must be at least 1")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if _weight(g) == 2)


def _weight(gate: RotationGate) -> int:
    g = gate.generator
    return (g.x | g.z).bit_count()


def ansatz_circuit(spec: AnsatzSpec, params) -> Circuit:
    return Circuit(spec.L, tuple(ansatz_gates(spec, params)))


def fold_gates(circuit: Circuit, factor: float) -> Circuit:
    """Fold trailing two-qubit gates until the count best matches factor."""
    if factor < 1:
        raise ValueError("noise factor must be >= 1")
    idx2 = [i for i, g in enumerate(circuit.gates) if _weight(g) == 2]
    n2 = len(idx2)
    if n2 == 0:
        return circuit
    k = int((factor - 1) * n2 / 2 + 0.5)
    if k == 0:
        return circuit
    rounds, extra = divmod(k, n2)
    # the `extra` trailing two-qubit gates get one additional fold
    folds = {}
    for rank, i in enumerate(reversed(idx2)):
        folds[i] = rounds + (1 if rank < extra else 0)
    out = []
    for i, g in enumerate(circuit.gates):
        out.append(g)
        for _ in range(folds.get(i, 0)):
            out.append(g.inverse())
            out.append(g)
    return Circuit(circuit.n_qubits, tuple(out))


def noiseless_expectation(circuit: Circuit, obs: WeightedPauliSum) -> float:
    state = plus_state(circuit.n_qubits)
    for g in circuit.gates:
        rotation_apply_raw(state.amplitudes, g)
    val = np.vdot(state.amplitudes, sum_apply_raw(state.amplitudes, obs))
    return float(val.real)


def _error_strings(generator: PauliString):
    """The 15 (3 for one site) non-identity Paulis on the generator support."""
    sites = sorted(generator.ops)
    strings = []
    if len(sites) == 1:
        for letter in _LETTERS[1:]:
            strings.append(PauliString.from_ops({sites[0]: letter}))
        return strings
    a, b = sites
    for la in _LETTERS:
        for lb in _LETTERS:
            if la == lb == "I":
                continue
            ops = {}
            if la != "I":
                ops[a] = la
            if lb != "I":
                ops[b] = lb
            strings.append(PauliString.from_ops(ops))
    return strings


def noisy_expectation(circuit: Circuit, obs: WeightedPauliSum, noise: NoiseModel,
                      trajectories: int, seed: int = 0, stream: int = 0,
                      chunk: int = 2048, circuit_id: str = "zne") -> EstimateRecord:
    """Trajectory Monte Carlo mean of <obs> under per-gate Pauli noise."""
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    if not obs.is_hermitian():
        raise ValueError("observable must be hermitian")
    dim = 1 << circuit.n_qubits
    base = plus_state(circuit.n_qubits).amplitudes
    gate_info = []
    for g in circuit.gates:
        w = _weight(g)
        p = noise.p2 if w == 2 else noise.p1
        gate_info.append((g, p, _error_strings(g.generator) if p > 0 else None))

    total = 0
    pieces = []
    chunk_index = 0
    while total < trajectories:
        rows = min(chunk, trajectories - total)
        rng = np.random.default_rng([seed, stream, chunk_index])
        B = np.tile(base, (rows, 1))
        for g, p, errors in gate_info:
            rotation_apply_raw(B, g)
            if not errors:
                continue
            hit = rng.random(rows) < p
            n_hit = int(hit.sum())
            if n_hit == 0:
                continue
            picks = rng.integers(0, len(errors), n_hit)
            hit_rows = np.flatnonzero(hit)
            for e in np.unique(picks):
                sel = hit_rows[picks == e]
                B[sel] = pauli_apply_raw(B[sel], errors[e])
        pieces.append(np.einsum("ij,ij->i", B.conj(), sum_apply_raw(B, obs)).real)
        total += rows
        chunk_index += 1
    values = np.concatenate(pieces)
    mean = float(values.mean())
    std_error = float(values.std() / np.sqrt(total))
    return EstimateRecord(mean, std_error, total, circuit_id, "X")


def extrapolate(schedule: ZneSchedule, values) -> float:
    """Least-squares polynomial through (factor, estimate), read at factor 0."""
    pairs = list(values)
    xs = np.array([f for f, _ in pairs], dtype=float)
    ys = np.array([e for _, e in pairs], dtype=float)
    if len(set(xs.tolist())) < schedule.degree + 1:
        raise ValueError("not enough distinct factors for the fit degree")
    coeffs = np.polyfit(xs, ys, schedule.degree)
    return float(np.polyval(coeffs, 0.0))


def zne_pipeline(circuit: Circuit, obs: WeightedPauliSum, noise: NoiseModel,
                 schedule: ZneSchedule, trajectories: int, seed: int = 0) -> dict:
    """Fold, sample, and extrapolate; returns the full report."""
    noiseless = noiseless_expectation(circuit, obs)
    n2 = max(circuit.two_qubit_count, 1)
    estimates = []
    achieved = []
    errors = []
    for i, factor in enumerate(schedule.factors):
        folded = fold_gates(circuit, factor)
        achieved.append(folded.two_qubit_count / n2)
        rec = noisy_expectation(
            folded, obs, noise, trajectories, seed=seed, stream=i,
            circuit_id=f"zne:f{factor}",
        )
        estimates.append(rec.value)
        errors.append(rec.std_error)
    extrapolated = extrapolate(schedule, zip(achieved, estimates))
    return {
        "factors": list(schedule.factors),
        "achieved_factors": achieved,
        "estimates": estimates,
        "std_errors": errors,
        "extrapolated": extrapolated,
        "noiseless_reference": noiseless,
    }
