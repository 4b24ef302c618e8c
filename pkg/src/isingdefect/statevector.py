"""Dense statevector kernel: states, Pauli rotations, controlled unitaries.

Amplitudes are flat complex128 arrays with qubit 0 as the least significant
bit of the basis index. Rotations use the convention R_O(phi) = exp(-i phi O)
with no half-angle factor, so d/dphi R = (-iO) R and derivative insertions
are exactly -iO.

The public API works on StateVector values and returns new states. The _raw
helpers operate in place on arrays whose last axis is the Hilbert dimension,
so a (k, 2^n) batch evolves through a gate in one vectorized call; the
optimizer and measurement modules build on them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import PauliString, WeightedPauliSum

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def copy(self):
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class RotationGate:
    """exp(-i * angle * generator); the generator must be hermitian."""

    generator: PauliString
    angle: float

    def inverse(self):
        return RotationGate(self.generator, -self.angle)


def plus_state(n: int) -> StateVector:
    """|+>^n, every amplitude 2^(-n/2)."""
    if not 1 <= n <= 28:
        raise ValueError("qubit count out of supported range 1..28")
    dim = 1 << n
    amps = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    return StateVector(n, amps)


def basis_state(n: int, index: int = 0) -> StateVector:
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n, amps)


@lru_cache(maxsize=None)
def _zsigns(zmask: int, dim: int):
    """(-1)^parity(k & zmask) over basis indices k, cached read-only."""
    idx = np.arange(dim, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(zmask)) & np.uint64(1)).astype(np.float64)
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=None)
def _perm(xmask: int, dim: int):
    idx = np.arange(dim, dtype=np.uint64)
    perm = (idx ^ np.uint64(xmask)).astype(np.int64)
    perm.setflags(write=False)
    return perm


def pauli_apply_raw(batch: np.ndarray, string: PauliString) -> np.ndarray:
    """Return string applied to every state along the last axis (new array)."""
    dim = batch.shape[-1]
    out = batch[..., _perm(string.x, dim)] if string.x else batch.copy()
    if string.z:
        # sign from the source basis state, i.e. the permuted index
        signs = _zsigns(string.z, dim)
        out *= signs[_perm(string.x, dim)] if string.x else signs
    if string.e:
        out *= _PHASES[string.e]
    return out


def rotation_apply_raw(batch: np.ndarray, gate: RotationGate) -> None:
    """In-place exp(-i angle G) on every state along the last axis."""
    g = gate.generator
    if not g.is_hermitian():
        raise ValueError("rotation generator must be hermitian")
    dim = batch.shape[-1]
    if g.x == 0:
        # diagonal generator: pure phase multiplication
        sign0 = 1.0 if g.e == 0 else -1.0
        batch *= np.exp((-1j * gate.angle * sign0) * _zsigns(g.z, dim))
        return
    if g.z == 0 and g.x.bit_count() == 1 and g.e == 0:
        # single-site X rotation: mix amplitude pairs through a reshaped view
        site = g.x.bit_length() - 1
        view = batch.reshape(batch.shape[:-1] + (dim >> (site + 1), 2, 1 << site))
        b0 = view[..., 0, :]
        b1 = view[..., 1, :]
        c, ms = np.cos(gate.angle), -1j * np.sin(gate.angle)
        tmp = b0.copy()
        b0 *= c
        b0 += ms * b1
        b1 *= c
        b1 += ms * tmp
        return
    rotated = pauli_apply_raw(batch, g)
    batch *= np.cos(gate.angle)
    batch += (-1j * np.sin(gate.angle)) * rotated


def apply_rotation(state: StateVector, gate: RotationGate) -> StateVector:
    if gate.generator.max_site() >= state.n_qubits:
        raise ValueError("gate site out of range")
    out = state.copy()
    rotation_apply_raw(out.amplitudes, gate)
    return out


def apply_pauli(state: StateVector, string: PauliString) -> StateVector:
    if string.max_site() >= state.n_qubits:
        raise ValueError("string site out of range")
    return StateVector(state.n_qubits, pauli_apply_raw(state.amplitudes, string))


def _apply_unitary_raw(batch, op):
    """Apply a PauliString, RotationGate, or unit scalar to a raw batch."""
    if isinstance(op, RotationGate):
        rotation_apply_raw(batch, op)
        return batch
    if isinstance(op, PauliString):
        batch[...] = pauli_apply_raw(batch, op)
        return batch
    phase = complex(op)
    if abs(abs(phase) - 1.0) > 1e-12:
        raise ValueError("scalar unitary must have unit modulus")
    batch *= phase
    return batch


def _op_support(op):
    if isinstance(op, RotationGate):
        return op.generator.x | op.generator.z
    if isinstance(op, PauliString):
        return op.x | op.z
    return 0


def apply_controlled(state: StateVector, control: int, op) -> StateVector:
    """Apply op on the control=|1> subspace; op is a PauliString, a
    RotationGate, or a unit-modulus complex scalar (controlled phase)."""
    if control >= state.n_qubits:
        raise ValueError("control site out of range")
    if (_op_support(op) >> control) & 1:
        raise ValueError("control overlaps the target support")
    out = state.copy()
    if control == state.n_qubits - 1:
        # most significant qubit controls a contiguous upper half
        half = out.amplitudes.shape[0] >> 1
        _apply_unitary_raw(out.amplitudes[half:], op)
        return out
    dim = out.amplitudes.shape[0]
    applied = out.amplitudes.copy()
    _apply_unitary_raw(applied, op)
    ctrl_on = (_perm(0, dim) >> control) & 1 == 1
    out.amplitudes[ctrl_on] = applied[ctrl_on]
    return out


def inner(a: StateVector, b: StateVector) -> complex:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError("size mismatch")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def sum_apply_raw(amps: np.ndarray, obs: WeightedPauliSum) -> np.ndarray:
    """obs @ amps for a weighted Pauli sum (new array)."""
    out = np.zeros_like(amps)
    for coeff, string in obs.terms():
        term = pauli_apply_raw(amps, string)
        term *= coeff
        out += term
    return out


def expectation(state: StateVector, obs: WeightedPauliSum) -> float:
    if not obs.is_hermitian():
        raise ValueError("observable must be hermitian")
    if obs.n_qubits != state.n_qubits:
        raise ValueError("register size mismatch")
    val = np.vdot(state.amplitudes, sum_apply_raw(state.amplitudes, obs))
    assert abs(val.imag) < 1e-10, "hermitian expectation left an imaginary residue"
    return float(val.real)


def pauli_expectation(state: StateVector, string: PauliString) -> float:
    """<psi| string |psi> for a single hermitian string."""
    if not string.is_hermitian():
        raise ValueError("string must be hermitian")
    val = np.vdot(state.amplitudes, pauli_apply_raw(state.amplitudes, string))
    assert abs(val.imag) < 1e-10
    return float(val.real)


def dump_state(state: StateVector, path) -> None:
    """Binary dump: little-endian f64 interleaved re/im."""
    with open(path, "wb") as fh:
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_state(path, n_qubits: int) -> StateVector:
    with open(path, "rb") as fh:
        amps = np.frombuffer(fh.read(), dtype="<c16").astype(np.complex128)
    if amps.shape[0] != 1 << n_qubits:
        raise ValueError("dump size does not match qubit count")
    return StateVector(n_qubits, amps)
