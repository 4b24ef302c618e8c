"""Ising chain with a tunable impurity bond, plus the dense ground-truth solver.

H(v) = -sum_{i<L} Z_i Z_{i+1} - sum_i X_i - b Z_L Z_1
       + c1(v) (Z_j Z_{j+1} + X_j) + c2(v) Y_j Z_{j+1}

with c1 = 2 sinh^2(v)/cosh(2v) and c2 = sinh(2v)/cosh(2v) = tanh(2v).
b = 1 closes the ring, b = 0 leaves it open. v = 0 is the clean critical
chain; v -> infinity drives the impurity to the self-dual defect point where
both coefficients are exactly 1 (accepted as the math.inf sentinel). The
defect label j is 1-based (the impurity couples sites j and j+1); code
subtracts 1 internally. For b = 1 the wrap bond j = L is permitted.

Energies are in units of the bulk couplings (J = h = 1), dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .paulis import PauliString, WeightedPauliSum
from .statevector import StateVector

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


@dataclass(frozen=True)
class ModelParams:
    L: int
    b: int = 0
    v: float = 0.0
    j: int | None = None  # defaults to L // 2

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.b not in (0, 1):
            raise ValueError("b must be 0 or 1")
        if self.j is None:
            object.__setattr__(self, "j", max(1, self.L // 2))
        j_max = self.L if self.b == 1 else self.L - 1
        if self.L == 1:
            if self.v != 0.0:
                raise ValueError("single site admits no impurity bond")
        elif not 1 <= self.j <= j_max:
            raise ValueError(f"defect label j={self.j} outside 1..{j_max}")

    @property
    def boundary(self):
        return "periodic" if self.b == 1 else "open"


def defect_coefficients(v: float) -> tuple[float, float]:
    """(c1, c2); c1 written as 1 - 1/cosh(2v) to stay finite for large v."""
    if v == math.inf:
        return 1.0, 1.0
    try:
        c1 = 1.0 - 1.0 / math.cosh(2 * v)
    except OverflowError:
        c1 = 1.0
    return c1, math.tanh(2 * v)


def build_hamiltonian(p: ModelParams) -> WeightedPauliSum:
    L = p.L
    H = WeightedPauliSum(L)
    for i in range(L - 1):
        H.add(-1.0, PauliString.from_ops({i: "Z", i + 1: "Z"}))
    for i in range(L):
        H.add(-1.0, PauliString.from_ops({i: "X"}))
    if p.b == 1 and L > 1:
        H.add(-1.0, PauliString.from_ops({L - 1: "Z", 0: "Z"}))
    c1, c2 = defect_coefficients(p.v)
    if c1 != 0.0 or c2 != 0.0:
        jd = p.j - 1
        jp = (jd + 1) % L
        H.add(c1, PauliString.from_ops({jd: "Z", jp: "Z"}))
        H.add(c1, PauliString.from_ops({jd: "X"}))
        H.add(c2, PauliString.from_ops({jd: "Y", jp: "Z"}))
    return H


def dense_matrix(H: WeightedPauliSum):
    """Dense matrix of a weighted Pauli sum, real symmetric when possible.

    Local to this module so the oracle can go up to L = 14 (the generic
    pauli-algebra conversion is guarded tighter for casual use).
    """
    n = H.n_qubits
    if n > 14:
        raise ValueError("dense oracle guarded to L <= 14")
    dim = 1 << n
    idx = np.arange(dim, dtype=np.uint64)
    real_ok = all(
        abs(c.imag) < 1e-15 and string.n_y % 2 == 0 for c, string in H.terms()
    )
    mat = np.zeros((dim, dim), dtype=np.float64 if real_ok else np.complex128)
    for coeff, string in H.terms():
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(string.z)) & np.uint64(1)).astype(np.float64)
        rows = (idx ^ np.uint64(string.x)).astype(np.int64)
        weight = coeff * _PHASES[string.n_y % 4]
        mat[rows, idx.astype(np.int64)] += (weight if not real_ok else weight.real) * signs
    return mat


@dataclass
class SpectrumResult:
    ground_energy: float
    ground_state: StateVector
    gap: float
    degenerate: bool


@lru_cache(maxsize=64)
def _exact_ground_cached(p: ModelParams) -> SpectrumResult:
    if p.L > 14:
        raise ValueError("exact_ground is limited to L <= 14")
    mat = dense_matrix(build_hamiltonian(p))
    w, V = scipy.linalg.eigh(mat, subset_by_index=(0, 1), overwrite_a=True)
    state = StateVector(p.L, V[:, 0].astype(np.complex128))
    gap = float(w[1] - w[0])
    return SpectrumResult(float(w[0]), state, gap, gap < 1e-10)


def exact_ground(p: ModelParams) -> SpectrumResult:
    """Lowest eigenpair of the dense Hamiltonian; deterministic up to phase.

    Results are cached per parameter set; the returned state is a copy, safe
    to mutate.
    """
    res = _exact_ground_cached(p)
    return SpectrumResult(
        res.ground_energy, res.ground_state.copy(), res.gap, res.degenerate
    )


def energy_scan(L: int, b: int, v_list, j: int | None = None):
    """Rows of (v, L/l_B, ground_energy, gap) with l_B = e^{4v}."""
    rows = []
    for v in v_list:
        if not math.isfinite(v):
            raise ValueError("scan points must be finite")
        res = exact_ground(ModelParams(L=L, b=b, v=float(v), j=j))
        rows.append((float(v), L * math.exp(-4.0 * v), res.ground_energy, res.gap))
    return rows


def energy_scan_csv(rows) -> str:
    lines = ["v,L_over_lB,ground_energy,gap"]
    for v, x, e, gap in rows:
        lines.append(f"{v:.17g},{x:.17g},{e:.17g},{gap:.17g}")
    return "\n".join(lines) + "\n"
