"""Pauli strings and weighted Pauli sums on an n-qubit register.

Conventions used across the package:
- sites (qubits) are 0-based; basis index bit j belongs to qubit j, qubit 0 is
  the least significant bit
- a PauliString is stored as X/Z bitmasks plus a phase exponent e (mod 4) and
  denotes the operator i^e * X^xmask * Z^zmask; Y_j = i X_j Z_j sets both mask
  bits and contributes one factor of i
- phases of strings stay in {1, i, -1, -i} exactly; arbitrary complex weights
  live on WeightedPauliSum coefficients
"""
from __future__ import annotations

from dataclasses import dataclass

_LETTER_BITS = {"X": (1, 0, 0), "Z": (0, 1, 0), "Y": (1, 1, 1)}
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _phase_exponent(phase):
    for k, unit in enumerate(_PHASES):
        if abs(phase - unit) < 1e-12:
            return k
    raise ValueError(f"phase must be one of +-1, +-i, got {phase!r}")


@dataclass(frozen=True)
class PauliString:
    """i^e * X^x * Z^z with x, z site bitmasks and e the phase exponent mod 4."""

    x: int = 0
    z: int = 0
    e: int = 0

    @classmethod
    def from_ops(cls, ops, phase=1.0):
        """Build from a site -> letter map, e.g. {0: 'Z', 3: 'Y'}."""
        x = z = e = 0
        for site, letter in ops.items():
            if site < 0:
                raise ValueError(f"negative site {site}")
            bx, bz, be = _LETTER_BITS[letter]
            x |= bx << site
            z |= bz << site
            e += be
        return cls(x, z, (e + _phase_exponent(phase)) % 4)

    @property
    def ops(self):
        """Site -> letter map (identity sites omitted)."""
        out = {}
        support = self.x | self.z
        site = 0
        while support >> site:
            bx = (self.x >> site) & 1
            bz = (self.z >> site) & 1
            if bx or bz:
                out[site] = "Y" if (bx and bz) else ("X" if bx else "Z")
            site += 1
        return out

    @property
    def n_y(self):
        return (self.x & self.z).bit_count()

    @property
    def phase(self):
        """Phase relative to the letters form (each Y carrying its own i)."""
        return _PHASES[(self.e - self.n_y) % 4]

    def conjugate(self):
        """Hermitian conjugate."""
        e = (-self.e + 2 * (self.x & self.z).bit_count()) % 4
        return PauliString(self.x, self.z, e)

    def is_hermitian(self):
        return self.conjugate() == self

    def is_identity(self):
        return self.x == 0 and self.z == 0

    def max_site(self):
        support = self.x | self.z
        return support.bit_length() - 1 if support else -1

    def __repr__(self):
        body = " ".join(f"{s}:{p}" for s, p in self.ops.items()) or "I"
        ph = self.phase
        pre = {1.0 + 0j: "", 1j: "i*", -1.0 + 0j: "-", -1j: "-i*"}[ph]
        return f"{pre}{body}"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product a*b; the phase picks up (-1) per Z-past-X crossing."""
    e = (a.e + b.e + 2 * (a.z & b.x).bit_count()) % 4
    return PauliString(a.x ^ b.x, a.z ^ b.z, e)


def commute(a: PauliString, b: PauliString) -> bool:
    """True when the strings commute (anticommute otherwise)."""
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


class WeightedPauliSum:
    """Linear combination of Pauli strings with complex coefficients.

    Terms are keyed by (x, z) masks after folding each string's phase into the
    coefficient, so no two stored terms share a string (canonical merge).
    Coefficients are taken relative to the letters form of the string (the
    hermitian convention where Y carries its own i), which makes hermiticity
    equivalent to all coefficients being real.
    """

    def __init__(self, n_qubits, terms=None):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self._terms = {}
        if terms:
            for coeff, string in terms:
                self.add(coeff, string)

    def add(self, coeff, string: PauliString):
        """Accumulate coeff * string, merging into the canonical term map."""
        if string.max_site() >= self.n_qubits:
            raise ValueError("string exceeds register size")
        key = (string.x, string.z)
        folded = coeff * _PHASES[(string.e - string.n_y) % 4]
        self._terms[key] = self._terms.get(key, 0.0 + 0.0j) + folded
        return self

    def terms(self):
        """Yield (coefficient, letters-form PauliString) pairs."""
        for (x, z), coeff in self._terms.items():
            yield coeff, PauliString(x, z, (x & z).bit_count() % 4)

    def __len__(self):
        return len(self._terms)

    def copy(self):
        out = WeightedPauliSum(self.n_qubits)
        out._terms = dict(self._terms)
        return out

    def scaled(self, factor):
        out = WeightedPauliSum(self.n_qubits)
        out._terms = {k: factor * c for k, c in self._terms.items()}
        return out

    def __add__(self, other):
        if other.n_qubits != self.n_qubits:
            raise ValueError("register size mismatch")
        out = self.copy()
        for k, c in other._terms.items():
            out._terms[k] = out._terms.get(k, 0.0 + 0.0j) + c
        return out

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def __matmul__(self, other):
        """Operator product of two sums (used to expand braid products)."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("register size mismatch")
        out = WeightedPauliSum(self.n_qubits)
        for ca, sa in self.terms():
            for cb, sb in other.terms():
                out.add(ca * cb, multiply(sa, sb))
        return out

    def conjugate_transpose(self):
        out = WeightedPauliSum(self.n_qubits)
        for coeff, string in self.terms():
            out.add(coeff.conjugate(), string.conjugate())
        return out

    def is_hermitian(self, tol=1e-12):
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def norm(self):
        """Sum of |coefficients| after canonical merge."""
        return sum(abs(c) for c in self._terms.values())

    def to_matrix(self):
        """Dense matrix, guarded to n <= 12 qubits (oracle use only)."""
        import numpy as np

        n = self.n_qubits
        if n > 12:
            raise ValueError("dense conversion guarded to n <= 12")
        dim = 1 << n
        idx = np.arange(dim, dtype=np.uint64)
        mat = np.zeros((dim, dim), dtype=complex)
        for coeff, string in self.terms():
            signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(string.z)) & np.uint64(1)).astype(float)
            rows = (idx ^ np.uint64(string.x)).astype(np.int64)
            mat[rows, idx.astype(np.int64)] += coeff * _PHASES[string.n_y % 4] * signs
        return mat

    def to_lines(self):
        """Serialize, one term per line: coeff_re coeff_im site:P site:P ..."""
        lines = []
        for coeff, string in sorted(self.terms(), key=lambda t: (t[1].x | t[1].z, t[1].x)):
            toks = [f"{coeff.real:.17g}", f"{coeff.imag:.17g}"]
            toks += [f"{s}:{p}" for s, p in string.ops.items()]
            lines.append(" ".join(toks))
        return "\n".join(lines)

    @classmethod
    def from_lines(cls, text, n_qubits):
        out = cls(n_qubits)
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            coeff = complex(float(toks[0]), float(toks[1]))
            ops = {}
            for tok in toks[2:]:
                site, letter = tok.split(":")
                ops[int(site)] = letter
            out.add(coeff, PauliString.from_ops(ops))
        return out


def commutator_norm(a: WeightedPauliSum, b: WeightedPauliSum) -> float:
    """Sum-|coefficient| norm of ab - ba; zero iff the sums commute."""
    return ((a @ b) - (b @ a)).norm()
