"""Exact algebra of generalized Pauli strings.

An n-qubit Pauli string is a tensor product of single-site operators from
{I, X, Y, Z}.  Strings are encoded symplectically by two n-bit masks so that
products and commutators cost O(n) word operations; dense matrices appear
only at module boundaries (``materialize`` / ``decompose_hermitian``).

Indexing convention: assigning I=0, X=1, Y=2, Z=3 per site, the string with
site letters (m_1, ..., m_n) has index

    k = 4^0 m_1 + 4^1 m_2 + ... + 4^(n-1) m_n,

i.e. site 1 is the least-significant base-4 digit.  In the text form
("ZX" for Z(x)X) the leftmost letter is site 1, and site 1 is the first
factor of the Kronecker product when materialized.

Phases are tracked as exact powers of i, never as floating-point values.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

import numpy as np

__all__ = [
    "PauliString",
    "PhasedPauli",
    "HermitianCoeffs",
    "pauli_from_index",
    "pauli_product",
    "pauli_commutator",
    "pauli_weight",
    "materialize",
    "decompose_hermitian",
    "MaterializeGuardError",
    "HermiticityError",
]

# Exact fourth roots of unity, indexed by the exponent of i.
_PHASE_VALUES = (1 + 0j, 1j, -1 + 0j, -1j)

# letter index m in {0,1,2,3} <-> (x_bit, z_bit)
_LETTER_TO_BITS = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
_BITS_TO_LETTER = {v: k for k, v in _LETTER_TO_BITS.items()}
_LETTER_CHARS = "IXYZ"

_SINGLE_SITE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

#: Largest qubit count for which dense 2^n x 2^n materialization is allowed.
DENSE_GUARD_DEFAULT = 12

PRUNE_TOL_DEFAULT = 1e-12
HERMITICITY_TOL_DEFAULT = 1e-10


class MaterializeGuardError(ValueError):
    """Raised when a dense materialization would exceed the size guard."""


class HermiticityError(ValueError):
    """Raised when an operator expected to be Hermitian is not."""


@dataclass(frozen=True, slots=True)
class PauliString:
    """A tensor product of single-qubit Paulis, encoded by bit masks.

    Bit j (0-based) of ``x_mask``/``z_mask`` carries site j+1, with
    (x, z) = (0,0) -> I, (1,0) -> X, (1,1) -> Y, (0,1) -> Z.
    """

    n: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        top = 1 << self.n
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask has bits above position n-1")

    @classmethod
    def from_letters(cls, letters) -> "PauliString":
        """Build from per-site letter indices (m_1, ..., m_n), m in {0,1,2,3}."""
        letters = list(letters)
        x = z = 0
        for j, m in enumerate(letters):
            xb, zb = _LETTER_TO_BITS[m]
            x |= xb << j
            z |= zb << j
        return cls(len(letters), x, z)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse text form, leftmost letter = site 1 (e.g. "ZX" is Z(x)X)."""
        try:
            letters = [_LETTER_CHARS.index(c) for c in label.upper()]
        except ValueError:
            raise ValueError(f"invalid Pauli label {label!r}") from None
        if not letters:
            raise ValueError("empty Pauli label")
        return cls.from_letters(letters)

    def letters(self) -> tuple[int, ...]:
        """Per-site letter indices (m_1, ..., m_n)."""
        return tuple(
            _BITS_TO_LETTER[(self.x_mask >> j) & 1, (self.z_mask >> j) & 1]
            for j in range(self.n)
        )

    @property
    def label(self) -> str:
        return "".join(_LETTER_CHARS[m] for m in self.letters())

    @property
    def index(self) -> int:
        """Base-4 index k with site 1 as the least-significant digit."""
        k = 0
        for j, m in enumerate(self.letters()):
            k += m << (2 * j)
        return k

    @property
    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x_mask | self.z_mask).bit_count()

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError(f"qubit count mismatch: {self.n} vs {other.n}")
        sym = (self.x_mask & other.z_mask).bit_count() + (self.z_mask & other.x_mask).bit_count()
        return sym % 2 == 0

    def __repr__(self):
        return f"PauliString({self.label!r})"


@dataclass(frozen=True, slots=True)
class PhasedPauli:
    """A Pauli string with an exact phase i**phase_pow and integer scale.

    ``scale`` is 1 for plain products and 2 for commutators, which return the
    full pq - qp (the factor 2 is kept explicit rather than silently dropped).
    The represented operator is ``scale * i**phase_pow * string``.
    """

    phase_pow: int
    string: PauliString
    scale: int = 1

    def __post_init__(self):
        object.__setattr__(self, "phase_pow", self.phase_pow % 4)

    @property
    def phase(self) -> complex:
        """Exact fourth root of unity, one of {+1, +i, -1, -i}."""
        return _PHASE_VALUES[self.phase_pow]

    @property
    def coefficient(self) -> complex:
        """scale * phase, the full scalar in front of the string."""
        return self.scale * _PHASE_VALUES[self.phase_pow]

    def __repr__(self):
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase_pow]
        pre = f"{self.scale}" if self.scale != 1 else ""
        return f"{sign}{pre}*{self.string.label}"


def pauli_from_index(k: int, n: int) -> PauliString:
    """Return the string whose base-4 digits (m_1, ..., m_n) encode k.

    Raises ValueError if k is outside [0, 4^n).
    """
    if not 0 <= k < 4**n:
        raise ValueError(f"index {k} out of range for n={n}")
    letters = [(k >> (2 * j)) & 3 for j in range(n)]
    return PauliString.from_letters(letters)


def pauli_weight(p: PauliString) -> int:
    """Number of non-identity tensor factors of p."""
    return p.weight


def pauli_product(p: PauliString, q: PauliString) -> PhasedPauli:
    """Exact product p*q as a phased string.

    Writing each string as i^c X^x Z^z with c = popcount(x & z), the product
    picks up i^(c_p + c_q - c_r) from the Y bookkeeping and (-1)^|z_p & x_q|
    from commuting Z past X.
    """
    if p.n != q.n:
        raise ValueError(f"qubit count mismatch: {p.n} vs {q.n}")
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    g = (
        (p.x_mask & p.z_mask).bit_count()
        + (q.x_mask & q.z_mask).bit_count()
        - (x & z).bit_count()
        + 2 * (p.z_mask & q.x_mask).bit_count()
    )
    return PhasedPauli(g % 4, PauliString(p.n, x, z))


def pauli_commutator(p: PauliString, q: PauliString) -> Optional[PhasedPauli]:
    """Commutator pq - qp, or None when p and q commute.

    For anticommuting strings pq = -qp, so the result is 2*(pq): a single
    phased string with scale 2 and phase +/-i.
    """
    if p.n != q.n:
        raise ValueError(f"qubit count mismatch: {p.n} vs {q.n}")
    if p.commutes_with(q):
        return None
    prod = pauli_product(p, q)
    return PhasedPauli(prod.phase_pow, prod.string, scale=2)


@functools.lru_cache(maxsize=4096)
def _materialize_cached(n: int, x_mask: int, z_mask: int) -> np.ndarray:
    letters = PauliString(n, x_mask, z_mask).letters()
    mat = _SINGLE_SITE[_LETTER_CHARS[letters[0]]]
    for m in letters[1:]:
        mat = np.kron(mat, _SINGLE_SITE[_LETTER_CHARS[m]])
    mat.setflags(write=False)
    return mat


def materialize(p: PauliString, guard: int = DENSE_GUARD_DEFAULT) -> np.ndarray:
    """Dense 2^n x 2^n matrix of p, site 1 as the first Kronecker factor."""
    if p.n > guard:
        raise MaterializeGuardError(f"n={p.n} exceeds dense size guard {guard}")
    return _materialize_cached(p.n, p.x_mask, p.z_mask)


@dataclass(frozen=True)
class HermitianCoeffs:
    """Real coefficients r^k of a Hermitian operator H = sum_k r^k sigma_k.

    Sparse over the Pauli index k in [0, 4^n); entries below the pruning
    tolerance are dropped at construction.  Treated as immutable.
    """

    n: int
    coeffs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        pruned = {
            int(k): float(v) for k, v in self.coeffs.items() if abs(v) > PRUNE_TOL_DEFAULT
        }
        for k in pruned:
            if not 0 <= k < 4**self.n:
                raise ValueError(f"Pauli index {k} out of range for n={self.n}")
        object.__setattr__(self, "coeffs", pruned)

    @classmethod
    def from_label_terms(cls, n: int, terms: Mapping[str, float]) -> "HermitianCoeffs":
        """Build from {label: coefficient}, e.g. {"ZI": 3.0, "XX": 0.5}."""
        coeffs = {}
        for label, c in terms.items():
            s = PauliString.from_label(label)
            if s.n != n:
                raise ValueError(f"label {label!r} has {s.n} sites, expected {n}")
            coeffs[s.index] = coeffs.get(s.index, 0.0) + float(c)
        return cls(n, coeffs)

    @classmethod
    def from_string(cls, s: PauliString, coeff: float = 1.0) -> "HermitianCoeffs":
        return cls(s.n, {s.index: coeff})

    def terms(self) -> Iterator[tuple[PauliString, float]]:
        for k, v in sorted(self.coeffs.items()):
            yield pauli_from_index(k, self.n), v

    def label_terms(self) -> dict[str, float]:
        return {s.label: v for s, v in self.terms()}

    @property
    def is_traceless(self) -> bool:
        return 0 not in self.coeffs

    def traceless_part(self) -> "HermitianCoeffs":
        return HermitianCoeffs(self.n, {k: v for k, v in self.coeffs.items() if k != 0})

    # -- coefficient-space arithmetic (normalized Hilbert-Schmidt geometry) --

    def inner(self, other: "HermitianCoeffs") -> float:
        """Tr(A B) / 2^n; Pauli strings are orthonormal in this inner product."""
        a, b = self.coeffs, other.coeffs
        if len(b) < len(a):
            a, b = b, a
        return sum(v * b[k] for k, v in a.items() if k in b)

    @property
    def norm(self) -> float:
        """Normalized Hilbert-Schmidt norm sqrt(Tr(H^2)/2^n)."""
        return float(np.sqrt(sum(v * v for v in self.coeffs.values())))

    def scaled(self, s: float) -> "HermitianCoeffs":
        return HermitianCoeffs(self.n, {k: s * v for k, v in self.coeffs.items()})

    def add(self, other: "HermitianCoeffs", factor: float = 1.0) -> "HermitianCoeffs":
        if self.n != other.n:
            raise ValueError(f"qubit count mismatch: {self.n} vs {other.n}")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + factor * v
        return HermitianCoeffs(self.n, out)

    def to_matrix(self, guard: int = DENSE_GUARD_DEFAULT) -> np.ndarray:
        """Dense Hermitian matrix sum_k r^k sigma_k."""
        dim = 2**self.n
        mat = np.zeros((dim, dim), dtype=complex)
        for k, v in self.coeffs.items():
            mat += v * materialize(pauli_from_index(k, self.n), guard=guard)
        return mat

    def __repr__(self):
        body = ", ".join(f"{lbl}: {v:g}" for lbl, v in self.label_terms().items())
        return f"HermitianCoeffs(n={self.n}, {{{body}}})"


def hermitian_bracket(a: HermitianCoeffs, b: HermitianCoeffs) -> HermitianCoeffs:
    """i[A, B], the induced bracket on Hermitian parts of u(2^n).

    For anti-Hermitian iA, iB the commutator is [iA, iB] = i (i[A, B]), so
    closing {iH} under commutation is closing {H} under i[.,.].  The result
    has real Pauli coefficients.
    """
    if a.n != b.n:
        raise ValueError(f"qubit count mismatch: {a.n} vs {b.n}")
    out: dict[int, float] = {}
    a_terms = [(pauli_from_index(k, a.n), v) for k, v in a.coeffs.items()]
    b_terms = [(pauli_from_index(k, b.n), v) for k, v in b.coeffs.items()]
    for pa, va in a_terms:
        for pb, vb in b_terms:
            comm = pauli_commutator(pa, pb)
            if comm is None:
                continue
            # i * (scale * i^g) is real because anticommuting products carry +/-i.
            coeff = comm.scale * _PHASE_VALUES[(comm.phase_pow + 1) % 4]
            k = comm.string.index
            out[k] = out.get(k, 0.0) + va * vb * coeff.real
    return HermitianCoeffs(a.n, out)


def minus_i_bracket(a: HermitianCoeffs, b: HermitianCoeffs) -> HermitianCoeffs:
    """-i[A, B], with real Pauli coefficients; the negative of hermitian_bracket."""
    return hermitian_bracket(a, b).scaled(-1.0)


@functools.lru_cache(maxsize=8)
def _pauli_stack(n: int) -> np.ndarray:
    """All 4^n materialized strings stacked as (4^n, 2^n, 2^n); small n only."""
    return np.stack([materialize(pauli_from_index(k, n)) for k in range(4**n)])


def decompose_hermitian(
    H: np.ndarray,
    tol: float = HERMITICITY_TOL_DEFAULT,
    prune: float = PRUNE_TOL_DEFAULT,
) -> HermitianCoeffs:
    """Trace-project a dense Hermitian matrix onto the Pauli basis.

    Coefficients are r^k = Tr(H sigma_k) / 2^n; the reconstruction
    sum_k r^k sigma_k equals H to within the projection's rounding error.
    Raises HermiticityError when max |H - H^dag| exceeds ``tol``.
    """
    H = np.asarray(H, dtype=complex)
    dim = H.shape[0]
    if H.shape != (dim, dim) or dim & (dim - 1):
        raise ValueError(f"expected square 2^n x 2^n matrix, got shape {H.shape}")
    n = dim.bit_length() - 1
    defect = np.abs(H - H.conj().T).max()
    if defect > tol:
        raise HermiticityError(f"input is not Hermitian: max deviation {defect:.3e}")
    if n <= 4:
        stack = _pauli_stack(n)
        raw = np.einsum("kij,ji->k", stack, H) / dim
    else:
        raw = np.array(
            [
                np.einsum("ij,ji->", materialize(pauli_from_index(k, n)), H) / dim
                for k in range(4**n)
            ]
        )
    coeffs = {k: float(raw[k].real) for k in range(4**n) if abs(raw[k].real) > prune}
    return HermitianCoeffs(n, coeffs)
