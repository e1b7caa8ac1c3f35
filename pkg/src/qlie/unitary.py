"""Dense SU(2^n) numerics: exponential, principal logarithm, charts, curves.

Sign convention, fixed once for the whole package: unitaries are generated as
U = exp(-i H) with H Hermitian, and both charts return the coefficient vector
r of exp(-i r.sigma).  The principal logarithm is computed by unitary
eigendecomposition (complex Schur), with eigenphases in (-pi, pi); unitaries
with an eigenvalue at or near -1 are outside the chart domain and raise
``BranchCutError``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .pauli import HermitianCoeffs, decompose_hermitian, minus_i_bracket

__all__ = [
    "UnitaryMatrix",
    "UnitaryCurve",
    "BranchCutError",
    "CoarseGridError",
    "su_exp",
    "su_log",
    "pauli_chart",
    "u_adapted_chart",
    "curve_hamiltonian",
    "dyson_propagate",
    "bch_hamiltonian",
]

UNITARITY_TOL = 1e-10
SPECIAL_DET_TOL = 1e-8
BRANCH_GUARD_DEFAULT = 1e-6
HERMITICITY_DEFECT_GUARD = 1e-4
BCH_ORDER_DEFAULT = 20


class BranchCutError(ValueError):
    """An eigenphase sits too close to the logarithm's branch cut at -1."""


class CoarseGridError(ValueError):
    """Finite differencing on the curve grid is too inaccurate to trust."""


@dataclass(frozen=True)
class UnitaryMatrix:
    """A dense 2^n x 2^n unitary, validated at construction."""

    n: int
    matrix: np.ndarray
    special: bool = False

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        dim = 2**self.n
        if mat.shape != (dim, dim):
            raise ValueError(f"expected shape {(dim, dim)}, got {mat.shape}")
        drift = np.abs(mat @ mat.conj().T - np.eye(dim)).max()
        if drift > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary: max |UU^dag - 1| = {drift:.3e}")
        if self.special:
            det_err = abs(np.linalg.det(mat) - 1.0)
            if det_err > SPECIAL_DET_TOL:
                raise ValueError(f"det(U) deviates from 1 by {det_err:.3e}")

    @classmethod
    def identity(cls, n: int) -> "UnitaryMatrix":
        return cls(n, np.eye(2**n, dtype=complex), special=True)

    @classmethod
    def from_matrix(cls, mat: np.ndarray, special: bool = False) -> "UnitaryMatrix":
        dim = np.asarray(mat).shape[0]
        n = dim.bit_length() - 1
        return cls(n, mat, special=special)


@dataclass(frozen=True)
class UnitaryCurve:
    """A sampled curve on SU(2^n): strictly increasing grid and stacked points."""

    n: int
    grid: np.ndarray
    points: np.ndarray  # shape (len(grid), 2^n, 2^n)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "points", pts)
        if grid.ndim != 1 or len(grid) < 2:
            raise ValueError("grid must hold at least two parameter values")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        dim = 2**self.n
        if pts.shape != (len(grid), dim, dim):
            raise ValueError(f"points shape {pts.shape} does not match grid/dimension")

    @property
    def identity_anchored(self) -> bool:
        return self.grid[0] == 0.0 and bool(
            np.abs(self.points[0] - np.eye(2**self.n)).max() < UNITARITY_TOL
        )

    def point(self, index: int) -> np.ndarray:
        return self.points[index]

    def right_translated(self, W: np.ndarray) -> "UnitaryCurve":
        """The curve lambda -> U(lambda) W."""
        return UnitaryCurve(self.n, self.grid, self.points @ np.asarray(W, dtype=complex))


def _exp_minus_i(H: np.ndarray) -> np.ndarray:
    """exp(-i H) for Hermitian H, by eigendecomposition."""
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w)) @ v.conj().T


def su_exp(X: HermitianCoeffs, t: float) -> UnitaryMatrix:
    """exp(-i t H) for H = r.sigma, computed by Hermitian eigendecomposition."""
    H = X.to_matrix()
    mat = _exp_minus_i(t * H)
    return UnitaryMatrix(X.n, mat, special=X.is_traceless)


def _principal_phases(U: np.ndarray, guard: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases in (-pi, pi] and unitary eigenvectors of U, via complex Schur.

    Schur keeps the eigenvector frame orthonormal even for (near-)degenerate
    eigenvalues, which plain nonsymmetric eig does not guarantee.
    """
    T, Q = scipy.linalg.schur(np.asarray(U, dtype=complex), output="complex")
    off = np.abs(T - np.diag(np.diagonal(T))).max() if T.shape[0] > 1 else 0.0
    if off > 1e-8:
        raise ValueError(f"input is not normal enough for a unitary log (off-diag {off:.3e})")
    phases = np.angle(np.diagonal(T))
    dist_to_cut = np.minimum(np.abs(phases - np.pi), np.abs(phases + np.pi))
    if dist_to_cut.min() < guard:
        worst = phases[np.argmin(dist_to_cut)]
        raise BranchCutError(
            f"eigenphase {worst:.6f} within {guard:g} of the branch cut at +/-pi"
        )
    return phases, Q


def su_log(U: UnitaryMatrix | np.ndarray, guard: float = BRANCH_GUARD_DEFAULT) -> HermitianCoeffs:
    """Principal-branch H with exp(-i H) = U and eigenphases of U in (-pi, pi).

    U has eigenvalues e^{i phi}; with the package convention U = exp(-iH) the
    Hermitian generator is H = -Q diag(phi) Q^dag.
    """
    mat = U.matrix if isinstance(U, UnitaryMatrix) else np.asarray(U, dtype=complex)
    phases, Q = _principal_phases(mat, guard)
    H = (Q * (-phases)) @ Q.conj().T
    return decompose_hermitian(H)


def pauli_chart(V: UnitaryMatrix | np.ndarray, guard: float = BRANCH_GUARD_DEFAULT) -> HermitianCoeffs:
    """Coordinates q with V = exp(-i q.sigma); the chart anchored at the identity."""
    return su_log(V, guard=guard)


def u_adapted_chart(
    anchor: UnitaryMatrix | np.ndarray,
    V: UnitaryMatrix | np.ndarray,
    guard: float = BRANCH_GUARD_DEFAULT,
) -> HermitianCoeffs:
    """Coordinates r with V = exp(-i r.sigma) * anchor."""
    a = anchor.matrix if isinstance(anchor, UnitaryMatrix) else np.asarray(anchor, dtype=complex)
    v = V.matrix if isinstance(V, UnitaryMatrix) else np.asarray(V, dtype=complex)
    return su_log(v @ a.conj().T, guard=guard)


def _stencil_weights(xs: np.ndarray, t: float) -> np.ndarray:
    """First-derivative weights at t for a 3-point stencil (Lagrange derivative)."""
    x0, x1, x2 = xs
    return np.array(
        [
            (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2)),
            (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2)),
            (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1)),
        ]
    )


def curve_hamiltonian(
    curve: UnitaryCurve,
    index: int,
    defect_guard: float = HERMITICITY_DEFECT_GUARD,
) -> HermitianCoeffs:
    """Finite-difference estimate of H(lambda) = i U'(lambda) U(lambda)^dag.

    Uses a second-order 3-point stencil (central in the interior, one-sided at
    the ends), symmetrizes the estimate to exact Hermiticity and trace-projects
    it.  A large Hermiticity defect before symmetrization means the grid is too
    coarse and raises ``CoarseGridError``.
    """
    M = len(curve.grid) - 1
    if not 0 <= index <= M:
        raise IndexError(f"index {index} outside grid of {M + 1} points")
    if M < 2:
        raise CoarseGridError("need at least three grid points for differentiation")
    lo = min(max(index - 1, 0), M - 2)
    sl = slice(lo, lo + 3)
    w = _stencil_weights(curve.grid[sl], curve.grid[index])
    dU = np.tensordot(w, curve.points[sl], axes=(0, 0))
    A = 1j * dU @ curve.points[index].conj().T
    defect = np.abs(A - A.conj().T).max()
    if defect > defect_guard:
        raise CoarseGridError(
            f"Hermiticity defect {defect:.3e} at grid index {index}; refine the grid"
        )
    return decompose_hermitian((A + A.conj().T) / 2.0)


def _polar_project(U: np.ndarray) -> np.ndarray:
    """Closest unitary in Frobenius norm (polar factor via SVD)."""
    u, _, vh = np.linalg.svd(U)
    return u @ vh


_GL2_OFFSET = np.sqrt(3.0) / 6.0


def dyson_propagate(
    schedule,
    grid: np.ndarray,
    order: int = 4,
    drift_tol: float = 1e-12,
) -> UnitaryCurve:
    """Integrate U' = -i H(lambda) U from the identity along the grid.

    ``schedule`` maps a parameter value to a HermitianCoeffs.  Stepping uses
    exact exponentials of Hermitian combinations: order 2 is the midpoint rule
    exp(-i d H(mid)), order 4 the two-node Gauss-Legendre Magnus step with a
    single commutator correction.  Points are re-unitarized by polar projection
    whenever the drift exceeds ``drift_tol``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0:
        raise ValueError("grid must start at 0")
    if order not in (2, 4):
        raise ValueError(f"unsupported integration order {order}")
    first = schedule(grid[0])
    n = first.n
    dim = 2**n
    eye = np.eye(dim)
    points = np.empty((len(grid), dim, dim), dtype=complex)
    points[0] = eye
    U = np.eye(dim, dtype=complex)
    for j in range(len(grid) - 1):
        a, b = grid[j], grid[j + 1]
        d = b - a
        if order == 2:
            K = d * schedule(a + d / 2.0).to_matrix()
        else:
            H1 = schedule(a + d * (0.5 - _GL2_OFFSET)).to_matrix()
            H2 = schedule(a + d * (0.5 + _GL2_OFFSET)).to_matrix()
            comm = H1 @ H2 - H2 @ H1
            K = (d / 2.0) * (H1 + H2) + 1j * (np.sqrt(3.0) / 12.0) * d * d * comm
        U = _exp_minus_i(K) @ U
        if np.abs(U @ U.conj().T - eye).max() > drift_tol:
            U = _polar_project(U)
        points[j + 1] = U
    return UnitaryCurve(n, grid, points)


def bch_hamiltonian(Q: HermitianCoeffs, Qdot: HermitianCoeffs, order: int = BCH_ORDER_DEFAULT) -> HermitianCoeffs:
    """Frame-change Hamiltonian as a truncated adjoint series.

    Returns the partial sum through k = ``order`` of

        H = sum_k (-i)^k / (k+1)!  ad_Q^k (Qdot),    ad_A B = [A, B],

    evaluated in the Pauli-string algebra, where every twisted term
    (-i)^k ad_Q^k(Qdot) has real coefficients.  Exits early once a nested
    bracket vanishes exactly; in particular [Q, Qdot] = 0 gives H = Qdot.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    H = Qdot
    term = Qdot
    factorial = 1.0
    for k in range(1, order + 1):
        term = minus_i_bracket(Q, term)
        if not term.coeffs:
            break
        factorial *= k + 1
        H = H.add(term, factor=1.0 / factorial)
    return H
