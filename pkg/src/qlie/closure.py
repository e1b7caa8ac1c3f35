"""Dynamical Lie algebra closure, ideal decomposition, projections, purities.

The DLA generated by Hermitian operators {H_1, ..., H_m} is the smallest real
subspace containing the i*H_j that is closed under commutation.  Working with
Hermitian representatives, the induced bracket is i[A, B], which keeps Pauli
coefficients real, so the whole closure runs in the sparse coefficient space
of Pauli strings; dense matrices are never formed.  When every generator is a
single Pauli string with coefficient +/-1 the closure is exact: brackets of
strings are (scaled) strings and admission is set membership.

Subspaces of the algebra ("sub-bases") are plain lists of HermitianCoeffs,
orthonormal under <A, B> = Tr(AB)/2^n.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .pauli import HermitianCoeffs, hermitian_bracket, pauli_commutator, pauli_from_index

__all__ = [
    "DlaBasis",
    "IdealDecomposition",
    "ClosureDimensionError",
    "DecompositionError",
    "lie_closure",
    "center",
    "ideal_decomposition",
    "project_onto",
    "g_purity",
    "su_basis",
    "closure_report",
]

ADMISSION_TOL = 1e-8
ORTHONORMALITY_TOL = 1e-10
NULLSPACE_REL_TOL = 1e-8


class ClosureDimensionError(RuntimeError):
    """Closure would exceed the requested maximal dimension."""

    def __init__(self, message: str, partial_dim: int):
        super().__init__(message)
        self.partial_dim = partial_dim


class DecompositionError(RuntimeError):
    """Randomized ideal decomposition failed verification after all retries."""


@dataclass(frozen=True)
class DlaBasis:
    """Orthonormalized spanning set of the DLA plus per-element provenance.

    ``generator_provenance[i]`` is ("generator", j) when element i came from
    input generator j, or ("bracket", a, b) when it was admitted from the
    bracket of basis elements a and b.
    """

    n: int
    basis: list[HermitianCoeffs]
    generator_provenance: list[tuple] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def gram_defect(self) -> float:
        """Largest deviation of the Gram matrix from the identity."""
        d = self.dim
        g = np.array([[a.inner(b) for b in self.basis] for a in self.basis])
        return float(np.abs(g - np.eye(d)).max()) if d else 0.0

    def closure_defect(self) -> float:
        """Largest residual of a pairwise bracket outside the span."""
        worst = 0.0
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                br = hermitian_bracket(self.basis[i], self.basis[j])
                res = _residual(br, self.basis)
                worst = max(worst, res.norm)
        return worst


@dataclass(frozen=True)
class IdealDecomposition:
    """Center (abelian ideal) plus the simple ideals of the derived part."""

    center: list[HermitianCoeffs]
    simple_ideals: list[list[HermitianCoeffs]]

    @property
    def ideal_dims(self) -> list[int]:
        return [len(ideal) for ideal in self.simple_ideals]


def _orthogonalize(v: HermitianCoeffs, basis: list[HermitianCoeffs]) -> HermitianCoeffs:
    for b in basis:
        c = b.inner(v)
        if c != 0.0:
            v = v.add(b, factor=-c)
    return v


def _residual(v: HermitianCoeffs, basis: list[HermitianCoeffs]) -> HermitianCoeffs:
    # Two Gram-Schmidt passes; one pass loses orthogonality as the basis grows.
    return _orthogonalize(_orthogonalize(v, basis), basis)


def _pure_string_generators(generators: list[HermitianCoeffs]):
    strings = []
    for g in generators:
        if len(g.coeffs) != 1:
            return None
        (k, v), = g.coeffs.items()
        if v not in (1.0, -1.0):
            return None
        strings.append(k)
    return strings


def lie_closure(generators: list[HermitianCoeffs], max_dim: int) -> DlaBasis:
    """Breadth-first commutator closure of the generators.

    Generators are normalized to unit Hilbert-Schmidt norm; a bracket is
    admitted as a new basis element when its residual after Gram-Schmidt
    against the current basis exceeds 1e-8.  Terminates when every pair has
    been bracketed, or raises ``ClosureDimensionError`` when an admission
    would push the dimension past ``max_dim``.
    """
    if not generators:
        raise ValueError("need at least one generator")
    n = generators[0].n
    if any(g.n != n for g in generators):
        raise ValueError("generators have inconsistent qubit counts")
    if max_dim < len(generators):
        raise ValueError(f"max_dim={max_dim} below generator count {len(generators)}")

    pure = _pure_string_generators(generators)
    if pure is not None:
        return _integer_closure(n, pure, max_dim)

    basis: list[HermitianCoeffs] = []
    provenance: list[tuple] = []
    pairs: deque[tuple[int, int]] = deque()

    def admit(candidate: HermitianCoeffs, prov: tuple) -> None:
        res = _residual(candidate, basis)
        if res.norm <= ADMISSION_TOL:
            return
        if len(basis) == max_dim:
            raise ClosureDimensionError(
                f"closure exceeds max_dim={max_dim}", partial_dim=max_dim
            )
        new_index = len(basis)
        basis.append(res.scaled(1.0 / res.norm))
        provenance.append(prov)
        for i in range(new_index):
            pairs.append((i, new_index))

    for j, g in enumerate(generators):
        norm = g.norm
        if norm == 0.0:
            continue
        admit(g.scaled(1.0 / norm), ("generator", j))
    while pairs:
        i, j = pairs.popleft()
        br = hermitian_bracket(basis[i], basis[j])
        if br.coeffs:
            admit(br, ("bracket", i, j))
    return DlaBasis(n, basis, provenance)


def _integer_closure(n: int, string_indices: list[int], max_dim: int) -> DlaBasis:
    """Exact closure for pure Pauli-string generators: no floating point."""
    seen: dict[int, int] = {}
    order: list[int] = []
    provenance: list[tuple] = []
    pairs: deque[tuple[int, int]] = deque()

    def admit(k: int, prov: tuple) -> None:
        if k in seen:
            return
        if len(order) == max_dim:
            raise ClosureDimensionError(
                f"closure exceeds max_dim={max_dim}", partial_dim=max_dim
            )
        seen[k] = len(order)
        order.append(k)
        provenance.append(prov)
        new_index = len(order) - 1
        for i in range(new_index):
            pairs.append((i, new_index))

    for j, k in enumerate(string_indices):
        admit(k, ("generator", j))
    strings = {k: pauli_from_index(k, n) for k in order}
    while pairs:
        i, j = pairs.popleft()
        comm = pauli_commutator(strings[order[i]], strings[order[j]])
        if comm is None:
            continue
        k = comm.string.index
        admit(k, ("bracket", i, j))
        strings.setdefault(k, comm.string)
    basis = [HermitianCoeffs(n, {k: 1.0}) for k in order]
    return DlaBasis(n, basis, provenance)


def adjoint_tensor(dla: DlaBasis) -> np.ndarray:
    """Structure constants ad[i, m, j] = <b_m, i[b_i, b_j]> as a (D, D, D) array."""
    d = dla.dim
    ad = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            br = hermitian_bracket(dla.basis[i], dla.basis[j])
            for m in range(d):
                c = dla.basis[m].inner(br)
                if c != 0.0:
                    ad[i, m, j] = c
    return ad


def center(dla: DlaBasis) -> list[HermitianCoeffs]:
    """Orthonormal basis of {X in g : [X, g] = 0}.

    Computed as the null space of the stacked adjoint operators; coordinates
    with singular value below 1e-8 times the largest are declared central.
    """
    d = dla.dim
    if d == 0:
        return []
    ad = adjoint_tensor(dla)
    # Rows indexed by (j, m): sum_i x_i ad[i, m, j] = 0 for all j, m.
    A = ad.transpose(2, 1, 0).reshape(d * d, d)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        null_rows = vh
    else:
        rank = int(np.sum(s > NULLSPACE_REL_TOL * smax))
        null_rows = vh[rank:]
    return [_combo(dla, row) for row in null_rows]


def _combo(dla: DlaBasis, coords: np.ndarray) -> HermitianCoeffs:
    out = HermitianCoeffs(dla.n, {})
    for c, b in zip(coords, dla.basis):
        if c != 0.0:
            out = out.add(b, factor=float(c))
    return out


def _orth_columns(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span, via SVD rank truncation."""
    if mat.size == 0:
        return mat.reshape(mat.shape[0], 0)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return u[:, :rank]


def ideal_decomposition(dla: DlaBasis, seed: int = 0, max_retries: int = 5) -> IdealDecomposition:
    """Split the DLA into its abelian center and minimal (simple) ideals.

    The center is split off first; its orthogonal complement is the derived
    (semisimple) part because the inner product is ad-invariant.  That part is
    cut along the rotation planes of ad_x for a randomly drawn x (an element of
    the associative algebra generated by the adjoint maps): each nonzero
    eigenplane lies inside a single minimal ideal, and growing it under the
    adjoint action recovers that ideal.  Grown blocks are merged when they
    overlap, and the result is verified (mutual orthogonality, spanning,
    bracket closure of each block) before returning; degenerate random draws
    are retried with fresh randomness up to ``max_retries`` times.
    """
    cen = center(dla)
    d = dla.dim
    dc = d - len(cen)
    if dc == 0:
        return IdealDecomposition(center=cen, simple_ideals=[])
    ad = adjoint_tensor(dla)
    cen_coords = np.array(
        [[b.inner(c) for c in cen] for b in dla.basis]
    ) if cen else np.zeros((d, 0))
    comp = _orth_columns(np.eye(d) - cen_coords @ cen_coords.T)
    dc = comp.shape[1]
    # Adjoint maps of the complement's basis vectors, restricted to the complement.
    ad_rest = np.einsum("pi,imj,mq,jr->pqr", comp.T, ad, comp, comp)
    ad_rest = (ad_rest - ad_rest.transpose(0, 2, 1)) / 2.0  # enforce antisymmetry

    rng = np.random.default_rng(seed)
    last_error = None
    for _ in range(max_retries):
        try:
            blocks = _split_complement(ad_rest, rng)
        except DecompositionError as err:
            last_error = err
            continue
        ideals = []
        for cols in blocks:
            vecs = comp @ cols
            ideals.append([_combo(dla, vecs[:, i]) for i in range(vecs.shape[1])])
        return IdealDecomposition(center=cen, simple_ideals=ideals)
    raise DecompositionError(
        f"ideal decomposition failed verification after {max_retries} attempts: {last_error}"
    )


def _split_complement(ad_rest: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    dc = ad_rest.shape[1]
    x = rng.standard_normal(dc)
    x /= np.linalg.norm(x)
    A = np.einsum("i,ipq->pq", x, ad_rest)
    K = -A @ A  # PSD; eigenvalues theta^2, rotation planes of ad_x
    w, v = np.linalg.eigh(K)
    scale = max(w.max(), 1.0)
    # Cluster eigenvalues; seed one block per nonzero cluster.
    order = np.argsort(w)
    seeds = []
    i = 0
    while i < dc:
        j = i
        while j + 1 < dc and abs(w[order[j + 1]] - w[order[i]]) < 1e-8 * scale:
            j += 1
        if w[order[i]] > 1e-8 * scale:
            seeds.append(v[:, order[i : j + 1]])
        i = j + 1
    if not seeds:
        raise DecompositionError("random adjoint element has no rotation planes")

    blocks = [_grow_invariant(seed_block, ad_rest) for seed_block in seeds]
    changed = True
    while changed:
        changed = False
        merged: list[np.ndarray] = []
        for g in blocks:
            for idx, b in enumerate(merged):
                if np.abs(b.T @ g).max() > 1e-6:
                    union = _orth_columns(np.hstack([b, g]))
                    merged[idx] = _grow_invariant(union, ad_rest)
                    changed = True
                    break
            else:
                merged.append(g)
        blocks = merged
    _verify_blocks(blocks, ad_rest)
    return blocks


def _grow_invariant(block: np.ndarray, ad_rest: np.ndarray) -> np.ndarray:
    """Smallest ad-invariant subspace containing the block's columns."""
    current = _orth_columns(block)
    while True:
        images = np.einsum("ipq,qr->pir", ad_rest, current).reshape(current.shape[0], -1)
        combined = _orth_columns(np.hstack([current, images]), tol=1e-8)
        if combined.shape[1] == current.shape[1]:
            return combined
        current = combined


def _verify_blocks(blocks: list[np.ndarray], ad_rest: np.ndarray) -> None:
    dc = ad_rest.shape[1]
    total = sum(b.shape[1] for b in blocks)
    if total != dc:
        raise DecompositionError(f"blocks span {total} of {dc} complement dimensions")
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            if np.abs(blocks[a].T @ blocks[b]).max() > 1e-8:
                raise DecompositionError("blocks are not mutually orthogonal")
    for b in blocks:
        proj = b @ b.T
        images = np.einsum("ipq,qr->pir", ad_rest, b).reshape(dc, -1)
        outside = images - proj @ images
        if images.size and np.abs(outside).max() > 1e-8:
            raise DecompositionError("a block is not closed under the adjoint action")


def project_onto(subspace: list[HermitianCoeffs], H: HermitianCoeffs) -> HermitianCoeffs:
    """Orthogonal projection of H onto the span of an orthonormal sub-basis."""
    out = HermitianCoeffs(H.n, {})
    for b in subspace:
        if b.n != H.n:
            raise ValueError("subspace and operator qubit counts differ")
        c = b.inner(H)
        if c != 0.0:
            out = out.add(b, factor=c)
    return out


def g_purity(subspace: list[HermitianCoeffs], H: HermitianCoeffs) -> float:
    """Tr(H_g^2) for the projection H_g of H onto the sub-basis.

    Note the plain matrix trace here (no 2^n normalization): with orthonormal
    coefficients the purity is 2^n times the squared coefficient norm.
    """
    proj = project_onto(subspace, H)
    return (2**H.n) * sum(v * v for v in proj.coeffs.values())


def su_basis(n: int) -> list[HermitianCoeffs]:
    """The full traceless Pauli basis of su(2^n): all strings with k >= 1."""
    return [HermitianCoeffs(n, {k: 1.0}) for k in range(1, 4**n)]


def closure_report(
    generators: list[HermitianCoeffs],
    dla: DlaBasis,
    decomposition: IdealDecomposition | None = None,
    wall_time_s: float | None = None,
) -> dict:
    """Structured report record for a closure run."""
    report = {
        "n": dla.n,
        "generators": [g.label_terms() for g in generators],
        "dim": dla.dim,
        "center_dim": len(decomposition.center) if decomposition else None,
        "simple_ideal_dims": decomposition.ideal_dims if decomposition else None,
        "decomposition_method": "randomized adjoint eigenplane splitting (seeded)",
        "wall_time_s": wall_time_s,
    }
    return report
