"""Commutant computation and decomposition into irreducible components.

The decomposition strategy: draw a generic Hermitian element of the
commutant, eigendecompose it, and read off invariant subspaces from the
eigenvalue clusters.  For a generic draw each cluster spans one
irreducible invariant subspace; equivalent subspaces are then merged
into isotypic components and aligned so that every generator acts by
the same matrix on each multiplicity copy.  Every step is verified
(invariance, irreducibility, intertwiner ranks, block reconstruction)
and a failed draw is retried with fresh randomness from the same seeded
stream rather than accepted silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    DecompositionError,
    DimensionMismatchError,
    LeakageError,
    ResourceLimitError,
)
from .pauli import check_hermitian

COMMUTANT_TOL_DEFAULT = 1e-9
GAP_REL_DEFAULT = 1e-6
INVARIANCE_TOL_DEFAULT = 1e-8
DENSE_COMMUTANT_MAX_DIM = 64
MAX_RETRIES_DEFAULT = 8

_REAL_TOL = 1e-13


@dataclass
class CommutantBasis:
    """Orthonormal Hermitian basis of everything commuting with the generators.

    The commutant is a *-closed complex algebra; its Hermitian part is a
    real vector space whose dimension equals the complex dimension of the
    full commutant, so ``complex_dimension == len(basis)``.
    """

    dimension: int
    basis: list
    complex_dimension: int


def _validated(generators):
    if not generators:
        raise ValueError("need at least one generator")
    mats = [check_hermitian(g) for g in generators]
    dim = mats[0].shape[0]
    for g in mats:
        if g.shape[0] != dim:
            raise DimensionMismatchError("generators act on different registers")
    return mats, dim


def _all_real(mats):
    return all(np.abs(g.imag).max() < _REAL_TOL for g in mats)


def _hs_norm(mat):
    return float(np.linalg.norm(mat)) / np.sqrt(mat.shape[0])


def _standard_hermitian_basis(dim):
    """Closed-form orthonormal Hermitian basis of the full matrix space."""
    out = []
    scale = np.sqrt(dim)
    for i in range(dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[i, i] = 1.0
        out.append(m * scale)
    for i in range(dim):
        for j in range(i + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            out.append(m * scale)
            m2 = np.zeros((dim, dim), dtype=complex)
            m2[i, j] = -1.0j / np.sqrt(2.0)
            m2[j, i] = 1.0j / np.sqrt(2.0)
            out.append(m2 * scale)
    return out


def commutant(generators, tol=COMMUTANT_TOL_DEFAULT, max_dense_dim=DENSE_COMMUTANT_MAX_DIM):
    """Hermitian orthonormal basis of {X : [X, G_m] = 0 for all m}.

    Computed as the kernel of the positive semidefinite superoperator
    sum_m ad_{G_m}^dagger ad_{G_m} on the d^2-dimensional operator
    space (eigenvalues below ``tol`` times the spectral scale).  The
    commutant of the generating set equals the commutant of the algebra
    it generates, so no closure is required first.

    Raises
    ------
    ResourceLimitError
        If d exceeds ``max_dense_dim``; the dense superoperator needs a
        d^2 x d^2 workspace.
    """
    mats, dim = _validated(generators)
    if dim > max_dense_dim:
        raise ResourceLimitError(
            f"dense commutant needs a {dim**2} x {dim**2} workspace; "
            f"limit is dimension {max_dense_dim}"
        )
    eye = np.eye(dim)
    square_sum = sum(g @ g for g in mats)
    big = np.kron(square_sum, eye) + np.kron(eye, square_sum.T)
    for g in mats:
        big -= 2.0 * np.kron(g, g.T)
    if _all_real(mats):
        w, v = np.linalg.eigh(big.real)
        v = v.astype(complex)
    else:
        w, v = np.linalg.eigh(big)
    scale = max(float(w[-1]), 1.0)
    k = int(np.sum(w < tol * scale))
    if k == dim * dim:
        return CommutantBasis(dim, _standard_hermitian_basis(dim), k)
    # hermitian + antihermitian parts of the complex kernel span the
    # Hermitian section; an SVD picks an orthonormal real basis of rank k
    cands = np.empty((2 * k, dim * dim), dtype=complex)
    for i in range(k):
        m = v[:, i].reshape(dim, dim)
        cands[2 * i] = ((m + m.conj().T) / 2).reshape(-1)
        cands[2 * i + 1] = ((m - m.conj().T) / 2j).reshape(-1)
    stacked = np.hstack([cands.real, cands.imag])
    _, s, vt = np.linalg.svd(stacked, full_matrices=False)
    if s[k - 1] <= 1e-6 * s[0] or (len(s) > k and s[k] >= 1e-6 * s[0]):
        raise DecompositionError(
            f"ill-conditioned commutant basis extraction (singular values {s[k - 1:k + 1]})"
        )
    basis = []
    for i in range(k):
        m = (vt[i, : dim * dim] + 1j * vt[i, dim * dim :]).reshape(dim, dim)
        m = (m + m.conj().T) / 2
        basis.append(m / _hs_norm(m))
    return CommutantBasis(dim, basis, k)


def _commutant_project(seed_mat, mats, tol=1e-12, max_iter=None):
    """Orthogonal projection of seed_mat onto the commutant, matrix-free.

    Conjugate gradient on M y = M R with M(X) = sum_m [G_m, [G_m, X]];
    the projection is R - y.  Never forms a d^2-sized object, so it
    scales past the dense limit.
    """
    dim = seed_mat.shape[0]
    norms = [_hs_norm(g) for g in mats]
    gs = [g / nm for g, nm in zip(mats, norms) if nm > 0.0]
    if not gs:
        return seed_mat.copy()

    def apply_m(x):
        out = np.zeros_like(x)
        for g in gs:
            c = g @ x - x @ g
            out += g @ c - c @ g
        return out

    def ip(a, b):
        return float(np.real(np.sum(np.conj(a) * b)))

    if max_iter is None:
        max_iter = 200 + 20 * dim
    rhs = apply_m(seed_mat)
    rhs_norm = np.sqrt(ip(rhs, rhs))
    if rhs_norm == 0.0:
        return seed_mat.copy()
    y = np.zeros_like(seed_mat)
    r = rhs.copy()
    p = r.copy()
    rs = ip(r, r)
    for _ in range(max_iter):
        if np.sqrt(rs) <= tol * rhs_norm:
            break
        mp = apply_m(p)
        denom = ip(p, mp)
        if denom <= 0.0:
            break  # p sits in the kernel: nothing left to remove
        alpha = rs / denom
        y += alpha * p
        r -= alpha * mp
        rs_new = ip(r, r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    if np.sqrt(rs) > 1e-6 * rhs_norm:
        raise DecompositionError(
            f"commutant projection stalled at relative residual {np.sqrt(rs) / rhs_norm:.3e}"
        )
    proj = seed_mat - y
    return (proj + proj.conj().T) / 2


def restrict(generator, subspace, tol=INVARIANCE_TOL_DEFAULT):
    """Compression V^dagger G V of a generator onto an invariant subspace.

    ``subspace`` is a column-orthonormal d x k matrix.  The leakage
    norm ||(I - V V^dagger) G V|| (relative to the generator scale) must
    stay below ``tol``, otherwise the subspace is not invariant.
    """
    g = np.asarray(generator, dtype=complex)
    v = np.asarray(subspace, dtype=complex)
    if g.shape[0] != v.shape[0]:
        raise DimensionMismatchError(
            f"generator dim {g.shape[0]} vs subspace rows {v.shape[0]}"
        )
    gv = g @ v
    small = v.conj().T @ gv
    leakage = np.linalg.norm(gv - v @ small) / max(1.0, np.linalg.norm(g))
    if leakage > tol:
        raise LeakageError(
            f"subspace is not invariant: leakage {leakage:.3e} exceeds {tol:g}"
        )
    return (small + small.conj().T) / 2


def _sylvester_null_space(rest_a, rest_b, tol):
    """Null space of {X : X A_m = B_m X}; returns (dimension, basis mats)."""
    a = rest_a[0].shape[0]
    b = rest_b[0].shape[0]
    blocks = [
        np.kron(np.eye(b), am.T) - np.kron(bm, np.eye(a))
        for am, bm in zip(rest_a, rest_b)
    ]
    stacked = np.vstack(blocks)
    _, s, vt = np.linalg.svd(stacked)
    cut = tol * max(float(s[0]) if len(s) else 0.0, 1.0)
    k = int(np.sum(s < cut)) + max(0, vt.shape[0] - len(s))
    mats = [vt[vt.shape[0] - 1 - i].conj().reshape(b, a) for i in range(k)]
    return k, mats


def intertwiner_dim(sub_a, sub_b, generators, tol=INVARIANCE_TOL_DEFAULT):
    """Dimension of the space of maps intertwining two invariant subspaces.

    Counts solutions X of X (G|_A) = (G|_B) X over all generators; by
    Schur's lemma the answer is 1 for equivalent irreducibles and 0 for
    inequivalent ones.  Both subspaces must be invariant.
    """
    mats, _ = _validated(generators)
    rest_a = [restrict(g, sub_a, tol) for g in mats]
    rest_b = [restrict(g, sub_b, tol) for g in mats]
    k, _ = _sylvester_null_space(rest_a, rest_b, tol)
    return k


def _commutant_kernel_dim(mats, tol):
    """Complex dimension of the commutant of small matrices (dense)."""
    dim = mats[0].shape[0]
    if dim == 1:
        return 1
    eye = np.eye(dim)
    square_sum = sum(g @ g for g in mats)
    big = np.kron(square_sum, eye) + np.kron(eye, square_sum.T)
    for g in mats:
        big -= 2.0 * np.kron(g, g.T)
    w = np.linalg.eigvalsh(big)
    scale = max(float(w[-1]), 1.0)
    return int(np.sum(w < tol * scale))


@dataclass
class IsotypicComponent:
    """All equivalent copies of one irreducible invariant subspace.

    ``subspaces`` holds ``multiplicity`` column-orthonormal bases, aligned
    so every generator restricts to the same matrix (``restrictions``) on
    each copy.
    """

    irrep_dim: int
    multiplicity: int
    subspaces: list
    component_label: int
    restrictions: list = field(repr=False, default_factory=list)


@dataclass
class IrrepDecomposition:
    """Decomposition of the generator action into isotypic components.

    ``block_unitary`` conjugates every generator into
    ``oplus_J I_{n_J} (x) L_J`` with the multiplicity factor on the left;
    its columns are the aligned subspace bases, copy-major within each
    component.  Components are sorted by irrep dimension descending,
    then by discovery order of their first subspace.
    """

    components: list
    block_unitary: np.ndarray
    seed: int
    dim: int

    def signature(self):
        return [(c.irrep_dim, c.multiplicity) for c in self.components]

    @property
    def n_qubits(self):
        return int(round(np.log2(self.dim)))

    def component(self, label):
        for c in self.components:
            if c.component_label == label:
                return c
        raise KeyError(f"no component labelled {label}")


class _RetryDraw(Exception):
    """Internal: the random draw was degenerate; try again."""


def _draw_commutant_element(mats, dim, rng, cbasis, force_complex):
    if cbasis is not None:
        coeff = rng.standard_normal(len(cbasis.basis))
        x = sum(c * b for c, b in zip(coeff, cbasis.basis))
        return np.asarray((x + x.conj().T) / 2, dtype=complex)
    if _all_real(mats) and not force_complex:
        seed_mat = rng.standard_normal((dim, dim))
        seed_mat = (seed_mat + seed_mat.T) / 2
        work = [np.ascontiguousarray(g.real) for g in mats]
    else:
        seed_mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        seed_mat = (seed_mat + seed_mat.conj().T) / 2
        work = mats
    out = np.asarray(_commutant_project(seed_mat, work), dtype=complex)
    residual = max(np.linalg.norm(g @ out - out @ g) for g in mats)
    if residual > 1e-8 * max(1.0, np.linalg.norm(out)) * max(np.linalg.norm(g) for g in mats):
        raise _RetryDraw(f"drawn element fails to commute (residual {residual:.3e})")
    return out


def _cluster_eigenvalues(w, gap_rel):
    spread = float(w[-1] - w[0])
    scale = max(1.0, float(np.abs(w).max()))
    if spread <= 1e-12 * scale:
        return [list(range(len(w)))]
    threshold = gap_rel * spread
    gaps = np.diff(w)
    # a gap near the threshold means the clustering is not trustworthy
    if np.any((gaps > threshold / 10) & (gaps < threshold * 10)):
        raise _RetryDraw("ambiguous eigenvalue gap")
    clusters = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > threshold:
            clusters.append([i])
        else:
            clusters[-1].append(i)
    return clusters


def _check_irreducible(rest, rng, tol, dense_limit):
    dim = rest[0].shape[0]
    if dim == 1:
        return True
    if dim <= dense_limit:
        return _commutant_kernel_dim(rest, tol) == 1
    # large block: a generic commutant element of an irreducible action is
    # a scalar; probe one draw
    r = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    r = (r + r.conj().T) / 2
    probe = _commutant_project(r, rest)
    probe = probe - (np.trace(probe) / dim) * np.eye(dim)
    return np.linalg.norm(probe) < 1e-6 * max(1.0, np.linalg.norm(r))


def _unitary_intertwiner(rest_ref, rest_other, tol):
    k, mats = _sylvester_null_space(rest_ref, rest_other, tol)
    if k == 0:
        return None
    if k > 1:
        raise _RetryDraw("intertwiner space is not one-dimensional")
    x = mats[0]
    gram = x.conj().T @ x
    scale = np.trace(gram).real / x.shape[1]
    if scale <= 0:
        raise _RetryDraw("degenerate intertwiner")
    u = x / np.sqrt(scale)
    if np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])) > 1e-6:
        raise _RetryDraw("intertwiner is not proportional to a unitary")
    idx = int(np.argmax(np.abs(u)))
    phase = u.flat[idx] / abs(u.flat[idx])
    return u / phase


def decompose(
    generators,
    seed=0,
    tol=COMMUTANT_TOL_DEFAULT,
    gap_rel=GAP_REL_DEFAULT,
    invariance_tol=INVARIANCE_TOL_DEFAULT,
    max_retries=MAX_RETRIES_DEFAULT,
    dense_draw_limit=DENSE_COMMUTANT_MAX_DIM,
):
    """Decompose the generators' action into isotypic components.

    Draws a seeded pseudo-random Hermitian commutant element, clusters
    its eigenvalues (relative gap ``gap_rel`` of the spectral range),
    verifies that each cluster subspace is invariant and irreducible,
    merges equivalent subspaces into components, and aligns multiplicity
    copies so every generator acts identically on each copy.  Degenerate
    draws are retried up to ``max_retries`` times before failing; they
    are never accepted silently.

    For Hilbert dimension at most ``dense_draw_limit`` the element is a
    random real combination of the dense commutant basis; beyond that
    the same distribution is drawn by projecting a random Hermitian
    matrix onto the commutant with a matrix-free solver.

    Returns
    -------
    IrrepDecomposition
        Components sorted by irrep dimension (descending) with the
        block-diagonalizing unitary; the signature multiset is
        independent of the seed.
    """
    mats, dim = _validated(generators)
    rng = np.random.default_rng(seed)
    cbasis = commutant(generators, tol=tol) if dim <= dense_draw_limit else None
    failures = 0
    last_reason = "no attempts made"
    for _ in range(max_retries):
        element = _draw_commutant_element(mats, dim, rng, cbasis, force_complex=failures >= 2)
        try:
            return _decompose_from_element(
                element, mats, dim, seed, rng, tol, gap_rel, invariance_tol, dense_draw_limit
            )
        except _RetryDraw as exc:
            failures += 1
            last_reason = str(exc)
    raise DecompositionError(
        f"decomposition failed after {max_retries} draws: {last_reason}"
    )


def _decompose_from_element(
    element, mats, dim, seed, rng, tol, gap_rel, invariance_tol, dense_limit
):
    w, v = np.linalg.eigh(element)
    clusters = _cluster_eigenvalues(w, gap_rel)
    subspaces = [np.ascontiguousarray(v[:, idx]) for idx in clusters]

    restrictions = []
    for sub in subspaces:
        try:
            restrictions.append([restrict(g, sub, invariance_tol) for g in mats])
        except LeakageError as exc:
            raise _RetryDraw(f"cluster subspace not invariant: {exc}") from exc
    for rest in restrictions:
        if not _check_irreducible(rest, rng, tol, dense_limit):
            raise _RetryDraw("cluster subspace is reducible")

    # merge equivalent subspaces, aligning each new copy to the reference
    groups = []
    for idx, sub in enumerate(subspaces):
        for group in groups:
            ref = group[0]
            if subspaces[ref].shape[1] != sub.shape[1]:
                continue
            u = _unitary_intertwiner(restrictions[ref], restrictions[idx], invariance_tol)
            if u is None:
                continue
            subspaces[idx] = sub @ u
            restrictions[idx] = [restrict(g, subspaces[idx], invariance_tol) for g in mats]
            ref_rest = restrictions[ref]
            drift = max(
                np.linalg.norm(a - b)
                for a, b in zip(ref_rest, restrictions[idx])
            )
            if drift > 1e-7 * max(1.0, max(np.linalg.norm(g) for g in mats)):
                raise _RetryDraw(f"copy alignment drift {drift:.3e}")
            group.append(idx)
            break
        else:
            groups.append([idx])

    order = sorted(range(len(groups)), key=lambda g: (-subspaces[groups[g][0]].shape[1], groups[g][0]))
    components = []
    columns = []
    for label, gidx in enumerate(order):
        group = groups[gidx]
        copies = [subspaces[i] for i in group]
        comp = IsotypicComponent(
            irrep_dim=copies[0].shape[1],
            multiplicity=len(copies),
            subspaces=copies,
            component_label=label,
            restrictions=restrictions[group[0]],
        )
        components.append(comp)
        columns.extend(copies)

    block_unitary = np.hstack(columns)
    if np.linalg.norm(block_unitary.conj().T @ block_unitary - np.eye(dim)) > 1e-8:
        raise _RetryDraw("assembled basis is not unitary")
    total = sum(c.irrep_dim * c.multiplicity for c in components)
    if total != dim:
        raise _RetryDraw(f"dimension accounting failed: {total} != {dim}")
    _verify_block_form(block_unitary, components, mats)
    return IrrepDecomposition(
        components=components, block_unitary=block_unitary, seed=seed, dim=dim
    )


def _verify_block_form(block_unitary, components, mats, tol=1e-8):
    for g_index, g in enumerate(mats):
        conj = block_unitary.conj().T @ g @ block_unitary
        expected = np.zeros_like(conj)
        offset = 0
        for comp in components:
            size = comp.irrep_dim * comp.multiplicity
            block = np.kron(np.eye(comp.multiplicity), comp.restrictions[g_index])
            expected[offset : offset + size, offset : offset + size] = block
            offset += size
        if np.linalg.norm(conj - expected) > tol * max(1.0, np.linalg.norm(g)):
            raise _RetryDraw("block reconstruction residual too large")
