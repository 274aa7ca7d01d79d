"""Real Lie algebras of Hermitian operators under the bracket (A, B) -> i[A, B].

The working inner product is the normalized Hilbert-Schmidt form
<A, B> = Tr(A B) / 2^n, under which the identity has unit norm on every
register size, so tolerances are scale-free.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ClosureLimitError, DimensionMismatchError, NonHermitianError
from .pauli import check_hermitian

CLOSURE_TOL_DEFAULT = 1e-9

_IMAG_RESIDUE_TOL = 1e-12


def hs_inner(a, b):
    """Normalized Hilbert-Schmidt inner product Tr(A B) / dim.

    For Hermitian inputs the value is real; an imaginary residue above
    1e-12 signals a non-Hermitian operand and raises.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    value = np.sum(a.T * b) / a.shape[0]
    scale = max(1.0, abs(value))
    if abs(value.imag) > _IMAG_RESIDUE_TOL * scale:
        raise NonHermitianError(
            f"inner product has imaginary residue {value.imag:.3e}; inputs not Hermitian?"
        )
    return float(value.real)


class _Span:
    """Growing orthonormal span of flattened operators.

    Rows hold mat.reshape(-1) / sqrt(dim) so the plain complex dot product
    equals hs_inner of the underlying matrices.
    """

    def __init__(self, dim):
        self.dim = dim
        self._rows = np.zeros((16, dim * dim), dtype=complex)
        self.size = 0

    def rows(self):
        return self._rows[: self.size]

    def coefficients(self, vec):
        return np.conj(self.rows() @ np.conj(vec))

    def project_out(self, vec, passes=2):
        rows = self.rows()
        for _ in range(passes):
            vec = vec - rows.T @ (rows @ np.conj(vec)).conj()
        return vec

    def append(self, vec):
        if self.size == self._rows.shape[0]:
            grown = np.zeros((2 * self.size, self._rows.shape[1]), dtype=complex)
            grown[: self.size] = self._rows[: self.size]
            self._rows = grown
        self._rows[self.size] = vec
        self.size += 1

    def to_vec(self, mat):
        return np.asarray(mat, dtype=complex).reshape(-1) / np.sqrt(self.dim)

    def to_mat(self, vec):
        return vec.reshape(self.dim, self.dim) * np.sqrt(self.dim)


@dataclass
class LieAlgebraBasis:
    """Orthonormal basis of a bracket-closed real algebra of Hermitian operators."""

    n_qubits: int
    basis: list
    closure_tolerance: float
    generator_count: int
    closed: bool
    _span: _Span = field(repr=False, default=None)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def hilbert_dim(self):
        return self.basis[0].shape[0] if self.basis else 2**self.n_qubits

    def span(self):
        if self._span is None:
            sp = _Span(self.hilbert_dim)
            for b in self.basis:
                sp.append(sp.to_vec(b))
            self._span = sp
        return self._span


def lie_closure(generators, tol=CLOSURE_TOL_DEFAULT, max_dim=None):
    """Smallest real Lie algebra containing the generators.

    Seeds the span with the orthonormalized generators, then walks a FIFO
    queue of index pairs (i, j), i < j, in lexicographic order, forming
    the bracket i[b_i, b_j].  Whenever the projection residual of a
    bracket exceeds ``tol`` (relative to the candidate norm, floored at
    1), the normalized residual joins the basis at the tail and the pairs
    (k, new) are enqueued.  The walk is deterministic, so identical
    inputs give bit-identical bases.

    Raises
    ------
    ClosureLimitError
        If the basis would grow past ``max_dim`` (default 4^n), which
        signals a runaway closure or a too-loose tolerance.
    """
    if not generators:
        raise ValueError("need at least one generator")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    mats = [check_hermitian(g) for g in generators]
    dim = mats[0].shape[0]
    for g in mats:
        if g.shape[0] != dim:
            raise DimensionMismatchError("generators act on different registers")
    n_qubits = int(round(np.log2(dim)))
    if max_dim is None:
        max_dim = dim * dim

    span = _Span(dim)
    basis_mats = []

    def try_add(mat):
        vec = span.to_vec(mat)
        norm0 = np.linalg.norm(vec)
        if norm0 <= tol:
            return False
        vec = span.project_out(vec)
        residual = np.linalg.norm(vec)
        if residual <= tol * max(1.0, norm0):
            return False
        if len(basis_mats) >= max_dim:
            raise ClosureLimitError(
                f"closure exceeded max_dim={max_dim}; runaway closure or too-loose tolerance"
            )
        vec = vec / residual
        span.append(vec)
        basis_mats.append(span.to_mat(vec))
        return True

    for g in mats:
        try_add(g)

    queue = deque(combinations(range(len(basis_mats)), 2))
    while queue:
        i, j = queue.popleft()
        a, b = basis_mats[i], basis_mats[j]
        bracket = 1j * (a @ b - b @ a)
        if try_add(bracket):
            k = len(basis_mats) - 1
            queue.extend((m, k) for m in range(k))

    result = LieAlgebraBasis(
        n_qubits=n_qubits,
        basis=basis_mats,
        closure_tolerance=tol,
        generator_count=len(generators),
        closed=True,
    )
    result._span = span
    return result


def contains(basis, candidate, tol=CLOSURE_TOL_DEFAULT):
    """Whether candidate lies in span(basis); returns (flag, residual).

    The residual is the norm of the candidate minus its projection,
    normalized by the candidate norm.  A zero candidate is contained
    with residual 0.
    """
    candidate = np.asarray(candidate, dtype=complex)
    if candidate.shape[0] != basis.hilbert_dim:
        raise DimensionMismatchError(
            f"candidate dim {candidate.shape[0]} vs basis dim {basis.hilbert_dim}"
        )
    span = basis.span()
    vec = span.to_vec(candidate)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return True, 0.0
    residual = np.linalg.norm(span.project_out(vec)) / norm
    return bool(residual < tol), float(residual)


def center_of(basis, tol=CLOSURE_TOL_DEFAULT):
    """Orthonormal basis of the center of a closed algebra.

    Elements X in the span with [X, b_j] ~ 0 for every basis element,
    found as the null space of the stacked adjoint maps written in the
    algebra's own coordinates.
    """
    if not basis.closed:
        raise ValueError("center is defined for a closed algebra basis")
    m = basis.dim
    if m == 0:
        return []
    mats = basis.basis
    span = basis.span()
    # Coefficients of i[b_i, b_j] in the Hermitian basis are real, so the
    # null-space problem stays over the reals and its vectors map straight
    # back to Hermitian operators.
    stacked = np.zeros((m * m, m))
    for i, j in combinations(range(m), 2):
        bracket = 1j * (mats[i] @ mats[j] - mats[j] @ mats[i])
        coeff = span.coefficients(span.to_vec(bracket)).real
        stacked[j * m : (j + 1) * m, i] = coeff
        stacked[i * m : (i + 1) * m, j] = -coeff
    u, s, vt = np.linalg.svd(stacked, full_matrices=True)
    rank = int(np.sum(s > tol * max(s[0] if len(s) else 0.0, 1.0)))
    out = []
    for k in range(rank, m):
        mat = sum(c * b for c, b in zip(vt[k], mats))
        out.append((mat + mat.conj().T) / 2)
    return out
