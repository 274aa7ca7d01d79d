"""Pauli-string expressions and Hermitian operator construction.

Operators live on a register of n qubits with qubit 1 as the leftmost
(most significant) tensor factor, so basis states read |q1 q2 ... qn> and
the basis index of a computational state is its binary value with q1 as
the top bit.  All realized operators are dense complex 2^n x 2^n arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError, PauliParseError, ResourceLimitError

PAULI_AXES = "IXYZ"

SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

MAX_QUBITS_DEFAULT = 12

HERMITICITY_TOL = 1e-12

MODELS = ("isotropic", "anisotropic", "xy", "custom")


@dataclass(frozen=True)
class PauliTerm:
    """One real-weighted Pauli string, e.g. 2.0 * XYI."""

    coefficient: float
    axes: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient {self.coefficient!r}")
        if not self.axes or any(c not in PAULI_AXES for c in self.axes):
            raise ValueError(f"invalid Pauli string {self.axes!r}")


@dataclass(frozen=True)
class OperatorExpression:
    """A real linear combination of Pauli strings on a fixed register.

    Terms are normalized on construction: duplicate strings are merged by
    summing coefficients, exact-zero terms are dropped, and the remainder
    is sorted lexicographically by string.  Instances are immutable, so
    the canonical text form is a pure function of the value.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("register must have at least one qubit")
        merged: dict[str, float] = {}
        for term in self.terms:
            if len(term.axes) != self.n_qubits:
                raise ValueError(
                    f"term {term.axes!r} has length {len(term.axes)}, expected {self.n_qubits}"
                )
            merged[term.axes] = merged.get(term.axes, 0.0) + term.coefficient
        canonical = tuple(
            PauliTerm(coefficient=c, axes=a)
            for a, c in sorted(merged.items())
            if c != 0.0
        )
        object.__setattr__(self, "terms", canonical)

    @classmethod
    def from_pairs(cls, n_qubits, pairs):
        """Build from an iterable of (coefficient, axes) pairs."""
        return cls(n_qubits, tuple(PauliTerm(float(c), a) for c, a in pairs))

    def is_zero(self):
        return not self.terms

    def to_text(self):
        """Canonical printable form; parses back to an equal expression."""
        if not self.terms:
            return f"0*{'I' * self.n_qubits}"
        parts = []
        for k, term in enumerate(self.terms):
            mag = repr(abs(term.coefficient))
            if k == 0:
                sign = "-" if term.coefficient < 0 else ""
                parts.append(f"{sign}{mag}*{term.axes}")
            else:
                op = " - " if term.coefficient < 0 else " + "
                parts.append(f"{op}{mag}*{term.axes}")
        return "".join(parts)


_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def parse_pauli_expression(text, n):
    """Parse expression text into an :class:`OperatorExpression`.

    Grammar: ``expr := ['-'] sterm (('+'|'-') sterm)*`` with
    ``sterm := [number '*'] pstring`` and ``pstring := [IXYZ]{n}``.
    Whitespace is insignificant; an omitted number means 1.0.  A leading
    sign is accepted so canonical output with a negative first term
    round-trips.

    Raises
    ------
    PauliParseError
        On empty input, wrong string length, unknown characters, or a
        non-finite number; ``position`` indexes into the original text.
    """
    if n < 1:
        raise ValueError("register must have at least one qubit")
    chars = [(c, i) for i, c in enumerate(text) if not c.isspace()]
    if not chars:
        raise PauliParseError("empty expression", 0)
    pos = 0

    def peek():
        return chars[pos][0] if pos < len(chars) else None

    def origin(k=None):
        k = pos if k is None else k
        return chars[k][1] if k < len(chars) else len(text)

    def read_sterm(sign):
        nonlocal pos
        coefficient = float(sign)
        here = "".join(c for c, _ in chars[pos:])
        m = _NUMBER_RE.match(here)
        if m:
            start = pos
            value = float(m.group(0))
            if not np.isfinite(value):
                raise PauliParseError(f"non-finite number {m.group(0)!r}", origin(start))
            pos += m.end()
            if peek() != "*":
                raise PauliParseError("expected '*' after number", origin())
            pos += 1
            coefficient *= value
        start = pos
        while peek() in ("I", "X", "Y", "Z"):
            pos += 1
        axes = "".join(c for c, _ in chars[start:pos])
        if not axes:
            raise PauliParseError("expected a Pauli string", origin(start))
        if len(axes) != n:
            raise PauliParseError(
                f"Pauli string {axes!r} has length {len(axes)}, expected {n}",
                origin(start),
            )
        return PauliTerm(coefficient, axes)

    terms = []
    sign = 1.0
    if peek() == "-":
        sign = -1.0
        pos += 1
    elif peek() == "+":
        pos += 1
    terms.append(read_sterm(sign))
    while pos < len(chars):
        op = peek()
        if op not in ("+", "-"):
            raise PauliParseError(f"unexpected character {op!r}", origin())
        pos += 1
        terms.append(read_sterm(1.0 if op == "+" else -1.0))
    return OperatorExpression(n, tuple(terms))


def realize(expr, max_qubits=MAX_QUBITS_DEFAULT):
    """Dense Hermitian matrix of an expression, qubit 1 leftmost.

    Guards against registers larger than ``max_qubits`` since downstream
    closure work scales as 4^n.
    """
    if expr.n_qubits > max_qubits:
        raise ResourceLimitError(
            f"register of {expr.n_qubits} qubits exceeds the configured maximum {max_qubits}"
        )
    dim = 2**expr.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for term in expr.terms:
        out += term.coefficient * pauli_string_matrix(term.axes)
    return out


def pauli_string_matrix(axes):
    """Kronecker product of single-qubit Paulis, first letter outermost."""
    out = np.array([[1.0 + 0.0j]])
    for c in axes:
        out = np.kron(out, SINGLE_QUBIT[c])
    return out


def check_hermitian(mat, tol=HERMITICITY_TOL):
    """Validate the hermiticity invariant; returns the matrix unchanged."""
    from .errors import NonHermitianError

    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {mat.shape}")
    dev = np.abs(mat - mat.conj().T).max()
    if dev > tol:
        raise NonHermitianError(f"matrix deviates from Hermitian by {dev:.3e} (> {tol:g})")
    return mat


def build_exchange(i, j, n, max_qubits=MAX_QUBITS_DEFAULT):
    """Exchange coupling between qubits i and j on an n-qubit register.

    The operator is XX + YY + ZZ on the chosen pair, equivalently
    2*SWAP - I; its spectrum on the pair is {1, 1, 1, -3}.
    """
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"qubit indices ({i}, {j}) out of range for n={n}")
    if i == j:
        raise ValueError("exchange coupling needs two distinct qubits")
    pairs = []
    for axis in "XYZ":
        axes = ["I"] * n
        axes[i - 1] = axis
        axes[j - 1] = axis
        pairs.append((1.0, "".join(axes)))
    return realize(OperatorExpression.from_pairs(n, pairs), max_qubits=max_qubits)


def total_sz_expression(n):
    """Sum of single-qubit Z operators; the default gauge observable."""
    return OperatorExpression.from_pairs(
        n, [(1.0, "I" * k + "Z" + "I" * (n - k - 1)) for k in range(n)]
    )


def all_pairs_couplings(n, jx=1.0, jy=None, jz=None):
    """Couplings on every qubit pair; isotropic unless jy/jz given."""
    jy = jx if jy is None else jy
    jz = jx if jz is None else jz
    return tuple((i, j, jx, jy, jz) for i, j in combinations(range(1, n + 1), 2))


def chain_couplings(n, jx=1.0, jy=None, jz=None):
    """Nearest-neighbour couplings 1-2, 2-3, ..., (n-1)-n."""
    jy = jx if jy is None else jy
    jz = jx if jz is None else jz
    return tuple((i, i + 1, jx, jy, jz) for i in range(1, n))


@dataclass(frozen=True)
class HamiltonianSpec:
    """A family of generators: spin-spin couplings or custom expressions.

    ``couplings`` entries are (i, j, JX, JY, JZ) with 1 <= i < j <= n.
    The isotropic model requires JX = JY = JZ per edge and the xy model
    requires JZ = 0 and JX = JY; ``custom`` ignores couplings and uses
    ``custom_expressions`` instead.
    """

    model: str
    n_qubits: int
    couplings: tuple = ()
    custom_expressions: tuple = field(default=())

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.n_qubits < 1:
            raise ValueError("register must have at least one qubit")
        object.__setattr__(
            self,
            "couplings",
            tuple(
                (int(i), int(j), float(jx), float(jy), float(jz))
                for i, j, jx, jy, jz in self.couplings
            ),
        )
        object.__setattr__(self, "custom_expressions", tuple(self.custom_expressions))
        if self.model == "custom":
            if self.couplings:
                raise ValueError("custom model takes expressions, not couplings")
            if not self.custom_expressions:
                raise ValueError("custom model needs at least one expression")
            for expr in self.custom_expressions:
                if expr.n_qubits != self.n_qubits:
                    raise ValueError(
                        f"expression on {expr.n_qubits} qubits in a {self.n_qubits}-qubit spec"
                    )
            return
        if not self.couplings:
            raise ValueError(f"{self.model} model needs at least one coupling")
        seen = set()
        for i, j, jx, jy, jz in self.couplings:
            if i == j:
                raise ValueError(f"self-edge ({i}, {j}) is not allowed")
            if not (1 <= i < j <= self.n_qubits):
                raise ValueError(f"edge ({i}, {j}) must satisfy 1 <= i < j <= {self.n_qubits}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            if self.model == "isotropic" and not jx == jy == jz:
                raise ValueError(f"isotropic edge ({i}, {j}) needs JX = JY = JZ")
            if self.model == "xy" and (jz != 0.0 or jx != jy):
                raise ValueError(f"xy edge ({i}, {j}) needs JZ = 0 and JX = JY")


def build_model(spec, max_qubits=MAX_QUBITS_DEFAULT):
    """One Hermitian generator per coupling edge (or custom expression).

    Each edge (i, j, JX, JY, JZ) realizes JX*XiXj + JY*YiYj + JZ*ZiZj;
    isotropic edges therefore reduce to J times the exchange coupling.
    Generator order follows the spec's edge order.
    """
    if spec.model == "custom":
        return [realize(expr, max_qubits=max_qubits) for expr in spec.custom_expressions]
    n = spec.n_qubits
    out = []
    for i, j, jx, jy, jz in spec.couplings:
        pairs = []
        for axis, weight in (("X", jx), ("Y", jy), ("Z", jz)):
            axes = ["I"] * n
            axes[i - 1] = axis
            axes[j - 1] = axis
            pairs.append((weight, "".join(axes)))
        out.append(realize(OperatorExpression.from_pairs(n, pairs), max_qubits=max_qubits))
    return out
