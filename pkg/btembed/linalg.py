"""Matrices over Q and the quadratic layers, backed by sympy's DomainMatrix.

The library keeps matrices as row-major lists of `Fraction` or `FieldElement`.
This module converts them to a `DomainMatrix` over QQ or QQ(sqrt d), lets sympy
do the elimination, and converts back to the scalar type it was given.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from typing import Any, TypeVar

from sympy import sqrt
from sympy.polys.domains import QQ
from sympy.polys.domains.domain import Domain
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from btembed.errors import DimensionMismatch, RankDeficient
from btembed.field_tower import FieldElement

S = TypeVar("S", Fraction, FieldElement)

Matrix = list[list[S]]


@cache
def _domain(d: int) -> Domain:
    if d == 1:
        return QQ
    return QQ.algebraic_field(sqrt(d))


def _to_fraction(q: Any) -> Fraction:  # noqa: ANN401
    return Fraction(int(q.numerator), int(q.denominator))


def _qq(x: Fraction) -> Any:  # noqa: ANN401
    return QQ(x.numerator, x.denominator)


@dataclass(frozen=True)
class _Scalars:
    """Which field the entries live in, and which Python type to hand back."""

    d: int
    field_elements: bool

    @property
    def domain(self) -> Domain:
        return _domain(self.d)

    def lift(self, x: Fraction | FieldElement | int) -> Any:  # noqa: ANN401
        y = FieldElement.coerce(x)
        if self.d == 1:
            return _qq(y.a)
        k = self.domain
        if not y.c:
            return k.convert(_qq(y.a), QQ)
        # QQ(sqrt d) has sqrt d as its primitive element
        return k([_qq(y.c), _qq(y.a)])

    def lower(self, y: Any) -> Fraction | FieldElement:  # noqa: ANN401
        if self.d == 1:
            a = _to_fraction(y)
            return FieldElement(a) if self.field_elements else a
        coeffs = [_to_fraction(q) for q in y.to_list()]
        coeffs = [Fraction(0)] * (2 - len(coeffs)) + coeffs
        return FieldElement(coeffs[1], coeffs[0], self.d)

    def to_dm(self, a: "Sequence[Sequence[Any]]", n_cols: int) -> DomainMatrix:
        rows = [[self.lift(x) for x in row] for row in a]
        return DomainMatrix(rows, (len(rows), n_cols), self.domain)

    def from_dm(self, m: DomainMatrix) -> "list[list[Any]]":
        return [[self.lower(y) for y in row] for row in m.to_list()]


def _scalars(entries: Iterable[Any]) -> _Scalars:
    d = 1
    field_elements = False
    for x in entries:
        if not isinstance(x, FieldElement):
            continue
        field_elements = True
        if x.d == 1:
            continue
        if d not in (1, x.d):
            raise ValueError(f"Elements of Q(sqrt {d}) and Q(sqrt {x.d}) do not mix")
        d = x.d
    return _Scalars(d, field_elements)


def _entries(*mats: "Sequence[Sequence[Any]]") -> Iterable[Any]:
    return (x for a in mats for row in a for x in row)


def zero_of(x: S) -> S:
    return x * 0


def one_of(x: S) -> S:
    return x * 0 + 1


def zeros(n_rows: int, n_cols: int, like: S) -> "list[list[S]]":
    z = zero_of(like)
    return [[z] * n_cols for _ in range(n_rows)]


def identity(n: int, like: S) -> "list[list[S]]":
    """The n x n identity, with entries of the same type as `like` (never scaled by it)."""
    z, o = zero_of(like), one_of(like)
    return [[o if i == j else z for j in range(n)] for i in range(n)]


def copy(a: "Sequence[Sequence[S]]") -> "list[list[S]]":
    return [list(row) for row in a]


def shape(a: "Sequence[Sequence[S]]") -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def transpose(a: "Sequence[Sequence[S]]") -> "list[list[S]]":
    return [list(col) for col in zip(*a, strict=True)]


def mat_mul(a: "Sequence[Sequence[S]]", b: "Sequence[Sequence[S]]") -> "list[list[S]]":
    if a and b and len(a[0]) != len(b):
        raise DimensionMismatch(f"Cannot multiply {shape(a)} by {shape(b)}")
    if not a:
        return []
    if not b or not b[0]:
        return [[] for _ in a]
    sc = _scalars(_entries(a, b))
    product = sc.to_dm(a, len(b)) * sc.to_dm(b, len(b[0]))
    return sc.from_dm(product)


def mat_vec(a: "Sequence[Sequence[S]]", v: "Sequence[S]") -> "list[S]":
    if a and len(a[0]) != len(v):
        raise DimensionMismatch(f"Cannot apply {shape(a)} to a vector of length {len(v)}")
    if not a:
        return []
    return [row[0] for row in mat_mul(a, [[x] for x in v])]


def dot(u: "Sequence[S]", v: "Sequence[S]") -> S:
    if len(u) != len(v):
        raise DimensionMismatch(f"Vectors of length {len(u)} and {len(v)}")
    return mat_mul([list(u)], [[x] for x in v])[0][0]


def mat_add(a: "Sequence[Sequence[S]]", b: "Sequence[Sequence[S]]") -> "list[list[S]]":
    if shape(a) != shape(b):
        raise DimensionMismatch(f"Cannot add {shape(a)} and {shape(b)}")
    return [[x + y for x, y in zip(ra, rb, strict=True)] for ra, rb in zip(a, b, strict=True)]


def mat_sub(a: "Sequence[Sequence[S]]", b: "Sequence[Sequence[S]]") -> "list[list[S]]":
    if shape(a) != shape(b):
        raise DimensionMismatch(f"Cannot subtract {shape(a)} and {shape(b)}")
    return [[x - y for x, y in zip(ra, rb, strict=True)] for ra, rb in zip(a, b, strict=True)]


def mat_scale(a: "Sequence[Sequence[S]]", s: S | Fraction | int) -> "list[list[S]]":
    return [[x * s for x in row] for row in a]


def vec_scale(v: "Sequence[S]", s: S | Fraction | int) -> "list[S]":
    return [x * s for x in v]


def vec_add(u: "Sequence[S]", v: "Sequence[S]") -> "list[S]":
    return [x + y for x, y in zip(u, v, strict=True)]


def vec_sub(u: "Sequence[S]", v: "Sequence[S]") -> "list[S]":
    return [x - y for x, y in zip(u, v, strict=True)]


def columns(a: "Sequence[Sequence[S]]") -> "list[list[S]]":
    return transpose(a)


def from_columns(cols: "Sequence[Sequence[S]]") -> "list[list[S]]":
    return transpose(cols)


def is_zero(a: "Sequence[Sequence[S]]") -> bool:
    return not any(x for row in a for x in row)


def block_diag(blocks: "Sequence[Sequence[Sequence[S]]]", like: S) -> "list[list[S]]":
    n = sum(len(b) for b in blocks)
    out = zeros(n, n, like)
    off = 0
    for b in blocks:
        k = len(b)
        for i in range(k):
            out[off + i][off : off + k] = list(b[i])
        off += k
    return out


def rref(a: "Sequence[Sequence[S]]") -> "tuple[list[list[S]], list[int]]":
    """Reduced row echelon form and the pivot columns."""
    n_rows, n_cols = shape(a)
    if n_rows == 0 or n_cols == 0:
        return copy(a), []
    sc = _scalars(_entries(a))
    reduced, pivots = sc.to_dm(a, n_cols).rref()
    return sc.from_dm(reduced), list(pivots)


def rank(a: "Sequence[Sequence[S]]") -> int:
    n_rows, n_cols = shape(a)
    if n_rows == 0 or n_cols == 0:
        return 0
    sc = _scalars(_entries(a))
    return int(sc.to_dm(a, n_cols).rank())


def nullspace(a: "Sequence[Sequence[S]]", n_cols: int, like: S) -> "list[list[S]]":
    """Basis of {x : a x = 0}, one vector per free column in order.

    Each vector has a 1 in its free column and 0 in the other free columns.
    """
    if not a:
        return identity(n_cols, like)
    sc = _scalars(_entries(a, [[like]]))
    kernel = sc.to_dm(a, n_cols).nullspace()
    basis: list[tuple[int, list[S]]] = []
    for row in sc.from_dm(kernel):
        if not any(row):
            continue
        free = max(i for i, x in enumerate(row) if x)
        basis.append((free, [x / row[free] for x in row]))
    return [v for _, v in sorted(basis, key=lambda fv: fv[0])]


def inverse(a: "Sequence[Sequence[S]]") -> "list[list[S]]":
    n, m = shape(a)
    if n != m:
        raise DimensionMismatch(f"Cannot invert a {n}x{m} matrix")
    if n == 0:
        return []
    sc = _scalars(_entries(a))
    try:
        inv = sc.to_dm(a, n).inv()
    except DMNonInvertibleMatrixError as exc:
        raise RankDeficient("Matrix is singular") from exc
    return sc.from_dm(inv)


def solve(a: "Sequence[Sequence[S]]", b: "Sequence[S]") -> "list[S]":
    """Some x with a x = b; raises RankDeficient if there is none."""
    n_rows, n_cols = shape(a)
    if len(b) != n_rows:
        raise DimensionMismatch(f"Right-hand side of length {len(b)} for {n_rows} equations")
    sc = _scalars(_entries(a, [b]))
    aug = sc.to_dm(a, n_cols).hstack(sc.to_dm([[x] for x in b], 1))
    reduced, pivots = aug.rref()
    if n_cols in pivots:
        raise RankDeficient("Inconsistent linear system")
    red = sc.from_dm(reduced)
    x = [sc.lower(sc.domain.zero)] * n_cols
    for row, pc in enumerate(pivots):
        x[pc] = red[row][n_cols]
    return x


def span_basis(vectors: "Sequence[Sequence[S]]") -> "list[list[S]]":
    """A basis (subset of the input, in order) of the span of the vectors."""
    if not vectors:
        return []
    _, pivots = rref(from_columns(vectors))
    return [list(vectors[i]) for i in pivots]


def in_span(vectors: "Sequence[Sequence[S]]", v: "Sequence[S]") -> bool:
    if not vectors:
        return not any(v)
    return rank([*vectors, v]) == rank(vectors)
