"""Z_(p)-lattices in Q^N with a canonical basis.

Every o_F- or o_E-lattice in the library is handled through its underlying
Z_(p)-lattice on flattened coordinates (see `FieldLayer.flatten`). The canonical
form is a column echelon form: pivots are powers of p, and entries sitting in a
pivot row of a later column are reduced to the p-adic residue system
{0 <= y < p^k, y in Z[1/p]}. Two lattices are equal exactly when their canonical
bases are, and lattices of any rank are allowed.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cache

from sympy import multiplicity
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import hermite_normal_form

from btembed import linalg
from btembed.errors import DimensionMismatch, RankDeficient
from btembed.field_tower import PrimeLocalModel, Valuation

Vector = tuple[Fraction, ...]


@cache
def _model(p: int) -> PrimeLocalModel:
    return PrimeLocalModel(p)


def vp(x: Fraction, p: int) -> Valuation:
    return _model(p).valuation(x)


def padic_fractional_part(z: Fraction, p: int) -> Fraction:
    """The representative of z mod Z_(p) of the form n / p^s with 0 <= n < p^s."""
    v = vp(z, p)
    if v >= 0:
        return Fraction(0)
    s = -int(v)
    ps = p**s
    m_prime = z.denominator // ps
    n = (z.numerator * pow(m_prime, -1, ps)) % ps
    return Fraction(n, ps)


def _canonical_basis(
    p: int,
    n: int,
    generators: Iterable[Sequence[Fraction]],
) -> tuple[Vector, ...]:
    gens = [[Fraction(x) for x in g] for g in generators]
    for g in gens:
        if len(g) != n:
            raise DimensionMismatch(f"Generator of length {len(g)} in Q^{n}")
    gens = [g for g in gens if any(g)]
    if not gens:
        return ()
    # denom = p^shift * unit, and the unit does not change a Z_(p)-span
    denom = math.lcm(*(x.denominator for g in gens for x in g))
    shift = Fraction(p) ** -multiplicity(p, denom)
    # Rows go in bottom-up so the integer HNF has its pivots top-down once flipped back.
    rows = [[ZZ(int(g[i] * denom)) for g in gens] for i in reversed(range(n))]
    hnf = hermite_normal_form(DomainMatrix(rows, (n, len(gens)), ZZ))
    flipped = hnf.to_list()[::-1]
    echelon: list[tuple[int, list[Fraction]]] = []
    for j in reversed(range(hnf.shape[1])):
        col = [Fraction(int(row[j])) * shift for row in flipped]
        i = next(k for k, x in enumerate(col) if x)
        unit = col[i] / Fraction(p) ** int(vp(col[i], p))
        echelon.append((i, [x / unit for x in col]))
    for idx, (i, piv) in enumerate(echelon):
        pk = piv[i]
        for jdx in range(idx):
            row, col = echelon[jdx]
            if col[i]:
                z = col[i] / pk
                q = z - padic_fractional_part(z, p)
                if q:
                    echelon[jdx] = (
                        row,
                        [x - q * y if y else x for x, y in zip(col, piv, strict=True)],
                    )
    return tuple(tuple(col) for _, col in echelon)


def _integral_points(m: list[list[Fraction]], p: int) -> list[list[Fraction]]:
    """Basis of {y : M y in Z_(p)^r} for M of full column rank.

    This is the dual, under the dot product, of the lattice spanned by the rows
    of M, so with C its canonical basis matrix the answer is the columns of C^-T.
    """
    k = linalg.shape(m)[1]
    rows_lattice = DvrLattice.from_generators(p, k, m)
    if rows_lattice.rank != k:
        raise RankDeficient("Coefficient matrix does not have full column rank")
    return linalg.inverse(linalg.from_columns(rows_lattice.basis))


@dataclass(frozen=True)
class DvrLattice:
    p: int
    ambient_dim: int
    basis: tuple[Vector, ...]

    @classmethod
    def from_generators(
        cls,
        p: int,
        ambient_dim: int,
        generators: Iterable[Sequence[Fraction]],
    ) -> "DvrLattice":
        return cls(p, ambient_dim, _canonical_basis(p, ambient_dim, generators))

    @classmethod
    def zero(cls, p: int, ambient_dim: int) -> "DvrLattice":
        return cls(p, ambient_dim, ())

    @classmethod
    def standard(cls, p: int, ambient_dim: int) -> "DvrLattice":
        return cls.from_generators(
            p,
            ambient_dim,
            linalg.identity(ambient_dim, Fraction(1)),
        )

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.ambient_dim

    def basis_matrix(self) -> list[list[Fraction]]:
        """N x rank matrix whose columns are the canonical basis."""
        if not self.basis:
            return [[] for _ in range(self.ambient_dim)]
        return linalg.from_columns(self.basis)

    def _check(self, other: "DvrLattice") -> None:
        if (self.p, self.ambient_dim) != (other.p, other.ambient_dim):
            raise DimensionMismatch("Lattices live in different spaces")

    def __add__(self, other: "DvrLattice") -> "DvrLattice":
        self._check(other)
        return DvrLattice.from_generators(self.p, self.ambient_dim, self.basis + other.basis)

    def scaled(self, k: int) -> "DvrLattice":
        """p^k times the lattice."""
        f = Fraction(self.p) ** k
        return DvrLattice.from_generators(
            self.p,
            self.ambient_dim,
            ([x * f for x in b] for b in self.basis),
        )

    def contains(self, v: Sequence[Fraction]) -> bool:
        if not any(v):
            return True
        return DvrLattice.from_generators(self.p, self.ambient_dim, (*self.basis, v)) == self

    def contains_lattice(self, other: "DvrLattice") -> bool:
        self._check(other)
        return self + other == self

    def image(self, matrix: Sequence[Sequence[Fraction]]) -> "DvrLattice":
        """The lattice spanned by matrix * b over the basis vectors b."""
        out_dim = len(matrix)
        return DvrLattice.from_generators(
            self.p,
            out_dim,
            (linalg.mat_vec(matrix, b) for b in self.basis),
        )

    def intersection(self, other: "DvrLattice") -> "DvrLattice":
        self._check(other)
        r1 = self.rank
        if r1 == 0 or other.rank == 0:
            return DvrLattice.zero(self.p, self.ambient_dim)
        stacked = [list(b) for b in self.basis] + [[-x for x in b] for b in other.basis]
        system = linalg.transpose(stacked)
        kernel = linalg.nullspace(system, len(stacked), Fraction(1))
        if not kernel:
            return DvrLattice.zero(self.p, self.ambient_dim)
        kmat = linalg.from_columns(kernel)
        b1 = self.basis_matrix()
        gens = []
        for y in _integral_points(kmat, self.p):
            c = linalg.mat_vec(kmat, y)
            gens.append(linalg.mat_vec(b1, c[:r1]))
        return DvrLattice.from_generators(self.p, self.ambient_dim, gens)

    def intersect_subspace(self, constraints: Sequence[Sequence[Fraction]]) -> "DvrLattice":
        """L intersected with {x : C x = 0}."""
        if not self.basis or not constraints:
            return self
        b = self.basis_matrix()
        cb = linalg.mat_mul(constraints, b)
        kernel = linalg.nullspace(cb, self.rank, Fraction(1))
        if not kernel:
            return DvrLattice.zero(self.p, self.ambient_dim)
        if len(kernel) == self.rank:
            return self
        kmat = linalg.from_columns(kernel)
        return DvrLattice.from_generators(
            self.p,
            self.ambient_dim,
            (linalg.mat_vec(b, linalg.mat_vec(kmat, y)) for y in _integral_points(kmat, self.p)),
        )

    def dual(
        self,
        pairing: Sequence[Sequence[Fraction]],
        within: Sequence[Sequence[Fraction]] | None = None,
    ) -> "DvrLattice":
        """{x in span(within) : P(x, L) in p Z_(p)} for the bilinear form x^T P y.

        `within` is a list of basis vectors of the subspace the dual is taken in,
        defaulting to all of Q^N. The pairing between that subspace and L must be
        non-degenerate on the subspace side.
        """
        n = self.ambient_dim
        w_vectors = (
            [list(v) for v in within]
            if within is not None
            else linalg.identity(n, Fraction(1))
        )
        k = len(w_vectors)
        if self.rank == 0:
            raise RankDeficient("Dual of the zero lattice is not a lattice")
        w = linalg.from_columns(w_vectors)
        a = linalg.mat_mul(linalg.mat_mul(linalg.transpose(w), pairing), self.basis_matrix())
        # y with y^T A in p Z^r, i.e. (A^T / p) y integral
        m = [[x / self.p for x in row] for row in linalg.transpose(a)]
        if linalg.rank(m) != k:
            raise RankDeficient("Pairing is degenerate against this lattice")
        return DvrLattice.from_generators(
            self.p,
            n,
            (linalg.mat_vec(w, y) for y in _integral_points(m, self.p)),
        )
