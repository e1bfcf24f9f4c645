"""epsilon-hermitian forms, the adjoint involution and Witt decompositions.

A form lives on F^n for a layer F and is stored by its Gram matrix G, so
h(x, y) = x^{sigma T} G y is sigma-linear in the first argument. The three cases
follow from (sigma_F, epsilon): orthogonal and symplectic when sigma_F is trivial,
unitary otherwise. Skew-hermitian forms over a quadratic layer (epsilon = -1) are
accepted too; they turn up as induced forms on field blocks.
"""

import itertools
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from functools import cached_property
from typing import assert_never

from sympy import primefactors, symbols
from sympy.solvers.diophantine.diophantine import diop_ternary_quadratic_normal

from btembed import linalg
from btembed.dependencies import deps
from btembed.dvr_lattice import DvrLattice
from btembed.errors import (
    AnisotropicTooLarge,
    DimensionMismatch,
    IsotropySearchFailed,
    NotEpsilonHermitian,
    NotSplitOverQ,
    ParameterOutOfRange,
    RankDeficient,
    UnsupportedDimension,
)
from btembed.field_tower import FieldElement, FieldLayer, Scalarish, local_model

logger = logging.getLogger(__name__)

Vector = list[FieldElement]
Matrix = tuple[tuple[FieldElement, ...], ...]


class FormCase(StrEnum):
    ORTHOGONAL = "orthogonal"
    SYMPLECTIC = "symplectic"
    UNITARY = "unitary"


def to_matrix(rows: Sequence[Sequence[Scalarish]]) -> Matrix:
    return tuple(tuple(FieldElement.coerce(x) for x in row) for row in rows)


def conj_matrix(layer: FieldLayer, a: Sequence[Sequence[FieldElement]]) -> list[list[FieldElement]]:
    return [[layer.conj(x) for x in row] for row in a]


@dataclass(frozen=True)
class EpsilonHermitianForm:
    layer: FieldLayer
    gram: Matrix
    epsilon: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "gram", to_matrix(self.gram))
        if self.epsilon not in (1, -1):
            raise ParameterOutOfRange(f"epsilon must be +1 or -1, got {self.epsilon}")
        n = len(self.gram)
        if any(len(row) != n for row in self.gram):
            raise DimensionMismatch("Gram matrix is not square")
        for row in self.gram:
            for x in row:
                if not self.layer.contains(x):
                    raise ParameterOutOfRange(f"{x!r} is not in {self.layer.name}")
        for i in range(n):
            for j in range(n):
                if self.gram[j][i] != self.layer.conj(self.gram[i][j]) * self.epsilon:
                    raise NotEpsilonHermitian(
                        f"G[{j}][{i}] != {self.epsilon} * conj(G[{i}][{j}])",
                    )
        if n and linalg.rank(self.gram) != n:
            raise RankDeficient("Form is degenerate")

    @property
    def n(self) -> int:
        return len(self.gram)

    @property
    def case(self) -> FormCase:
        if not self.layer.involution_is_trivial:
            return FormCase.UNITARY
        return FormCase.ORTHOGONAL if self.epsilon == 1 else FormCase.SYMPLECTIC

    def gram_matrix(self) -> list[list[FieldElement]]:
        return linalg.copy(self.gram)

    @cached_property
    def _gram_inverse(self) -> list[list[FieldElement]]:
        return linalg.inverse(self.gram)

    def __call__(self, x: Sequence[Scalarish], y: Sequence[Scalarish]) -> FieldElement:
        if len(x) != self.n or len(y) != self.n:
            raise DimensionMismatch(f"Vectors must have length {self.n}")
        gy = linalg.mat_vec(self.gram, [FieldElement.coerce(t) for t in y])
        xs = [self.layer.conj(FieldElement.coerce(t)) for t in x]
        return linalg.dot(xs, gy)

    def adjoint(self, a: Sequence[Sequence[Scalarish]]) -> list[list[FieldElement]]:
        """a^sigma = G^-1 (a^sigma_F)^T G, so h(a x, y) = h(x, a^sigma y)."""
        if len(a) != self.n or any(len(row) != self.n for row in a):
            raise DimensionMismatch(f"Expected a {self.n}x{self.n} matrix")
        a_conj_t = linalg.transpose(conj_matrix(self.layer, to_matrix(a)))
        return linalg.mat_mul(linalg.mat_mul(self._gram_inverse, a_conj_t), self.gram)

    def restricted(self, vectors: Sequence[Sequence[Scalarish]]) -> "EpsilonHermitianForm":
        """The form on span(vectors), in the coordinates given by those vectors."""
        return EpsilonHermitianForm(
            self.layer,
            to_matrix([[self(v, w) for w in vectors] for v in vectors]),
            self.epsilon,
        )

    def scaled(self, u: Scalarish) -> "EpsilonHermitianForm":
        """u*h, which is again epsilon'-hermitian when u^sigma = +-u."""
        u = FieldElement.coerce(u)
        if not u:
            raise ParameterOutOfRange("Cannot scale a form by zero")
        u_bar = self.layer.conj(u)
        if u_bar == u:
            eps = self.epsilon
        elif u_bar == -u:
            eps = -self.epsilon
        else:
            raise NotEpsilonHermitian(f"{u!r} * h is not epsilon-hermitian")
        return EpsilonHermitianForm(self.layer, to_matrix(linalg.mat_scale(self.gram, u)), eps)

    def hermitian_twist(self) -> "EpsilonHermitianForm":
        """sqrt(d)*h for a skew-hermitian form; it has the same isotropic vectors."""
        assert self.case is FormCase.UNITARY and self.epsilon == -1
        return self.scaled(self.layer.sqrt_d)

    def trace_pairing(self) -> list[list[Fraction]]:
        """Q-matrix of Tr_{F/Q}(h(x, y)) on flattened coordinates."""
        basis = self.layer.power_basis
        deg = len(basis)
        size = self.n * deg
        out = [[Fraction(0)] * size for _ in range(size)]
        for i in range(self.n):
            for j in range(self.n):
                g = self.gram[i][j]
                if not g:
                    continue
                for s, ws in enumerate(basis):
                    for t, wt in enumerate(basis):
                        val = self.layer.conj(ws) * g * wt
                        out[i * deg + s][j * deg + t] = self.layer.trace_to_base(val)
        return out


def dual_lattice(lattice: DvrLattice, form: EpsilonHermitianForm) -> DvrLattice:
    """L^sharp = {x : h(x, L) in p_F} for an o_F-lattice on flattened coordinates.

    For an o_F-stable L the set h(x, L) is a fractional ideal, and with p odd an
    ideal lies in p_F exactly when its trace lies in p Z_(p).
    """
    if lattice.ambient_dim != form.n * form.layer.degree:
        raise DimensionMismatch("Lattice and form live in different spaces")
    if not lattice.is_full_rank:
        raise RankDeficient("Dual lattice needs a full-rank lattice")
    return lattice.dual(form.trace_pairing())


@dataclass(frozen=True)
class WittDecomposition:
    """Hyperbolic pairs (e_i, e_-i) plus an orthogonal basis of the anisotropic kernel."""

    form: EpsilonHermitianForm
    pairs: tuple[tuple[tuple[FieldElement, ...], tuple[FieldElement, ...]], ...]
    anisotropic: tuple[tuple[FieldElement, ...], ...]

    @property
    def index(self) -> int:
        return len(self.pairs)

    def basis(self) -> list[Vector]:
        """e_1, e_-1, e_2, e_-2, ..., then the anisotropic vectors."""
        out: list[Vector] = []
        for e, f in self.pairs:
            out.extend((list(e), list(f)))
        out.extend(list(w) for w in self.anisotropic)
        return out

    def change_of_basis(self) -> list[list[FieldElement]]:
        return linalg.from_columns(self.basis())

    def anisotropic_values(self) -> list[FieldElement]:
        return [self.form(w, w) for w in self.anisotropic]

    def is_valid(self) -> bool:
        basis = self.basis()
        if len(basis) != self.form.n or linalg.rank(basis) != self.form.n:
            return False
        gram = self.form.restricted(basis).gram
        r = self.index
        for i, row in enumerate(gram):
            for j, x in enumerate(row):
                if i < 2 * r and j < 2 * r and i // 2 == j // 2 and i != j:
                    want = 1 if i < j else self.form.epsilon
                    if x != want:
                        return False
                elif i != j and x:
                    return False
                elif i == j and i < 2 * r and x:
                    return False
        return kernel_is_locally_anisotropic(self.form, self.anisotropic_values())


def kernel_is_locally_anisotropic(
    form: EpsilonHermitianForm,
    values: Sequence[FieldElement],
) -> bool:
    """Whether the diagonal form <values> has no isotropic vector over the completion."""
    if not values:
        return True
    if any(not v for v in values):
        return False
    model = form.layer.model
    case = form.case
    if case is FormCase.SYMPLECTIC:
        return False
    if case is FormCase.ORTHOGONAL:
        return not model.diagonal_form_is_isotropic([v.a for v in values])
    if case is FormCase.UNITARY:
        rationals = values
        if form.epsilon == -1:
            rationals = [v * form.layer.sqrt_d for v in values]
        if len(rationals) == 1:
            return True
        if len(rationals) > 2:
            return False
        a1, a2 = (v.a for v in rationals)
        return not model.is_norm(-a2 / a1, form.layer.d)
    assert_never(case)


def _rational_sqrt(t: Fraction) -> Fraction | None:
    if t < 0:
        return None
    num, den = math.isqrt(t.numerator), math.isqrt(t.denominator)
    if num * num == t.numerator and den * den == t.denominator:
        return Fraction(num, den)
    return None


def solve_ternary(
    a: Fraction,
    b: Fraction,
    c: Fraction,
) -> tuple[Fraction, Fraction, Fraction] | None:
    """A nontrivial rational zero of a X^2 + b Y^2 + c Z^2, or None."""
    if (a > 0 and b > 0 and c > 0) or (a < 0 and b < 0 and c < 0):
        return None
    scale = math.lcm(a.denominator, b.denominator, c.denominator)
    ia, ib, ic = (int(t * scale) for t in (a, b, c))
    x, y, z = symbols("x y z", integer=True)
    sol = diop_ternary_quadratic_normal(ia * x**2 + ib * y**2 + ic * z**2)
    if sol[0] is None:
        return None
    out = (Fraction(int(sol[0])), Fraction(int(sol[1])), Fraction(int(sol[2])))
    if not any(out):
        return None
    assert a * out[0] ** 2 + b * out[1] ** 2 + c * out[2] ** 2 == 0
    return out


def is_isotropic_over_q(coeffs: Sequence[Fraction]) -> bool:
    """Whether <a_1, ..., a_n> has a nonzero rational zero.

    Hasse-Minkowski: over R it must be indefinite, and over Q_q it must be isotropic
    for q = 2 and every q dividing a coefficient. At other odd q a form of rank >= 3
    with unit coefficients is always isotropic, and rank >= 5 only needs R.
    """
    a = [Fraction(c) for c in coeffs]
    if any(c == 0 for c in a):
        return True
    if len(a) <= 1 or all(c > 0 for c in a) or all(c < 0 for c in a):
        return False
    if len(a) == 2:
        return _rational_sqrt(-a[1] / a[0]) is not None
    if len(a) == 3:
        return solve_ternary(*a) is not None
    if len(a) >= 5:
        return True
    bad = {2}
    for c in a:
        bad.update(primefactors(c.numerator), primefactors(c.denominator))
    return all(local_model(q).diagonal_form_is_isotropic(a) for q in sorted(bad))


def _rationals_by_height() -> Iterator[Fraction]:
    yield Fraction(0)
    for h in itertools.count(1):
        for num in range(-h, h + 1):
            for den in range(1, h + 1):
                if num and max(abs(num), den) == h and math.gcd(num, den) == 1:
                    yield Fraction(num, den)


def rational_isotropic_vector(coeffs: Sequence[Fraction]) -> list[Fraction] | None:
    """A nonzero rational zero of sum a_i x_i^2, or None exactly when there is none.

    From rank 4 up, either the form without x_{n-1} is isotropic, or every zero has
    x_{n-1} != 0 and s = x_n / x_{n-1} makes <a_1, ..., a_{n-2}, a_{n-1} + a_n s^2>
    isotropic. Isotropy is decided before each step, so walking s through all
    rationals by height ends.
    """
    a = [Fraction(c) for c in coeffs]
    n = len(a)
    zero = next((i for i, c in enumerate(a) if c == 0), None)
    if zero is not None:
        return [Fraction(int(i == zero)) for i in range(n)]
    if not is_isotropic_over_q(a):
        return None
    if n == 2:
        s = _rational_sqrt(-a[1] / a[0])
        assert s is not None
        return [s, Fraction(1)]
    if n == 3:
        sol = solve_ternary(*a)
        if sol is None:
            raise IsotropySearchFailed(f"No rational zero of <{', '.join(map(str, a))}>")
        return list(sol)
    dropped = [*a[:-2], a[-1]]
    if is_isotropic_over_q(dropped):
        y = rational_isotropic_vector(dropped)
        assert y is not None
        return [*y[:-1], Fraction(0), y[-1]]
    for s in _rationals_by_height():
        merged = [*a[:-2], a[-2] + a[-1] * s * s]
        if is_isotropic_over_q(merged):
            y = rational_isotropic_vector(merged)
            assert y is not None
            return [*y[:-1], y[-1], s * y[-1]]
    raise AssertionError("unreachable")


def norm_preimage(layer: FieldLayer, t: Fraction) -> FieldElement | None:
    """Some z in Q(sqrt d) with N(z) = t, or None when t is not a rational norm."""
    s = _rational_sqrt(t)
    if s is not None:
        return layer.element(s)
    sol = solve_ternary(Fraction(1), Fraction(-layer.d), -t)
    if sol is None:
        return None
    x, y, z = sol
    assert z
    return layer.element(x / z, y / z)


def _combine(coeffs: Sequence[Scalarish], vectors: Sequence[Vector]) -> Vector:
    out = [FieldElement.coerce(0)] * len(vectors[0])
    for c, v in zip(coeffs, vectors, strict=True):
        if c:
            out = linalg.vec_add(out, linalg.vec_scale(v, FieldElement.coerce(c)))
    return out


def gram_schmidt(
    form: EpsilonHermitianForm,
    vectors: Sequence[Vector],
) -> tuple[list[Vector], list[FieldElement], Vector | None]:
    """Orthogonal basis and its values h(w, w); stops early on an isotropic vector."""
    ws: list[Vector] = []
    values: list[FieldElement] = []
    for v in vectors:
        v = list(v)
        for w, a in zip(ws, values, strict=True):
            c = form(w, v)
            if c:
                v = linalg.vec_sub(v, linalg.vec_scale(w, c / a))
        val = form(v, v)
        if not val:
            return ws, values, v
        ws.append(v)
        values.append(val)
    return ws, values, None


def _find_isotropic(form: EpsilonHermitianForm, vectors: Sequence[Vector]) -> Vector | None:
    if form.case is FormCase.SYMPLECTIC:
        return list(vectors[0])
    ws, values, iso = gram_schmidt(form, vectors)
    if iso is not None:
        return iso
    a = [v.a for v in values]
    assert all(v.is_rational for v in values)
    m = len(ws)
    for i in range(m):
        for j in range(i + 1, m):
            t = -a[j] / a[i]
            if form.case is FormCase.ORTHOGONAL:
                s = _rational_sqrt(t)
                if s is not None:
                    return _combine([s, 1], [ws[i], ws[j]])
            else:
                z = norm_preimage(form.layer, t)
                if z is not None:
                    return _combine([z, 1], [ws[i], ws[j]])
    if form.case is FormCase.ORTHOGONAL:
        for i in range(m):
            for j in range(i + 1, m):
                for k in range(j + 1, m):
                    sol = solve_ternary(a[i], a[j], a[k])
                    if sol is not None:
                        return _combine(list(sol), [ws[i], ws[j], ws[k]])
        if m < 4:
            return None
        found = rational_isotropic_vector(a)
        return None if found is None else _combine(found, ws)
    if m < 3:
        return None
    # sum a_i N(x_i + y_i sqrt d) is the rational form <a_1, -d a_1, a_2, -d a_2, ...>
    d = form.layer.d
    found = rational_isotropic_vector([c for x in a for c in (x, -d * x)])
    if found is None:
        return None
    coeffs = [form.layer.element(found[2 * i], found[2 * i + 1]) for i in range(m)]
    return _combine(coeffs, ws)


def _hyperbolic_partner(
    form: EpsilonHermitianForm,
    x: Vector,
    vectors: Sequence[Vector],
) -> tuple[Vector, Vector]:
    y = next((list(v) for v in vectors if form(x, v)), None)
    assert y is not None, "form restricted to the subspace is degenerate"
    y = linalg.vec_scale(y, 1 / form(x, y))
    c = form(y, y) * (-form.epsilon) / 2
    f = linalg.vec_add(y, linalg.vec_scale(x, c))
    return x, f


def orthogonal_complement(
    form: EpsilonHermitianForm,
    vectors: Sequence[Vector],
    against: Sequence[Vector],
) -> list[Vector]:
    """Basis of {w in span(vectors) : h(a, w) = 0 for a in against}."""
    if not vectors:
        return []
    one = form.layer.element(1)
    system = [[form(a, v) for v in vectors] for a in against]
    kernel = linalg.nullspace(system, len(vectors), one)
    return [_combine(c, list(vectors)) for c in kernel]


def witt_decompose(form: EpsilonHermitianForm) -> WittDecomposition:
    """Split off hyperbolic planes until the rest is anisotropic over the completion."""
    limit = deps.settings().max_witt_dimension
    if form.n > limit:
        raise UnsupportedDimension(f"Witt decomposition is capped at n <= {limit}, got {form.n}")
    search_form = form
    if form.case is FormCase.UNITARY and form.epsilon == -1:
        search_form = form.hermitian_twist()
    remaining: list[Vector] = linalg.identity(form.n, form.layer.element(1))
    pairs: list[tuple[Vector, Vector]] = []
    while remaining:
        x = _find_isotropic(search_form, remaining)
        if x is None:
            break
        e, f = _hyperbolic_partner(form, x, remaining)
        pairs.append((e, f))
        remaining = orthogonal_complement(form, remaining, [e, f])

    kernel, values, iso = gram_schmidt(search_form, remaining)
    assert iso is None
    if not kernel_is_locally_anisotropic(search_form, values):
        raise NotSplitOverQ(
            f"Kernel {[str(v) for v in values]} is isotropic over Q_{form.layer.p} "
            "but anisotropic over Q",
        )
    if len(kernel) > 2:
        raise AnisotropicTooLarge(f"Anisotropic kernel has dimension {len(kernel)}")

    out = WittDecomposition(
        form,
        tuple((tuple(e), tuple(f)) for e, f in pairs),
        tuple(tuple(w) for w in kernel),
    )
    assert out.is_valid()
    logger.debug(f"Witt decomposition of a {form.case} form: index {out.index}")
    return out
