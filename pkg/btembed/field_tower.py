"""Exact models of Q with a p-adic valuation and its quadratic layers.

The ground field is the rationals with v normalised so v(p) = 1. Completion is
never needed: every construction only involves finitely generated modules over
the localisation Z_(p). A layer Q(sqrt d) stores elements on the power basis
{1, sqrt d} with rational coordinates, so all arithmetic is exact.

Supported towers are F_o = Q, F = Q or Q(sqrt d), and E_i quadratic over Q or
equal to F.
"""

import logging
import math
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from sympy import isprime, multiplicity
from sympy.ntheory import legendre_symbol
from sympy.ntheory.factor_ import core

from btembed.errors import (
    DegenerateExtension,
    ParameterOutOfRange,
    UnsupportedResidueChar,
    UnsupportedTowerDepth,
)

logger = logging.getLogger(__name__)

# Valuations are rationals, with math.inf standing in for v(0).
Valuation = Fraction | float

Scalarish = Union["FieldElement", Fraction, int]


@dataclass(frozen=True, eq=False)
class FieldElement:
    """a + c*sqrt(d) with rational a, c and squarefree d (d == 1 for rationals)."""

    a: Fraction
    c: Fraction = Fraction(0)
    d: int = 1

    def __post_init__(self) -> None:
        a = Fraction(self.a)
        c = Fraction(self.c)
        d = self.d
        if d == 1:
            a, c = a + c, Fraction(0)
        if c == 0:
            d = 1
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @staticmethod
    def coerce(x: Scalarish) -> "FieldElement":
        if isinstance(x, FieldElement):
            return x
        return FieldElement(Fraction(x))

    def _common_d(self, other: "FieldElement") -> int:
        if self.d == 1:
            return other.d
        if other.d in (1, self.d):
            return self.d
        raise ValueError(f"Elements of Q(sqrt {self.d}) and Q(sqrt {other.d}) do not mix")

    def __add__(self, other: Scalarish) -> "FieldElement":
        o = FieldElement.coerce(other)
        return FieldElement(self.a + o.a, self.c + o.c, self._common_d(o))

    __radd__ = __add__

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.a, -self.c, self.d)

    def __sub__(self, other: Scalarish) -> "FieldElement":
        return self + (-FieldElement.coerce(other))

    def __rsub__(self, other: Scalarish) -> "FieldElement":
        return FieldElement.coerce(other) - self

    def __mul__(self, other: Scalarish) -> "FieldElement":
        o = FieldElement.coerce(other)
        d = self._common_d(o)
        return FieldElement(
            self.a * o.a + self.c * o.c * d,
            self.a * o.c + self.c * o.a,
            d,
        )

    __rmul__ = __mul__

    def conj(self) -> "FieldElement":
        return FieldElement(self.a, -self.c, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.c * self.c

    def trace(self) -> Fraction:
        """Trace down to Q from Q(sqrt d); just the element itself when d == 1."""
        return 2 * self.a if self.d != 1 else self.a

    def inverse(self) -> "FieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("FieldElement division by zero")
        return FieldElement(self.a / n, -self.c / n, self.d)

    def __truediv__(self, other: Scalarish) -> "FieldElement":
        return self * FieldElement.coerce(other).inverse()

    def __rtruediv__(self, other: Scalarish) -> "FieldElement":
        return FieldElement.coerce(other) * self.inverse()

    def __bool__(self) -> bool:
        return self.a != 0 or self.c != 0

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int | Fraction):
            other = FieldElement(Fraction(other))
        if not isinstance(other, FieldElement):
            return NotImplemented
        return (self.a, self.c, self.d) == (other.a, other.c, other.d)

    def __hash__(self) -> int:
        if self.c == 0:
            return hash(self.a)
        return hash((self.a, self.c, self.d))

    @property
    def is_rational(self) -> bool:
        return self.c == 0

    def __repr__(self) -> str:
        if self.c == 0:
            return f"FieldElement({self.a})"
        return f"FieldElement({self.a} + {self.c}*sqrt({self.d}))"


def fe(a: Fraction | int | str, c: Fraction | int | str = 0, d: int = 1) -> FieldElement:
    """Shorthand constructor, accepting "a/b" strings."""
    return FieldElement(Fraction(a), Fraction(c), d)


@dataclass(frozen=True)
class PrimeLocalModel:
    """Q with the p-adic valuation, p an odd prime."""

    p: int

    def __post_init__(self) -> None:
        if self.p == 2:
            raise UnsupportedResidueChar("Residual characteristic 2 is not supported")
        if not isprime(self.p):
            raise ParameterOutOfRange(f"p={self.p} is not prime")

    def valuation(self, x: Fraction | int) -> Valuation:
        x = Fraction(x)
        if x == 0:
            return math.inf
        return Fraction(
            multiplicity(self.p, abs(x.numerator)) - multiplicity(self.p, x.denominator),
        )

    def unit_part(self, x: Fraction) -> Fraction:
        v = self.valuation(x)
        assert v != math.inf
        return x / Fraction(self.p) ** int(v)

    def legendre(self, u: Fraction) -> int:
        """Legendre symbol of a p-adic unit."""
        assert self.valuation(u) == 0, u
        return int(legendre_symbol((u.numerator * u.denominator) % self.p, self.p))

    def is_square(self, x: Fraction) -> bool:
        """Whether x is a square in Q_p (Hensel, p odd)."""
        if x == 0:
            return True
        v = self.valuation(x)
        if int(v) % 2:
            return False
        return self.legendre(self.unit_part(x)) == 1

    def hilbert_symbol(self, a: Fraction, b: Fraction) -> int:
        """(a, b)_p for nonzero rationals, p odd."""
        alpha = int(self.valuation(a))
        beta = int(self.valuation(b))
        u = self.unit_part(a)
        w = self.unit_part(b)
        sign = -1 if (alpha * beta * ((self.p - 1) // 2)) % 2 else 1
        return sign * self.legendre(u) ** (beta % 2) * self.legendre(w) ** (alpha % 2)

    def is_norm(self, t: Fraction, d: int) -> bool:
        """Whether t is a norm from Q_p(sqrt d), d not a square in Q_p."""
        return self.hilbert_symbol(t, Fraction(d)) == 1

    def diagonal_form_is_isotropic(self, coeffs: Sequence[Fraction]) -> bool:
        """Local isotropy of <a_1, ..., a_n> over Q_p via Hilbert symbols."""
        return diagonal_form_is_isotropic(self, coeffs)


@dataclass(frozen=True)
class DyadicModel:
    """Q with the 2-adic valuation.

    Only square classes and Hilbert symbols are offered; the library never works
    over residue characteristic 2, but deciding isotropy over Q needs the place 2.
    """

    p: int = 2

    def valuation(self, x: Fraction) -> int:
        assert x != 0
        return multiplicity(2, abs(x.numerator)) - multiplicity(2, x.denominator)

    def _odd_part(self, x: Fraction) -> int:
        """An odd integer in the square class mod 8 of the unit part of x."""
        u = x / Fraction(2) ** self.valuation(x)
        return u.numerator * u.denominator

    def is_square(self, x: Fraction) -> bool:
        if x == 0:
            return True
        return self.valuation(x) % 2 == 0 and self._odd_part(x) % 8 == 1

    def hilbert_symbol(self, a: Fraction, b: Fraction) -> int:
        """(a, b)_2 = (-1)^(eps(u) eps(w) + alpha omega(w) + beta omega(u))."""
        alpha, beta = self.valuation(a), self.valuation(b)
        u, w = self._odd_part(a), self._odd_part(b)

        def eps(t: int) -> int:
            return ((t - 1) // 2) % 2

        def omega(t: int) -> int:
            return ((t * t - 1) // 8) % 2

        e = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u)
        return -1 if e % 2 else 1

    def diagonal_form_is_isotropic(self, coeffs: Sequence[Fraction]) -> bool:
        return diagonal_form_is_isotropic(self, coeffs)


def local_model(q: int) -> "PrimeLocalModel | DyadicModel":
    return DyadicModel() if q == 2 else PrimeLocalModel(q)


def diagonal_form_is_isotropic(
    model: "PrimeLocalModel | DyadicModel",
    coeffs: Sequence[Fraction],
) -> bool:
    """Isotropy of <a_1, ..., a_n> over Q_q, from the discriminant and Hasse invariant."""
    coeffs = [Fraction(a) for a in coeffs]
    n = len(coeffs)
    if any(a == 0 for a in coeffs):
        return n > 0
    if n <= 1:
        return False
    if n >= 5:
        return True
    disc = math.prod(coeffs, start=Fraction(1))
    if n == 2:
        return model.is_square(-disc)
    eps = 1
    for i in range(n):
        for j in range(i + 1, n):
            eps *= model.hilbert_symbol(coeffs[i], coeffs[j])
    if n == 3:
        return model.hilbert_symbol(Fraction(-1), -disc) == eps
    # n == 4
    if not model.is_square(disc):
        return True
    return eps == model.hilbert_symbol(Fraction(-1), Fraction(-1))


@dataclass(frozen=True)
class FieldLayer:
    """Q (d == 1) or Q(sqrt d) with the unique extension of the p-adic valuation.

    The involution of a quadratic layer is conjugation sqrt d -> -sqrt d; on Q it is
    the identity.
    """

    model: PrimeLocalModel
    d: int = 1
    name: str = field(default="F_o", compare=False)

    @property
    def p(self) -> int:
        return self.model.p

    @property
    def degree(self) -> int:
        return 1 if self.d == 1 else 2

    @property
    def is_base(self) -> bool:
        return self.d == 1

    @property
    def ramification_index(self) -> int:
        if self.d != 1 and self.d % self.p == 0:
            return 2
        return 1

    @property
    def is_ramified(self) -> bool:
        return self.ramification_index == 2

    @property
    def residue_field_size(self) -> int:
        f = self.degree // self.ramification_index
        return int(self.p**f)

    @property
    def uniformizer(self) -> FieldElement:
        if self.is_ramified:
            return FieldElement(Fraction(0), Fraction(1), self.d)
        return FieldElement(Fraction(self.p))

    @property
    def uniformizer_valuation(self) -> Fraction:
        return Fraction(1, self.ramification_index)

    @property
    def sqrt_d(self) -> FieldElement:
        assert self.d != 1
        return FieldElement(Fraction(0), Fraction(1), self.d)

    @property
    def power_basis(self) -> tuple[FieldElement, ...]:
        if self.d == 1:
            return (FieldElement(Fraction(1)),)
        return (FieldElement(Fraction(1)), self.sqrt_d)

    @property
    def involution_is_trivial(self) -> bool:
        return self.d == 1

    def element(self, a: Fraction | int, c: Fraction | int = 0) -> FieldElement:
        return FieldElement(Fraction(a), Fraction(c), self.d)

    def contains(self, x: FieldElement) -> bool:
        return x.d in (1, self.d)

    def valuation(self, x: Scalarish) -> Valuation:
        x = FieldElement.coerce(x)
        if not self.contains(x):
            raise ValueError(f"{x!r} is not in {self.name} = Q(sqrt {self.d})")
        if x.c == 0:
            return self.model.valuation(x.a)
        if self.is_ramified:
            return min(self.model.valuation(x.a), self.model.valuation(x.c) + Fraction(1, 2))
        return min(self.model.valuation(x.a), self.model.valuation(x.c))

    def conj(self, x: FieldElement) -> FieldElement:
        if self.involution_is_trivial:
            return x
        return x.conj()

    def trace_to_base(self, x: FieldElement) -> Fraction:
        if self.d == 1:
            return x.a
        return 2 * x.a

    def flatten(self, vector: Iterable[Scalarish]) -> list[Fraction]:
        """Coordinates over Q, interleaving (a, c) per entry for a quadratic layer."""
        out: list[Fraction] = []
        for x in vector:
            x = FieldElement.coerce(x)
            if self.d == 1:
                assert x.c == 0, x
                out.append(x.a)
            else:
                assert self.contains(x), x
                out.extend((x.a, x.c))
        return out

    def unflatten(self, coords: Sequence[Fraction]) -> list[FieldElement]:
        if self.d == 1:
            return [FieldElement(Fraction(x)) for x in coords]
        assert len(coords) % 2 == 0
        return [
            FieldElement(Fraction(coords[i]), Fraction(coords[i + 1]), self.d)
            for i in range(0, len(coords), 2)
        ]

    def mult_matrix(self, x: Scalarish) -> list[list[Fraction]]:
        """Q-matrix of multiplication by x on the flattened coordinates."""
        x = FieldElement.coerce(x)
        if self.d == 1:
            return [[x.a]]
        return [[x.a, x.c * self.d], [x.c, x.a]]

    def random_element(
        self,
        rng: random.Random,
        max_den: int = 6,
        max_num: int = 9,
    ) -> FieldElement:
        def r() -> Fraction:
            return Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))

        if self.d == 1:
            return FieldElement(r())
        return FieldElement(r(), r(), self.d)


def base_layer(p: int) -> FieldLayer:
    return FieldLayer(PrimeLocalModel(p), 1, "F_o")


def squarefree_part(d: int) -> int:
    sign = -1 if d < 0 else 1
    return sign * int(core(abs(d), 2))


def make_quadratic_extension(base: FieldLayer, d: int, name: str = "F") -> FieldLayer:
    """The layer base(sqrt d), checking it is a genuine field over Q_p."""
    if base.p == 2:
        raise UnsupportedResidueChar("Residual characteristic 2 is not supported")
    if not base.is_base:
        raise UnsupportedTowerDepth(
            f"Only quadratic layers over Q are modelled, not over {base.name}",
        )
    if d == 0:
        raise DegenerateExtension("x^2 - 0 is not irreducible")
    if d > 0 and math.isqrt(d) ** 2 == d:
        raise DegenerateExtension(f"{d} is a square, x^2 - {d} is reducible")
    d0 = squarefree_part(d)
    if d0 == 1:
        raise DegenerateExtension(f"{d} is a square, x^2 - {d} is reducible")
    if d0 % base.p != 0 and base.model.legendre(Fraction(d0)) == 1:
        raise DegenerateExtension(f"{d} is a square in Q_{base.p}, the extension splits")
    layer = FieldLayer(base.model, d0, name)
    logger.debug(
        f"Built {name} = Q(sqrt {d0}) over Q_{base.p}: e={layer.ramification_index} "
        f"residue field size {layer.residue_field_size}",
    )
    return layer


@dataclass(frozen=True)
class SigmaLinearForm:
    """An F-linear map lambda: E -> F commuting with the involutions.

    For E quadratic over F = Q it is scale * Tr_{E/F}(x) / 2, i.e. scale times the
    rational part. For E = F it is multiplication by scale. In every supported tower
    the fixed field E^o is Q.
    """

    source: FieldLayer
    target: FieldLayer
    scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if self.source != self.target and not self.target.is_base:
            raise UnsupportedTowerDepth("E over a quadratic F must equal F")
        if self.scale == 0:
            raise ParameterOutOfRange("lambda must be nonzero")

    @property
    def is_identity_type(self) -> bool:
        return self.source == self.target

    def __call__(self, x: Scalarish) -> FieldElement:
        x = FieldElement.coerce(x)
        if self.is_identity_type:
            return x * self.scale
        return FieldElement(x.a * self.scale)

    @property
    def fixed_field(self) -> FieldLayer:
        return base_layer(self.source.p)

    def lambda_o(self, y: Fraction) -> Fraction:
        """The induced F_o-form on E^o, from lambda_o o Tr_{E/E^o} = Tr_{F/F_o} o lambda."""
        rel = self.source.degree
        val = self(FieldElement(Fraction(y) / rel))
        return self.target.trace_to_base(val)

    @property
    def kappa(self) -> Fraction:
        return self.lambda_o(Fraction(1))

    def normalization_exponent(self) -> int:
        """k with {e in E^o : lambda_o(e o_{E^o}) in p_{F_o}} = p^k Z_(p)."""
        v = self.source.model.valuation(self.kappa)
        assert v != math.inf
        return 1 - int(v)

    def is_normalized(self) -> bool:
        return self.normalization_exponent() == 1

    def is_equivariant_at(self, x: FieldElement) -> bool:
        return self(self.source.conj(x)) == self.target.conj(self(x))

    def twisted(self, u: Fraction) -> "SigmaLinearForm":
        """lambda composed with multiplication by u in E^o."""
        return SigmaLinearForm(self.source, self.target, self.scale * Fraction(u))


def build_sigma_equivariant_form(source: FieldLayer, target: FieldLayer) -> SigmaLinearForm:
    """Trace-built lambda for E_i over F, rescaled so the normalisation set is p_{E^o}."""
    raw = SigmaLinearForm(source, target)
    v = source.model.valuation(raw.kappa)
    assert v != math.inf
    t = Fraction(source.p) ** (-int(v))
    out = raw.twisted(t)
    assert out.is_normalized()
    logger.debug(f"lambda for {source.name} over {target.name}: scale {out.scale}")
    return out


def compare_linear_forms(first: SigmaLinearForm, second: SigmaLinearForm) -> Fraction:
    """The u in E^o with second = first o (u *). Admissible pairs give a unit."""
    if (first.source, first.target) != (second.source, second.target):
        raise ParameterOutOfRange("Forms live on different fields")
    return second.scale / first.scale
