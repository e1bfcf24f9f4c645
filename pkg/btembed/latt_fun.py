"""Lattice functions, additive norms, barycenters and apartment points.

A lattice function is stored split: a K-basis b_1..b_m of K^m (K a layer) with
rational offsets, and Lambda(r) = sum_k {c b_k : v(c) >= r + lambda_k}. Writing
c = x + y sqrt(d) gives an equivalent splitting over Q with vectors omega*b_k,
omega in {1, sqrt d}, and offsets lambda_k - v(omega). That Q-splitting is what
gets evaluated, so a value Lambda(r) is a plain `DvrLattice` and two functions
are equal exactly when their values at the jumps in [0, 1) agree.
"""

import logging
import math
import random
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from btembed import linalg
from btembed.dvr_lattice import DvrLattice
from btembed.errors import (
    AnisotropicTooLarge,
    DimensionMismatch,
    ParameterOutOfRange,
    RankDeficient,
)
from btembed.field_tower import FieldElement, FieldLayer, Scalarish, Valuation
from btembed.herm_forms import EpsilonHermitianForm, WittDecomposition, conj_matrix, to_matrix
from btembed.util import frac_part

logger = logging.getLogger(__name__)

Vector = tuple[FieldElement, ...]


QSplitting = list[tuple[list[Fraction], Fraction]]


def _q_split(
    layer: FieldLayer,
    basis: Sequence[Vector],
    offsets: Sequence[Fraction],
) -> QSplitting:
    out = []
    for b, lam in zip(basis, offsets, strict=True):
        for omega in layer.power_basis:
            v = layer.valuation(omega)
            assert v != math.inf
            out.append((layer.flatten(linalg.vec_scale(list(b), omega)), lam - Fraction(v)))
    return out


def _scaled_generators(
    split: QSplitting,
    p: int,
    r: Fraction,
    *,
    strict: bool,
) -> list[list[Fraction]]:
    """p^ceil(r + mu) w, or p^(floor(r + mu) + 1) w for the right limit."""
    out = []
    for w, mu in split:
        k = math.floor(r + mu) + 1 if strict else math.ceil(r + mu)
        out.append([x * Fraction(p) ** k for x in w])
    return out


@dataclass(frozen=True, eq=False)
class LatticeFunction:
    layer: FieldLayer
    basis: tuple[Vector, ...]
    offsets: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        basis = tuple(tuple(FieldElement.coerce(x) for x in b) for b in self.basis)
        offsets = tuple(Fraction(x) for x in self.offsets)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "offsets", offsets)
        m = len(basis)
        if len(offsets) != m:
            raise DimensionMismatch(f"{m} basis vectors but {len(offsets)} offsets")
        if any(len(b) != m for b in basis):
            raise DimensionMismatch("Basis vectors must have length equal to their number")
        for b in basis:
            for x in b:
                if not self.layer.contains(x):
                    raise ParameterOutOfRange(f"{x!r} is not in {self.layer.name}")
        if m and linalg.rank([list(b) for b in basis]) != m:
            raise RankDeficient("Splitting vectors are not a basis")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def q_dim(self) -> int:
        return self.dim * self.layer.degree

    @property
    def period(self) -> Fraction:
        """v(pi) of the layer: Lambda(r + period) = pi Lambda(r)."""
        return self.layer.uniformizer_valuation

    @cached_property
    def q_splitting(self) -> QSplitting:
        return _q_split(self.layer, self.basis, self.offsets)

    def eval(self, r: Fraction | int) -> DvrLattice:
        p = self.layer.p
        gens = _scaled_generators(self.q_splitting, p, Fraction(r), strict=False)
        return DvrLattice.from_generators(p, self.q_dim, gens)

    def eval_right(self, r: Fraction | int) -> DvrLattice:
        """Lambda(r+), the union of Lambda(s) over s > r."""
        p = self.layer.p
        gens = _scaled_generators(self.q_splitting, p, Fraction(r), strict=True)
        return DvrLattice.from_generators(p, self.q_dim, gens)

    @cached_property
    def jumps(self) -> tuple[Fraction, ...]:
        """The r in [0, 1) with Lambda(r) != Lambda(r+)."""
        return tuple(sorted({frac_part(-mu) for _, mu in self.q_splitting}))

    @cached_property
    def _key(self) -> tuple[object, ...]:
        return (
            self.layer.p,
            self.q_dim,
            tuple((j, self.eval(j)) for j in self.jumps),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeFunction):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        offs = ", ".join(str(x) for x in self.offsets)
        return f"LatticeFunction({self.layer.name}, dim={self.dim}, offsets=({offs}))"

    def shifted(self, s: Fraction | int) -> "LatticeFunction":
        """Lambda + s, i.e. r -> Lambda(r + s)."""
        s = Fraction(s)
        return LatticeFunction(self.layer, self.basis, tuple(x + s for x in self.offsets))

    def transform(self, g: Sequence[Sequence[Scalarish]]) -> "LatticeFunction":
        """g . Lambda, r -> g Lambda(r), for an invertible matrix g over the layer."""
        gm = to_matrix(g)
        return LatticeFunction(
            self.layer,
            tuple(tuple(linalg.mat_vec(gm, list(b))) for b in self.basis),
            self.offsets,
        )

    def canonical(self) -> "LatticeFunction":
        """Same function with basis vectors rescaled so every offset lies in [0, period)."""
        e = self.layer.ramification_index
        pi = self.layer.uniformizer
        basis = []
        offsets = []
        for b, lam in zip(self.basis, self.offsets, strict=True):
            m = math.floor(lam * e)
            scale = FieldElement.coerce(1)
            for _ in range(abs(m)):
                scale = scale * pi if m > 0 else scale / pi
            basis.append(tuple(linalg.vec_scale(list(b), scale)))
            offsets.append(lam - Fraction(m, e))
        return LatticeFunction(self.layer, tuple(basis), tuple(offsets))

    def coordinates(self, x: Sequence[Scalarish]) -> list[FieldElement]:
        return linalg.solve(
            linalg.from_columns([list(b) for b in self.basis]),
            [FieldElement.coerce(t) for t in x],
        )

    def alpha(self, x: Sequence[Scalarish]) -> Valuation:
        """sup{r : x in Lambda(r)}."""
        coords = self.coordinates(x)
        return min(
            (self.layer.valuation(c) - lam for c, lam in zip(coords, self.offsets, strict=True)),
            default=math.inf,
        )

    def is_split_by(self, basis: Sequence[Sequence[Scalarish]]) -> bool:
        if len(basis) != self.dim:
            return False
        vectors = tuple(tuple(FieldElement.coerce(x) for x in b) for b in basis)
        if linalg.rank([list(b) for b in vectors]) != self.dim:
            return False
        offsets = []
        for b in vectors:
            a = self.alpha(b)
            assert a != math.inf
            offsets.append(-Fraction(a))
        return LatticeFunction(self.layer, vectors, tuple(offsets)) == self

    def translation_to(self, other: "LatticeFunction") -> Fraction | None:
        """The s with self + s == other, if the two are translates."""
        if (self.layer, self.dim) != (other.layer, other.dim):
            return None
        b = other.basis[0]
        s = Fraction(self.alpha(b)) - Fraction(other.alpha(b))
        return s if self.shifted(s) == other else None

    def dual(self, form: EpsilonHermitianForm) -> "LatticeFunction":
        """Lambda^sharp(r) = [Lambda((-r)+)]^sharp, via the h-dual basis.

        With B' = sigma(((G B)^-1)^T) one has h(b'_k, b_l) = delta_kl, and the dual
        is split by B' with offsets -lambda_k.
        """
        if form.layer != self.layer or form.n != self.dim:
            raise DimensionMismatch("Form and lattice function live on different spaces")
        b = linalg.from_columns([list(v) for v in self.basis])
        gb = linalg.mat_mul(form.gram_matrix(), b)
        dual_cols = conj_matrix(self.layer, linalg.transpose(linalg.inverse(gb)))
        return LatticeFunction(
            self.layer,
            tuple(tuple(c) for c in linalg.columns(dual_cols)),
            tuple(-x for x in self.offsets),
        )

    def is_self_dual(self, form: EpsilonHermitianForm) -> bool:
        return self.dual(form) == self


@dataclass(frozen=True)
class AdditiveNorm:
    """alpha(x) = sup{r : x in Lambda(r)}, carried by a splitting."""

    function: LatticeFunction

    def __call__(self, x: Sequence[Scalarish]) -> Valuation:
        return self.function.alpha(x)

    def dual_norm_value(self, x: Sequence[Scalarish], form: EpsilonHermitianForm) -> Valuation:
        """min_k [v(h(x, b_k)) - alpha(b_k)] over a splitting basis."""
        f = self.function
        return min(
            f.layer.valuation(form(x, b)) + lam for b, lam in zip(f.basis, f.offsets, strict=True)
        )


def latt_to_norm(function: LatticeFunction) -> AdditiveNorm:
    return AdditiveNorm(function)


def norm_to_latt(norm: AdditiveNorm) -> LatticeFunction:
    """Lambda(r) = {x : alpha(x) >= r}, rebuilt from the norm values on a splitting."""
    f = norm.function
    offsets = []
    for b in f.basis:
        a = norm(b)
        assert a != math.inf
        offsets.append(-Fraction(a))
    return LatticeFunction(f.layer, f.basis, tuple(offsets))


def _best_vector(
    lam_fn: LatticeFunction,
    mu_fn: LatticeFunction,
    basis: Sequence[Vector],
    offsets: Sequence[Fraction],
) -> Vector:
    """A vector of span(basis) maximising beta(x) - alpha(x).

    `basis`/`offsets` split alpha on the current subspace W. For each alpha-value a
    modulo 1, the best x with alpha(x) = a lies in Lambda_W(a) minus Lambda_W(a+),
    and the best beta-value is found by walking up the jumps of M.
    """
    if len(basis) == 1:
        return basis[0]
    p = lam_fn.layer.p
    n = lam_fn.q_dim
    split = _q_split(lam_fn.layer, basis, offsets)
    m_split = mu_fn.q_splitting
    best: tuple[Fraction, Vector] | None = None
    for a in sorted({frac_part(-mu) for _, mu in split}):
        top = DvrLattice.from_generators(p, n, _scaled_generators(split, p, a, strict=False))
        below = DvrLattice.from_generators(p, n, _scaled_generators(split, p, a, strict=True))
        s = min(Fraction(mu_fn.alpha(lam_fn.layer.unflatten(g))) for g in top.basis)
        last: tuple[Fraction, DvrLattice] | None = None
        while True:
            meet = top.intersection(mu_fn.eval(s))
            if below.contains_lattice(meet):
                break
            last = (s, meet)
            s = min(-nu + math.floor(s + nu) + 1 for _, nu in m_split)
        assert last is not None
        score = last[0] - a
        if best is None or score > best[0]:
            x = next(g for g in last[1].basis if not below.contains(g))
            best = (score, tuple(lam_fn.layer.unflatten(x)))
    assert best is not None
    return best[1]


def common_splitting_basis(
    lam_fn: LatticeFunction,
    mu_fn: LatticeFunction,
) -> tuple[tuple[Vector, ...], tuple[Fraction, ...], tuple[Fraction, ...]]:
    """A basis splitting both functions, with the offsets of each in it.

    Repeatedly take x maximising beta - alpha on the current subspace W, exchange it
    into the alpha-splitting basis of W, and recurse on the span of the other
    vectors. That span is an alpha-orthogonal complement of x, hence also a
    beta-orthogonal one because x maximises beta - alpha.
    """
    if (lam_fn.layer, lam_fn.dim) != (mu_fn.layer, mu_fn.dim):
        raise DimensionMismatch("Lattice functions live on different spaces")
    layer = lam_fn.layer
    basis = list(lam_fn.basis)
    offsets = list(lam_fn.offsets)
    chosen: list[Vector] = []
    while basis:
        x = _best_vector(lam_fn, mu_fn, basis, offsets)
        coords = linalg.solve(linalg.from_columns([list(b) for b in basis]), list(x))
        values = [layer.valuation(c) - lam for c, lam in zip(coords, offsets, strict=True)]
        k0 = values.index(min(values))
        chosen.append(x)
        del basis[k0]
        del offsets[k0]
    lam_offsets = tuple(-Fraction(lam_fn.alpha(x)) for x in chosen)
    mu_offsets = tuple(-Fraction(mu_fn.alpha(x)) for x in chosen)
    assert LatticeFunction(layer, tuple(chosen), lam_offsets) == lam_fn
    assert LatticeFunction(layer, tuple(chosen), mu_offsets) == mu_fn
    return tuple(chosen), lam_offsets, mu_offsets


def barycenter(
    lam_fn: LatticeFunction,
    mu_fn: LatticeFunction,
    t: Fraction | int,
) -> LatticeFunction:
    """t Lambda + (1 - t) M on a common splitting basis."""
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ParameterOutOfRange(f"Barycentric weight {t} is outside [0, 1]")
    if t == 1:
        return lam_fn
    if t == 0:
        return mu_fn
    basis, lam, mu = common_splitting_basis(lam_fn, mu_fn)
    return LatticeFunction(
        lam_fn.layer,
        basis,
        tuple(t * a + (1 - t) * b for a, b in zip(lam, mu, strict=True)),
    )


def direct_sum(
    layer: FieldLayer,
    parts: Sequence[tuple[Sequence[Sequence[Scalarish]], Sequence[Fraction]]],
) -> LatticeFunction:
    """Concatenate splittings (vectors already in the ambient coordinates)."""
    basis: list[Vector] = []
    offsets: list[Fraction] = []
    for vectors, offs in parts:
        basis.extend(tuple(FieldElement.coerce(x) for x in v) for v in vectors)
        offsets.extend(Fraction(x) for x in offs)
    return LatticeFunction(layer, tuple(basis), tuple(offsets))


@dataclass(frozen=True)
class ApartmentPoint:
    """Coordinates a_i(p) on a Witt decomposition; a_{-i}(p) = -a_i(p)."""

    coords: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(Fraction(x) for x in self.coords))


def anisotropic_offsets(witt: WittDecomposition) -> list[Fraction]:
    """-omega(w) = -v(h(w, w))/2 on the orthogonal anisotropic basis."""
    out = []
    for val in witt.anisotropic_values():
        v = witt.form.layer.valuation(val)
        assert v != math.inf
        out.append(-Fraction(v) / 2)
    return out


def apartment_point_to_function(point: ApartmentPoint, witt: WittDecomposition) -> LatticeFunction:
    if len(point.coords) != witt.index:
        raise DimensionMismatch(
            f"Point has {len(point.coords)} coordinates, apartment has rank {witt.index}",
        )
    if len(witt.anisotropic) > 2:
        raise AnisotropicTooLarge(f"Anisotropic kernel of dimension {len(witt.anisotropic)}")
    offsets: list[Fraction] = []
    for a in point.coords:
        offsets.extend((a, -a))
    offsets.extend(anisotropic_offsets(witt))
    return LatticeFunction(
        witt.form.layer,
        tuple(tuple(b) for b in witt.basis()),
        tuple(offsets),
    )


def random_lattice_function(
    layer: FieldLayer,
    dim: int,
    rng: random.Random,
    max_den: int = 12,
) -> LatticeFunction:
    """A random split function: random invertible basis, offsets in (1/max_den)Z."""
    while True:
        basis = [[layer.random_element(rng, 3, 4) for _ in range(dim)] for _ in range(dim)]
        if linalg.rank(basis) == dim:
            break
    offsets = tuple(
        Fraction(rng.randint(-max_den, max_den), rng.randint(1, max_den)) for _ in range(dim)
    )
    return LatticeFunction(layer, tuple(tuple(b) for b in basis), offsets)


def random_apartment_point(
    witt: WittDecomposition,
    rng: random.Random,
    max_den: int = 12,
) -> ApartmentPoint:
    return ApartmentPoint(
        tuple(Fraction(rng.randint(-max_den, max_den), max_den) for _ in range(witt.index)),
    )
