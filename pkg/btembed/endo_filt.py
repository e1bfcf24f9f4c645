"""Square lattice functions End(Lambda) and the Lie algebra filtrations built from them.

Endomorphisms of K^m are stored by their entries, row-major, so End_K(K^m) is
K^(m*m) and End(Lambda) is again a `LatticeFunction`: in a splitting basis B of
Lambda it is split by vec(B E_kl B^-1) with offsets lambda_k - lambda_l.

Filtrations of subspaces (the Lie algebra g = {a : a + a^sigma = 0}, the centralizer
algebras h~ and h) are handled as `FiltrationProfile`s: the Q-lattice at each jump
in one period, left-continuous in between, with P(r + 1) = p P(r).
"""

import bisect
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import assert_never

from more_itertools import pairwise

from btembed import linalg
from btembed.dvr_lattice import DvrLattice
from btembed.errors import DimensionMismatch, NotShiftRelated, NotSigmaFixed
from btembed.field_tower import FieldElement, FieldLayer, Scalarish
from btembed.herm_forms import EpsilonHermitianForm, to_matrix
from btembed.latt_fun import LatticeFunction
from btembed.util import frac_part

logger = logging.getLogger(__name__)

QMatrix = list[list[Fraction]]


class SpaceTag(StrEnum):
    GL = "gl"
    G = "g"
    H_TILDE = "h_tilde"
    H = "h"


def vec(a: Sequence[Sequence[FieldElement]]) -> list[FieldElement]:
    return [x for row in a for x in row]


def unvec(v: Sequence[FieldElement], m: int) -> list[list[FieldElement]]:
    return [list(v[i * m : (i + 1) * m]) for i in range(m)]


def _matrix_unit(m: int, k: int, l: int, layer: FieldLayer) -> list[list[FieldElement]]:
    out = linalg.zeros(m, m, layer.element(0))
    out[k][l] = layer.element(1)
    return out


@dataclass(frozen=True, eq=False)
class SquareLatticeFunction:
    """End(Lambda) for a lattice function Lambda, itself split on End_K(K^m)."""

    source: LatticeFunction
    end: LatticeFunction

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SquareLatticeFunction):
            return NotImplemented
        return self.end == other.end

    def __hash__(self) -> int:
        return hash(self.end)

    def eval(self, r: Fraction | int) -> DvrLattice:
        return self.end.eval(r)

    @property
    def jumps(self) -> tuple[Fraction, ...]:
        return self.end.jumps


def end_function(source: LatticeFunction) -> SquareLatticeFunction:
    layer = source.layer
    m = source.dim
    b = linalg.from_columns([list(x) for x in source.basis])
    b_inv = linalg.inverse(b)
    basis = []
    offsets = []
    for k in range(m):
        for l in range(m):
            unit = linalg.mat_mul(linalg.mat_mul(b, _matrix_unit(m, k, l, layer)), b_inv)
            basis.append(tuple(vec(unit)))
            offsets.append(source.offsets[k] - source.offsets[l])
    return SquareLatticeFunction(source, LatticeFunction(layer, tuple(basis), tuple(offsets)))


def sigma_action(
    square: SquareLatticeFunction,
    form: EpsilonHermitianForm,
) -> SquareLatticeFunction:
    """r -> [End(Lambda)(r)]^sigma, applying the adjoint to the splitting."""
    m = square.source.dim
    if form.n != m:
        raise DimensionMismatch("Form and endomorphisms act on different spaces")
    end = square.end
    basis = tuple(tuple(vec(form.adjoint(unvec(b, m)))) for b in end.basis)
    return SquareLatticeFunction(square.source, LatticeFunction(end.layer, basis, end.offsets))


def recover_self_dual(seed: LatticeFunction, form: EpsilonHermitianForm) -> LatticeFunction:
    """The unique self-dual function with End equal to End(seed)."""
    square = end_function(seed)
    if sigma_action(square, form) != square:
        raise NotSigmaFixed("End(Lambda_0) is not fixed by the adjoint involution")
    c = seed.translation_to(seed.dual(form))
    if c is None:
        raise NotShiftRelated("Lambda_0^sharp is not a translate of Lambda_0")
    out = seed.shifted(c / 2)
    assert out.is_self_dual(form)
    logger.debug(f"Recovered self-dual function with shift {c / 2}")
    return out


@dataclass(frozen=True)
class FiltrationProfile:
    """Jumps r in [0, 1) with the lattice at r; constant on (r_prev, r]."""

    tag: SpaceTag
    jumps: tuple[tuple[Fraction, DvrLattice], ...]
    period: Fraction = Fraction(1)

    @property
    def jump_points(self) -> tuple[Fraction, ...]:
        return tuple(r for r, _ in self.jumps)

    def at(self, r: Fraction | int) -> DvrLattice:
        r = Fraction(r)
        n = math.floor(r)
        base = r - n
        points = self.jump_points
        idx = bisect.bisect_left(points, base)
        if idx == len(points):
            return self.jumps[0][1].scaled(n + 1)
        return self.jumps[idx][1].scaled(n)

    def intersect_subspace(
        self,
        constraints: Sequence[Sequence[Fraction]],
        tag: SpaceTag,
    ) -> "FiltrationProfile":
        return build_profile(
            tag,
            self.jump_points,
            lambda r: self.at(r).intersect_subspace(constraints),
        )

    def agrees_with(self, other: "FiltrationProfile") -> bool:
        return first_disagreement(self, other) is None


def first_disagreement(a: FiltrationProfile, b: FiltrationProfile) -> Fraction | None:
    """An r in the union of both jump sets where the two profiles differ."""
    for r in sorted(set(a.jump_points) | set(b.jump_points)):
        if a.at(r) != b.at(r):
            return r
    return None


def first_non_containment(big: FiltrationProfile, small: FiltrationProfile) -> Fraction | None:
    """An r where big(r) fails to contain small(r), checked on the union of jumps."""
    for r in sorted(set(big.jump_points) | set(small.jump_points)):
        if not big.at(r).contains_lattice(small.at(r)):
            return r
    return None


def build_profile(
    tag: SpaceTag,
    candidates: Sequence[Fraction],
    value: Callable[[Fraction], DvrLattice],
) -> FiltrationProfile:
    """Profile of a left-continuous step function whose jumps lie in `candidates`."""
    points = sorted({frac_part(Fraction(c)) for c in candidates})
    assert points
    values = [value(r) for r in points]
    wrapped = [*values, values[0].scaled(1)]
    jumps = tuple(
        (r, here)
        for r, (here, after) in zip(points, pairwise(wrapped), strict=True)
        if here != after
    )
    if not jumps:
        # only the zero lattice is constant with P(r + 1) = p P(r)
        jumps = ((points[0], values[0]),)
    return FiltrationProfile(tag, jumps)


def flat_end_dim(layer: FieldLayer, m: int) -> int:
    return m * m * layer.degree


def end_q_basis(layer: FieldLayer, m: int) -> list[list[list[FieldElement]]]:
    """The matrices omega E_ij in the order of the flattened End coordinates."""
    out = []
    for i in range(m):
        for j in range(m):
            for omega in layer.power_basis:
                a = linalg.zeros(m, m, layer.element(0))
                a[i][j] = omega
                out.append(a)
    return out


def q_linear_map_matrix(
    layer: FieldLayer,
    m: int,
    target_layer: FieldLayer,
    fn: Callable[[list[list[FieldElement]]], Sequence[Sequence[FieldElement]]],
) -> QMatrix:
    """Q-matrix of a Q-linear map End(K^m) -> matrices over target_layer, flattened."""
    cols = [target_layer.flatten(vec(to_matrix(fn(a)))) for a in end_q_basis(layer, m)]
    return linalg.from_columns(cols)


def lie_constraints(form: EpsilonHermitianForm) -> QMatrix:
    """a -> a + a^sigma on flattened End coordinates; g is its kernel."""
    return q_linear_map_matrix(
        form.layer,
        form.n,
        form.layer,
        lambda a: linalg.mat_add(a, form.adjoint(a)),
    )


def commutant_constraints(layer: FieldLayer, beta: Sequence[Sequence[Scalarish]]) -> QMatrix:
    """a -> a beta - beta a; the centralizer of beta is its kernel."""
    b = [list(row) for row in to_matrix(beta)]
    return q_linear_map_matrix(
        layer,
        len(b),
        layer,
        lambda a: linalg.mat_sub(linalg.mat_mul(a, b), linalg.mat_mul(b, a)),
    )


@dataclass(frozen=True)
class BlockEndomorphisms:
    """One block's End_{E_i}(Lambda_i), with how it sits inside End_F(V).

    `embedding` is the Q-matrix from the block's flattened End coordinates to the
    ambient ones. For a block fixed by sigma, `sigma_kernel` is the Q-matrix of
    a -> a + a^{sigma_i}; paired blocks leave it None and embed a -> a + (-a^sigma).
    """

    end: SquareLatticeFunction
    embedding: QMatrix
    sigma_kernel: QMatrix | None = None


def gl_filtration(point: LatticeFunction) -> FiltrationProfile:
    square = end_function(point)
    return build_profile(SpaceTag.GL, square.jumps, square.eval)


def _block_profile(
    blocks: Sequence[BlockEndomorphisms],
    ambient_dim: int,
    p: int,
    tag: SpaceTag,
    *,
    lie: bool,
) -> FiltrationProfile:
    candidates = sorted({j for b in blocks for j in b.end.jumps})

    def value(r: Fraction) -> DvrLattice:
        gens: list[list[Fraction]] = []
        for block in blocks:
            lattice = block.end.eval(r)
            if lie and block.sigma_kernel is not None:
                lattice = lattice.intersect_subspace(block.sigma_kernel)
            gens.extend(linalg.mat_vec(block.embedding, list(b)) for b in lattice.basis)
        return DvrLattice.from_generators(p, ambient_dim, gens)

    return build_profile(tag, candidates, value)


def centralizer_filtration(
    blocks: Sequence[BlockEndomorphisms],
    layer: FieldLayer,
    n: int,
    *,
    lie: bool,
) -> FiltrationProfile:
    """h~ of a centralizer point, or h when `lie`; no form is needed for h~."""
    tag = SpaceTag.H if lie else SpaceTag.H_TILDE
    return _block_profile(blocks, flat_end_dim(layer, n), layer.p, tag, lie=lie)


def lie_filtration(
    point: LatticeFunction | Sequence[BlockEndomorphisms],
    form: EpsilonHermitianForm,
    tag: SpaceTag,
) -> FiltrationProfile:
    """g~, g, h~ or h filtration of a building point.

    For g~ and g the point is a lattice function on V; for h~ and h it is the list
    of block endomorphism data of a centralizer point (all blocks J_o and J for h~,
    blocks J_o and J_+ for h).
    """
    match tag:
        case SpaceTag.GL:
            assert isinstance(point, LatticeFunction)
            return gl_filtration(point)
        case SpaceTag.G:
            assert isinstance(point, LatticeFunction)
            return gl_filtration(point).intersect_subspace(lie_constraints(form), SpaceTag.G)
        case SpaceTag.H_TILDE | SpaceTag.H:
            assert not isinstance(point, LatticeFunction)
            return centralizer_filtration(point, form.layer, form.n, lie=tag is SpaceTag.H)
        case _:
            assert_never(tag)


def trace_pairing(layer: FieldLayer, m: int) -> QMatrix:
    """Tr_{F/Q}(tr(a b)) on flattened End coordinates."""
    basis = layer.power_basis
    deg = len(basis)
    size = m * m * deg
    out = [[Fraction(0)] * size for _ in range(size)]
    for i in range(m):
        for j in range(m):
            for s, ws in enumerate(basis):
                for t, wt in enumerate(basis):
                    row = (i * m + j) * deg + s
                    col = (j * m + i) * deg + t
                    out[row][col] = layer.trace_to_base(ws * wt)
    return out


def trace_dual(lattice: DvrLattice, layer: FieldLayer, m: int) -> DvrLattice:
    """S* = {a : Tr(a S) in p_F} for an o_F-lattice S of endomorphisms."""
    if lattice.ambient_dim != flat_end_dim(layer, m):
        raise DimensionMismatch("Lattice is not in the endomorphism space")
    return lattice.dual(trace_pairing(layer, m))


def regular_matrix(layer: FieldLayer, a: Sequence[Sequence[FieldElement]]) -> QMatrix:
    """Q-matrix of x -> a x on flattened coordinates."""
    n = len(a)
    deg = layer.degree
    out = [[Fraction(0)] * (n * deg) for _ in range(n * deg)]
    for i in range(n):
        for j in range(n):
            block = layer.mult_matrix(a[i][j])
            for s in range(deg):
                for t in range(deg):
                    out[i * deg + s][j * deg + t] = block[s][t]
    return out


def _regular_embedding(layer: FieldLayer, m: int) -> QMatrix:
    return linalg.from_columns(
        [[x for row in regular_matrix(layer, a) for x in row] for a in end_q_basis(layer, m)],
    )


def end_lattice_image(square: SquareLatticeFunction, r: Fraction | int) -> DvrLattice:
    """End(Lambda)(r) moved into Q-matrices acting on flattened V."""
    layer = square.source.layer
    m = square.source.dim
    phi = _regular_embedding(layer, m)
    size = (m * layer.degree) ** 2
    return DvrLattice.from_generators(
        layer.p,
        size,
        (linalg.mat_vec(phi, list(b)) for b in square.eval(r).basis),
    )


def end_lattice_oracle(point: LatticeFunction, r: Fraction | int) -> DvrLattice:
    """{a K-linear : a Lambda(s) in Lambda(s + r) at every jump s}, from containments alone.

    Hom(L1, L2) over Z_(p) is B2 M(Z_(p)) B1^-1; the K-linear maps are cut out as
    the image of the regular representation.
    """
    r = Fraction(r)
    layer = point.layer
    nq = point.q_dim
    p = layer.p
    phi = _regular_embedding(layer, point.dim)
    outside = linalg.nullspace(linalg.transpose(phi), nq * nq, Fraction(1))
    result: DvrLattice | None = None
    for s in point.jumps:
        b1 = point.eval(s).basis_matrix()
        b2 = point.eval(s + r).basis_matrix()
        b1_inv = linalg.inverse(b1)
        gens = []
        for i in range(nq):
            for j in range(nq):
                unit = [[Fraction(int(x == i and y == j)) for y in range(nq)] for x in range(nq)]
                hom = linalg.mat_mul(linalg.mat_mul(b2, unit), b1_inv)
                gens.append([x for row in hom for x in row])
        hom_lattice = DvrLattice.from_generators(p, nq * nq, gens)
        result = hom_lattice if result is None else result.intersection(hom_lattice)
    assert result is not None
    return result.intersect_subspace(outside) if outside else result
