"""Decomposition of V under beta and the embedding j_beta of the centralizer building.

`decompose_beta` splits V = sum V_i along the factors of the minimal polynomial of
beta. Each block carries a field E_i = F[beta 1_i] acting on V_i, realised by a
frame: an E_i-basis u_1..u_m of V_i together with the matrix S_i through which
sqrt(D_i) acts when E_i is quadratic over F. Lattice functions on a block are
`LatticeFunction`s over E_i in frame coordinates, and `restrict_scalars` turns
them into o_F-splittings of V.

Blocks fixed by the adjoint involution (J_o) carry the induced form h_i with
h(v, w) = lambda_i(h_i(v, w)). Paired blocks (J) come as i in J_+ and its partner
-i in J_-, whose frame is the h-dual of the frame of i.
"""

import logging
import math
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from fractions import Fraction
from functools import cached_property

from sympy import QQ, Poly, Symbol

from btembed import linalg
from btembed.dvr_lattice import DvrLattice
from btembed.endo_filt import (
    BlockEndomorphisms,
    end_function,
    lie_constraints,
    q_linear_map_matrix,
    recover_self_dual,
    regular_matrix,
    vec,
)
from btembed.errors import (
    AnisotropicTooLarge,
    BlockMismatch,
    DegenerateRestriction,
    DimensionMismatch,
    H1Violated,
    NotEpsilonHermitian,
    NotInLieAlgebra,
    RankDeficient,
    UnsupportedFactorDegree,
)
from btembed.field_tower import (
    FieldElement,
    FieldLayer,
    Scalarish,
    SigmaLinearForm,
    base_layer,
    build_sigma_equivariant_form,
    make_quadratic_extension,
    squarefree_part,
)
from btembed.herm_forms import (
    EpsilonHermitianForm,
    FormCase,
    Matrix,
    WittDecomposition,
    kernel_is_locally_anisotropic,
    to_matrix,
    witt_decompose,
)
from btembed.latt_fun import (
    ApartmentPoint,
    LatticeFunction,
    apartment_point_to_function,
    barycenter,
    direct_sum,
)
logger = logging.getLogger(__name__)

Vector = list[FieldElement]
Coeffs = list[FieldElement]


class BlockKind(StrEnum):
    J_O = "J_o"
    J_PLUS = "J_+"
    J_MINUS = "J_-"
    GL = "gl"


def _poly_eval(poly: Coeffs, x: FieldElement) -> FieldElement:
    acc = FieldElement.coerce(0)
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def _poly_mul(a: Coeffs, b: Coeffs) -> Coeffs:
    out = [FieldElement.coerce(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _divide_linear(poly: Coeffs, root: FieldElement) -> Coeffs | None:
    """poly / (x - root) when root is a root, else None."""
    if _poly_eval(poly, root):
        return None
    out = [FieldElement.coerce(0)] * (len(poly) - 1)
    carry = FieldElement.coerce(0)
    for k in range(len(poly) - 1, 0, -1):
        carry = carry * root + poly[k]
        out[k - 1] = carry
    return out


def _matrix_poly(
    poly: Coeffs,
    a: Sequence[Sequence[FieldElement]],
) -> list[list[FieldElement]]:
    n = len(a)
    one = FieldElement.coerce(1)
    acc = linalg.zeros(n, n, FieldElement.coerce(0))
    for c in reversed(poly):
        acc = linalg.mat_add(linalg.mat_mul(acc, a), linalg.mat_scale(linalg.identity(n, one), c))
    return acc


def minimal_polynomial(beta: Sequence[Sequence[FieldElement]]) -> Coeffs:
    """Monic minimal polynomial, coefficients from the constant term up."""
    n = len(beta)
    one = FieldElement.coerce(1)
    power = linalg.identity(n, one)
    powers = [vec(power)]
    for _ in range(n):
        power = linalg.mat_mul(power, beta)
        v = vec(power)
        if linalg.in_span(powers, v):
            coeffs = linalg.solve(linalg.from_columns(powers), v)
            return [-c for c in coeffs] + [one]
        powers.append(v)
    raise AssertionError("Cayley-Hamilton bounds the degree by n")


def _rational_sqrt(t: Fraction) -> Fraction | None:
    if t < 0:
        return None
    num, den = math.isqrt(t.numerator), math.isqrt(t.denominator)
    if num * num == t.numerator and den * den == t.denominator:
        return Fraction(num, den)
    return None


def _factor_over_q(poly: Sequence[Fraction]) -> list[tuple[list[Fraction], int]]:
    x = Symbol("x")
    sym = Poly([QQ(c.numerator, c.denominator) for c in reversed(poly)], x, domain=QQ)
    _, factors = sym.factor_list()
    out = []
    for factor, mult in factors:
        coeffs = [Fraction(int(c.numerator), int(c.denominator)) for c in factor.all_coeffs()]
        lead = coeffs[0]
        out.append(([c / lead for c in reversed(coeffs)], int(mult)))
    return out


def factor_minimal_polynomial(layer: FieldLayer, poly: Coeffs) -> list[Coeffs]:
    """Monic irreducible factors over F, sorted; raises unless squarefree and supported."""
    if layer.is_base:
        factors = _factor_over_q([c.a for c in poly])
        if any(mult > 1 for _, mult in factors):
            raise H1Violated(f"Minimal polynomial {poly} is not squarefree")
        out = []
        for coeffs, _ in factors:
            if len(coeffs) - 1 > 2:
                raise UnsupportedFactorDegree(f"Factor of degree {len(coeffs) - 1} over Q")
            out.append([FieldElement(c) for c in coeffs])
    else:
        # Factor N(f) = f f^sigma over Q and test which of its roots in F kill f.
        conj = [layer.conj(c) for c in poly]
        norm = _poly_mul(poly, conj)
        assert all(c.is_rational for c in norm)
        candidates: list[FieldElement] = []
        for coeffs, _ in _factor_over_q([c.a for c in norm]):
            if len(coeffs) == 2:
                candidates.append(layer.element(-coeffs[0]))
            elif len(coeffs) == 3:
                c0, b = coeffs[0], coeffs[1]
                m = _rational_sqrt((b * b - 4 * c0) / layer.d)
                if m is not None:
                    candidates.extend(
                        (layer.element(-b / 2, m / 2), layer.element(-b / 2, -m / 2)),
                    )
        rest = list(poly)
        out = []
        for root in dict.fromkeys(candidates):
            quotient = _divide_linear(rest, root)
            if quotient is None:
                continue
            if _divide_linear(quotient, root) is not None:
                raise H1Violated(f"Minimal polynomial has the repeated root {root!r}")
            rest = quotient
            out.append([-root, layer.element(1)])
        if len(rest) > 1:
            raise UnsupportedFactorDegree(
                f"Minimal polynomial has a factor of degree {len(rest) - 1} over {layer.name}",
            )
    return sorted(out, key=lambda f: (len(f), tuple((c.a, c.c) for c in f)))


@dataclass(frozen=True)
class Block:
    index: int
    kind: BlockKind
    factor: tuple[FieldElement, ...]
    field: FieldLayer
    frame: tuple[tuple[FieldElement, ...], ...]
    structure: Matrix | None
    idempotent: Matrix
    partner: int | None = None
    lam: SigmaLinearForm | None = None
    form: EpsilonHermitianForm | None = None

    @property
    def m(self) -> int:
        """Dimension over E_i."""
        return len(self.frame)

    @property
    def is_quadratic(self) -> bool:
        return self.structure is not None

    def scalars_over_f(self) -> list[FieldElement]:
        """An F-basis of E_i: {1, sqrt D} or {1}."""
        if self.is_quadratic:
            return list(self.field.power_basis)
        return [self.field.element(1)]

    @cached_property
    def f_frame(self) -> list[Vector]:
        """u_1, S u_1, u_2, S u_2, ... (or just the u_k when E_i = F)."""
        out = []
        for u in self.frame:
            out.append(list(u))
            if self.structure is not None:
                out.append(linalg.mat_vec(self.structure, list(u)))
        return out

    def to_ambient(self, z: Sequence[Scalarish]) -> Vector:
        if len(z) != self.m:
            raise DimensionMismatch(f"Block {self.index} has E-dimension {self.m}")
        n = len(self.frame[0])
        out = [FieldElement.coerce(0)] * n
        for k, zk in enumerate(z):
            zk = FieldElement.coerce(zk)
            if self.is_quadratic:
                parts = [(zk.a, self.f_frame[2 * k]), (zk.c, self.f_frame[2 * k + 1])]
            else:
                parts = [(zk, self.f_frame[k])]
            for coeff, v in parts:
                if coeff:
                    out = linalg.vec_add(out, linalg.vec_scale(v, coeff))
        return out

    def from_ambient(self, x: Sequence[FieldElement]) -> Vector:
        coords = linalg.solve(linalg.from_columns(self.f_frame), list(x))
        if self.is_quadratic:
            return [
                self.field.element(coords[2 * k].a, coords[2 * k + 1].a) for k in range(self.m)
            ]
        return coords

    def restrict_scalars(self, function: LatticeFunction) -> tuple[list[Vector], list[Fraction]]:
        """o_F-splitting of V_i from an o_E-splitting in frame coordinates."""
        if function.layer != self.field or function.dim != self.m:
            raise BlockMismatch(f"Function does not live on block {self.index}")
        vectors: list[Vector] = []
        offsets: list[Fraction] = []
        for z, lam in zip(function.basis, function.offsets, strict=True):
            for omega in self.scalars_over_f():
                v = self.field.valuation(omega)
                assert v != math.inf
                vectors.append(self.to_ambient(linalg.vec_scale(list(z), omega)))
                offsets.append(lam - Fraction(v))
        return vectors, offsets

    def standard_function(self, offsets: Sequence[Fraction] | None = None) -> LatticeFunction:
        one = self.field.element(1)
        basis = linalg.identity(self.m, one)
        offs = tuple(offsets) if offsets is not None else (Fraction(0),) * self.m
        return LatticeFunction(self.field, tuple(tuple(b) for b in basis), offs)


@dataclass(frozen=True)
class BetaDecomposition:
    layer: FieldLayer
    beta: Matrix
    form: EpsilonHermitianForm | None
    min_poly: tuple[FieldElement, ...]
    blocks: tuple[Block, ...]

    @property
    def n(self) -> int:
        return len(self.beta)

    def block(self, index: int) -> Block:
        for b in self.blocks:
            if b.index == index:
                return b
        raise BlockMismatch(f"No block with index {index}")

    def of_kind(self, *kinds: BlockKind) -> list[Block]:
        return [b for b in self.blocks if b.kind in kinds]

    @property
    def point_blocks(self) -> list[Block]:
        """Blocks a building point of the centralizer carries data on."""
        return self.of_kind(BlockKind.J_O, BlockKind.J_PLUS, BlockKind.GL)

    @cached_property
    def _frame_inverse(self) -> list[list[FieldElement]]:
        cols = [v for b in self.blocks for v in b.f_frame]
        return linalg.inverse(linalg.from_columns(cols))

    def projector(self, index: int) -> list[list[FieldElement]]:
        """Rows giving the F-coordinates of 1_i x in the F-frame of block i."""
        start = 0
        for b in self.blocks:
            size = len(b.f_frame)
            if b.index == index:
                return self._frame_inverse[start : start + size]
            start += size
        raise BlockMismatch(f"No block with index {index}")


def _kernel(matrix: Sequence[Sequence[FieldElement]], layer: FieldLayer) -> list[Vector]:
    return linalg.nullspace(matrix, len(matrix), layer.element(1))


def _field_for_factor(
    factor: Coeffs,
    index: int,
    base: FieldLayer,
) -> tuple[FieldLayer, Fraction, int]:
    """(E_i, m, D) with disc = m^2 D for a quadratic factor."""
    c0, b = factor[0].a, factor[1].a
    disc = b * b - 4 * c0
    d = squarefree_part(disc.numerator * disc.denominator)
    m = _rational_sqrt(disc / d)
    assert m is not None
    return make_quadratic_extension(base, d, name=f"E_{index}"), m, d


def _greedy_frame(vectors: Sequence[Vector], structure: Matrix | None) -> list[Vector]:
    chosen: list[Vector] = []
    spanned: list[Vector] = []
    for v in vectors:
        if linalg.in_span(spanned, v):
            continue
        chosen.append(list(v))
        spanned.append(list(v))
        if structure is not None:
            spanned.append(linalg.mat_vec(structure, list(v)))
    assert len(spanned) == len(vectors)
    return chosen


def f_dual_vectors(
    form: EpsilonHermitianForm,
    targets: Sequence[Vector],
    space: Sequence[Vector],
) -> list[Vector]:
    """y_t in span(space) with h(y_t, targets_s) = delta_ts."""
    if len(targets) != len(space):
        raise DimensionMismatch("Dual vectors need spaces of equal dimension")
    a = [[form(x, t) for t in targets] for x in space]
    try:
        a_inv = linalg.inverse(a)
    except RankDeficient as exc:
        raise DegenerateRestriction("h pairs the two spaces degenerately") from exc
    c = [[form.layer.conj(x) for x in row] for row in linalg.transpose(a_inv)]
    space_m = linalg.from_columns([list(v) for v in space])
    return linalg.columns(linalg.mat_mul(space_m, c))


def _induce(form: EpsilonHermitianForm, block: Block, lam: SigmaLinearForm) -> EpsilonHermitianForm:
    """h_i on E_i^m from h(u_k, omega u_l) = lambda(omega h_i(u_k, u_l))."""
    gram = []
    for uk in block.frame:
        row = []
        for ul in block.frame:
            direct = form(list(uk), list(ul))
            if block.structure is not None:
                twisted = form(list(uk), linalg.mat_vec(block.structure, list(ul)))
                assert direct.is_rational and twisted.is_rational
                d = block.field.d
                row.append(block.field.element(direct.a / lam.scale, twisted.a / (lam.scale * d)))
            else:
                row.append(direct / lam.scale)
        gram.append(row)
    try:
        return EpsilonHermitianForm(block.field, to_matrix(gram), form.epsilon)
    except RankDeficient as exc:
        raise DegenerateRestriction(f"h_{block.index} is degenerate") from exc


def induce_form_hi(decomp: BetaDecomposition, index: int) -> EpsilonHermitianForm:
    block = decomp.block(index)
    if block.kind is not BlockKind.J_O or decomp.form is None:
        raise BlockMismatch(f"Block {index} is not fixed by sigma")
    lam = block.lam or build_sigma_equivariant_form(block.field, decomp.layer)
    return _induce(decomp.form, block, lam)


def decompose_beta(
    layer: FieldLayer,
    beta: Sequence[Sequence[Scalarish]],
    form: EpsilonHermitianForm | None = None,
) -> BetaDecomposition:
    beta_m = to_matrix(beta)
    n = len(beta_m)
    if any(len(row) != n for row in beta_m):
        raise DimensionMismatch("beta must be square")
    if form is not None:
        if form.n != n or form.layer != layer:
            raise DimensionMismatch("beta and the form act on different spaces")
        if not linalg.is_zero(linalg.mat_add(beta_m, form.adjoint(beta_m))):
            raise NotInLieAlgebra("beta + beta^sigma != 0")
    poly = minimal_polynomial([list(r) for r in beta_m])
    factors = factor_minimal_polynomial(layer, poly)
    logger.info(f"Minimal polynomial of degree {len(poly) - 1} splits into {len(factors)} factors")

    raw = []
    for pos, factor in enumerate(factors, start=1):
        space = _kernel(_matrix_poly(factor, [list(r) for r in beta_m]), layer)
        if len(factor) == 3:
            if not layer.is_base:
                raise UnsupportedFactorDegree("Quadratic factors over a quadratic F")
            field, m, _ = _field_for_factor(factor, pos, base_layer(layer.p))
            b = factor[1]
            # (2 beta + b) / m squares to D on ker f(beta)
            two_beta_plus_b = linalg.mat_add(
                linalg.mat_scale(beta_m, 2),
                linalg.mat_scale(linalg.identity(n, b), b),
            )
            s = linalg.mat_scale(two_beta_plus_b, FieldElement(1 / m))
            structure: list[list[FieldElement]] | None = s
        else:
            field = replace(layer, name=f"E_{pos}")
            structure = None
        raw.append((factor, space, field, structure))

    basis_all = [v for _, space, _, _ in raw for v in space]
    p_inv = linalg.inverse(linalg.from_columns(basis_all))
    idempotents = []
    start = 0
    for _, space, _, _ in raw:
        size = len(space)
        rows = p_inv[start : start + size]
        idem = linalg.mat_mul(linalg.from_columns(space), rows)
        idempotents.append(idem)
        start += size
    total = idempotents[0]
    for idem in idempotents[1:]:
        total = linalg.mat_add(total, idem)
    assert total == linalg.identity(n, FieldElement.coerce(1))
    for idem in idempotents:
        assert linalg.mat_mul(idem, idem) == idem

    kinds: list[BlockKind] = []
    partners: list[int | None] = []
    if form is None:
        kinds = [BlockKind.GL] * len(raw)
        partners = [None] * len(raw)
    else:
        for idem in idempotents:
            image = form.adjoint(idem)
            match = next(j for j, other in enumerate(idempotents) if other == image)
            partners.append(match)
            kinds.append(BlockKind.J_O)
        for pos, partner in enumerate(partners):
            if partner is not None and partner != pos:
                kinds[pos] = BlockKind.J_PLUS if pos < partner else BlockKind.J_MINUS

    # J_+ blocks are numbered 1..t with partners -1..-t, J_o blocks follow.
    labels: dict[int, int] = {}
    t = 0
    for pos, kind in enumerate(kinds):
        if kind is BlockKind.J_PLUS:
            t += 1
            labels[pos] = t
            labels[partners[pos]] = -t  # type: ignore[index]
    nxt = t
    for pos, kind in enumerate(kinds):
        if kind in (BlockKind.J_O, BlockKind.GL):
            nxt += 1
            labels[pos] = nxt

    blocks: dict[int, Block] = {}
    for pos, (factor, space, field, structure) in enumerate(raw):
        if kinds[pos] is BlockKind.J_MINUS:
            continue
        frame = _greedy_frame(space, to_matrix(structure) if structure else None)
        label = labels[pos]
        block = Block(
            index=label,
            kind=kinds[pos],
            factor=tuple(factor),
            field=replace(field, name=f"E_{label}"),
            frame=tuple(tuple(u) for u in frame),
            structure=to_matrix(structure) if structure else None,
            idempotent=to_matrix(idempotents[pos]),
        )
        if kinds[pos] is BlockKind.J_O:
            assert form is not None
            lam = build_sigma_equivariant_form(block.field, layer)
            block = replace(block, lam=lam)
            block = replace(block, form=_induce(form, block, lam))
        if kinds[pos] is BlockKind.J_PLUS:
            partner_pos = partners[pos]
            assert partner_pos is not None and form is not None
            block = replace(block, partner=-label)
            partner_structure = (
                to_matrix(form.adjoint(block.structure)) if block.structure else None
            )
            duals = f_dual_vectors(form, block.f_frame, raw[partner_pos][1])
            step = 2 if block.is_quadratic else 1
            blocks[-label] = Block(
                index=-label,
                kind=BlockKind.J_MINUS,
                factor=tuple(raw[partner_pos][0]),
                field=replace(block.field, name=f"E_{-label}"),
                frame=tuple(tuple(u) for u in duals[::step]),
                structure=partner_structure,
                idempotent=to_matrix(idempotents[partner_pos]),
                partner=label,
            )
        blocks[label] = block

    ordered = tuple(blocks[pos_label] for pos_label in sorted(blocks, key=_block_order))
    out = BetaDecomposition(layer, beta_m, form, tuple(poly), ordered)
    logger.info(
        "Blocks: "
        + ", ".join(f"{b.index}:{b.kind}:{b.field.name}(d={b.field.d})" for b in ordered),
    )
    return out


def _block_order(label: int) -> tuple[int, int]:
    return (abs(label), 0 if label > 0 else 1)


def cross_dual(decomp: BetaDecomposition, index: int, function: LatticeFunction) -> LatticeFunction:
    """Lambda_i^{sharp_i} on V_-i: v lies in it at r iff h(v, Lambda_i((-r)+)) is in p_F."""
    assert decomp.form is not None
    block = decomp.block(index)
    if block.partner is None:
        raise BlockMismatch(f"Block {index} has no partner")
    partner = decomp.block(block.partner)
    vectors, _ = block.restrict_scalars(function)
    duals = f_dual_vectors(decomp.form, vectors, partner.f_frame)
    step = len(block.scalars_over_f())
    basis = tuple(tuple(partner.from_ambient(y)) for y in duals[::step])
    return LatticeFunction(partner.field, basis, tuple(-x for x in function.offsets))


@dataclass(frozen=True)
class BlockPoint:
    index: int
    function: LatticeFunction
    shift: Fraction = Fraction(0)


@dataclass(frozen=True)
class CentralBuildingPoint:
    blocks: tuple[BlockPoint, ...]

    def block(self, index: int) -> BlockPoint:
        for b in self.blocks:
            if b.index == index:
                return b
        raise BlockMismatch(f"Point has no block {index}")

    def with_shifts(self, shifts: Mapping[int, Fraction]) -> "CentralBuildingPoint":
        return CentralBuildingPoint(
            tuple(replace(b, shift=Fraction(shifts.get(b.index, b.shift))) for b in self.blocks),
        )


def _check_point(decomp: BetaDecomposition, point: CentralBuildingPoint) -> None:
    want = sorted(b.index for b in decomp.point_blocks)
    have = sorted(b.index for b in point.blocks)
    if want != have:
        raise BlockMismatch(f"Point has blocks {have}, decomposition expects {want}")
    for bp in point.blocks:
        block = decomp.block(bp.index)
        if bp.function.layer != block.field or bp.function.dim != block.m:
            raise BlockMismatch(f"Block {bp.index} function has the wrong field or dimension")


def complete_tuple(
    decomp: BetaDecomposition,
    point: CentralBuildingPoint,
) -> dict[int, LatticeFunction]:
    """All blocks J_o and J: shifted J_+ functions plus their cross duals."""
    _check_point(decomp, point)
    out: dict[int, LatticeFunction] = {}
    for bp in point.blocks:
        block = decomp.block(bp.index)
        if block.kind is BlockKind.J_PLUS:
            shifted = bp.function.shifted(bp.shift)
            out[bp.index] = shifted
            assert block.partner is not None
            out[block.partner] = cross_dual(decomp, bp.index, shifted)
        else:
            out[bp.index] = bp.function
    return out


def j_tilde(decomp: BetaDecomposition, functions: Mapping[int, LatticeFunction]) -> LatticeFunction:
    """Direct sum of the block functions, as an o_F-function on V."""
    if sorted(functions) != sorted(b.index for b in decomp.blocks):
        raise BlockMismatch("A function is needed on every block")
    parts = [
        decomp.block(i).restrict_scalars(functions[i]) for i in sorted(functions, key=_block_order)
    ]
    return direct_sum(decomp.layer, parts)


def j_beta(decomp: BetaDecomposition, point: CentralBuildingPoint) -> LatticeFunction:
    out = j_tilde(decomp, complete_tuple(decomp, point))
    logger.debug(f"j_beta: {out!r}")
    return out


def tuple_dual(
    decomp: BetaDecomposition,
    functions: Mapping[int, LatticeFunction],
) -> dict[int, LatticeFunction]:
    """x -> x^b: h_i-duals on J_o, cross duals swapped between i and -i."""
    out: dict[int, LatticeFunction] = {}
    for index, function in functions.items():
        block = decomp.block(index)
        if block.kind is BlockKind.J_O:
            assert block.form is not None
            out[index] = function.dual(block.form)
        else:
            assert block.partner is not None
            out[block.partner] = cross_dual(decomp, index, function)
    return out


def central_barycenter(
    first: CentralBuildingPoint,
    second: CentralBuildingPoint,
    t: Fraction,
) -> CentralBuildingPoint:
    blocks = []
    for bp in first.blocks:
        other = second.block(bp.index)
        if other.shift != bp.shift:
            raise BlockMismatch("Barycenters are taken for a fixed choice of shifts")
        blocks.append(replace(bp, function=barycenter(bp.function, other.function, t)))
    return CentralBuildingPoint(tuple(blocks))


@dataclass(frozen=True)
class FormIndependenceReport:
    u: Fraction
    expected_shift: Fraction
    end_equal: bool
    shift_consistent: bool

    @property
    def ok(self) -> bool:
        return self.end_equal and self.shift_consistent


def jbeta_form_independence(
    decomp: BetaDecomposition,
    u: Scalarish,
    point: CentralBuildingPoint,
) -> FormIndependenceReport:
    """Rebuild everything for u*h and compare j_beta against the original."""
    assert decomp.form is not None
    u = FieldElement.coerce(u)
    if not u.is_rational or not u:
        raise NotEpsilonHermitian(f"u = {u!r} must be a nonzero element of F_o")
    v = decomp.layer.valuation(u)
    assert v != math.inf
    half = Fraction(v) / 2
    scaled = decompose_beta(decomp.layer, decomp.beta, decomp.form.scaled(u))
    blocks = []
    for bp in point.blocks:
        block = scaled.block(bp.index)
        if block.kind is BlockKind.J_O:
            assert block.form is not None
            blocks.append(replace(bp, function=recover_self_dual(bp.function, block.form)))
        else:
            blocks.append(replace(bp, shift=bp.shift - half))
    original = j_beta(decomp, point)
    rebuilt = j_beta(scaled, CentralBuildingPoint(tuple(blocks)))
    report = FormIndependenceReport(
        u=u.a,
        expected_shift=-half,
        end_equal=end_function(original) == end_function(rebuilt),
        shift_consistent=original.shifted(-half) == rebuilt,
    )
    logger.debug(f"Form independence for u={u.a}: {report}")
    return report


def compare_block_duals(
    decomp: BetaDecomposition,
    index: int,
    lattice_basis: Sequence[Vector],
) -> bool:
    """For an o_E-lattice L of a J_o block, the h-dual in V_i equals the h_i-dual."""
    assert decomp.form is not None
    block = decomp.block(index)
    assert block.form is not None
    e = block.field
    gens_e = [e.flatten(linalg.vec_scale(list(z), w)) for z in lattice_basis for w in e.power_basis]
    lattice_e = DvrLattice.from_generators(e.p, block.m * e.degree, gens_e)
    dual_e = lattice_e.dual(block.form.trace_pairing())
    to_v = q_embedding(decomp, block)
    dual_v = lattice_e.image(to_v).dual(decomp.form.trace_pairing(), within=linalg.columns(to_v))
    return dual_e.image(to_v) == dual_v


def q_embedding(decomp: BetaDecomposition, block: Block) -> list[list[Fraction]]:
    """Q-matrix from flattened frame coordinates of a block to flattened V."""
    e = block.field
    size = block.m * e.degree
    unit = linalg.identity(size, Fraction(1))
    cols = [decomp.layer.flatten(block.to_ambient(e.unflatten(c))) for c in unit]
    return linalg.from_columns(cols)


def _block_matrix(
    decomp: BetaDecomposition,
    block: Block,
    a: Sequence[Sequence[FieldElement]],
) -> list[list[FieldElement]]:
    """The F-endomorphism of V acting as the E-linear a on V_i and 0 elsewhere."""
    if block.is_quadratic:
        inner = to_matrix(regular_matrix(block.field, a))
    else:
        inner = to_matrix(a)
    t = linalg.from_columns(block.f_frame)
    inner_rows = [list(r) for r in inner]
    return linalg.mat_mul(linalg.mat_mul(t, inner_rows), decomp.projector(block.index))


def block_endomorphisms(
    decomp: BetaDecomposition,
    functions: Mapping[int, LatticeFunction],
    *,
    lie: bool,
) -> list[BlockEndomorphisms]:
    """End_{E_i}(Lambda_i) data for the h~ (lie=False) or h (lie=True) filtration."""
    out = []
    for index, function in sorted(functions.items(), key=lambda kv: _block_order(kv[0])):
        block = decomp.block(index)
        if lie and block.kind is BlockKind.J_MINUS:
            continue
        square = end_function(function)
        form = decomp.form
        if lie and block.kind is BlockKind.J_PLUS:
            assert form is not None

            def embed(
                a: list[list[FieldElement]],
                block: Block = block,
            ) -> list[list[FieldElement]]:
                inner = _block_matrix(decomp, block, a)
                return linalg.mat_sub(inner, form.adjoint(inner))  # type: ignore[union-attr]

            embedding = q_linear_map_matrix(block.field, block.m, decomp.layer, embed)
            out.append(BlockEndomorphisms(square, embedding))
            continue
        embedding = q_linear_map_matrix(
            block.field,
            block.m,
            decomp.layer,
            lambda a, block=block: _block_matrix(decomp, block, a),  # type: ignore[misc]
        )
        kernel = lie_constraints(block.form) if lie and block.form is not None else None
        out.append(BlockEndomorphisms(square, embedding, kernel))
    return out


def o_e_generators(decomp: BetaDecomposition) -> list[Matrix]:
    """Generators of o_E acting on V: each idempotent, and sqrt D_i on its block."""
    out: list[Matrix] = []
    for block in decomp.blocks:
        out.append(block.idempotent)
        if block.structure is not None:
            on_block = linalg.mat_mul(
                [list(r) for r in block.structure],
                [list(r) for r in block.idempotent],
            )
            out.append(to_matrix(on_block))
    return out


def is_in_fixed_chamber(decomp: BetaDecomposition, function: LatticeFunction) -> bool:
    """Every Lambda(r) is stable under o_E."""
    lattice = end_function(function).eval(0)
    for mat in o_e_generators(decomp):
        if not lattice.contains(decomp.layer.flatten(vec(mat))):
            return False
    return True


@dataclass(frozen=True)
class BlockApartment:
    """Apartment of one factor of the centralizer building, in frame coordinates."""

    index: int
    witt: WittDecomposition | None

    def rank(self, block: Block) -> int:
        return self.witt.index if self.witt is not None else block.m

    def function(self, block: Block, coords: Sequence[Fraction]) -> LatticeFunction:
        if self.witt is not None:
            return apartment_point_to_function(ApartmentPoint(tuple(coords)), self.witt)
        return block.standard_function(coords)


def central_apartment(decomp: BetaDecomposition) -> dict[int, BlockApartment]:
    out = {}
    for block in decomp.point_blocks:
        witt = witt_decompose(block.form) if block.form is not None else None
        out[block.index] = BlockApartment(block.index, witt)
    return out


def apartment_point(
    decomp: BetaDecomposition,
    apartment: Mapping[int, BlockApartment],
    coords: Mapping[int, Sequence[Fraction]],
    shifts: Mapping[int, Fraction] | None = None,
) -> CentralBuildingPoint:
    shifts = shifts or {}
    blocks = []
    for block in decomp.point_blocks:
        fn = apartment[block.index].function(block, coords.get(block.index, ()))
        blocks.append(BlockPoint(block.index, fn, Fraction(shifts.get(block.index, 0))))
    return CentralBuildingPoint(tuple(blocks))


def random_central_point(
    decomp: BetaDecomposition,
    apartment: Mapping[int, BlockApartment],
    rng: random.Random,
    max_den: int = 12,
) -> CentralBuildingPoint:
    coords = {}
    for block in decomp.point_blocks:
        k = apartment[block.index].rank(block)
        coords[block.index] = [Fraction(rng.randint(-max_den, max_den), max_den) for _ in range(k)]
    return apartment_point(decomp, apartment, coords)


def apartment_image(
    decomp: BetaDecomposition,
    apartment: Mapping[int, BlockApartment],
) -> WittDecomposition:
    """An F-Witt decomposition of V whose apartment contains j_beta of the given one."""
    form = decomp.form
    assert form is not None
    pairs: list[tuple[Vector, Vector]] = []
    loose: list[Vector] = []
    for block in decomp.point_blocks:
        omegas = block.scalars_over_f()
        if block.kind is BlockKind.J_PLUS:
            partner = decomp.block(block.partner)  # type: ignore[arg-type]
            duals = f_dual_vectors(form, block.f_frame, partner.f_frame)
            for x, y in zip(block.f_frame, duals, strict=True):
                pairs.append((x, linalg.vec_scale(y, form.epsilon)))
            continue
        witt = apartment[block.index].witt
        assert witt is not None
        for e_pair in witt.pairs:
            xs = [block.to_ambient(linalg.vec_scale(list(e_pair[0]), w)) for w in omegas]
            ys = [block.to_ambient(linalg.vec_scale(list(e_pair[1]), w)) for w in omegas]
            for x, y in zip(xs, f_dual_vectors(form, xs, ys), strict=True):
                pairs.append((x, linalg.vec_scale(y, form.epsilon)))
        for w in witt.anisotropic:
            g1 = block.to_ambient(list(w))
            if not block.is_quadratic:
                loose.append(g1)
                continue
            g2 = block.to_ambient(linalg.vec_scale(list(w), block.field.sqrt_d))
            if form.case is FormCase.SYMPLECTIC:
                pairs.append((g1, linalg.vec_scale(g2, 1 / form(g1, g2))))
            else:
                loose.extend((g1, g2))

    values = [form(w, w) for w in loose]
    if len(loose) <= 2 and kernel_is_locally_anisotropic(form, values):
        kernel = loose
    else:
        sub = witt_decompose(form.restricted(loose))
        for e, f in sub.pairs:
            pairs.append((_combine(e, loose), _combine(f, loose)))
        kernel = [_combine(w, loose) for w in sub.anisotropic]
        if len(kernel) > 2:
            raise AnisotropicTooLarge(f"Anisotropic kernel of dimension {len(kernel)}")

    out = WittDecomposition(
        form,
        tuple((tuple(e), tuple(f)) for e, f in pairs),
        tuple(tuple(w) for w in kernel),
    )
    if not out.is_valid():
        raise AnisotropicTooLarge("Block apartments do not assemble into a Witt decomposition")
    return out


def _combine(coeffs: Sequence[FieldElement], vectors: Sequence[Vector]) -> Vector:
    out = [FieldElement.coerce(0)] * len(vectors[0])
    for c, v in zip(coeffs, vectors, strict=True):
        if c:
            out = linalg.vec_add(out, linalg.vec_scale(v, c))
    return out


def apartment_coordinates(
    function: LatticeFunction,
    witt: WittDecomposition,
) -> tuple[Fraction, ...] | None:
    """(a_1, ..., a_r) when the function is the apartment point a of witt, else None."""
    basis = witt.basis()
    if not function.is_split_by(basis):
        return None
    coords = []
    for e, _ in witt.pairs:
        a = function.alpha(list(e))
        assert a != math.inf
        coords.append(-Fraction(a))
    return tuple(coords)
