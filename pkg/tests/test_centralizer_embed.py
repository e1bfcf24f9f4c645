from fractions import Fraction

import pytest

from btembed import linalg
from btembed.centralizer_embed import (
    BetaDecomposition,
    BlockKind,
    apartment_coordinates,
    apartment_image,
    complete_tuple,
    decompose_beta,
    is_in_fixed_chamber,
    j_beta,
    jbeta_form_independence,
    minimal_polynomial,
    tuple_dual,
)
from btembed.errors import BlockMismatch, DimensionMismatch, H1Violated, NotInLieAlgebra
from btembed.field_tower import FieldLayer, fe
from btembed.herm_forms import EpsilonHermitianForm, to_matrix
from btembed.scenarios import CATALOG, ScenarioContext

F = Fraction


def test_minimal_polynomial() -> None:
    beta = [[fe(0), fe(1)], [fe(3), fe(0)]]
    assert minimal_polynomial(beta) == [-3, 0, 1]
    assert minimal_polynomial([[fe(2), fe(0)], [fe(0), fe(2)]]) == [-2, 1]


def test_ramified_field_block(sp2_ramified: ScenarioContext) -> None:
    decomp = sp2_ramified.decomp
    (block,) = decomp.blocks
    assert block.kind is BlockKind.J_O
    assert block.is_quadratic
    assert block.field.d == 3
    assert block.field.is_ramified
    assert block.m == 1
    assert block.form is not None


@pytest.mark.parametrize(
    ("name", "kinds"),
    (
        ("sp2-split-gl", [BlockKind.J_PLUS, BlockKind.J_MINUS]),
        ("u2-unramified", [BlockKind.J_O, BlockKind.J_O]),
        ("sp4-mixed", [BlockKind.J_PLUS, BlockKind.J_MINUS, BlockKind.J_O]),
        ("gl2-ramified", [BlockKind.GL]),
    ),
)
def test_block_kinds(name: str, kinds: list[BlockKind]) -> None:
    decomp = CATALOG[name].build().decomp
    assert [b.kind for b in decomp.blocks] == kinds


def test_pair_labels() -> None:
    decomp = CATALOG["sp4-mixed"].build().decomp
    assert [b.index for b in decomp.blocks] == [1, -1, 2]
    assert decomp.block(1).partner == -1
    assert decomp.block(-1).partner == 1
    assert [b.index for b in decomp.point_blocks] == [1, 2]
    with pytest.raises(BlockMismatch):
        decomp.block(5)


def test_idempotents_are_the_block_frames() -> None:
    decomp = CATALOG["sp2-split-gl"].build().decomp
    plus = decomp.block(1)
    for u in plus.f_frame:
        assert linalg.mat_vec([list(r) for r in plus.idempotent], u) == u


def _assert_structure_is_sqrt_d(decomp: BetaDecomposition) -> int:
    beta = [list(r) for r in decomp.beta]
    checked = 0
    for block in decomp.blocks:
        if block.structure is None:
            continue
        s = [list(r) for r in block.structure]
        idem = [list(r) for r in block.idempotent]
        square_on_block = linalg.mat_mul(linalg.mat_mul(s, s), idem)
        assert square_on_block == linalg.mat_scale(idem, block.field.d)
        assert linalg.mat_mul(s, beta) == linalg.mat_mul(beta, s)
        checked += 1
    return checked


@pytest.mark.parametrize("name", ("sp2-ramified", "o2-anisotropic", "sp4-mixed", "gl2-ramified"))
def test_structure_squares_to_d(name: str) -> None:
    assert _assert_structure_is_sqrt_d(CATALOG[name].build().decomp) == 1


def test_structure_with_linear_term(q3: FieldLayer) -> None:
    # x^2 - 2x - 2 has discriminant 12 = 2^2 * 3
    decomp = decompose_beta(q3, [[1, 1], [3, 1]])
    (block,) = decomp.blocks
    assert block.field.d == 3
    assert _assert_structure_is_sqrt_d(decomp) == 1
    assert block.structure == to_matrix([[0, 1], [3, 0]])


def test_non_squarefree_beta(q3: FieldLayer) -> None:
    with pytest.raises(H1Violated):
        decompose_beta(q3, [[0, 1], [0, 0]])


def test_beta_outside_lie_algebra(q3: FieldLayer, symplectic2: EpsilonHermitianForm) -> None:
    with pytest.raises(NotInLieAlgebra):
        decompose_beta(q3, [[1, 0], [0, 1]], symplectic2)


def test_beta_shape(q3: FieldLayer, symplectic2: EpsilonHermitianForm) -> None:
    with pytest.raises(DimensionMismatch):
        decompose_beta(q3, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], symplectic2)


@pytest.mark.parametrize(
    "name",
    ("sp2-ramified", "sp2-split-gl", "u2-unramified", "o2-anisotropic", "sp4-mixed"),
)
def test_image_matches_worked_example(name: str) -> None:
    ctx = CATALOG[name].build()
    image = j_beta(ctx.decomp, ctx.point)
    assert image == ctx.expected_function()
    assert ctx.form is not None
    assert image.is_self_dual(ctx.form)


def test_gl_image_up_to_translation() -> None:
    ctx = CATALOG["gl2-ramified"].build()
    image = j_beta(ctx.decomp, ctx.point)
    expected = ctx.expected_function()
    assert expected is not None
    assert image.translation_to(expected) is not None


def test_pair_block_shift_moves_image() -> None:
    ctx = CATALOG["sp2-split-gl"].build()
    base = j_beta(ctx.decomp, ctx.point)
    moved = j_beta(ctx.decomp, ctx.point.with_shifts({1: F(1, 8)}))
    assert base != moved
    assert ctx.form is not None
    assert moved.is_self_dual(ctx.form)


def test_tuple_dual_fixes_the_tuple() -> None:
    ctx = CATALOG["sp4-mixed"].build()
    functions = complete_tuple(ctx.decomp, ctx.point)
    assert sorted(functions) == [-1, 1, 2]
    assert tuple_dual(ctx.decomp, functions) == functions


def test_image_is_in_fixed_chamber(sp2_ramified: ScenarioContext) -> None:
    image = j_beta(sp2_ramified.decomp, sp2_ramified.point)
    assert is_in_fixed_chamber(sp2_ramified.decomp, image)


def test_image_lies_in_image_apartment() -> None:
    ctx = CATALOG["sp4-mixed"].build()
    witt = apartment_image(ctx.decomp, ctx.apartment)
    assert witt.is_valid()
    assert witt.index == 2
    coords = apartment_coordinates(j_beta(ctx.decomp, ctx.point), witt)
    assert coords is not None


@pytest.mark.parametrize(("u", "shift"), ((F(3), F(-1, 2)), (F(1, 3), F(1, 2)), (F(2), F(0))))
def test_form_independence(
    sp2_ramified: ScenarioContext,
    u: Fraction,
    shift: Fraction,
) -> None:
    report = jbeta_form_independence(sp2_ramified.decomp, u, sp2_ramified.point)
    assert report.ok
    assert report.expected_shift == shift
