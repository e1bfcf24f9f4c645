import logging
from fractions import Fraction

import pytest

from btembed.centralizer_embed import apartment_image, j_beta
from btembed.errors import ParameterOutOfRange
from btembed.field_tower import FieldLayer, fe
from btembed.latt_fun import LatticeFunction
from btembed.scenarios import CATALOG, ScenarioContext
from btembed.search import (
    ChamberInequality,
    Grid,
    SearchMode,
    chamber_inequalities,
    class_coordinates,
    default_mode,
    expected_chamber,
    gl_plan,
    search_unique_compatible,
)

F = Fraction


def test_grid_values() -> None:
    grid = Grid(4, F(1, 2))
    assert grid.values() == [F(-1, 2), F(-1, 4), F(0), F(1, 4), F(1, 2)]
    assert grid.contains((F(1, 4),))
    assert not grid.contains((F(1, 3),))
    assert not grid.contains((F(3, 4),))
    assert len(list(grid.candidates(2))) == 25


def test_default_mode() -> None:
    assert default_mode(CATALOG["sp2-ramified"].build().decomp) is SearchMode.FILTRATION
    assert default_mode(CATALOG["gl2-ramified"].build().decomp) is SearchMode.GL


def test_class_coordinates(q3: FieldLayer) -> None:
    basis = ((fe(1), fe(0)), (fe(0), fe(1)))
    f = LatticeFunction(q3, basis, (F(0), F(1, 2)))
    assert class_coordinates(f, basis) == (F(-1, 2),)
    assert class_coordinates(f.shifted(F(1, 3)), basis) == (F(-1, 2),)


def test_unique_compatible_point(sp2_ramified: ScenarioContext) -> None:
    result = search_unique_compatible(
        sp2_ramified.decomp,
        sp2_ramified.point,
        sp2_ramified.apartment,
        Grid(8, F(1, 2)),
    )
    assert result.mode is SearchMode.FILTRATION
    assert result.n_candidates == 9
    assert result.image_on_grid
    assert result.image == (F(-1, 4),)
    assert result.passing == ((F(-1, 4),),)
    assert result.passing == result.expected
    assert result.matches


def test_pair_block_family_in_rank_two() -> None:
    ctx = CATALOG["sp4-mixed"].build()
    grid = Grid(8, F(1, 2))
    result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, grid)
    family = tuple((x, F(-1, 4)) for x in grid.values())
    assert result.n_candidates == 81
    assert result.passing == family
    assert result.passing == result.expected
    assert result.image in family


def test_grid_too_coarse(
    sp2_ramified: ScenarioContext,
    caplog: pytest.LogCaptureFixture,
) -> None:
    caplog.set_level(logging.WARNING)
    result = search_unique_compatible(
        sp2_ramified.decomp,
        sp2_ramified.point,
        sp2_ramified.apartment,
        Grid(3, F(1, 2)),
    )
    assert not result.image_on_grid
    assert result.passing == ()
    assert result.expected == ()
    assert result.matches
    assert "GridTooCoarse" in caplog.text


def test_chamber_mode_is_the_fixed_chamber(sp2_ramified: ScenarioContext) -> None:
    grid = Grid(8, F(1, 2))
    result = search_unique_compatible(
        sp2_ramified.decomp,
        sp2_ramified.point,
        sp2_ramified.apartment,
        grid,
        SearchMode.CHAMBER,
    )
    chamber = tuple((F(k, 8),) for k in range(-4, 1))
    assert result.passing == chamber
    assert result.expected == chamber
    assert result.image in chamber
    compatible = search_unique_compatible(
        sp2_ramified.decomp,
        sp2_ramified.point,
        sp2_ramified.apartment,
        grid,
    )
    assert set(compatible.passing) < set(result.passing)


def test_chamber_inequalities(sp2_ramified: ScenarioContext) -> None:
    witt = apartment_image(sp2_ramified.decomp, sp2_ramified.apartment)
    inequalities = chamber_inequalities(sp2_ramified.decomp, witt)
    tightest = {
        c: min(q.bound for q in inequalities if q.coefficients == c) for c in ((2,), (-2,))
    }
    # 2a <= 0 and -2a <= 1
    assert tightest == {(2,): F(0), (-2,): F(1)}
    assert all(q.bound >= 0 for q in inequalities if not any(q.coefficients))
    assert expected_chamber(sp2_ramified.decomp, witt, Grid(4, F(1))) == (
        (F(-1, 2),),
        (F(-1, 4),),
        (F(0),),
    )


def test_chamber_is_larger_than_compatible_set() -> None:
    ctx = CATALOG["sp4-mixed"].build()
    grid = Grid(8, F(1, 2))
    chamber = search_unique_compatible(
        ctx.decomp,
        ctx.point,
        ctx.apartment,
        grid,
        SearchMode.CHAMBER,
    )
    compatible = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, grid)
    assert chamber.passing == chamber.expected
    assert set(compatible.passing) < set(chamber.passing)


def test_chamber_inequality_holds() -> None:
    q = ChamberInequality((1, -1), F(1, 2))
    assert q.holds((F(1, 2), F(0)))
    assert not q.holds((F(1, 2), F(-1, 8)))


def test_pair_blocks_give_a_family() -> None:
    ctx = CATALOG["sp2-split-gl"].build()
    result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, Grid(4, F(1, 2)))
    assert result.image in result.passing
    assert len(result.expected) > 1
    assert result.matches


def test_unitary_search() -> None:
    ctx = CATALOG["u2-unramified"].build()
    result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, Grid(4, F(1, 2)))
    assert result.matches
    assert result.passing == (result.image,)


def test_gl_search() -> None:
    ctx = CATALOG["gl2-ramified"].build()
    result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, Grid(8, F(1, 2)))
    assert result.mode is SearchMode.GL
    assert result.image == (F(1, 2),) or result.image == (F(-1, 2),)
    assert result.matches


def test_gl_plan_rejects_forms(sp2_ramified: ScenarioContext) -> None:
    with pytest.raises(ParameterOutOfRange):
        gl_plan(sp2_ramified.decomp, sp2_ramified.point)


def test_gl_plan_candidates_cover_the_image() -> None:
    ctx = CATALOG["gl2-ramified"].build()
    plan = gl_plan(ctx.decomp, ctx.point)
    image = j_beta(ctx.decomp, ctx.point)
    coords = plan.coordinates_of(image)
    assert coords is not None
    assert plan.candidate_function(coords).translation_to(image) is not None


def test_candidate_limit(sp2_ramified: ScenarioContext) -> None:
    with pytest.raises(ParameterOutOfRange, match="exceed the limit"):
        search_unique_compatible(
            sp2_ramified.decomp,
            sp2_ramified.point,
            sp2_ramified.apartment,
            Grid(200_000, F(1, 2)),
        )
