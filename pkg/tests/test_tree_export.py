from fractions import Fraction

import pytest

from btembed.centralizer_embed import j_beta
from btembed.errors import ParameterOutOfRange, UnsupportedDimension
from btembed.scenarios import CATALOG, ScenarioContext
from btembed.tree_export import MAX_DEPTH, build_tree_ball


def test_ball_sizes(sp2_ramified: ScenarioContext) -> None:
    assert len(build_tree_ball(sp2_ramified.decomp, 0).vertices) == 1
    ball = build_tree_ball(sp2_ramified.decomp, 1)
    # q + 1 = 4 neighbours over F_3
    assert len(ball.vertices) == 5
    assert len(ball.edges) == 4
    ball = build_tree_ball(sp2_ramified.decomp, 2)
    assert len(ball.vertices) == 1 + 4 + 4 * 3


def test_unramified_tree_has_more_neighbours() -> None:
    decomp = CATALOG["u2-unramified"].build().decomp
    ball = build_tree_ball(decomp, 1)
    assert len(ball.vertices) == 1 + 10


def test_symplectic_classes_are_self_dual(sp2_ramified: ScenarioContext) -> None:
    ball = build_tree_ball(sp2_ramified.decomp, 2)
    assert all(v.self_dual for v in ball.vertices)


def test_image_spans_the_fixed_chamber(sp2_ramified: ScenarioContext) -> None:
    image = j_beta(sp2_ramified.decomp, sp2_ramified.point)
    ball = build_tree_ball(sp2_ramified.decomp, 1, image)
    stable = {v.index for v in ball.vertices if v.stable}
    assert len(stable) == 2
    assert ball.image == stable
    assert len(ball.chamber_edges()) == 1


def test_gl_tree_has_no_self_dual_marks() -> None:
    ball = build_tree_ball(CATALOG["gl2-ramified"].build().decomp, 1)
    assert not any(v.self_dual for v in ball.vertices)
    assert sum(v.stable for v in ball.vertices) == 2


def test_to_dot(sp2_ramified: ScenarioContext) -> None:
    image = j_beta(sp2_ramified.decomp, sp2_ramified.point)
    dot = build_tree_ball(sp2_ramified.decomp, 1, image).to_dot("sp2")
    assert dot.startswith('graph "sp2" {')
    assert dot.rstrip().endswith("}")
    assert dot.count(" -- ") == 4
    assert "penwidth=3" in dot
    assert "color=red" in dot


def test_limits(sp2_ramified: ScenarioContext) -> None:
    with pytest.raises(ParameterOutOfRange):
        build_tree_ball(sp2_ramified.decomp, MAX_DEPTH + 1)
    with pytest.raises(ParameterOutOfRange):
        build_tree_ball(sp2_ramified.decomp, -1)
    with pytest.raises(UnsupportedDimension):
        build_tree_ball(CATALOG["sp4-mixed"].build().decomp, 1)


def test_marked_image_is_normalized(sp2_ramified: ScenarioContext) -> None:
    image = j_beta(sp2_ramified.decomp, sp2_ramified.point)
    shifted = build_tree_ball(sp2_ramified.decomp, 1, image.shifted(Fraction(1)))
    assert shifted.image == build_tree_ball(sp2_ramified.decomp, 1, image).image
