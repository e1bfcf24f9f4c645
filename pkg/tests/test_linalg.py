from fractions import Fraction

import pytest

from btembed import linalg
from btembed.errors import DimensionMismatch, RankDeficient
from btembed.field_tower import FieldElement, fe

F = Fraction


def test_inverse_and_solve() -> None:
    a = [[F(2), F(1)], [F(1), F(1)]]
    inv = linalg.inverse(a)
    assert inv == [[1, -1], [-1, 2]]
    assert linalg.mat_mul(a, inv) == linalg.identity(2, F(1))
    assert linalg.solve(a, [F(3), F(2)]) == [1, 1]


def test_singular_matrix() -> None:
    a = [[F(1), F(2)], [F(2), F(4)]]
    assert linalg.rank(a) == 1
    with pytest.raises(RankDeficient):
        linalg.inverse(a)
    with pytest.raises(RankDeficient):
        linalg.solve(a, [F(1), F(0)])


def test_nullspace() -> None:
    kernel = linalg.nullspace([[F(1), F(1)]], 2, F(1))
    assert kernel == [[-1, 1]]
    assert linalg.nullspace([], 2, F(1)) == [[1, 0], [0, 1]]


def test_shape_errors() -> None:
    with pytest.raises(DimensionMismatch):
        linalg.mat_mul([[F(1), F(2)]], [[F(1), F(2)]])
    with pytest.raises(DimensionMismatch):
        linalg.mat_add([[F(1)]], [[F(1), F(2)]])
    with pytest.raises(DimensionMismatch):
        linalg.inverse([[F(1), F(2)]])


def test_span_helpers() -> None:
    vectors = [[F(1), F(0)], [F(2), F(0)], [F(0), F(1)]]
    assert linalg.span_basis(vectors) == [[1, 0], [0, 1]]
    assert linalg.in_span(vectors[:2], [F(5), F(0)])
    assert not linalg.in_span(vectors[:2], [F(0), F(1)])
    assert linalg.in_span([], [F(0), F(0)])


def test_block_diag() -> None:
    out = linalg.block_diag([[[F(1)]], [[F(2), F(3)], [F(4), F(5)]]], F(0))
    assert out == [[1, 0, 0], [0, 2, 3], [0, 4, 5]]


def test_works_over_quadratic_layer() -> None:
    s = fe(0, 1, 2)
    a = [[s, fe(1)], [fe(0), s]]
    inv = linalg.inverse(a)
    assert linalg.mat_mul(a, inv) == linalg.identity(2, fe(1))
    assert inv[0][0] == fe(0, F(1, 2), 2)


def test_nullspace_has_a_one_in_each_free_column() -> None:
    a = [[F(1), F(2), F(0), F(3)], [F(2), F(4), F(1), F(10)]]
    kernel = linalg.nullspace(a, 4, F(1))
    assert kernel == [[-2, 1, 0, 0], [-3, 0, -4, 1]]
    for v in kernel:
        assert linalg.mat_vec(a, v) == [0, 0]


def test_scalar_type_is_preserved() -> None:
    a = [[F(2), F(1)], [F(1), F(1)]]
    assert all(type(x) is Fraction for row in linalg.inverse(a) for x in row)
    lifted = [[fe(2), fe(1)], [fe(1), fe(1)]]
    assert all(type(x) is FieldElement for row in linalg.inverse(lifted) for x in row)


def test_solve_over_quadratic_layer() -> None:
    s = fe(0, 1, 2)
    a = [[s, fe(1)], [fe(0), s]]
    assert linalg.solve(a, [fe(1), s]) == [fe(0), fe(1)]
    assert linalg.rank(a) == 2


def test_layers_do_not_mix() -> None:
    with pytest.raises(ValueError, match="do not mix"):
        linalg.mat_mul([[fe(0, 1, 2)]], [[fe(0, 1, 3)]])


def test_span_basis_skips_dependent_vectors() -> None:
    vectors = [[F(0), F(0)], [F(1), F(0)], [F(2), F(0)], [F(0), F(1)]]
    assert linalg.span_basis(vectors) == [[1, 0], [0, 1]]
