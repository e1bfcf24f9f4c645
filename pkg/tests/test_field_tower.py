import math
import random
from fractions import Fraction

import pytest

from btembed.errors import (
    DegenerateExtension,
    ParameterOutOfRange,
    UnsupportedResidueChar,
    UnsupportedTowerDepth,
)
from btembed.field_tower import (
    DyadicModel,
    FieldElement,
    FieldLayer,
    PrimeLocalModel,
    SigmaLinearForm,
    base_layer,
    build_sigma_equivariant_form,
    compare_linear_forms,
    fe,
    local_model,
    make_quadratic_extension,
    squarefree_part,
)


def test_arithmetic_in_quadratic_layer() -> None:
    x = fe(1, 1, 2)
    y = fe(1, -1, 2)
    assert x * y == -1
    assert x + y == 2
    assert (x / x) == 1
    assert 1 / x == fe(-1, 1, 2)
    assert x.conj() == y
    assert x.norm() == -1
    assert x.trace() == 2


def test_rational_elements_collapse() -> None:
    assert FieldElement(Fraction(3), Fraction(2), 1) == 5
    assert fe("1/2") == Fraction(1, 2)
    assert hash(fe(3)) == hash(Fraction(3))
    assert fe(0, 1, 2) * fe(0, 1, 2) == 2
    assert fe(2, 0, 2).is_rational


def test_mixing_layers_raises() -> None:
    with pytest.raises(ValueError, match="do not mix"):
        fe(0, 1, 2) + fe(0, 1, 3)


def test_division_by_zero() -> None:
    with pytest.raises(ZeroDivisionError):
        fe(1) / fe(0)


def test_prime_model_rejects_bad_primes() -> None:
    with pytest.raises(UnsupportedResidueChar):
        PrimeLocalModel(2)
    with pytest.raises(ParameterOutOfRange):
        PrimeLocalModel(9)


def test_valuation() -> None:
    model = PrimeLocalModel(3)
    assert model.valuation(Fraction(9, 2)) == 2
    assert model.valuation(Fraction(2, 27)) == -3
    assert model.valuation(0) == math.inf
    assert model.unit_part(Fraction(18)) == 2


def test_squares_and_hilbert_symbol() -> None:
    model = PrimeLocalModel(3)
    assert model.is_square(Fraction(7))
    assert not model.is_square(Fraction(2))
    assert not model.is_square(Fraction(3))
    assert model.is_square(Fraction(9, 4))
    # (3, 3)_3 = (3, -1)_3 = (-1 / 3) = -1
    assert model.hilbert_symbol(Fraction(3), Fraction(3)) == -1
    assert model.hilbert_symbol(Fraction(2), Fraction(5)) == 1


@pytest.mark.parametrize(
    ("coeffs", "isotropic"),
    (
        ((1, -1), True),
        ((1, -3), False),
        ((1, -2), False),
        ((1, 1, 1), True),
        ((1, 1, 1, 1, 1), True),
        ((5,), False),
    ),
)
def test_diagonal_form_isotropy(coeffs: tuple[int, ...], isotropic: bool) -> None:
    model = PrimeLocalModel(3)
    assert model.diagonal_form_is_isotropic([Fraction(c) for c in coeffs]) is isotropic


def test_ramified_layer(ramified3: FieldLayer) -> None:
    assert ramified3.d == 3
    assert ramified3.ramification_index == 2
    assert ramified3.residue_field_size == 3
    assert ramified3.uniformizer == fe(0, 1, 3)
    assert ramified3.valuation(ramified3.uniformizer) == Fraction(1, 2)
    assert ramified3.valuation(fe(1, 1, 3)) == 0
    assert ramified3.valuation(fe(3, 1, 3)) == Fraction(1, 2)


def test_unramified_layer(unramified3: FieldLayer) -> None:
    assert unramified3.ramification_index == 1
    assert unramified3.residue_field_size == 9
    assert unramified3.uniformizer == 3
    assert unramified3.valuation(fe(0, 1, 2)) == 0
    assert unramified3.valuation(fe(3, 6, 2)) == 1


def test_flatten_unflatten(unramified3: FieldLayer) -> None:
    v = [fe(1, 2, 2), fe(3)]
    flat = unramified3.flatten(v)
    assert flat == [1, 2, 3, 0]
    assert unramified3.unflatten(flat) == v


def test_mult_matrix_matches_multiplication(ramified3: FieldLayer) -> None:
    x = fe(2, 5, 3)
    y = fe(-1, 4, 3)
    m = ramified3.mult_matrix(x)
    flat = ramified3.flatten([y])
    product = [sum(m[i][j] * flat[j] for j in range(2)) for i in range(2)]
    assert product == ramified3.flatten([x * y])


def test_random_element_is_in_layer(unramified3: FieldLayer) -> None:
    rng = random.Random(0)
    for _ in range(10):
        assert unramified3.contains(unramified3.random_element(rng))


@pytest.mark.parametrize("d", (0, 4, 7, 9))
def test_degenerate_extensions(q3: FieldLayer, d: int) -> None:
    with pytest.raises(DegenerateExtension):
        make_quadratic_extension(q3, d)


def test_extension_uses_squarefree_part(q3: FieldLayer) -> None:
    assert make_quadratic_extension(q3, 12).d == 3
    assert squarefree_part(12) == 3
    assert squarefree_part(-8) == -2


def test_tower_depth_is_capped(ramified3: FieldLayer) -> None:
    with pytest.raises(UnsupportedTowerDepth):
        make_quadratic_extension(ramified3, 2)


def test_sigma_equivariant_form(ramified3: FieldLayer, q3: FieldLayer) -> None:
    lam = build_sigma_equivariant_form(ramified3, q3)
    assert lam.is_normalized()
    assert lam(fe(5, 7, 3)) == 5 * lam.scale
    x = fe(2, 1, 3)
    assert lam.is_equivariant_at(x)
    assert lam.fixed_field == base_layer(3)


def test_compare_linear_forms(ramified3: FieldLayer, q3: FieldLayer) -> None:
    lam = build_sigma_equivariant_form(ramified3, q3)
    assert compare_linear_forms(lam, lam.twisted(Fraction(2))) == 2


def test_sigma_form_over_quadratic_base(ramified3: FieldLayer, unramified3: FieldLayer) -> None:
    with pytest.raises(UnsupportedTowerDepth):
        SigmaLinearForm(ramified3, unramified3)
    with pytest.raises(ParameterOutOfRange):
        SigmaLinearForm(ramified3, base_layer(3), Fraction(0))


def test_dyadic_square_classes() -> None:
    two = DyadicModel()
    assert two.is_square(Fraction(17))
    assert two.is_square(Fraction(-7))
    assert two.is_square(Fraction(4, 9))
    assert not two.is_square(Fraction(5))
    assert not two.is_square(Fraction(2))


def test_dyadic_hilbert_symbol() -> None:
    two = DyadicModel()
    assert two.hilbert_symbol(Fraction(-1), Fraction(-1)) == -1
    assert two.hilbert_symbol(Fraction(2), Fraction(5)) == -1
    assert two.hilbert_symbol(Fraction(2), Fraction(7)) == 1
    assert two.hilbert_symbol(Fraction(3), Fraction(5)) == 1


def test_local_model_picks_the_place() -> None:
    assert isinstance(local_model(2), DyadicModel)
    assert isinstance(local_model(5), PrimeLocalModel)
    # sums of three squares miss 7 mod 8
    assert not local_model(2).diagonal_form_is_isotropic([Fraction(1)] * 3)
    assert local_model(5).diagonal_form_is_isotropic([Fraction(1)] * 3)
