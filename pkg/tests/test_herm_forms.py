from fractions import Fraction

import pytest

from btembed.dependencies import deps
from btembed.dvr_lattice import DvrLattice
from btembed.errors import (
    NotEpsilonHermitian,
    NotSplitOverQ,
    ParameterOutOfRange,
    RankDeficient,
    UnsupportedDimension,
)
from btembed.field_tower import FieldLayer, base_layer, fe
from btembed.herm_forms import (
    EpsilonHermitianForm,
    FormCase,
    dual_lattice,
    is_isotropic_over_q,
    kernel_is_locally_anisotropic,
    rational_isotropic_vector,
    witt_decompose,
)
from btembed.settings import Settings


def test_cases(
    q3: FieldLayer,
    unramified3: FieldLayer,
    symplectic2: EpsilonHermitianForm,
) -> None:
    assert symplectic2.case is FormCase.SYMPLECTIC
    assert EpsilonHermitianForm(q3, ((1, 0), (0, 1))).case is FormCase.ORTHOGONAL
    assert EpsilonHermitianForm(unramified3, ((1, 0), (0, -1))).case is FormCase.UNITARY


def test_validation(q3: FieldLayer, unramified3: FieldLayer) -> None:
    with pytest.raises(NotEpsilonHermitian):
        EpsilonHermitianForm(q3, ((0, 1), (1, 0)), -1)
    with pytest.raises(RankDeficient):
        EpsilonHermitianForm(q3, ((1, 1), (1, 1)))
    with pytest.raises(ParameterOutOfRange):
        EpsilonHermitianForm(q3, ((1,),), 2)
    with pytest.raises(NotEpsilonHermitian):
        # a hermitian Gram matrix needs conjugate-symmetric off-diagonal entries
        EpsilonHermitianForm(unramified3, ((1, fe(0, 1, 2)), (fe(0, 1, 2), 1)))


def test_sesquilinear(unramified3: FieldLayer) -> None:
    form = EpsilonHermitianForm(unramified3, ((1, 0), (0, -1)))
    s = fe(0, 1, 2)
    x = [s, fe(1)]
    y = [fe(1), fe(0)]
    # sigma-linear in the first argument
    assert form([s * x[0], s * x[1]], y) == s.conj() * form(x, y)
    assert form(y, x) == form(x, y).conj()


def test_adjoint(symplectic2: EpsilonHermitianForm) -> None:
    a = [[fe(1), fe(2)], [fe(3), fe(4)]]
    adj = symplectic2.adjoint(a)
    x = [fe(1), fe(-2)]
    y = [fe(5), fe(7)]
    ax = [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    adj_y = [adj[0][0] * y[0] + adj[0][1] * y[1], adj[1][0] * y[0] + adj[1][1] * y[1]]
    assert symplectic2(ax, y) == symplectic2(x, adj_y)


def test_scaled(unramified3: FieldLayer) -> None:
    form = EpsilonHermitianForm(unramified3, ((1, 0), (0, -1)))
    skew = form.scaled(fe(0, 1, 2))
    assert skew.epsilon == -1
    assert form.scaled(3).epsilon == 1
    with pytest.raises(NotEpsilonHermitian):
        form.scaled(fe(1, 1, 2))
    with pytest.raises(ParameterOutOfRange):
        form.scaled(0)


def test_dual_lattice(symplectic2: EpsilonHermitianForm) -> None:
    standard = DvrLattice.standard(3, 2)
    assert dual_lattice(standard, symplectic2) == standard.scaled(1)
    edge = DvrLattice.from_generators(
        3,
        2,
        [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(3)]],
    )
    assert dual_lattice(edge, symplectic2) == edge
    with pytest.raises(RankDeficient):
        dual_lattice(DvrLattice.from_generators(3, 2, [[Fraction(1), Fraction(0)]]), symplectic2)


def test_witt_symplectic(symplectic2: EpsilonHermitianForm) -> None:
    witt = witt_decompose(symplectic2)
    assert witt.index == 1
    assert witt.anisotropic == ()
    assert witt.is_valid()
    assert witt.basis() == [[fe(1), fe(0)], [fe(0), fe(1)]]


def test_witt_split_orthogonal(q3: FieldLayer) -> None:
    witt = witt_decompose(EpsilonHermitianForm(q3, ((1, 0), (0, -1))))
    assert witt.index == 1
    assert witt.is_valid()


def test_witt_anisotropic_orthogonal(q3: FieldLayer) -> None:
    form = EpsilonHermitianForm(q3, ((1, 0), (0, -3)))
    witt = witt_decompose(form)
    assert witt.index == 0
    assert len(witt.anisotropic) == 2
    assert kernel_is_locally_anisotropic(form, witt.anisotropic_values())


def test_witt_unitary(unramified3: FieldLayer) -> None:
    form = EpsilonHermitianForm(unramified3, ((1, 0), (0, -1)))
    witt = witt_decompose(form)
    assert witt.index == 1
    assert witt.is_valid()
    skew = witt_decompose(form.scaled(fe(0, 1, 2)))
    assert skew.index == 1


def test_witt_dimension_cap(symplectic2: EpsilonHermitianForm) -> None:
    with deps.override(settings_partial=Settings(max_witt_dimension=1)):
        with pytest.raises(UnsupportedDimension):
            witt_decompose(symplectic2)


def test_trace_pairing_unramified(unramified3: FieldLayer) -> None:
    form = EpsilonHermitianForm(unramified3, ((1,),))
    # Tr(conj(x) y) on (a, c) coordinates: 2 a a' - 4 c c'
    assert form.trace_pairing() == [[2, 0], [0, -4]]


@pytest.mark.parametrize(
    ("coeffs", "expected"),
    (
        ((1, 1), False),
        ((1, -1), True),
        ((1, 1, 1), False),
        ((1, 1, -5), True),
        ((1, 1, 1, -7), False),
        ((1, 1, -1, 1), True),
        ((1, 1, 1, 1, -7), True),
        ((2, 0, 3), True),
    ),
)
def test_is_isotropic_over_q(coeffs: tuple[int, ...], expected: bool) -> None:
    assert is_isotropic_over_q([Fraction(c) for c in coeffs]) is expected


@pytest.mark.parametrize("coeffs", ((1, 1, -1, 1), (1, 1, 1, 1, -7), (3, -1, 1, 1, 1, 1)))
def test_rational_isotropic_vector(coeffs: tuple[int, ...]) -> None:
    x = rational_isotropic_vector([Fraction(c) for c in coeffs])
    assert x is not None
    assert any(x)
    assert sum(c * t * t for c, t in zip(coeffs, x, strict=True)) == 0


def test_rational_isotropic_vector_none() -> None:
    assert rational_isotropic_vector([Fraction(1)] * 3) is None
    assert rational_isotropic_vector([Fraction(c) for c in (1, 1, 1, -7)]) is None


def test_witt_orthogonal_rank_four_kernel(q3: FieldLayer) -> None:
    # no pair or triple of <1, 1, 1, -6> has a rational zero, but 1 + 1 + 4 = 6
    form = EpsilonHermitianForm(q3, ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, -6)))
    witt = witt_decompose(form)
    assert witt.is_valid()
    assert witt.index == 1
    assert len(witt.anisotropic) == 2


def test_witt_not_split_over_q() -> None:
    # -1 is a square in Q_5 but not in Q
    form = EpsilonHermitianForm(base_layer(5), ((1, 0), (0, 1)))
    with pytest.raises(NotSplitOverQ, match="anisotropic over Q"):
        witt_decompose(form)
