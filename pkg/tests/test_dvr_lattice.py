from fractions import Fraction

import pytest

from btembed.dvr_lattice import DvrLattice, padic_fractional_part, vp
from btembed.errors import DimensionMismatch, RankDeficient

F = Fraction
P = 3


def lattice(*gens: tuple[int | Fraction, ...]) -> DvrLattice:
    return DvrLattice.from_generators(P, len(gens[0]), [[F(x) for x in g] for g in gens])


def test_canonical_form_ignores_units() -> None:
    standard = DvrLattice.standard(P, 2)
    assert lattice((2, 0), (0, 5)) == standard
    assert lattice((1, 1), (0, 1)) == standard
    assert lattice((F(1, 2), 0), (0, 1)) == standard
    assert lattice((F(1, 3),)) == lattice((1,)).scaled(-1)


def test_rank_and_redundant_generators() -> None:
    lat = lattice((1, 2, 3), (2, 4, 6))
    assert lat.rank == 1
    assert not lat.is_full_rank


def test_scaled_and_containment() -> None:
    standard = DvrLattice.standard(P, 2)
    small = standard.scaled(1)
    assert small.contains([F(3), F(0)])
    assert not small.contains([F(1), F(0)])
    assert standard.contains_lattice(small)
    assert not small.contains_lattice(standard)
    assert small.contains([F(0), F(0)])


def test_sum_and_intersection() -> None:
    a = lattice((1, 0), (0, 3))
    b = lattice((3, 0), (0, 1))
    assert a + b == DvrLattice.standard(P, 2)
    assert a.intersection(b) == DvrLattice.standard(P, 2).scaled(1)
    assert a.intersection(DvrLattice.zero(P, 2)).rank == 0


def test_image() -> None:
    a = lattice((1, 0), (0, 3))
    swap = [[F(0), F(1)], [F(1), F(0)]]
    assert a.image(swap) == lattice((3, 0), (0, 1))


def test_intersect_subspace() -> None:
    standard = DvrLattice.standard(P, 2)
    diagonal = standard.intersect_subspace([[F(1), F(-1)]])
    assert diagonal == lattice((1, 1))
    assert standard.intersect_subspace([]) == standard


def test_dual() -> None:
    standard = DvrLattice.standard(P, 2)
    identity = [[F(1), F(0)], [F(0), F(1)]]
    assert standard.dual(identity) == standard.scaled(1)
    symplectic = [[F(0), F(1)], [F(-1), F(0)]]
    a = lattice((1, 0), (0, 3))
    assert a.dual(symplectic) == a
    with pytest.raises(RankDeficient):
        DvrLattice.zero(P, 2).dual(identity)


def test_generator_length_is_checked() -> None:
    with pytest.raises(DimensionMismatch):
        DvrLattice.from_generators(P, 2, [[F(1)]])
    with pytest.raises(DimensionMismatch):
        DvrLattice.standard(P, 2) + DvrLattice.standard(P, 3)


@pytest.mark.parametrize(
    ("z", "expected"),
    (
        (F(1, 3), F(1, 3)),
        (F(-1, 3), F(2, 3)),
        (F(1, 6), F(2, 3)),
        (F(5, 2), F(0)),
    ),
)
def test_padic_fractional_part(z: Fraction, expected: Fraction) -> None:
    out = padic_fractional_part(z, P)
    assert out == expected
    assert vp(z - out, P) >= 0


def test_canonical_basis_values() -> None:
    assert lattice((2, F(2, 3)), (0, 5), (1, F(4, 3))).basis == ((1, F(1, 3)), (0, 1))
    # 5/9 is reduced against the pivot 1/3 to its residue 2/9
    assert lattice((1, F(5, 9)), (0, F(1, 3))).basis == ((1, F(2, 9)), (0, F(1, 3)))
    assert lattice((1, 2, 3), (2, 4, 6)).basis == ((1, 2, 3),)


def test_canonical_basis_ignores_generator_order() -> None:
    gens = [(F(1, 2), F(5, 9), 0), (0, F(1, 3), 7), (4, 0, F(1, 9)), (3, 3, 3)]
    first = lattice(*gens)
    assert first.is_full_rank
    assert lattice(*reversed(gens)) == first
    assert lattice(*gens[1:], gens[0]) == first
