"""Brute-force search for the building points compatible with a centralizer point.

Candidates are apartment points with coordinates in (1/N)Z inside [-R, R]. In the
classical case the apartment is the image apartment built by `apartment_image`,
and a candidate y passes when g_{y,r} intersected with h equals h_{x,r} at every
jump. In the general linear case candidates are translation classes, represented
by offsets (0, -delta_1, ..., -delta_{n-1}) on the frame of beta, and y passes
when g~_{y,r} intersected with h~ contains h~_{x,r}. The chamber mode drops the
filtration condition and keeps the self-dual points whose lattices are o_E-stable;
its expected set comes from the linear inequalities that cut out the fixed chamber,
not from the lattice containment test the candidates go through.
"""

import itertools
import logging
import math
import os
from collections.abc import Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import assert_never

import more_itertools

from btembed import linalg
from btembed.centralizer_embed import (
    BetaDecomposition,
    BlockApartment,
    BlockKind,
    CentralBuildingPoint,
    apartment_coordinates,
    apartment_image,
    block_endomorphisms,
    complete_tuple,
    is_in_fixed_chamber,
    j_beta,
    o_e_generators,
)
from btembed.dependencies import deps
from btembed.endo_filt import (
    FiltrationProfile,
    QMatrix,
    SpaceTag,
    centralizer_filtration,
    commutant_constraints,
    first_disagreement,
    first_non_containment,
    gl_filtration,
    lie_filtration,
)
from btembed.errors import ParameterOutOfRange
from btembed.field_tower import FieldElement
from btembed.herm_forms import WittDecomposition
from btembed.latt_fun import (
    ApartmentPoint,
    LatticeFunction,
    anisotropic_offsets,
    apartment_point_to_function,
)

logger = logging.getLogger(__name__)

Coords = tuple[Fraction, ...]

MAX_CANDIDATES = 100_000


class SearchMode(StrEnum):
    FILTRATION = "filtration"
    CHAMBER = "chamber"
    GL = "gl"


@dataclass(frozen=True)
class Grid:
    denominator: int
    radius: Fraction

    def values(self) -> list[Fraction]:
        lo = math.ceil(-self.radius * self.denominator)
        hi = math.floor(self.radius * self.denominator)
        return [Fraction(k, self.denominator) for k in range(lo, hi + 1)]

    def contains(self, coords: Sequence[Fraction]) -> bool:
        return all(
            (x * self.denominator).denominator == 1 and abs(x) <= self.radius for x in coords
        )

    def candidates(self, rank: int) -> Iterator[Coords]:
        return itertools.product(self.values(), repeat=rank)


@dataclass(frozen=True)
class SearchPlan:
    """Everything a worker needs to test a candidate; plain data so it pickles."""

    mode: SearchMode
    decomp: BetaDecomposition
    basis: tuple[tuple[FieldElement, ...], ...]
    witt: WittDecomposition | None
    commutant: QMatrix
    target: FiltrationProfile | None

    @property
    def rank(self) -> int:
        if self.witt is not None:
            return self.witt.index
        return len(self.basis) - 1

    def candidate_function(self, coords: Coords) -> LatticeFunction:
        if self.witt is not None:
            return apartment_point_to_function(ApartmentPoint(coords), self.witt)
        offsets = (Fraction(0), *(-x for x in coords))
        return LatticeFunction(self.decomp.layer, self.basis, offsets)

    def coordinates_of(self, function: LatticeFunction) -> Coords | None:
        """Search coordinates of a function, or None when it is off the searched apartment."""
        if self.witt is not None:
            return apartment_coordinates(function, self.witt)
        if not function.is_split_by(self.basis):
            return None
        return class_coordinates(function, self.basis)

    def passes(self, coords: Coords) -> bool:
        y = self.candidate_function(coords)
        match self.mode:
            case SearchMode.CHAMBER:
                return is_in_fixed_chamber(self.decomp, y)
            case SearchMode.FILTRATION:
                assert self.decomp.form is not None and self.target is not None
                profile = lie_filtration(y, self.decomp.form, SpaceTag.G).intersect_subspace(
                    self.commutant,
                    SpaceTag.H,
                )
                return first_disagreement(profile, self.target) is None
            case SearchMode.GL:
                assert self.target is not None
                profile = gl_filtration(y).intersect_subspace(self.commutant, SpaceTag.H_TILDE)
                return first_non_containment(profile, self.target) is None
            case _:
                assert_never(self.mode)


@dataclass(frozen=True)
class SearchResult:
    mode: SearchMode
    grid: Grid
    n_candidates: int
    passing: tuple[Coords, ...]
    expected: tuple[Coords, ...]
    image: Coords
    image_on_grid: bool

    @property
    def matches(self) -> bool:
        return self.passing == self.expected


@dataclass(frozen=True)
class ChamberInequality:
    """sum_j coefficients[j] * a_j <= bound on apartment coordinates a."""

    coefficients: tuple[int, ...]
    bound: Fraction

    def holds(self, coords: Sequence[Fraction]) -> bool:
        terms = (c * x for c, x in zip(self.coefficients, coords, strict=True))
        return sum(terms, Fraction(0)) <= self.bound


def _offset_terms(witt: WittDecomposition) -> list[tuple[tuple[int, ...], Fraction]]:
    """Each basis offset as (coefficients on a, constant)."""
    r = witt.index
    out: list[tuple[tuple[int, ...], Fraction]] = []
    for j in range(r):
        plus = tuple(1 if i == j else 0 for i in range(r))
        out.append((plus, Fraction(0)))
        out.append((tuple(-c for c in plus), Fraction(0)))
    out.extend(((0,) * r, c) for c in anisotropic_offsets(witt))
    return out


def chamber_inequalities(
    decomp: BetaDecomposition,
    witt: WittDecomposition,
) -> list[ChamberInequality]:
    """Conditions on a for the apartment point a to have o_E-stable lattices.

    With X' the matrix of an o_E generator on the apartment basis and lambda the
    offsets, every Lambda(r) is X-stable iff v(X'_kl) >= lambda_k - lambda_l
    wherever X'_kl != 0.
    """
    basis = linalg.from_columns([list(b) for b in witt.basis()])
    basis_inv = linalg.inverse(basis)
    terms = _offset_terms(witt)
    found: set[ChamberInequality] = set()
    for gen in o_e_generators(decomp):
        moved = linalg.mat_mul(linalg.mat_mul(basis_inv, [list(r) for r in gen]), basis)
        for k, row in enumerate(moved):
            for col, x in enumerate(row):
                if not x:
                    continue
                (ck, sk), (cl, sl) = terms[k], terms[col]
                coefficients = tuple(a - b for a, b in zip(ck, cl, strict=True))
                bound = Fraction(decomp.layer.valuation(x)) - (sk - sl)
                found.add(ChamberInequality(coefficients, bound))
    return sorted(found, key=lambda q: (q.coefficients, q.bound))


def expected_chamber(
    decomp: BetaDecomposition,
    witt: WittDecomposition,
    grid: Grid,
) -> tuple[Coords, ...]:
    """Grid points of the closed o_E-fixed chamber, read off the inequalities."""
    inequalities = chamber_inequalities(decomp, witt)
    return tuple(
        c for c in grid.candidates(witt.index) if all(q.holds(c) for q in inequalities)
    )


def _evaluate_chunk(plan: SearchPlan, chunk: Sequence[Coords]) -> list[Coords]:
    return [c for c in chunk if plan.passes(c)]


def _n_workers(n_chunks: int) -> int:
    configured = deps.settings().search_workers
    if configured is not None:
        return max(1, min(configured, n_chunks))
    # Avoid maxing out the system
    _cpu_count = os.cpu_count() or 1
    return max(1, min(n_chunks, _cpu_count // 2))


def run_plan(plan: SearchPlan, grid: Grid) -> tuple[int, tuple[Coords, ...]]:
    """Test every grid candidate; the passing ones come back sorted."""
    n_values = len(grid.values())
    n_candidates = n_values**plan.rank
    if n_candidates > MAX_CANDIDATES:
        raise ParameterOutOfRange(
            f"{n_candidates} candidates exceed the limit of {MAX_CANDIDATES}; "
            "use a coarser grid or a smaller radius",
        )
    chunks = list(
        more_itertools.chunked(grid.candidates(plan.rank), deps.settings().search_chunk_size),
    )
    n_workers = _n_workers(len(chunks))
    passing: list[Coords] = []
    if n_workers == 1:
        for chunk in chunks:
            passing.extend(_evaluate_chunk(plan, chunk))
    else:
        logger.info(f"Using {n_workers} workers for {n_candidates} candidates")
        with ProcessPoolExecutor(max_workers=n_workers) as executor:
            futures = [executor.submit(_evaluate_chunk, plan, chunk) for chunk in chunks]
            for future in as_completed(futures):
                passing.extend(future.result())
    return n_candidates, tuple(sorted(passing))


def _shift_family(
    decomp: BetaDecomposition,
    point: CentralBuildingPoint,
    witt: WittDecomposition,
    grid: Grid,
) -> set[Coords]:
    """Apartment coordinates of j_beta(x) over all J_+ shifts on the grid."""
    labels = [b.index for b in decomp.of_kind(BlockKind.J_PLUS)]
    steps = Grid(grid.denominator, 2 * grid.radius).values()
    out = set()
    for extra in itertools.product(steps, repeat=len(labels)):
        shifts = {i: point.block(i).shift + s for i, s in zip(labels, extra, strict=True)}
        coords = apartment_coordinates(j_beta(decomp, point.with_shifts(shifts)), witt)
        assert coords is not None
        if grid.contains(coords):
            out.add(coords)
    return out


def classical_plan(
    decomp: BetaDecomposition,
    point: CentralBuildingPoint,
    apartment: dict[int, BlockApartment],
    mode: SearchMode = SearchMode.FILTRATION,
) -> SearchPlan:
    form = decomp.form
    assert form is not None
    witt = apartment_image(decomp, apartment)
    target = None
    if mode is SearchMode.FILTRATION:
        blocks = block_endomorphisms(decomp, complete_tuple(decomp, point), lie=True)
        target = lie_filtration(blocks, form, SpaceTag.H)
    return SearchPlan(
        mode=mode,
        decomp=decomp,
        basis=tuple(tuple(b) for b in witt.basis()),
        witt=witt,
        commutant=commutant_constraints(decomp.layer, decomp.beta),
        target=target,
    )


def gl_plan(decomp: BetaDecomposition, point: CentralBuildingPoint) -> SearchPlan:
    if decomp.form is not None:
        raise ParameterOutOfRange("The translation-class search is for the general linear case")
    functions = complete_tuple(decomp, point)
    blocks = block_endomorphisms(decomp, functions, lie=False)
    target = centralizer_filtration(blocks, decomp.layer, decomp.n, lie=False)
    basis = tuple(tuple(v) for b in decomp.blocks for v in b.f_frame)
    return SearchPlan(
        mode=SearchMode.GL,
        decomp=decomp,
        basis=basis,
        witt=None,
        commutant=commutant_constraints(decomp.layer, decomp.beta),
        target=target,
    )


def class_coordinates(
    function: LatticeFunction,
    basis: Sequence[Sequence[FieldElement]],
) -> Coords:
    """delta with function = (0, -delta) + c on `basis`, for a function split by it."""
    assert function.is_split_by(basis)
    lam = [-Fraction(function.alpha(list(b))) for b in basis]
    return tuple(lam[0] - x for x in lam[1:])


def default_mode(decomp: BetaDecomposition) -> SearchMode:
    return SearchMode.FILTRATION if decomp.form is not None else SearchMode.GL


def make_plan(
    decomp: BetaDecomposition,
    point: CentralBuildingPoint,
    apartment: dict[int, BlockApartment],
    mode: SearchMode,
) -> SearchPlan:
    match mode:
        case SearchMode.FILTRATION | SearchMode.CHAMBER:
            return classical_plan(decomp, point, apartment, mode)
        case SearchMode.GL:
            return gl_plan(decomp, point)
        case _:
            assert_never(mode)


def search_unique_compatible(
    decomp: BetaDecomposition,
    point: CentralBuildingPoint,
    apartment: dict[int, BlockApartment],
    grid: Grid,
    mode: SearchMode | None = None,
) -> SearchResult:
    """All grid points compatible with x, next to what the theory predicts."""
    if mode is None:
        mode = default_mode(decomp)
    plan = make_plan(decomp, point, apartment, mode)
    image = plan.coordinates_of(j_beta(decomp, point))
    assert image is not None, "j_beta(x) is not in the searched apartment"
    if plan.witt is not None:
        expected = _shift_family(decomp, point, plan.witt, grid)
    else:
        expected = {image} if grid.contains(image) else set()

    on_grid = grid.contains(image)
    if not on_grid:
        logger.warning(
            f"GridTooCoarse: j_beta(x) has coordinates {[str(x) for x in image]}, "
            f"not on the grid (1/{grid.denominator})Z within radius {grid.radius}",
        )
    n_candidates, passing = run_plan(plan, grid)
    if mode is SearchMode.CHAMBER:
        assert plan.witt is not None
        expected_sorted: tuple[Coords, ...] = expected_chamber(decomp, plan.witt, grid)
    else:
        expected_sorted = tuple(sorted(expected))
    logger.info(
        f"{mode} search: {len(passing)} of {n_candidates} candidates pass, "
        f"{len(expected_sorted)} expected",
    )
    return SearchResult(
        mode=mode,
        grid=grid,
        n_candidates=n_candidates,
        passing=passing,
        expected=expected_sorted,
        image=image,
        image_on_grid=on_grid,
    )
