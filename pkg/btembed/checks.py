"""Property checks run against a scenario, and the report they produce.

Each check takes the built scenario and a seeded `random.Random` and returns an
`Outcome`. A failing outcome always carries a witness: the serialized point,
function or lattice on which the property broke.
"""

import logging
import random
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
from fractions import Fraction
from typing import Annotated, Any

from pydantic import BaseModel, Field, model_validator

from btembed import linalg
from btembed.centralizer_embed import (
    BlockKind,
    CentralBuildingPoint,
    apartment_coordinates,
    apartment_image,
    block_endomorphisms,
    central_barycenter,
    compare_block_duals,
    complete_tuple,
    is_in_fixed_chamber,
    j_beta,
    jbeta_form_independence,
    random_central_point,
    tuple_dual,
)
from btembed.dependencies import deps
from btembed.endo_filt import (
    FiltrationProfile,
    SpaceTag,
    centralizer_filtration,
    commutant_constraints,
    end_function,
    end_lattice_image,
    end_lattice_oracle,
    first_disagreement,
    lie_constraints,
    lie_filtration,
    recover_self_dual,
    trace_dual,
)
from btembed.errors import ScenarioParseError
from btembed.field_tower import FieldElement, FieldLayer
from btembed.herm_forms import EpsilonHermitianForm, witt_decompose
from btembed.latt_fun import (
    LatticeFunction,
    apartment_point_to_function,
    barycenter,
    latt_to_norm,
    norm_to_latt,
    random_apartment_point,
    random_lattice_function,
)
from btembed.scenarios import Scenario, ScenarioContext
from btembed.search import (
    Grid,
    SearchMode,
    SearchResult,
    default_mode,
    make_plan,
    search_unique_compatible,
)
from btembed.serialize import (
    encode_function,
    encode_lattice,
    encode_point,
    encode_rational_vector,
    encode_vector,
)
from btembed.util import format_fraction

logger = logging.getLogger(__name__)

REFINEMENT_DENOMINATORS = (4, 8, 12)
BARYCENTER_WEIGHTS = (Fraction(1, 4), Fraction(1, 2), Fraction(2, 3))
MAX_FILTRATION_POINTS = 10


class Verdict(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


class CheckResult(BaseModel):
    name: str
    verdict: Verdict
    witness: Annotated[
        Any | None,
        Field(description="Serialized counterexample; always present on failure"),
    ] = None
    details: Annotated[dict[str, Any], Field(description="Check-specific summary")] = {}
    millis: Annotated[int, Field(description="Wall time of the check")]

    @model_validator(mode="after")
    def _failure_has_witness(self) -> "CheckResult":
        if self.verdict is Verdict.FAIL and self.witness is None:
            raise ValueError(f"Check {self.name} failed without a witness")
        return self


class Report(BaseModel):
    scenario: str
    prime: int
    checks: list[CheckResult]
    warnings: Annotated[
        list[str],
        Field(description="Non-fatal findings, like a grid too coarse to hold j_beta(x)"),
    ] = []

    @property
    def passed(self) -> bool:
        return all(c.verdict is not Verdict.FAIL for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


@dataclass(frozen=True)
class Outcome:
    verdict: Verdict
    witness: Any = None
    details: dict[str, Any] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @classmethod
    def passed(cls, **details: Any) -> "Outcome":
        return cls(Verdict.PASS, details=details)

    @classmethod
    def failed(cls, witness: Any, **details: Any) -> "Outcome":
        assert witness is not None
        return cls(Verdict.FAIL, witness=witness, details=details)

    @classmethod
    def skipped(cls, reason: str) -> "Outcome":
        return cls(Verdict.SKIP, details={"reason": reason})


CheckFn = Callable[[ScenarioContext, random.Random], Outcome]
Requirement = Callable[[ScenarioContext], str | None]


@dataclass(frozen=True)
class Check:
    name: str
    fn: CheckFn
    requirements: tuple[Requirement, ...]
    description: str

    def skip_reason(self, ctx: ScenarioContext) -> str | None:
        for requirement in self.requirements:
            reason = requirement(ctx)
            if reason is not None:
                return reason
        return None


CHECKS: dict[str, Check] = {}


def register(name: str, *requirements: Requirement) -> Callable[[CheckFn], CheckFn]:
    def decorator(fn: CheckFn) -> CheckFn:
        assert name not in CHECKS, f"Duplicate check {name}"
        doc = (fn.__doc__ or "").strip().splitlines()
        CHECKS[name] = Check(name, fn, requirements, doc[0] if doc else "")
        return fn

    return decorator


def classical(ctx: ScenarioContext) -> str | None:
    return None if ctx.is_classical else "needs an epsilon-hermitian form"


def with_pairs(ctx: ScenarioContext) -> str | None:
    return None if ctx.has_pairs else "no blocks swapped by the involution"


def with_fixed_blocks(ctx: ScenarioContext) -> str | None:
    if ctx.decomp.of_kind(BlockKind.J_O):
        return None
    return "no blocks fixed by the involution"


def _samples() -> int:
    return deps.settings().property_samples


def _form(ctx: ScenarioContext) -> EpsilonHermitianForm:
    assert ctx.form is not None
    return ctx.form


def _random_rational(rng: random.Random, den: int = 12) -> Fraction:
    return Fraction(rng.randint(-den, den), den)


def _random_vector(layer: FieldLayer, n: int, rng: random.Random) -> list[FieldElement]:
    while True:
        out = [layer.random_element(rng) for _ in range(n)]
        if any(out):
            return out


def _random_basis(layer: FieldLayer, m: int, rng: random.Random) -> list[list[FieldElement]]:
    while True:
        basis = [[layer.random_element(rng) for _ in range(m)] for _ in range(m)]
        if linalg.rank(basis) == m:
            return basis


def _random_point(ctx: ScenarioContext, rng: random.Random) -> CentralBuildingPoint:
    """A random apartment point of the centralizer building, with random J_+ shifts."""
    point = random_central_point(ctx.decomp, ctx.apartment, rng)
    shifts = {b.index: _random_rational(rng) for b in ctx.decomp.of_kind(BlockKind.J_PLUS)}
    return point.with_shifts(shifts)


def _sample_points(ctx: ScenarioContext, rng: random.Random, k: int) -> list[CentralBuildingPoint]:
    return [ctx.point, *(_random_point(ctx, rng) for _ in range(max(k - 1, 0)))]


def _h_profile(ctx: ScenarioContext, point: CentralBuildingPoint) -> FiltrationProfile:
    blocks = block_endomorphisms(ctx.decomp, complete_tuple(ctx.decomp, point), lie=True)
    return lie_filtration(blocks, _form(ctx), SpaceTag.H)


def _profile_witness(
    ctx: ScenarioContext,
    point: CentralBuildingPoint,
    r: Fraction,
    got: FiltrationProfile,
    want: FiltrationProfile,
) -> dict[str, Any]:
    return {
        "point": encode_point(point, ctx.decomp),
        "r": format_fraction(r),
        "got": encode_lattice(got.at(r)),
        "want": encode_lattice(want.at(r)),
    }


def _first_mismatch(
    got: FiltrationProfile,
    want: FiltrationProfile,
    extra: Sequence[Fraction],
) -> Fraction | None:
    r = first_disagreement(got, want)
    if r is not None:
        return r
    return next((s for s in extra if got.at(s) != want.at(s)), None)


@register("duality-involution", classical)
def check_duality_involution(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """Lambda^sharp^sharp = Lambda for random split lattice functions."""
    form = _form(ctx)
    for _ in range(_samples()):
        function = random_lattice_function(ctx.layer, form.n, rng)
        if function.dual(form).dual(form) != function:
            return Outcome.failed({"function": encode_function(function)})
    return Outcome.passed(samples=_samples())


@register("dual-norm", classical)
def check_dual_norm(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """The dual norm is the norm of the dual function; self-dual points are fixed."""
    form = _form(ctx)
    for _ in range(_samples()):
        function = random_lattice_function(ctx.layer, form.n, rng)
        norm = latt_to_norm(function)
        if norm_to_latt(norm) != function:
            return Outcome.failed({"function": encode_function(function)}, stage="round trip")
        dual_norm = latt_to_norm(function.dual(form))
        vectors = [list(b) for b in function.dual(form).basis]
        vectors.append(_random_vector(ctx.layer, form.n, rng))
        for x in vectors:
            if dual_norm(x) != norm.dual_norm_value(x, form):
                return Outcome.failed(
                    {"function": encode_function(function), "vector": encode_vector(x)},
                    stage="dual norm",
                )
    witt = witt_decompose(form)
    for _ in range(_samples()):
        point = apartment_point_to_function(random_apartment_point(witt, rng), witt)
        if not point.is_self_dual(form):
            return Outcome.failed({"function": encode_function(point)}, stage="fixed points")
    return Outcome.passed(samples=_samples())


@register("square-recovery", classical)
def check_square_recovery(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """The self-dual function is recovered from End(Lambda), shifting by -v(u)/2 under u h."""
    form = _form(ctx)
    witt = witt_decompose(form)
    scalings = [Fraction(ctx.layer.p), Fraction(2)]
    for _ in range(_samples()):
        point = apartment_point_to_function(random_apartment_point(witt, rng), witt)
        s = _random_rational(rng)
        if recover_self_dual(point.shifted(s), form) != point:
            return Outcome.failed(
                {"function": encode_function(point), "shift": format_fraction(s)},
            )
        for u in scalings:
            v = ctx.layer.valuation(FieldElement.coerce(u))
            want = point.shifted(-Fraction(v) / 2)
            if recover_self_dual(point, form.scaled(u)) != want:
                return Outcome.failed(
                    {"function": encode_function(point), "u": format_fraction(u)},
                )
    return Outcome.passed(samples=_samples(), scalings=[format_fraction(u) for u in scalings])


@register("block-duals", classical, with_fixed_blocks)
def check_block_duals(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """On a block fixed by sigma, the h-dual of an o_E-lattice is its h_i-dual."""
    blocks = ctx.decomp.of_kind(BlockKind.J_O)
    for block in blocks:
        for _ in range(_samples()):
            basis = _random_basis(block.field, block.m, rng)
            if not compare_block_duals(ctx.decomp, block.index, basis):
                return Outcome.failed(
                    {"block": block.index, "lattice": [encode_vector(b) for b in basis]},
                )
    return Outcome.passed(blocks=[b.index for b in blocks], samples=_samples())


@register("form-independence", classical)
def check_form_independence(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """Rebuilding j_beta for u h changes it only by the shift -v(u)/2."""
    p = ctx.layer.p
    scalings = [Fraction(p), Fraction(1, p), Fraction(2)]
    for u in scalings:
        for point in _sample_points(ctx, rng, _samples()):
            report = jbeta_form_independence(ctx.decomp, u, point)
            if not report.ok:
                return Outcome.failed(
                    {"point": encode_point(point, ctx.decomp), "u": format_fraction(u)},
                    end_equal=report.end_equal,
                    shift_consistent=report.shift_consistent,
                )
    return Outcome.passed(scalings=[format_fraction(u) for u in scalings])


@register("apartment-image", classical)
def check_apartment_image(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """Apartment points of the centralizer land in one apartment of the building of G."""
    witt = apartment_image(ctx.decomp, ctx.apartment)
    for point in _sample_points(ctx, rng, _samples()):
        image = j_beta(ctx.decomp, point)
        if apartment_coordinates(image, witt) is None:
            return Outcome.failed(
                {"point": encode_point(point, ctx.decomp), "image": encode_function(image)},
            )
    return Outcome.passed(witt_index=witt.index, samples=_samples())


@register("filtration-bridge", classical)
def check_filtration_bridge(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """g_{j_beta(x), r} intersected with h is h_{x, r} at every jump."""
    form = _form(ctx)
    commutant = commutant_constraints(ctx.layer, ctx.decomp.beta)
    points = _sample_points(ctx, rng, min(_samples(), MAX_FILTRATION_POINTS))
    for point in points:
        image = j_beta(ctx.decomp, point)
        got = lie_filtration(image, form, SpaceTag.G).intersect_subspace(commutant, SpaceTag.H)
        want = _h_profile(ctx, point)
        r = _first_mismatch(got, want, ctx.r_samples)
        if r is not None:
            return Outcome.failed(_profile_witness(ctx, point, r, got, want))
    return Outcome.passed(points=len(points))


@register("centralizer-lie", classical)
def check_centralizer_lie(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """h~_{x, r} intersected with g is h_{x, r}."""
    form = _form(ctx)
    constraints = lie_constraints(form)
    points = _sample_points(ctx, rng, min(_samples(), MAX_FILTRATION_POINTS))
    for point in points:
        blocks = block_endomorphisms(ctx.decomp, complete_tuple(ctx.decomp, point), lie=False)
        tilde = centralizer_filtration(blocks, ctx.layer, form.n, lie=False)
        got = tilde.intersect_subspace(constraints, SpaceTag.H)
        want = _h_profile(ctx, point)
        r = _first_mismatch(got, want, ctx.r_samples)
        if r is not None:
            return Outcome.failed(_profile_witness(ctx, point, r, got, want))
    return Outcome.passed(points=len(points))


@register("self-dual-image", classical)
def check_self_dual_image(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """j_beta(x) is self-dual and the completed tuple is fixed by x -> x^b."""
    form = _form(ctx)
    for point in _sample_points(ctx, rng, _samples()):
        if not j_beta(ctx.decomp, point).is_self_dual(form):
            return Outcome.failed({"point": encode_point(point, ctx.decomp)}, stage="image")
        functions = complete_tuple(ctx.decomp, point)
        dualized = tuple_dual(ctx.decomp, functions)
        moved = sorted(i for i, f in functions.items() if dualized[i] != f)
        if moved:
            return Outcome.failed(
                {"point": encode_point(point, ctx.decomp), "blocks": moved},
                stage="tuple",
            )
    return Outcome.passed(samples=_samples())


@register("h-equivariance", classical, with_pairs)
def check_h_equivariance(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """j_beta(g x) = g j_beta(x) for g = p on V_i and 1/p on V_-i."""
    decomp = ctx.decomp
    p = Fraction(ctx.layer.p)
    one = FieldElement.coerce(1)
    for block in decomp.of_kind(BlockKind.J_PLUS):
        g = linalg.zeros(decomp.n, decomp.n, one)
        for other in decomp.blocks:
            scale = {block.index: p, block.partner: 1 / p}.get(other.index, Fraction(1))
            g = linalg.mat_add(g, linalg.mat_scale(other.idempotent, scale))
        on_block = linalg.mat_scale(linalg.identity(block.m, block.field.element(1)), p)
        for point in _sample_points(ctx, rng, _samples()):
            moved = CentralBuildingPoint(
                tuple(
                    replace(bp, function=bp.function.transform(on_block))
                    if bp.index == block.index
                    else bp
                    for bp in point.blocks
                ),
            )
            if j_beta(decomp, moved) != j_beta(decomp, point).transform(g):
                return Outcome.failed(
                    {"point": encode_point(point, decomp), "block": block.index},
                )
    return Outcome.passed(samples=_samples())


@register("barycenter")
def check_barycenter(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """j_beta is affine: it commutes with barycenters."""
    decomp = ctx.decomp
    for _ in range(_samples()):
        first = random_central_point(decomp, ctx.apartment, rng)
        second = random_central_point(decomp, ctx.apartment, rng)
        for t in BARYCENTER_WEIGHTS:
            got = j_beta(decomp, central_barycenter(first, second, t))
            want = barycenter(j_beta(decomp, first), j_beta(decomp, second), t)
            if got != want:
                return Outcome.failed(
                    {
                        "first": encode_point(first, decomp),
                        "second": encode_point(second, decomp),
                        "t": format_fraction(t),
                    },
                )
    return Outcome.passed(weights=[format_fraction(t) for t in BARYCENTER_WEIGHTS])


def _levels_to_try(function: LatticeFunction, rng: random.Random) -> list[Fraction]:
    return [*function.jumps, _random_rational(rng)]


@register("end-oracle")
def check_end_oracle(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """End(Lambda)(r) matches the containment oracle and ignores translations."""
    for point in _sample_points(ctx, rng, _samples()):
        image = j_beta(ctx.decomp, point)
        square = end_function(image)
        for r in _levels_to_try(square.end, rng):
            if end_lattice_image(square, r) != end_lattice_oracle(image, r):
                return Outcome.failed(
                    {"function": encode_function(image), "r": format_fraction(r)},
                )
        if end_function(image.shifted(Fraction(1, 3))) != square:
            return Outcome.failed({"function": encode_function(image)}, stage="translation")
    return Outcome.passed(samples=_samples())


@register("injectivity")
def check_injectivity(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """Distinct points of the centralizer building have distinct images."""
    distinct = 0
    for _ in range(_samples()):
        first, second = _random_point(ctx, rng), _random_point(ctx, rng)
        if complete_tuple(ctx.decomp, first) == complete_tuple(ctx.decomp, second):
            continue
        distinct += 1
        if j_beta(ctx.decomp, first) == j_beta(ctx.decomp, second):
            return Outcome.failed(
                {
                    "first": encode_point(first, ctx.decomp),
                    "second": encode_point(second, ctx.decomp),
                },
            )
    if distinct == 0:
        return Outcome.skipped("every sampled pair was a single point")
    return Outcome.passed(distinct_pairs=distinct)


@register("trace-duality")
def check_trace_duality(ctx: ScenarioContext, rng: random.Random) -> Outcome:
    """The trace dual of End(Lambda)(r) is End(Lambda)((-r)+)."""
    for point in _sample_points(ctx, rng, _samples()):
        image = j_beta(ctx.decomp, point)
        square = end_function(image)
        for r in _levels_to_try(square.end, rng):
            if trace_dual(square.eval(r), image.layer, image.dim) != square.end.eval_right(-r):
                return Outcome.failed(
                    {"function": encode_function(image), "r": format_fraction(r)},
                )
    return Outcome.passed(samples=_samples())


@register("expected-embedding")
def check_expected_embedding(ctx: ScenarioContext, rng: random.Random) -> Outcome:  # noqa: ARG001
    """j_beta(x) of the scenario point equals the worked-out value."""
    expected = ctx.expected_function()
    if expected is None:
        return Outcome.skipped("scenario has no expected offsets")
    if ctx.layer.p != ctx.scenario.expected_prime:
        return Outcome.skipped(f"expected offsets are for p = {ctx.scenario.expected_prime}")
    image = j_beta(ctx.decomp, ctx.point)
    if ctx.is_classical:
        ok = image == expected
    else:
        ok = image.translation_to(expected) is not None
    if not ok:
        return Outcome.failed(
            {"got": encode_function(image), "expected": encode_function(expected)},
        )
    return Outcome.passed(image=encode_function(image))


def _search_details(result: SearchResult) -> dict[str, Any]:
    return {
        "mode": str(result.mode),
        "denominator": result.grid.denominator,
        "radius": format_fraction(result.grid.radius),
        "candidates": result.n_candidates,
        "passing": [encode_rational_vector(c) for c in result.passing],
        "image": encode_rational_vector(result.image),
    }


def _too_coarse(result: SearchResult) -> tuple[str, ...]:
    if result.image_on_grid:
        return ()
    return (
        f"GridTooCoarse: j_beta(x) = {encode_rational_vector(result.image)} is not on the "
        f"grid (1/{result.grid.denominator})Z",
    )


@register("uniqueness-search")
def check_uniqueness_search(ctx: ScenarioContext, rng: random.Random) -> Outcome:  # noqa: ARG001
    """The grid points compatible with x are exactly the predicted images."""
    grid = Grid(ctx.denominator, ctx.radius)
    result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, grid)
    details = _search_details(result)
    warnings = _too_coarse(result)
    if not result.matches:
        witness = {
            "passing": details["passing"],
            "expected": [encode_rational_vector(c) for c in result.expected],
        }
        return replace(Outcome.failed(witness, **details), warnings=warnings)
    if result.mode is SearchMode.GL:
        # Candidates passing the containment test must be o_E-lattice functions.
        plan = make_plan(ctx.decomp, ctx.point, ctx.apartment, SearchMode.GL)
        for coords in result.passing:
            if not is_in_fixed_chamber(ctx.decomp, plan.candidate_function(coords)):
                return Outcome.failed({"candidate": encode_rational_vector(coords)}, **details)
    return Outcome(Verdict.PASS, details=details, warnings=warnings)


@register("grid-refinement")
def check_grid_refinement(ctx: ScenarioContext, rng: random.Random) -> Outcome:  # noqa: ARG001
    """The search result holds on every standard grid that contains j_beta(x)."""
    mode = default_mode(ctx.decomp)
    plan = make_plan(ctx.decomp, ctx.point, ctx.apartment, mode)
    image = plan.coordinates_of(j_beta(ctx.decomp, ctx.point))
    assert image is not None
    searched = []
    for denominator in REFINEMENT_DENOMINATORS:
        grid = Grid(denominator, ctx.radius)
        if not grid.contains(image):
            continue
        result = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, grid, mode)
        searched.append(denominator)
        if not result.matches:
            return Outcome.failed(
                {
                    "denominator": denominator,
                    "passing": [encode_rational_vector(c) for c in result.passing],
                    "expected": [encode_rational_vector(c) for c in result.expected],
                },
            )
    if not searched:
        return Outcome.skipped("no standard grid contains j_beta(x)")
    return Outcome.passed(denominators=searched)


@register("negative-control", classical)
def check_negative_control(ctx: ScenarioContext, rng: random.Random) -> Outcome:  # noqa: ARG001
    """Without the filtration condition the whole o_E-fixed chamber passes.

    The chamber search must agree with the chamber cut out by the fixed-facet
    inequalities, and must contain every compatible point.
    """
    grid = Grid(ctx.denominator, ctx.radius)
    chamber = search_unique_compatible(
        ctx.decomp,
        ctx.point,
        ctx.apartment,
        grid,
        SearchMode.CHAMBER,
    )
    compatible = search_unique_compatible(ctx.decomp, ctx.point, ctx.apartment, grid)
    details = {
        "chamber": [encode_rational_vector(c) for c in chamber.passing],
        "compatible": [encode_rational_vector(c) for c in compatible.passing],
        "strictly_smaller": len(compatible.passing) < len(chamber.passing),
    }
    if not chamber.matches:
        return Outcome.failed(
            {
                "chamber_search": [encode_rational_vector(c) for c in chamber.passing],
                "chamber_inequalities": [encode_rational_vector(c) for c in chamber.expected],
            },
            **details,
        )
    outside = sorted(set(compatible.passing) - set(chamber.passing))
    if outside:
        return Outcome.failed({"outside_chamber": encode_rational_vector(outside[0])}, **details)
    if chamber.image_on_grid and chamber.image not in chamber.passing:
        return Outcome.failed({"image": encode_rational_vector(chamber.image)}, **details)
    return Outcome.passed(**details)


def resolve_checks(ctx: ScenarioContext, requested: Sequence[str] | None) -> list[str]:
    names = list(requested if requested is not None else ctx.scenario.checks or CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ScenarioParseError(f"Unknown check(s) {unknown}; known: {', '.join(CHECKS)}")
    return names


def run_scenario(scenario: Scenario, checks: Sequence[str] | None = None) -> Report:
    """Build the scenario and run the requested checks (all of them by default)."""
    ctx = scenario.build()
    seed = deps.settings().property_seed
    results = []
    warnings: list[str] = []
    for name in resolve_checks(ctx, checks):
        check = CHECKS[name]
        start = time.perf_counter()
        reason = check.skip_reason(ctx)
        if reason is not None:
            outcome = Outcome.skipped(reason)
        else:
            outcome = check.fn(ctx, random.Random(f"{seed}:{ctx.name}:{name}"))
        millis = int((time.perf_counter() - start) * 1000)
        logger.info(f"[{ctx.name}] {name}: {outcome.verdict} in {millis}ms")
        for w in outcome.warnings:
            logger.warning(f"[{ctx.name}] {w}")
        warnings.extend(outcome.warnings)
        results.append(
            CheckResult(
                name=name,
                verdict=outcome.verdict,
                witness=outcome.witness,
                details=outcome.details,
                millis=millis,
            ),
        )
    return Report(scenario=ctx.name, prime=ctx.layer.p, checks=results, warnings=warnings)
