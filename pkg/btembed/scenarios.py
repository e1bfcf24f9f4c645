"""Scenario files and the built-in catalog.

A scenario names a prime, the layer F, an epsilon-hermitian form (absent for the
general linear case), beta, a point of the centralizer building given by apartment
coordinates per block, and the grid of the uniqueness search. `ScenarioContext`
holds everything derived from it.
"""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from btembed.centralizer_embed import (
    BetaDecomposition,
    BlockApartment,
    BlockKind,
    CentralBuildingPoint,
    apartment_point,
    central_apartment,
    decompose_beta,
)
from btembed.dependencies import deps
from btembed.errors import ScenarioParseError, UnsupportedResidueChar
from btembed.field_tower import FieldLayer, base_layer, make_quadratic_extension
from btembed.herm_forms import EpsilonHermitianForm
from btembed.latt_fun import LatticeFunction
from btembed.serialize import decode_matrix
from btembed.util import parse_fraction

logger = logging.getLogger(__name__)

ElementJson = str | int | dict[str, str | int]
MatrixJson = list[list[ElementJson]]


class FormSpec(BaseModel):
    epsilon: Literal[1, -1] = 1
    gram: Annotated[MatrixJson, Field(description="Gram matrix G, h(x, y) = x^{sigma T} G y")]

    model_config = ConfigDict(extra="forbid")


class BlockPointSpec(BaseModel):
    i: Annotated[int, Field(description="Block label, as printed by `decompose`")]
    coords: Annotated[
        list[str],
        Field(
            description=(
                "Apartment coordinates of the block: Witt coordinates for a block fixed "
                "by sigma, offsets of the frame for a paired or general linear block. "
                "Missing coordinates are 0."
            ),
        ),
    ] = []
    shift: Annotated[str, Field(description="Shift s_i of a J_+ block")] = "0"

    model_config = ConfigDict(extra="forbid")


class GridSpec(BaseModel):
    denominator: Annotated[
        int | None,
        Field(description="N, candidates lie in (1/N)Z. Defaults to the setting."),
    ] = None
    radius: Annotated[
        str | None,
        Field(description="R, candidates lie in [-R, R]. Defaults to the setting."),
    ] = None

    model_config = ConfigDict(extra="forbid")


class Scenario(BaseModel):
    name: str
    description: str = ""
    prime: Annotated[
        int | None,
        Field(description="Residual characteristic; the default_prime setting when unset"),
    ] = None
    d: Annotated[int, Field(description="F = Q(sqrt d), with d = 1 meaning F = Q")] = 1
    form: Annotated[
        FormSpec | None,
        Field(description="The epsilon-hermitian form; null for the general linear case"),
    ] = None
    beta: MatrixJson
    point: list[BlockPointSpec] = []
    grid: GridSpec = GridSpec()
    r_samples: Annotated[
        list[str],
        Field(description="Extra r values at which filtrations are compared"),
    ] = []
    checks: Annotated[
        list[str] | None,
        Field(description="Checks to run; every applicable check when null"),
    ] = None
    expected_offsets: Annotated[
        list[str] | None,
        Field(
            description=(
                "Offsets of j_beta(x) on the standard basis of F^n (for the general "
                "linear case, of a representative of its translation class)"
            ),
        ),
    ] = None
    expected_prime: Annotated[
        int,
        Field(description="Prime the expected offsets were worked out for"),
    ] = 3

    model_config = ConfigDict(extra="forbid")

    def build(self) -> "ScenarioContext":
        """Construct layer, form and decomposition, raising capability errors early."""
        p = self.prime if self.prime is not None else deps.settings().default_prime
        if p == 2:
            raise UnsupportedResidueChar("Residual characteristic 2 is not supported")
        base = base_layer(p)
        layer = base if self.d == 1 else make_quadratic_extension(base, self.d)
        form = None
        if self.form is not None:
            form = EpsilonHermitianForm(
                layer,
                tuple(tuple(r) for r in decode_matrix(self.form.gram, layer)),
                self.form.epsilon,
            )
        beta = decode_matrix(self.beta, layer)
        decomp = decompose_beta(layer, beta, form)
        try:
            coords = {b.i: [parse_fraction(c) for c in b.coords] for b in self.point}
            shifts = {b.i: parse_fraction(b.shift) for b in self.point}
            denominator = self.grid.denominator or deps.settings().grid_denominator
            radius = parse_fraction(self.grid.radius or deps.settings().grid_radius)
            r_samples = tuple(parse_fraction(r) for r in self.r_samples)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioParseError(f"Bad rational in scenario {self.name}: {exc}") from exc
        if denominator < 1 or radius < 0:
            raise ScenarioParseError(f"Grid 1/{denominator}, radius {radius} is empty")
        return ScenarioContext(
            scenario=self,
            layer=layer,
            form=form,
            decomp=decomp,
            coords=coords,
            shifts=shifts,
            denominator=denominator,
            radius=radius,
            r_samples=r_samples,
        )


@dataclass(frozen=True)
class ScenarioContext:
    scenario: Scenario
    layer: FieldLayer
    form: EpsilonHermitianForm | None
    decomp: BetaDecomposition
    coords: dict[int, list[Fraction]]
    shifts: dict[int, Fraction]
    denominator: int
    radius: Fraction
    r_samples: tuple[Fraction, ...]

    @property
    def name(self) -> str:
        return self.scenario.name

    @property
    def is_classical(self) -> bool:
        return self.form is not None

    @property
    def has_pairs(self) -> bool:
        return bool(self.decomp.of_kind(BlockKind.J_PLUS))

    @cached_property
    def apartment(self) -> dict[int, BlockApartment]:
        return central_apartment(self.decomp)

    def point_at(
        self,
        coords: dict[int, list[Fraction]],
        shifts: dict[int, Fraction] | None = None,
    ) -> CentralBuildingPoint:
        full = {}
        for block in self.decomp.point_blocks:
            k = self.apartment[block.index].rank(block)
            given = coords.get(block.index, [])
            if len(given) > k:
                raise ScenarioParseError(
                    f"Block {block.index} has an apartment of rank {k}, got {len(given)} coords",
                )
            full[block.index] = [*given, *([Fraction(0)] * (k - len(given)))]
        unknown = set(coords) - set(full)
        if unknown:
            raise ScenarioParseError(f"No point block with label(s) {sorted(unknown)}")
        return apartment_point(self.decomp, self.apartment, full, shifts)

    @cached_property
    def point(self) -> CentralBuildingPoint:
        return self.point_at(self.coords, self.shifts)

    def expected_function(self) -> LatticeFunction | None:
        offsets = self.scenario.expected_offsets
        if offsets is None:
            return None
        n = self.decomp.n
        if len(offsets) != n:
            raise ScenarioParseError(f"expected_offsets needs {n} entries")
        one = self.layer.element(1)
        zero = self.layer.element(0)
        basis = tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))
        return LatticeFunction(self.layer, basis, tuple(parse_fraction(x) for x in offsets))


_SYMPLECTIC_2 = FormSpec(epsilon=-1, gram=[[0, 1], [-1, 0]])

CATALOG: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario(
            name="sp2-ramified",
            description="Sp_2 with beta generating the ramified field Q(sqrt 3)",
            form=_SYMPLECTIC_2,
            beta=[[0, 1], [3, 0]],
            expected_offsets=["-1/4", "1/4"],
        ),
        Scenario(
            name="sp2-split-gl",
            description="Sp_2 with beta = diag(1, -1); the centralizer is GL_1",
            form=_SYMPLECTIC_2,
            beta=[[1, 0], [0, -1]],
            point=[BlockPointSpec(i=1, coords=["1/4"])],
            expected_offsets=["1/4", "-1/4"],
        ),
        Scenario(
            name="u2-unramified",
            description="U(1,1) over Q(sqrt 2), beta diagonal with two J_o blocks",
            d=2,
            form=FormSpec(epsilon=1, gram=[[1, 0], [0, -1]]),
            beta=[[{"c": 1}, 0], [0, {"c": 2}]],
            expected_offsets=["0", "0"],
        ),
        Scenario(
            name="o2-anisotropic",
            description="Anisotropic O_2 for diag(1, -3) with beta generating Q(sqrt 3)",
            form=FormSpec(epsilon=1, gram=[[1, 0], [0, -3]]),
            beta=[[0, 3], [1, 0]],
            expected_offsets=["0", "-1/2"],
        ),
        Scenario(
            name="sp4-mixed",
            description="Sp_4 with one GL_1 pair and one ramified field block",
            form=FormSpec(
                epsilon=-1,
                gram=[[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]],
            ),
            beta=[[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, 0, 1], [0, 0, 3, 0]],
            point=[BlockPointSpec(i=1, coords=["1/8"])],
            expected_offsets=["1/8", "-1/8", "-1/4", "1/4"],
        ),
        Scenario(
            name="gl2-ramified",
            description="GL_2 with E = Q(sqrt 3) acting through beta",
            beta=[[0, 1], [3, 0]],
            expected_offsets=["0", "1/2"],
        ),
    )
}


def load_scenario(name_or_path: str) -> Scenario:
    """A catalog scenario by name, or a scenario JSON file."""
    if name_or_path in CATALOG:
        return CATALOG[name_or_path]
    path = Path(name_or_path).expanduser()
    if not path.is_file():
        raise ScenarioParseError(
            f"{name_or_path!r} is neither a catalog scenario ({', '.join(CATALOG)}) nor a file",
        )
    try:
        scenario = Scenario.model_validate_json(path.read_text())
    except (ValidationError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"Could not parse {path}: {exc}") from exc
    logger.info(f"Loaded scenario {scenario.name} from {path}")
    return scenario
