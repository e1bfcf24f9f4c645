"""JSON encodings of the algebraic values.

Rationals are strings "a/b"; an element a + c sqrt(d) of a quadratic layer is
{"a": "a/b", "c": "c/d"}. Everything here returns plain dicts, lists and strings
so the result can go straight through `pydantic_core.to_jsonable_python`.
"""

from collections.abc import Mapping, Sequence
from fractions import Fraction
from typing import Any

from btembed.centralizer_embed import BetaDecomposition, Block, CentralBuildingPoint
from btembed.dvr_lattice import DvrLattice
from btembed.endo_filt import FiltrationProfile
from btembed.errors import ScenarioParseError
from btembed.field_tower import FieldElement, FieldLayer, Scalarish
from btembed.herm_forms import EpsilonHermitianForm, WittDecomposition
from btembed.latt_fun import LatticeFunction
from btembed.util import format_fraction, parse_fraction

Jsonable = Any


def encode_element(x: Scalarish) -> Jsonable:
    x = FieldElement.coerce(x)
    if x.is_rational:
        return format_fraction(x.a)
    return {"a": format_fraction(x.a), "c": format_fraction(x.c)}


def decode_element(obj: Jsonable, layer: FieldLayer) -> FieldElement:
    try:
        if isinstance(obj, Mapping):
            extra = set(obj) - {"a", "c"}
            if extra:
                raise ScenarioParseError(f"Unexpected keys {sorted(extra)} in field element")
            a, c = parse_fraction(obj.get("a", 0)), parse_fraction(obj.get("c", 0))
            if c and layer.is_base:
                raise ScenarioParseError(f"{obj!r} has a sqrt part but the layer is Q")
            return layer.element(a, c)
        if isinstance(obj, bool) or not isinstance(obj, str | int):
            raise ScenarioParseError(f"Cannot read a field element from {obj!r}")
        return layer.element(parse_fraction(obj))
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioParseError(f"Cannot read a field element from {obj!r}") from exc


def encode_matrix(a: Sequence[Sequence[Scalarish]]) -> Jsonable:
    return [[encode_element(x) for x in row] for row in a]


def decode_matrix(obj: Jsonable, layer: FieldLayer) -> list[list[FieldElement]]:
    if not isinstance(obj, Sequence) or isinstance(obj, str):
        raise ScenarioParseError(f"Expected a matrix, got {obj!r}")
    rows = []
    for row in obj:
        if not isinstance(row, Sequence) or isinstance(row, str):
            raise ScenarioParseError(f"Expected a matrix row, got {row!r}")
        rows.append([decode_element(x, layer) for x in row])
    if any(len(r) != len(rows) for r in rows):
        raise ScenarioParseError("Matrix must be square")
    return rows


def encode_vector(v: Sequence[Scalarish]) -> Jsonable:
    return [encode_element(x) for x in v]


def encode_rational_vector(v: Sequence[Fraction]) -> Jsonable:
    return [format_fraction(x) for x in v]


def encode_form(form: EpsilonHermitianForm) -> Jsonable:
    return {
        "case": str(form.case),
        "epsilon": form.epsilon,
        "gram": encode_matrix(form.gram),
    }


def encode_function(function: LatticeFunction) -> Jsonable:
    return {
        "basis": [encode_vector(b) for b in function.basis],
        "offsets": encode_rational_vector(function.offsets),
        "layer": function.layer.name,
    }


def encode_lattice(lattice: DvrLattice) -> Jsonable:
    return [encode_rational_vector(b) for b in lattice.basis]


def encode_profile(profile: FiltrationProfile) -> Jsonable:
    return {
        "tag": str(profile.tag),
        "jumps": [
            {"r": format_fraction(r), "basis": encode_lattice(lattice)}
            for r, lattice in profile.jumps
        ],
        "period": format_fraction(profile.period),
    }


def encode_witt(witt: WittDecomposition) -> Jsonable:
    return {
        "index": witt.index,
        "pairs": [[encode_vector(e), encode_vector(f)] for e, f in witt.pairs],
        "anisotropic": [encode_vector(w) for w in witt.anisotropic],
    }


def encode_point(point: CentralBuildingPoint, decomp: BetaDecomposition) -> Jsonable:
    return {
        "blocks": [
            {
                "i": bp.index,
                "kind": str(decomp.block(bp.index).kind),
                "function": encode_function(bp.function),
                "shift": format_fraction(bp.shift),
            }
            for bp in point.blocks
        ],
    }


def _encode_block(block: Block) -> Jsonable:
    out: dict[str, Jsonable] = {
        "i": block.index,
        "kind": str(block.kind),
        "factor": [encode_element(c) for c in block.factor],
        "field": {
            "name": block.field.name,
            "d": block.field.d,
            "ramified": block.field.is_ramified,
        },
        "dim": block.m,
        "frame": [encode_vector(u) for u in block.frame],
    }
    if block.partner is not None:
        out["partner"] = block.partner
    if block.form is not None:
        out["form"] = encode_form(block.form)
    return out


def encode_decomposition(decomp: BetaDecomposition) -> Jsonable:
    return {
        "beta": encode_matrix(decomp.beta),
        "min_poly": [encode_element(c) for c in decomp.min_poly],
        "blocks": [_encode_block(b) for b in decomp.blocks],
    }
