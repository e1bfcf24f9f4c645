"""Command line entry point.

```
btembed list
btembed decompose sp2-ramified
btembed embed sp4-mixed --json out/sp4.json
btembed check all --seed 3
btembed search-unique sp2-ramified --grid-denominator 12
btembed export-tree sp2-ramified --depth 2 --out tree.dot
```

A scenario is a catalog name (see `btembed list`) or a path to a scenario JSON
file. Exit codes: 0 when every check passes, 1 when one fails (the witness is in
the report), 2 when the input is outside what is supported or does not parse.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, assert_never

from pydantic import ValidationError
from pydantic_core import to_jsonable_python

from btembed.centralizer_embed import (
    apartment_coordinates,
    apartment_image,
    block_endomorphisms,
    complete_tuple,
    j_beta,
)
from btembed.checks import CHECKS, Report, Verdict, run_scenario
from btembed.dependencies import deps
from btembed.endo_filt import (
    SpaceTag,
    centralizer_filtration,
    commutant_constraints,
    first_disagreement,
    first_non_containment,
    gl_filtration,
    lie_filtration,
)
from btembed.errors import BtembedError
from btembed.scenarios import CATALOG, GridSpec, Scenario, ScenarioContext, load_scenario
from btembed.search import Grid, SearchMode, search_unique_compatible
from btembed.serialize import (
    encode_decomposition,
    encode_form,
    encode_function,
    encode_point,
    encode_profile,
    encode_rational_vector,
    encode_witt,
)
from btembed.settings import Settings
from btembed.tree_export import build_tree_ball
from btembed.util import format_fraction, log_inputs_outputs

logger = logging.getLogger(__name__)


def _setup_logging() -> logging.Logger:
    """Take over the root logger: stderr and an optional log file, from settings."""
    settings = deps.settings()

    root_logger = logging.getLogger()

    # Remove any existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    root_logger.setLevel(settings.log_level)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    if settings.enable_stderr_logging:
        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.setLevel(settings.log_level)
        stderr_handler.setFormatter(formatter)
        root_logger.addHandler(stderr_handler)

    if settings.enable_log_file:
        log_path = settings.log_file.expanduser().absolute()
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(settings.log_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    return logging.getLogger(__name__)


def _settings_from_args(args: argparse.Namespace) -> Settings:
    """Only the flags actually given, so `deps.override` leaves the rest alone."""
    given = {
        "grid_denominator": args.grid_denominator,
        "grid_radius": args.radius,
        "property_seed": args.seed,
        "property_samples": args.samples,
        "search_workers": args.workers,
    }
    return Settings(**{k: v for k, v in given.items() if v is not None})


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    update: dict[str, Any] = {}
    if args.prime is not None:
        update["prime"] = args.prime
    if args.grid_denominator is not None or args.radius is not None:
        update["grid"] = GridSpec(
            denominator=args.grid_denominator or scenario.grid.denominator,
            radius=args.radius or scenario.grid.radius,
        )
    return scenario.model_copy(update=update) if update else scenario


def _context(args: argparse.Namespace) -> ScenarioContext:
    return _apply_overrides(load_scenario(args.scenario), args).build()


def _render(jsonable: Any, indent: int | None) -> str:
    return json.dumps(to_jsonable_python(jsonable, exclude_none=True), indent=indent)


def _emit(jsonable: Any, args: argparse.Namespace) -> None:
    """Write to --json, pretty by default, or print compact JSON on stdout."""
    if args.json is None:
        print(_render(jsonable, None))
        return
    setting = deps.settings().default_response_indent
    indent: int | None
    if setting == "no_indent":
        indent = None
    elif isinstance(setting, int):
        indent = setting
    else:
        assert_never(setting)
    path = Path(args.json).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_render(jsonable, indent) + "\n")
    logger.info(f"Wrote {path}")


@log_inputs_outputs()
def cmd_list(args: argparse.Namespace) -> int:
    _emit(
        [{"name": s.name, "description": s.description} for s in CATALOG.values()],
        args,
    )
    return 0


@log_inputs_outputs()
def cmd_decompose(args: argparse.Namespace) -> int:
    ctx = _context(args)
    _emit(
        {
            "scenario": ctx.name,
            "prime": ctx.layer.p,
            "layer": {"name": ctx.layer.name, "d": ctx.layer.d},
            "form": encode_form(ctx.form) if ctx.form is not None else None,
            "decomposition": encode_decomposition(ctx.decomp),
        },
        args,
    )
    return 0


@log_inputs_outputs()
def cmd_embed(args: argparse.Namespace) -> int:
    ctx = _context(args)
    image = j_beta(ctx.decomp, ctx.point)
    out: dict[str, Any] = {
        "scenario": ctx.name,
        "point": encode_point(ctx.point, ctx.decomp),
        "tuple": {
            str(i): encode_function(f)
            for i, f in sorted(complete_tuple(ctx.decomp, ctx.point).items())
        },
        "image": encode_function(image),
        "canonical": encode_function(image.canonical()),
    }
    if ctx.is_classical:
        witt = apartment_image(ctx.decomp, ctx.apartment)
        coords = apartment_coordinates(image, witt)
        out["apartment"] = encode_witt(witt)
        out["coordinates"] = encode_rational_vector(coords) if coords is not None else None
    _emit(out, args)
    return 0


@log_inputs_outputs()
def cmd_filtration(args: argparse.Namespace) -> int:
    ctx = _context(args)
    image = j_beta(ctx.decomp, ctx.point)
    functions = complete_tuple(ctx.decomp, ctx.point)
    commutant = commutant_constraints(ctx.layer, ctx.decomp.beta)
    if ctx.form is not None:
        ambient = lie_filtration(image, ctx.form, SpaceTag.G)
        cut = ambient.intersect_subspace(commutant, SpaceTag.H)
        blocks = block_endomorphisms(ctx.decomp, functions, lie=True)
        centralizer = lie_filtration(blocks, ctx.form, SpaceTag.H)
        bad = first_disagreement(cut, centralizer)
        relation = "equal"
    else:
        ambient = gl_filtration(image)
        cut = ambient.intersect_subspace(commutant, SpaceTag.H_TILDE)
        blocks = block_endomorphisms(ctx.decomp, functions, lie=False)
        centralizer = centralizer_filtration(blocks, ctx.layer, ctx.decomp.n, lie=False)
        bad = first_non_containment(cut, centralizer)
        relation = "contains"
    _emit(
        {
            "scenario": ctx.name,
            "ambient": encode_profile(ambient),
            "ambient_cap_centralizer": encode_profile(cut),
            "centralizer": encode_profile(centralizer),
            "relation": relation,
            "holds": bad is None,
            "first_failure": format_fraction(bad) if bad is not None else None,
        },
        args,
    )
    return 0 if bad is None else 1


@log_inputs_outputs()
def cmd_check(args: argparse.Namespace) -> int:
    names = list(CATALOG) if args.scenario == "all" else [args.scenario]
    reports: list[Report] = []
    for name in names:
        scenario = _apply_overrides(load_scenario(name), args)
        reports.append(run_scenario(scenario, args.checks))
    for report in reports:
        failed = [c.name for c in report.checks if c.verdict is Verdict.FAIL]
        summary = f"{report.scenario}: {'PASS' if report.passed else 'FAIL'}"
        if failed:
            summary += f" ({', '.join(failed)})"
        logger.info(summary)
    _emit(reports[0] if len(reports) == 1 else reports, args)
    return max(r.exit_code for r in reports)


@log_inputs_outputs()
def cmd_search_unique(args: argparse.Namespace) -> int:
    ctx = _context(args)
    mode = SearchMode(args.mode) if args.mode is not None else None
    result = search_unique_compatible(
        ctx.decomp,
        ctx.point,
        ctx.apartment,
        Grid(ctx.denominator, ctx.radius),
        mode,
    )
    _emit(
        {
            "scenario": ctx.name,
            "mode": str(result.mode),
            "grid": {
                "denominator": result.grid.denominator,
                "radius": format_fraction(result.grid.radius),
            },
            "candidates": result.n_candidates,
            "passing": [encode_rational_vector(c) for c in result.passing],
            "expected": [encode_rational_vector(c) for c in result.expected],
            "image": encode_rational_vector(result.image),
            "image_on_grid": result.image_on_grid,
            "matches": result.matches,
        },
        args,
    )
    return 0 if result.matches else 1


@log_inputs_outputs()
def cmd_export_tree(args: argparse.Namespace) -> int:
    ctx = _context(args)
    ball = build_tree_ball(ctx.decomp, args.depth, j_beta(ctx.decomp, ctx.point))
    dot = ball.to_dot(ctx.name)
    if args.out is None:
        print(dot, end="")
    else:
        path = Path(args.out).expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dot)
        logger.info(f"Wrote {len(ball.vertices)} vertices to {path}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prime", type=int, help="Residual characteristic p")
    parser.add_argument("--grid-denominator", type=int, help="Search grid (1/N)Z")
    parser.add_argument("--radius", help="Search radius R, a rational like 1/2")
    parser.add_argument("--json", help="Write the JSON output here instead of stdout")
    parser.add_argument("--seed", type=int, help="Seed of the randomised checks")
    parser.add_argument("--samples", type=int, help="Samples per randomised check")
    parser.add_argument("--workers", type=int, help="Processes for the grid search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btembed",
        description="Verify centralizer embeddings of Bruhat-Tits buildings on examples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    commands: list[tuple[str, Callable[[argparse.Namespace], int], str]] = [
        ("decompose", cmd_decompose, "Show the decomposition of V under beta"),
        ("embed", cmd_embed, "Compute j_beta of the scenario point"),
        ("filtration", cmd_filtration, "Compare the Lie algebra filtrations at j_beta(x)"),
        ("check", cmd_check, "Run the property checks on a scenario, or on `all`"),
        ("search-unique", cmd_search_unique, "Grid search for compatible points"),
        ("export-tree", cmd_export_tree, "Write a ball of the rank-one tree as DOT"),
    ]
    for name, handler, help_text in commands:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="Catalog name or path to a scenario JSON file")
        _add_common(p)
        p.set_defaults(handler=handler)
        if name == "check":
            p.add_argument(
                "--checks",
                nargs="+",
                choices=sorted(CHECKS),
                help="Only run these checks",
            )
        elif name == "search-unique":
            p.add_argument("--mode", choices=[str(m) for m in SearchMode])
        elif name == "export-tree":
            p.add_argument("--depth", type=int, default=1, help="Radius of the ball")
            p.add_argument("--out", help="DOT file to write; stdout by default")

    p = sub.add_parser("list", help="List the catalog scenarios")
    _add_common(p)
    p.set_defaults(handler=cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "scenario"):
        args.scenario = None
    try:
        with deps.override(settings_partial=_settings_from_args(args)):
            _setup_logging()
            logger.debug("Logging started")
            return int(args.handler(args))
    except BtembedError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"ScenarioParseError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
