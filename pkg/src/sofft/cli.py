"""Problem-file ingestion and the command-line surface.

Problem files are TOML with a [problem] block (names and order), a [lagrangian]
block, and optional [section], [solution] and [grid] blocks; expression strings
follow the package grammar.  Exit codes: 2 parse failure, 3 unmet derivation
precondition, 4 failed residual check.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional

import click

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .hamiltonian import (
    LegendreSection,
    NonAffineImageError,
    SectionInvariantError,
    ham_function_almost_regular,
    ham_function_regular,
    hamilton_ddw_equations,
    image_submanifold,
    invert_diagonal_quadratic,
)
from .jetspace import JetChart, SectionExpr, dimensions
from .numcheck import Grid, residual
from .parsing import ParseError, parse
from .symexpr import Expr, render
from .theory import (
    LagrangianProblem,
    classify_regularity,
    euler_lagrange,
    extended_legendre,
    pairing_cs,
    poincare_cartan,
    restricted_legendre,
    unified_forms,
)
from .unified import run_constraint_algorithm

EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_CHECK_FAILED = 4

EMIT_CHOICES = (
    "legendre",
    "extended-legendre",
    "regularity",
    "euler-lagrange",
    "hamilton",
    "constraints",
    "forms",
    "dims",
    "pairing",
)


class ProblemFileError(ValueError):
    pass


@dataclass
class ProblemFile:
    name: str
    problem: LagrangianProblem
    section_kind: Optional[str] = None  # "upsilon" or "sigma"
    section_images: Optional[dict] = None
    solution: Optional[SectionExpr] = None
    solution_values: dict = field(default_factory=dict)
    grid: Optional[Grid] = None


def _require(table: Mapping, key: str, where: str):
    if key not in table:
        raise ProblemFileError(f"missing {key!r} in [{where}]")
    return table[key]


def load_problem(path: str) -> ProblemFile:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ProblemFileError(f"{path}: {exc}") from exc

    pr = _require(data, "problem", "file")
    name = pr.get("name", "problem")
    base = tuple(_require(pr, "base", "problem"))
    fields = tuple(_require(pr, "fields", "problem"))
    order = _require(pr, "order", "problem")
    if order != 2:
        raise ProblemFileError(f"order must be 2, got {order}")
    params = tuple(pr.get("parameters", ()))
    chart = JetChart(len(base), len(fields), 2, base, fields)

    lag = _require(data, "lagrangian", "file")
    L = parse(_require(lag, "L", "lagrangian"), chart, params)
    problem = LagrangianProblem(chart, L, params)

    out = ProblemFile(name=name, problem=problem)

    sec = data.get("section")
    if sec:
        kinds = [k for k in ("upsilon", "sigma") if k in sec]
        if len(kinds) != 1:
            raise ProblemFileError("[section] must carry exactly one of upsilon/sigma")
        kind = kinds[0]
        chart3 = chart.extended(3)
        images = {}
        for key, text in sec[kind].items():
            target = parse(key, chart3, params)
            from .symexpr import Sym

            if not isinstance(target, Sym) or target.symbol.kind != "jet":
                raise ProblemFileError(f"section key {key!r} is not a jet coordinate")
            if target.symbol.index.order < 2:
                raise ProblemFileError(f"section key {key!r} must have order 2 or 3")
            images[target.symbol] = parse(str(text), chart, params)
        out.section_kind = kind
        out.section_images = images

    sol = data.get("solution")
    if sol:
        values = {str(k): float(v) for k, v in sol.get("values", {}).items()}
        extra_params = tuple(values.keys())
        comps = {}
        for f in fields:
            if f not in sol:
                raise ProblemFileError(f"[solution] is missing field {f!r}")
            comps[f] = parse(str(sol[f]), chart, params + extra_params)
        out.solution = SectionExpr.from_fields(chart, comps)
        out.solution_values = values

    grid = data.get("grid")
    if grid:
        axes = {}
        for axis, spec in grid.items():
            axes[axis] = (float(spec["min"]), float(spec["max"]), int(spec["count"]))
        params_bound = dict(out.solution_values)
        out.grid = Grid(axes, params_bound)
    return out


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _eqs_payload(eqs) -> list[dict]:
    return [{"name": n, "residual": render(e)} for n, e in eqs]


def _section_from_file(pf: ProblemFile) -> Optional[LegendreSection]:
    if pf.section_images is None:
        return None
    return LegendreSection(pf.problem, pf.section_images)


def _hamilton_payload(pf: ProblemFile) -> dict:
    prob = pf.problem
    verdict = classify_regularity(prob)
    section = _section_from_file(pf)
    if verdict.regular:
        if section is None:
            section = invert_diagonal_quadratic(prob)
        H = ham_function_regular(prob, section)
        eqs = hamilton_ddw_equations(prob, H)
        return {
            "regularity": str(verdict),
            "H": render(H),
            "equations": _eqs_payload(eqs),
        }
    P = image_submanifold(prob)
    if section is None:
        section = P.canonical_section()
    H = ham_function_almost_regular(prob, P, section)
    eqs = hamilton_ddw_equations(prob, H, P)
    return {
        "regularity": str(verdict),
        "constraints": [render(c) for c in P.constraints],
        "dim": P.dim,
        "coordinates": [str(s) for s in P.induced],
        "embedding": {str(k): render(v) for k, v in P.embedding.items()},
        "H": render(H),
        "equations": _eqs_payload(eqs),
    }


def _ladder_payload(pf: ProblemFile) -> dict:
    ladder = run_constraint_algorithm(pf.problem)
    return {
        "levels": [
            {
                "name": lv.name,
                "constraints": [{"name": n, "residual": render(e)} for n, e in lv.constraints],
                "assignments": {str(s): render(e) for s, e in lv.assignments},
            }
            for lv in ladder.levels
        ],
        "additional_constraints": [
            {"name": n, "residual": render(e)} for n, e in ladder.additional_constraints
        ],
        "verdict": {
            "hessian_regular": ladder.hessian_regular,
            "terminates_at": ladder.terminates_at,
            "incompatible": ladder.incompatible,
            "notes": list(ladder.notes),
        },
    }


def _analyze_payload(pf: ProblemFile, emit: str) -> dict:
    prob = pf.problem
    if emit == "legendre":
        lmap = restricted_legendre(prob)
        return {
            "momenta": {
                str(k): render(v)
                for k, v in sorted(lmap.momenta.items(), key=lambda kv: kv[0].sort_key())
            }
        }
    if emit == "extended-legendre":
        lmap = extended_legendre(prob)
        return {
            "momenta": {
                str(k): render(v)
                for k, v in sorted(lmap.momenta.items(), key=lambda kv: kv[0].sort_key())
            },
            "p0": render(lmap.extended_p),
        }
    if emit == "regularity":
        v = classify_regularity(prob)
        return {
            "verdict": "regular" if v.regular else "singular",
            "rank": v.hessian_rank,
            "hessian_det": render(v.hessian_det),
            "exhaustive": v.exhaustive,
        }
    if emit == "euler-lagrange":
        return {"equations": _eqs_payload(euler_lagrange(prob))}
    if emit == "hamilton":
        return _hamilton_payload(pf)
    if emit == "constraints":
        return _ladder_payload(pf)
    if emit == "forms":
        theta_r, omega_r, H = unified_forms(prob)
        theta_L = poincare_cartan(prob)
        return {
            "H": render(H),
            "theta_r": str(theta_r),
            "omega_r": str(omega_r),
            "theta_L": str(theta_L),
        }
    if emit == "dims":
        return {"dims": dimensions(prob.chart.m, prob.chart.n).as_dict()}
    if emit == "pairing":
        return {"pairing": render(pairing_cs(prob))}
    raise ProblemFileError(f"unknown selector {emit!r}")


def _print_text(payload: dict, indent: str = "") -> None:
    for key, value in payload.items():
        if isinstance(value, dict):
            click.echo(f"{indent}{key}:")
            _print_text(value, indent + "  ")
        elif isinstance(value, list):
            click.echo(f"{indent}{key}:")
            for item in value:
                if isinstance(item, dict):
                    if set(item) == {"name", "residual"}:
                        click.echo(f"{indent}  {item['name']}: {item['residual']} = 0")
                    else:
                        _print_text(item, indent + "  ")
                else:
                    click.echo(f"{indent}  {item}")
        else:
            click.echo(f"{indent}{key}: {value}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@click.group()
def main() -> None:
    """Derivations for second-order field theories from a Lagrangian problem file."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--emit", type=click.Choice(EMIT_CHOICES), required=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def analyze(file: str, emit: str, fmt: str) -> None:
    """Run one derivation and print it as text or JSON."""
    try:
        pf = load_problem(file)
    except (ProblemFileError, ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    try:
        payload = _analyze_payload(pf, emit)
    except (SectionInvariantError, NonAffineImageError) as exc:
        click.echo(f"precondition: {exc}", err=True)
        sys.exit(EXIT_PRECONDITION)
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2))
    else:
        _print_text(payload)


def _parse_grid_override(spec: str) -> tuple[str, tuple[float, float, int]]:
    try:
        axis, rng = spec.split("=", 1)
        lo, hi, count = rng.split(":")
        return axis, (float(lo), float(hi), int(count))
    except ValueError:
        raise ProblemFileError(f"bad grid spec {spec!r}; expected axis=min:max:count") from None


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--grid", "grid_specs", multiple=True, metavar="AXIS=MIN:MAX:COUNT")
def check(file: str, tol: float, grid_specs: tuple[str, ...]) -> None:
    """Derive the Euler-Lagrange equations and check the stored solution."""
    try:
        pf = load_problem(file)
        overrides = dict(_parse_grid_override(s) for s in grid_specs)
    except (ProblemFileError, ParseError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    if pf.solution is None:
        click.echo("precondition: problem file has no [solution] block", err=True)
        sys.exit(EXIT_PRECONDITION)
    if pf.grid is None and not overrides:
        click.echo("precondition: no [grid] block and no --grid overrides", err=True)
        sys.exit(EXIT_PRECONDITION)
    axes = dict(pf.grid.axes) if pf.grid else {}
    axes.update(overrides)
    grid = Grid(axes, pf.solution_values)
    eqs = euler_lagrange(pf.problem)
    report = residual(eqs, pf.solution, grid)
    ok = True
    for name, worst in report.items():
        passed = worst < tol
        ok = ok and passed
        click.echo(f"{name}: max|residual| = {worst:.3e}  [{'pass' if passed else 'FAIL'}]")
    click.echo("check passed" if ok else "check FAILED")
    if not ok:
        sys.exit(EXIT_CHECK_FAILED)


@main.command()
@click.argument("m", type=int)
@click.argument("n", type=int)
def dims(m: int, n: int) -> None:
    """Dimension table for the spaces built over an m-dimensional base with n fields."""
    for key, value in dimensions(m, n).as_dict().items():
        click.echo(f"{key}: {value}")


if __name__ == "__main__":
    main()
