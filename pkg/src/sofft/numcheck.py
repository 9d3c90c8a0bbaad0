"""Numeric validation: PDE residuals of closed-form candidate solutions,
finite-difference checks of symbolic derivatives, and rank computations."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .jetspace import JetChart, SectionExpr, prolong
from .symexpr import (
    ExprLike,
    Symbol,
    as_expr,
    diff,
    evaluate,
    free_symbols,
    is_zero,
    normal_form,
    param_symbol,
    substitute,
    EvalError,
)


@dataclass(frozen=True)
class Grid:
    """Per-axis (min, max, count) sampling plus parameter bindings."""

    axes: Mapping[str, tuple[float, float, int]]
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi, count) in self.axes.items():
            if count < 2:
                raise ValueError(f"axis {name!r} needs at least 2 points")
            if not lo < hi:
                raise ValueError(f"axis {name!r} needs min < max")

    def points(self, chart: JetChart) -> list[dict[Symbol, float]]:
        axes = []
        for i in range(1, chart.m + 1):
            name = chart.base_names[i - 1]
            if name not in self.axes:
                raise KeyError(f"grid is missing axis {name!r}")
            lo, hi, count = self.axes[name]
            axes.append([(chart.base(i), v) for v in np.linspace(lo, hi, count)])
        params = {param_symbol(k): float(v) for k, v in self.parameters.items()}
        out = []
        for combo in product(*axes):
            b = dict(combo)
            b.update(params)
            out.append(b)
        return out


def residual(eqs, sol: SectionExpr, grid: Grid) -> dict[str, float]:
    """Substitute the prolonged solution into each residual symbolically, then
    evaluate over the grid; returns the max |value| per equation."""
    chart = sol.chart
    names_and_exprs = list(eqs)
    order = 0
    for _, e in names_and_exprs:
        for s in free_symbols(e):
            if s.kind == "jet":
                order = max(order, s.index.order)
            elif s.kind not in ("base", "param"):
                raise ValueError(f"residual evaluation does not support symbol {s}")
    big = prolong(sol, order, chart.extended(max(order, chart.k)))
    out: dict[str, float] = {}
    for name, e in names_and_exprs:
        closed = normal_form(substitute(e, dict(big.components)))
        if is_zero(closed):
            out[name] = 0.0
            continue
        worst = 0.0
        for b in grid.points(chart):
            try:
                worst = max(worst, abs(evaluate(closed, b)))
            except EvalError as exc:
                where = {str(k): v for k, v in b.items() if k.kind == "base"}
                raise EvalError(f"{exc} at grid point {where}") from exc
        out[name] = worst
    return out


def finite_diff_validate(
    e: ExprLike, s: Symbol, points: Sequence[Mapping[Symbol, float]]
) -> float:
    """Compare the symbolic partial derivative against central differences;
    returns the max relative error over the points."""
    e = as_expr(e)
    sym = diff(e, s)
    worst = 0.0
    for b in points:
        v = b[s]
        h = 1e-5 * max(1.0, abs(v))
        hi = dict(b)
        lo = dict(b)
        hi[s] = v + h
        lo[s] = v - h
        approx = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
        exact = evaluate(sym, b)
        err = abs(exact - approx) / max(1.0, abs(exact))
        worst = max(worst, err)
    return worst


def numeric_rank(
    matrix: Sequence[Sequence[ExprLike]],
    bindings: Mapping[Symbol, float],
    threshold: float = 1e-9,
) -> int:
    """Rank by singular values with a relative cutoff."""
    rows = [[evaluate(as_expr(v), bindings) for v in row] for row in matrix]
    if not rows or not rows[0]:
        return 0
    sv = np.linalg.svd(np.array(rows, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > threshold * sv[0]).sum())
