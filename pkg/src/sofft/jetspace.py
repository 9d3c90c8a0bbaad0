"""Coordinate model of jet bundles and multimomentum spaces.

A chart fixes the base dimension m, the fiber dimension n, a jet order k, and
the coordinate names; it owns the symbol inventories for jets u^a_I, momenta
(one symbol per symmetric multi-index of order 1 or 2) and the scalar extended
momentum.  Total derivatives, prolongation and holonomy checks live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Mapping, Optional

from . import multiindex as mi
from .multiindex import MultiIndex
from .symexpr import (
    Expr,
    ExprLike,
    Sym,
    Symbol,
    add,
    as_expr,
    base_symbol,
    diff,
    equal,
    extended_momentum_symbol,
    free_symbols,
    jet_symbol,
    momentum_symbol,
    mul,
    normal_form,
    PROVEN_EQUAL,
    PROBABLY_EQUAL,
    RESERVED_NAMES,
)


class OrderOverflowError(ValueError):
    """Raised when a derivation would need jets beyond the stated order cap."""


@dataclass(frozen=True)
class JetChart:
    """Chart data for J^k over an m-dimensional base with n fields."""

    m: int
    n: int
    k: int
    base_names: tuple[str, ...]
    fields: tuple[str, ...]

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.k < 1:
            raise ValueError("need m >= 1, n >= 1, k >= 1")
        if len(self.base_names) != self.m or len(self.fields) != self.n:
            raise ValueError("coordinate name counts do not match dimensions")
        names = list(self.base_names) + list(self.fields)
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be distinct")
        clash = set(names) & RESERVED_NAMES
        if clash:
            raise ValueError(f"reserved names not allowed as coordinates: {sorted(clash)}")

    # symbol factories ------------------------------------------------------

    def base(self, i: int) -> Symbol:
        if not 1 <= i <= self.m:
            raise IndexError(f"base index {i} out of range [1, {self.m}]")
        return base_symbol(self.base_names[i - 1], i)

    def base_position(self, name: str) -> Optional[int]:
        try:
            return self.base_names.index(name) + 1
        except ValueError:
            return None

    def jet(self, field: str, index) -> Symbol:
        if field not in self.fields:
            raise KeyError(f"unknown field {field!r}")
        index = MultiIndex(index)
        if len(index) != self.m:
            raise ValueError(f"multi-index arity {len(index)} != base dimension {self.m}")
        return jet_symbol(field, index)

    def mom(self, field: str, index) -> Symbol:
        if field not in self.fields:
            raise KeyError(f"unknown field {field!r}")
        return momentum_symbol(field, MultiIndex(index))

    def pext(self) -> Symbol:
        return extended_momentum_symbol()

    # inventories -----------------------------------------------------------

    def base_coords(self) -> list[Symbol]:
        return [self.base(i) for i in range(1, self.m + 1)]

    def jet_coords(self, order: Optional[int] = None, exact: Optional[int] = None) -> list[Symbol]:
        """Jet symbols for all fields: orders 0..order, or exactly `exact`."""
        if exact is not None:
            return [self.jet(f, I) for f in self.fields for I in mi.enumerate_indices(self.m, exact)]
        order = self.k if order is None else order
        return [self.jet(f, I) for f in self.fields for I in mi.enumerate_up_to(self.m, order)]

    def momentum_coords(self) -> list[Symbol]:
        out = []
        for f in self.fields:
            for r in (1, 2):
                out.extend(self.mom(f, I) for I in mi.enumerate_indices(self.m, r))
        return out

    def extended(self, k: int) -> "JetChart":
        """The same chart at a higher jet order; extension is always explicit."""
        if k < self.k:
            raise ValueError(f"cannot lower chart order {self.k} to {k}")
        return JetChart(self.m, self.n, k, self.base_names, self.fields)

    def __str__(self) -> str:
        return (
            f"J^{self.k}({','.join(self.base_names)};{','.join(self.fields)})"
        )


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectionExpr:
    """Closed-form section components: base-coordinate expressions per symbol.

    Components may cover jet symbols (field values and their declared jet
    levels) and, optionally, momentum symbols.
    """

    chart: JetChart
    components: Mapping[Symbol, Expr]

    @staticmethod
    def from_fields(chart: JetChart, values: Mapping[str, ExprLike]) -> "SectionExpr":
        comps = {}
        for name, e in values.items():
            comps[chart.jet(name, mi.zero(chart.m))] = as_expr(e)
        return SectionExpr(chart, comps)

    def component(self, s: Symbol) -> Expr:
        try:
            return self.components[s]
        except KeyError:
            raise KeyError(f"section has no component for {s}") from None

    def with_components(self, extra: Mapping[Symbol, Expr]) -> "SectionExpr":
        merged = dict(self.components)
        merged.update(extra)
        return SectionExpr(self.chart, merged)


def total_derivative(e: ExprLike, i: int, chart: JetChart, cap: Optional[int] = None) -> Expr:
    """Coordinate total derivative d/dx^i on the order-`cap` chart.

    Every jet symbol in `e` must have order <= cap-1, since the result picks up
    jets one order higher.  Momenta and their kin are rejected here; callers
    that need them substitute images first.
    """
    e = as_expr(e)
    cap = chart.k if cap is None else cap
    if cap > chart.k:
        raise OrderOverflowError(
            f"cap {cap} exceeds chart order {chart.k}; extend the chart explicitly"
        )
    syms = free_symbols(e)
    for s in syms:
        if s.kind == "jet" and s.index.order > cap - 1:
            raise OrderOverflowError(
                f"{s} has order {s.index.order}; the order-{cap} result needs order <= {cap - 1}"
            )
        if s.kind in ("dx", "coef"):
            raise ValueError(f"total derivative undefined over opaque symbol {s}")
    terms = [diff(e, chart.base(i))]
    for s in syms:
        if s.kind == "jet":
            shifted = Sym(jet_symbol(s.name, s.index.add_unit(i)))
            terms.append(mul(shifted, diff(e, s)))
    return normal_form(add(*terms))


def iterated_total_derivative(
    e: ExprLike, I, chart: JetChart, cap: Optional[int] = None
) -> Expr:
    """Apply d/dx^i once per unit of each entry of I (order of application
    is immaterial by the commutation of total derivatives)."""
    I = MultiIndex(I)
    out = as_expr(e)
    for i in range(1, len(I) + 1):
        for _ in range(I[i - 1]):
            out = total_derivative(out, i, chart, cap)
    return out


def prolong(s: SectionExpr, k: int, chart: Optional[JetChart] = None) -> SectionExpr:
    """Fill every jet component up to order k by differentiating the field values."""
    chart = chart or s.chart
    comps = dict(s.components)
    for f in chart.fields:
        u = s.component(chart.jet(f, mi.zero(chart.m)))
        for I in mi.enumerate_up_to(chart.m, k):
            if I.order == 0:
                continue
            e = u
            for i in range(1, chart.m + 1):
                for _ in range(I[i - 1]):
                    e = diff(e, chart.base(i))
            comps[jet_symbol(f, I)] = e
    return SectionExpr(chart, comps)


@dataclass(frozen=True)
class HolonomyReport:
    holds: bool
    violations: tuple[tuple[str, MultiIndex, int], ...]


def holonomy_check(s: SectionExpr, r: int, k: int, chart: Optional[JetChart] = None) -> HolonomyReport:
    """Check the type-r holonomy conditions: the component for I+1_i must be
    the x^i-derivative of the component for I, for all |I| <= k-r."""
    chart = chart or s.chart
    if not 1 <= r <= k:
        raise ValueError(f"holonomy type r={r} out of range [1, {k}]")
    violations = []
    for f in chart.fields:
        for I in mi.enumerate_up_to(chart.m, k - r):
            lhs = s.component(chart.jet(f, I))
            for i in range(1, chart.m + 1):
                want = diff(lhs, chart.base(i))
                got = s.component(chart.jet(f, I.add_unit(i)))
                if equal(got, want) not in (PROVEN_EQUAL, PROBABLY_EQUAL):
                    violations.append((f, I, i))
    return HolonomyReport(holds=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# dimension bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dimensions:
    jet1: int
    jet2: int
    jet3: int
    form_bundle: int          # m-forms over J^1 killed by two vertical fields
    extended_momenta: int     # 2-symmetric extended multimomentum bundle
    restricted_momenta: int   # its quotient by the scalar momentum
    unified: int              # product of J^3 with the extended momenta over J^1
    unified_restricted: int

    def as_dict(self) -> dict[str, int]:
        return {
            "jet1": self.jet1,
            "jet2": self.jet2,
            "jet3": self.jet3,
            "form_bundle": self.form_bundle,
            "extended_momenta": self.extended_momenta,
            "restricted_momenta": self.restricted_momenta,
            "unified": self.unified,
            "unified_restricted": self.unified_restricted,
        }


def dimensions(m: int, n: int) -> Dimensions:
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")

    def jet_dim(k: int) -> int:
        return m + n * sum(comb(m + r - 1, r) for r in range(k + 1))

    extended = m + n + 2 * m * n + n * m * (m + 1) // 2 + 1
    unified = m + n + 2 * n * m + n * m * (m + 1) + n * m * (m + 1) * (m + 2) // 6 + 1
    return Dimensions(
        jet1=jet_dim(1),
        jet2=jet_dim(2),
        jet3=jet_dim(3),
        form_bundle=m + n + 2 * n * m + n * m * m + 1,
        extended_momenta=extended,
        restricted_momenta=extended - 1,
        unified=unified,
        unified_restricted=unified - 1,
    )
