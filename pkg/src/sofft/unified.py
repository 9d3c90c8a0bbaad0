"""Field equations on the jet-multimomentum product space: section equations,
compatibility constraints, multivector-field residuals, and the tangency
algorithm that determines the undetermined coefficients level by level."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from . import multiindex as mi
from .extcalc import CoordSpace, Form, VectorField, interior, pullback_generic
from .jetspace import JetChart, total_derivative
from .multiindex import ordered_pairs, sym_factor
from .symexpr import (
    Expr,
    ExprLike,
    Sym,
    Symbol,
    add,
    as_expr,
    coef_symbol,
    constant_value,
    diff,
    dx_symbol,
    equal,
    free_symbols,
    is_zero,
    mul,
    normal_form,
    PROVEN_EQUAL,
    PROBABLY_EQUAL,
    ZERO,
)
from .theory import (
    EquationSet,
    LagrangianProblem,
    classify_regularity,
    restricted_legendre,
)


def _dx(chart: JetChart, inner: Symbol, i: int) -> Expr:
    return Sym(dx_symbol(inner, i, chart.base_names[i - 1]))


# ---------------------------------------------------------------------------
# section field equations
# ---------------------------------------------------------------------------


def section_equations(prob: LagrangianProblem) -> EquationSet:
    """The four named groups of PDEs for a section of the unified bundle, with
    component derivatives as opaque d(.)/dx^i symbols."""
    chart = prob.chart
    L = prob.lagrangian
    eqs: list[tuple[str, Expr]] = []
    for f in chart.fields:
        balance = -diff(L, chart.jet(f, mi.zero(chart.m)))
        for i in range(1, chart.m + 1):
            balance = add(balance, _dx(chart, chart.mom(f, mi.unit(chart.m, i)), i))
        eqs.append((f"balance[{f}]", normal_form(balance)))
    for f in chart.fields:
        for i in range(1, chart.m + 1):
            e = add(
                Sym(chart.mom(f, mi.unit(chart.m, i))),
                -diff(L, chart.jet(f, mi.unit(chart.m, i))),
            )
            for j in range(1, chart.m + 1):
                I = mi.unit(chart.m, i).add_unit(j)
                e = add(e, mul(Fraction(1, sym_factor(i, j)), _dx(chart, chart.mom(f, I), j)))
            eqs.append((f"momentum[{f},{i}]", normal_form(e)))
    for f in chart.fields:
        for I in mi.enumerate_indices(chart.m, 2):
            e = add(Sym(chart.mom(f, I)), -diff(L, chart.jet(f, I)))
            eqs.append((f"algebraic[{f},{I}]", normal_form(e)))
    for f in chart.fields:
        u = chart.jet(f, mi.zero(chart.m))
        for i in range(1, chart.m + 1):
            e = add(Sym(chart.jet(f, mi.unit(chart.m, i))), -_dx(chart, u, i))
            eqs.append((f"holonomy[{f},{i}]", normal_form(e)))
        for I in mi.enumerate_indices(chart.m, 2):
            e: Expr = Sym(chart.jet(f, I))
            for (i, j) in ordered_pairs(I):
                e = add(
                    e,
                    -mul(
                        Fraction(1, sym_factor(i, j)),
                        _dx(chart, chart.jet(f, mi.unit(chart.m, i)), j),
                    ),
                )
            eqs.append((f"holonomy2[{f},{I}]", normal_form(e)))
    return EquationSet(prob.unified_space(), tuple(eqs))


def contraction_equations(omega: Form, base_space: CoordSpace) -> EquationSet:
    """One residual per fiber coordinate: the volume coefficient of the generic
    pullback of i(d/dz)omega.  Identically zero contractions are dropped; the m
    equations along the base directions are combinations of these and omitted."""
    space = omega.space
    vol_key = tuple(range(space.m))
    eqs = []
    for z in space.fiber_coords():
        contr = interior(VectorField.basis(space, z), omega)
        pulled = pullback_generic(contr, base_space)
        coeff = pulled.terms.get(vol_key)
        if coeff is None or is_zero(coeff):
            continue
        eqs.append((str(z), normal_form(coeff)))
    return EquationSet(space, tuple(eqs))


# ---------------------------------------------------------------------------
# compatibility constraints
# ---------------------------------------------------------------------------


def first_constraints(prob: LagrangianProblem) -> list[tuple[str, Expr]]:
    """The compatibility constraints p^I - dL/du_I, one per field and |I| = 2."""
    chart = prob.chart
    out = []
    for f in chart.fields:
        for I in mi.enumerate_indices(chart.m, 2):
            e = normal_form(add(Sym(chart.mom(f, I)), -diff(prob.lagrangian, chart.jet(f, I))))
            out.append((f"xi[{f},{I}]", e))
    return out


# ---------------------------------------------------------------------------
# multivector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiVectorField:
    """Component functions of a decomposable transverse multivector field: for
    each base direction j, rates for every jet coordinate (orders 0..3) and
    every momentum coordinate, with the x^j slot fixed to 1."""

    problem: LagrangianProblem
    rates: tuple[Mapping[Symbol, Expr], ...]  # one mapping per direction, 1-based j-1

    def rate(self, j: int, coord: Symbol) -> Expr:
        return self.rates[j - 1].get(coord, ZERO)

    def direction_field(self, j: int, space: CoordSpace) -> VectorField:
        comps: dict[Symbol, ExprLike] = {space.coords[j - 1]: 1}
        for coord, e in self.rates[j - 1].items():
            if coord in space.coords:
                comps[coord] = e
        return VectorField.build(space, comps)


def generic_multivector(prob: LagrangianProblem) -> MultiVectorField:
    """All coefficients symbolic: F for jet rates, G for momentum rates."""
    chart = prob.chart.extended(3)
    rates = []
    for j in range(1, chart.m + 1):
        r: dict[Symbol, Expr] = {}
        for f in chart.fields:
            for I in mi.enumerate_up_to(chart.m, 3):
                r[chart.jet(f, I)] = Sym(coef_symbol("F", f, I, j))
            for I in mi.enumerate_up_to(chart.m, 2):
                if I.order == 0:
                    continue
                r[chart.mom(f, I)] = Sym(coef_symbol("G", f, I, j))
        rates.append(r)
    return MultiVectorField(prob, tuple(rates))


def holonomic_multivector(prob: LagrangianProblem) -> MultiVectorField:
    """The holonomy-constrained ansatz: jet rates below the top order follow the
    prolongation shift, the top-order rates stay free F symbols."""
    chart = prob.chart.extended(3)
    rates = []
    for j in range(1, chart.m + 1):
        r: dict[Symbol, Expr] = {}
        for f in chart.fields:
            for I in mi.enumerate_up_to(chart.m, 2):
                r[chart.jet(f, I)] = Sym(chart.jet(f, I.add_unit(j)))
            for J in mi.enumerate_indices(chart.m, 3):
                r[chart.jet(f, J)] = Sym(coef_symbol("F", f, J, j))
            for I in mi.enumerate_up_to(chart.m, 2):
                if I.order == 0:
                    continue
                r[chart.mom(f, I)] = Sym(coef_symbol("G", f, I, j))
        rates.append(r)
    return MultiVectorField(prob, tuple(rates))


def multivector_residuals(prob: LagrangianProblem, X: MultiVectorField) -> EquationSet:
    """The residual system for i(X)Omega = 0 on the unified chart."""
    chart = prob.chart
    L = prob.lagrangian
    eqs: list[tuple[str, Expr]] = []
    for f in chart.fields:
        u = chart.jet(f, mi.zero(chart.m))
        for j in range(1, chart.m + 1):
            e = add(X.rate(j, u), -Sym(chart.jet(f, mi.unit(chart.m, j))))
            eqs.append((f"holonomy0[{f},{j}]", normal_form(e)))
        for I in mi.enumerate_indices(chart.m, 2):
            e: Expr = -Sym(chart.jet(f, I))
            for (i, j) in ordered_pairs(I):
                e = add(
                    e,
                    mul(
                        Fraction(1, sym_factor(i, j)),
                        X.rate(j, chart.jet(f, mi.unit(chart.m, i))),
                    ),
                )
            eqs.append((f"holonomy1[{f},{I}]", normal_form(e)))
    for f in chart.fields:
        e = -diff(L, chart.jet(f, mi.zero(chart.m)))
        for i in range(1, chart.m + 1):
            e = add(e, X.rate(i, chart.mom(f, mi.unit(chart.m, i))))
        eqs.append((f"balance[{f}]", normal_form(e)))
        for i in range(1, chart.m + 1):
            e = add(Sym(chart.mom(f, mi.unit(chart.m, i))), -diff(L, chart.jet(f, mi.unit(chart.m, i))))
            for j in range(1, chart.m + 1):
                I = mi.unit(chart.m, i).add_unit(j)
                e = add(e, mul(Fraction(1, sym_factor(i, j)), X.rate(j, chart.mom(f, I))))
            eqs.append((f"momentum[{f},{i}]", normal_form(e)))
        for K in mi.enumerate_indices(chart.m, 2):
            e = add(Sym(chart.mom(f, K)), -diff(L, chart.jet(f, K)))
            eqs.append((f"algebraic[{f},{K}]", normal_form(e)))
    return EquationSet(prob.unified_space(), tuple(eqs))


@dataclass(frozen=True)
class MultiVFHolonomyReport:
    holds: bool
    violations: tuple[str, ...]


def multivector_holonomy_check(
    prob: LagrangianProblem, X: MultiVectorField, r: int
) -> MultiVFHolonomyReport:
    """Check the local type-r holonomy equations on the jet rates: orders 0
    through 3-r must follow the prolongation shift.  Top-level rates stay free;
    integrability is deliberately not examined."""
    chart = prob.chart.extended(3)
    violations = []
    for f in chart.fields:
        for I in mi.enumerate_up_to(chart.m, 3 - r):
            for j in range(1, chart.m + 1):
                got = X.rate(j, chart.jet(f, I))
                want = Sym(chart.jet(f, I.add_unit(j)))
                if equal(got, want) not in (PROVEN_EQUAL, PROBABLY_EQUAL):
                    violations.append(f"rate[{f}{I},{j}]")
    return MultiVFHolonomyReport(holds=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# the tangency / constraint algorithm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LadderLevel:
    name: str
    constraints: tuple[tuple[str, Expr], ...]
    assignments: tuple[tuple[Symbol, Expr], ...]

    def constraint(self, name: str) -> Expr:
        for n, e in self.constraints:
            if n == name:
                return e
        raise KeyError(name)

    def assignment(self, sym: Symbol) -> Expr:
        for s, e in self.assignments:
            if s == sym:
                return e
        raise KeyError(str(sym))


@dataclass(frozen=True)
class ConstraintLadder:
    levels: tuple[LadderLevel, ...]
    hessian_regular: bool
    terminates_at: str
    additional_constraints: tuple[tuple[str, Expr], ...]
    incompatible: bool
    notes: tuple[str, ...]

    def level(self, idx: int) -> LadderLevel:
        return self.levels[idx]


def _truncated_total_derivative(prob: LagrangianProblem, e: ExprLike, k: int) -> Expr:
    """Directional derivative along the holonomic ansatz direction k: jets of
    order <= 2 shift up, order-3 jets move with the free F coefficients."""
    chart = prob.chart.extended(3)
    e = as_expr(e)
    terms = [diff(e, chart.base(k))]
    for s in free_symbols(e):
        if s.kind != "jet":
            continue
        if s.index.order <= 2:
            rate: Expr = Sym(chart.jet(s.name, s.index.add_unit(k)))
        else:
            rate = Sym(coef_symbol("F", s.name, s.index, k))
        terms.append(mul(rate, diff(e, s)))
    return normal_form(add(*terms))


def _split_coefficient_part(e: Expr) -> tuple[dict[Symbol, Expr], Expr]:
    """Split a residual linear in the F coefficients into per-symbol coefficient
    expressions and the coefficient-free remainder."""
    fs = sorted(
        (s for s in free_symbols(e) if s.kind == "coef" and s.letter == "F"),
        key=lambda s: s.sort_key(),
    )
    coeffs: dict[Symbol, Expr] = {}
    rest = e
    for s in fs:
        c = diff(e, s)
        if free_symbols(c) & set(fs):
            raise ValueError(f"residual is not linear in coefficient {s}")
        coeffs[s] = c
        rest = add(rest, -mul(c, Sym(s)))
    return coeffs, normal_form(rest)


def _normalize_condition_sign(e: Expr) -> Expr:
    """Make the earliest undetermined-coefficient term positive (residuals are
    defined up to sign); falls back to the highest-jet-order rule."""
    from .symexpr import Add
    from .theory import _normalize_residual_sign

    e = normal_form(e)
    terms = e.args if isinstance(e, Add) else (e,)
    for t in terms:
        if any(s.kind == "coef" for s in free_symbols(t)):
            from .theory import _leading_coefficient

            lead = _leading_coefficient(t)
            if lead is not None and lead < 0:
                return normal_form(mul(-1, e))
            return e
    return _normalize_residual_sign(e)


def run_constraint_algorithm(prob: LagrangianProblem) -> ConstraintLadder:
    """Tangency analysis for the holonomy-constrained multivector ansatz.

    Level 0 fixes the compatibility constraints and determines the second-order
    momentum rates; level 1 adds the Legendre-graph constraints and determines
    the first-order momentum rates (free top-order F coefficients may survive
    in them); level 2 collects the final conditions on those coefficients,
    solving any that are uniquely determined.  When the highest-order Hessian
    is singular, coefficient-free nonzero residuals are surfaced as additional
    constraints; a nonzero constant among them marks the system incompatible.
    """
    chart = prob.chart
    m, L = chart.m, prob.lagrangian

    level0_constraints = tuple(first_constraints(prob))
    level0_assign = []
    chart3 = chart.extended(3)
    for f in chart.fields:
        for K in mi.enumerate_indices(m, 2):
            dLK = diff(L, chart.jet(f, K))
            for j in range(1, m + 1):
                level0_assign.append(
                    (coef_symbol("G", f, K, j), total_derivative(dLK, j, chart3, cap=3))
                )

    lmap = restricted_legendre(prob)
    level1_constraints = []
    momentum_image: dict[tuple[str, int], Expr] = {}
    for f in chart.fields:
        for i in range(1, m + 1):
            img = lmap.momenta[chart.mom(f, mi.unit(m, i))]
            momentum_image[(f, i)] = img
            e = normal_form(add(Sym(chart.mom(f, mi.unit(m, i))), -img))
            level1_constraints.append((f"xi[{f},{i}]", e))

    level1_assign = []
    for f in chart.fields:
        for i in range(1, m + 1):
            img = momentum_image[(f, i)]
            for k in range(1, m + 1):
                level1_assign.append(
                    (
                        coef_symbol("G", f, mi.unit(m, i), k),
                        _truncated_total_derivative(prob, img, k),
                    )
                )
    level1_assign_map = dict(level1_assign)

    # final conditions: the balance equations with every momentum rate assigned
    conditions = []
    solved: list[tuple[Symbol, Expr]] = []
    additional: list[tuple[str, Expr]] = []
    incompatible = False
    for f in chart.fields:
        R: Expr = -diff(L, chart.jet(f, mi.zero(m)))
        for i in range(1, m + 1):
            R = add(R, level1_assign_map[coef_symbol("G", f, mi.unit(m, i), i)])
        R = _normalize_condition_sign(R)
        conditions.append((f"euler-lagrange[{f}]", R))
        coeffs, rest = _split_coefficient_part(R)
        live = {s: c for s, c in coeffs.items() if not is_zero(c)}
        if len(live) == 1:
            (s, c), = live.items()
            cval = constant_value(c)
            if cval:
                solved.append((s, normal_form(mul(Fraction(-1, 1) / cval, rest))))
                continue
        if not live:
            if not is_zero(rest):
                cval = constant_value(rest)
                if cval is not None and cval != 0:
                    incompatible = True
                additional.append((f"constraint[{f}]", rest))

    regular = classify_regularity(prob).regular
    notes = (
        "the m residuals along the base directions are combinations of the others and are omitted",
        "holonomy of type r is checked at the level of the local equations only; integrability is not examined",
    )
    if regular:
        terminates = "legendre-graph"
        notes = notes + (
            "regular highest-order Hessian: the final conditions are solvable for the free top-order coefficients",
        )
    elif not additional:
        terminates = "legendre-graph"
        notes = notes + ("singular Hessian but no additional constraints arise",)
    else:
        terminates = "beyond-legendre-graph"
        notes = notes + (
            "singular Hessian with additional constraints; tangency is not iterated further",
        )

    levels = (
        LadderLevel("compatibility", level0_constraints, tuple(level0_assign)),
        LadderLevel("legendre-graph", tuple(level1_constraints), tuple(level1_assign)),
        LadderLevel("final-conditions", tuple(conditions), tuple(solved)),
    )
    return ConstraintLadder(
        levels=levels,
        hessian_regular=regular,
        terminates_at=terminates,
        additional_constraints=tuple(additional),
        incompatible=incompatible,
        notes=notes,
    )
