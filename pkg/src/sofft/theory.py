"""Derivations from a second-order Lagrangian: Legendre maps, regularity,
Euler-Lagrange equations, and the canonical multisymplectic form coefficients."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from . import multiindex as mi
from .extcalc import CoordSpace, Form
from .jetspace import JetChart, total_derivative, iterated_total_derivative
from .multiindex import MultiIndex, sym_factor
from .symexpr import (
    Expr,
    ExprLike,
    Sym,
    Symbol,
    add,
    as_expr,
    constant_value,
    diff,
    evaluate,
    free_symbols,
    mul,
    normal_form,
    param_symbol,
    ZERO,
)


@dataclass(frozen=True)
class LagrangianProblem:
    """A second-order Lagrangian function on a jet chart, with named parameters."""

    chart: JetChart
    lagrangian: Expr
    parameters: tuple[str, ...] = ()

    def __post_init__(self):
        if self.chart.k != 2:
            raise ValueError("the Lagrangian chart must have jet order 2")
        for s in free_symbols(self.lagrangian):
            if s.kind in ("mom", "pext"):
                raise ValueError(f"Lagrangian must not contain momentum symbol {s}")
            if s.kind == "jet" and s.index.order > 2:
                raise ValueError(f"Lagrangian must not contain {s} of order > 2")

    def param(self, name: str) -> Symbol:
        if name not in self.parameters:
            raise KeyError(f"unknown parameter {name!r}")
        return param_symbol(name)

    # coordinate spaces -----------------------------------------------------

    def jet_space(self, order: int) -> CoordSpace:
        chart = self.chart.extended(max(order, self.chart.k))
        coords = tuple(chart.base_coords() + chart.jet_coords(order))
        return CoordSpace(coords, chart.m)

    def momentum_space(self) -> CoordSpace:
        """Restricted 2-symmetric multimomentum chart: (x, u, u_i, p^i, p^I)."""
        c = self.chart
        coords = tuple(c.base_coords() + c.jet_coords(1) + c.momentum_coords())
        return CoordSpace(coords, c.m)

    def extended_momentum_space(self) -> CoordSpace:
        c = self.chart
        coords = tuple(
            c.base_coords() + c.jet_coords(1) + [c.pext()] + c.momentum_coords()
        )
        return CoordSpace(coords, c.m)

    def unified_space(self) -> CoordSpace:
        """Jets to order 3 paired with the restricted momenta."""
        c = self.chart.extended(3)
        coords = tuple(c.base_coords() + c.jet_coords(3) + c.momentum_coords())
        return CoordSpace(coords, c.m)

    def extended_unified_space(self) -> CoordSpace:
        c = self.chart.extended(3)
        coords = tuple(
            c.base_coords() + c.jet_coords(3) + [c.pext()] + c.momentum_coords()
        )
        return CoordSpace(coords, c.m)


@dataclass(frozen=True)
class LegendreMap:
    """Momentum images of the (restricted or extended) Legendre map."""

    problem: LagrangianProblem
    momenta: Mapping[Symbol, Expr]
    extended_p: Optional[Expr] = None

    def restricted(self) -> "LegendreMap":
        return LegendreMap(self.problem, self.momenta, None)


@dataclass(frozen=True)
class EquationSet:
    """Named residuals (each equation reads residual = 0) on a declared space."""

    space: CoordSpace
    equations: tuple[tuple[str, Expr], ...]

    def names(self) -> list[str]:
        return [n for n, _ in self.equations]

    def get(self, name: str) -> Expr:
        for n, e in self.equations:
            if n == name:
                return e
        raise KeyError(name)

    def residuals(self) -> list[Expr]:
        return [e for _, e in self.equations]

    def __iter__(self):
        return iter(self.equations)

    def __len__(self) -> int:
        return len(self.equations)


# ---------------------------------------------------------------------------
# Hessian and regularity
# ---------------------------------------------------------------------------


def hessian_order(chart: JetChart) -> list[tuple[str, MultiIndex]]:
    """Row/column labels: fields crossed with the order-2 multi-indices."""
    return [(f, I) for f in chart.fields for I in mi.enumerate_indices(chart.m, 2)]


def hessian(prob: LagrangianProblem) -> list[list[Expr]]:
    labels = hessian_order(prob.chart)
    rows = []
    for f1, I1 in labels:
        d1 = diff(prob.lagrangian, prob.chart.jet(f1, I1))
        rows.append([diff(d1, prob.chart.jet(f2, I2)) for f2, I2 in labels])
    return rows


def _det(matrix: list[list[Expr]]) -> Expr:
    n = len(matrix)
    if n == 0:
        return as_expr(1)
    if n == 1:
        return matrix[0][0]
    out = ZERO
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = mul((-1) ** j, matrix[0][j], _det(minor))
        out = add(out, term)
    return normal_form(out)


def _sample_bindings(prob: LagrangianProblem, rng: random.Random, order: int = 3) -> dict[Symbol, float]:
    chart = prob.chart.extended(order)
    bindings: dict[Symbol, float] = {}
    for s in chart.base_coords() + chart.jet_coords(order):
        bindings[s] = rng.uniform(-2.0, 2.0)
    for name in prob.parameters:
        bindings[param_symbol(name)] = rng.uniform(0.5, 2.0)
    return bindings


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    hessian_rank: int
    hessian_det: Expr
    exhaustive: bool  # True when decided symbolically, not just at sample points

    def __str__(self) -> str:
        if self.regular:
            note = "" if self.exhaustive else " (sampled points only)"
            return f"regular{note}"
        return f"singular (Hessian rank {self.hessian_rank})"


def classify_regularity(
    prob: LagrangianProblem, sample_points: int = 5, seed: int = 7
) -> RegularityVerdict:
    """Regular iff the highest-order Hessian is invertible: decided symbolically
    when the determinant is constant, otherwise by seeded sampling (recorded as
    non-exhaustive since the pointwise condition is only spot-checked)."""
    from .numcheck import numeric_rank

    H = hessian(prob)
    det = _det(H)
    cval = constant_value(det)
    rng = random.Random(seed)
    points = [_sample_bindings(prob, rng, order=2) for _ in range(max(sample_points, 5))]
    ranks = {numeric_rank(H, b) for b in points} if H else {0}
    rank = max(ranks)
    if cval is not None:
        return RegularityVerdict(cval != 0, rank, det, exhaustive=True)
    nonzero = all(abs(evaluate(det, b)) > 1e-12 for b in points)
    if nonzero:
        return RegularityVerdict(True, rank, det, exhaustive=False)
    return RegularityVerdict(False, rank, det, exhaustive=False)


# ---------------------------------------------------------------------------
# Legendre maps
# ---------------------------------------------------------------------------


def restricted_legendre(prob: LagrangianProblem) -> LegendreMap:
    """First-order momenta p^i = dL/du_i - sum_j (1/n(ij)) d/dx^j dL/du_{1_i+1_j};
    second-order momenta p^I = dL/du_I.  Images live on the order-3 chart."""
    chart3 = prob.chart.extended(3)
    L = prob.lagrangian
    images: dict[Symbol, Expr] = {}
    for f in prob.chart.fields:
        for i in range(1, prob.chart.m + 1):
            corr = ZERO
            for j in range(1, prob.chart.m + 1):
                I = mi.unit(prob.chart.m, i).add_unit(j)
                inner = diff(L, prob.chart.jet(f, I))
                corr = add(
                    corr,
                    mul(
                        Fraction(1, sym_factor(i, j)),
                        total_derivative(inner, j, chart3, cap=3),
                    ),
                )
            p_i = normal_form(add(diff(L, prob.chart.jet(f, mi.unit(prob.chart.m, i))), -corr))
            images[prob.chart.mom(f, mi.unit(prob.chart.m, i))] = p_i
        for I in mi.enumerate_indices(prob.chart.m, 2):
            images[prob.chart.mom(f, I)] = diff(L, prob.chart.jet(f, I))
    return LegendreMap(prob, images)


def extended_legendre(prob: LagrangianProblem) -> LegendreMap:
    """The restricted map together with the scalar momentum image
    p = L - u_i p^i - u_I dL/du_I."""
    base = restricted_legendre(prob)
    p = prob.lagrangian
    for f in prob.chart.fields:
        for i in range(1, prob.chart.m + 1):
            I = mi.unit(prob.chart.m, i)
            p = add(p, -mul(Sym(prob.chart.jet(f, I)), base.momenta[prob.chart.mom(f, I)]))
        for I in mi.enumerate_indices(prob.chart.m, 2):
            p = add(p, -mul(Sym(prob.chart.jet(f, I)), base.momenta[prob.chart.mom(f, I)]))
    return LegendreMap(prob, base.momenta, normal_form(p))


def legendre_jacobian(lmap: LegendreMap) -> tuple[list[list[Expr]], list[Symbol]]:
    """Full Jacobian of the bundle map (x, u, u_i, momentum images[, p]) with
    respect to all order-3 jet chart coordinates."""
    prob = lmap.problem
    chart3 = prob.chart.extended(3)
    cols = chart3.base_coords() + chart3.jet_coords(3)
    outputs: list[Expr] = [Sym(s) for s in chart3.base_coords() + chart3.jet_coords(1)]
    for p_sym in sorted(lmap.momenta, key=lambda s: s.sort_key()):
        outputs.append(lmap.momenta[p_sym])
    if lmap.extended_p is not None:
        outputs.append(lmap.extended_p)
    matrix = [[diff(out, z) for z in cols] for out in outputs]
    return matrix, cols


def legendre_jacobian_rank(
    lmap: LegendreMap, bindings: Mapping[Symbol, float], threshold: float = 1e-9
) -> int:
    from .numcheck import numeric_rank

    matrix, _ = legendre_jacobian(lmap)
    return numeric_rank(matrix, bindings, threshold)


# ---------------------------------------------------------------------------
# Euler-Lagrange equations
# ---------------------------------------------------------------------------


def _jet_order_of_monomial(e: Expr) -> int:
    return max((s.index.order for s in free_symbols(e) if s.kind == "jet"), default=0)


def _normalize_residual_sign(e: Expr) -> Expr:
    """Fix the overall sign so the leading term of highest jet order enters
    positively; residuals are only defined up to sign."""
    from .symexpr import Add

    e = normal_form(e)
    terms = e.args if isinstance(e, Add) else (e,)
    best = None
    best_order = -1
    for t in terms:
        order = _jet_order_of_monomial(t)
        if order > best_order:
            best_order = order
            best = t
    if best is None:
        return e
    c = constant_value(best)
    lead = c if c is not None else _leading_coefficient(best)
    if lead is not None and lead < 0:
        return normal_form(mul(-1, e))
    return e


def _leading_coefficient(term: Expr) -> Optional[Fraction]:
    from .symexpr import Mul, Num

    if isinstance(term, Num):
        return term.value
    if isinstance(term, Mul):
        for a in term.args:
            if isinstance(a, Num):
                return a.value
        return Fraction(1)
    return Fraction(1)


def euler_lagrange_raw(prob: LagrangianProblem) -> EquationSet:
    """dL/du - d/dx^i dL/du_i + sum_{|I|=2} d^I/dx^I dL/du_I per field, on the
    order-4 chart, exactly as the variational formula produces it."""
    chart4 = prob.chart.extended(4)
    L = prob.lagrangian
    eqs = []
    for f in prob.chart.fields:
        residual = diff(L, prob.chart.jet(f, mi.zero(prob.chart.m)))
        for i in range(1, prob.chart.m + 1):
            residual = add(
                residual,
                -total_derivative(diff(L, prob.chart.jet(f, mi.unit(prob.chart.m, i))), i, chart4, cap=3),
            )
        for I in mi.enumerate_indices(prob.chart.m, 2):
            residual = add(
                residual,
                iterated_total_derivative(diff(L, prob.chart.jet(f, I)), I, chart4, cap=4),
            )
        eqs.append((f, normal_form(residual)))
    space = prob.jet_space(4)
    return EquationSet(space, tuple(eqs))


def euler_lagrange(prob: LagrangianProblem) -> EquationSet:
    raw = euler_lagrange_raw(prob)
    return EquationSet(
        raw.space, tuple((n, _normalize_residual_sign(e)) for n, e in raw.equations)
    )


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------


def liouville_form(
    prob: LagrangianProblem,
    space: CoordSpace,
    scalar: ExprLike,
    momentum_images: Optional[Mapping[Symbol, ExprLike]] = None,
) -> Form:
    """The symmetrized momentum-bundle m-form pattern

        scalar d^m x + p^i_a du^a ∧ d^{m-1}x_i
                     + (1/n(ij)) p^{1_i+1_j}_a du^a_i ∧ d^{m-1}x_j

    with the momentum slots optionally replaced by images (used for the
    Poincaré-Cartan and Hamilton-Cartan variants)."""
    from .extcalc import base_contraction, differential, volume_form, wedge

    chart = prob.chart
    images = dict(momentum_images or {})

    def mom_expr(sym: Symbol) -> Expr:
        return as_expr(images[sym]) if sym in images else Sym(sym)

    out = volume_form(space).scale(scalar)
    for f in chart.fields:
        du = differential(space, chart.jet(f, mi.zero(chart.m)))
        for i in range(1, chart.m + 1):
            p_i = mom_expr(chart.mom(f, mi.unit(chart.m, i)))
            out = out + wedge(du, base_contraction(space, i)).scale(p_i)
        for i in range(1, chart.m + 1):
            du_i = differential(space, chart.jet(f, mi.unit(chart.m, i)))
            for j in range(1, chart.m + 1):
                I = mi.unit(chart.m, i).add_unit(j)
                p_ij = mom_expr(chart.mom(f, I))
                coeff = mul(Fraction(1, sym_factor(i, j)), p_ij)
                out = out + wedge(du_i, base_contraction(space, j)).scale(coeff)
    return out


def canonical_liouville_forms(prob: LagrangianProblem) -> tuple[Form, Form]:
    """Theta and Omega = -dTheta on the extended 2-symmetric momentum chart."""
    from .extcalc import exterior_d

    space = prob.extended_momentum_space()
    theta = liouville_form(prob, space, Sym(prob.chart.pext()))
    return theta, -exterior_d(theta)


def unified_canonical_forms(prob: LagrangianProblem) -> tuple[Form, Form]:
    """The same pattern pulled up to the product with the order-3 jets."""
    from .extcalc import exterior_d

    space = prob.extended_unified_space()
    theta = liouville_form(prob, space, Sym(prob.chart.pext()))
    return theta, -exterior_d(theta)


def hamiltonian_function(prob: LagrangianProblem) -> Expr:
    """H = p^i_a u^a_i + p^I_a u^a_I - L on the unified chart."""
    chart = prob.chart
    out = -prob.lagrangian
    for f in chart.fields:
        for I in mi.enumerate_up_to(chart.m, 2):
            if I.order == 0:
                continue
            out = add(out, mul(Sym(chart.mom(f, I)), Sym(chart.jet(f, I))))
    return normal_form(out)


def unified_forms(prob: LagrangianProblem) -> tuple[Form, Form, Expr]:
    """Theta, Omega = -dTheta, and the Hamiltonian function on the unified chart."""
    from .extcalc import exterior_d

    space = prob.unified_space()
    H = hamiltonian_function(prob)
    theta = liouville_form(prob, space, mul(-1, H))
    return theta, -exterior_d(theta), H


def poincare_cartan(prob: LagrangianProblem) -> Form:
    """Poincaré-Cartan m-form on the order-3 jet chart: the momentum-bundle
    pattern with every momentum slot replaced by its extended Legendre image."""
    lmap = extended_legendre(prob)
    space = prob.jet_space(3)
    return liouville_form(prob, space, lmap.extended_p, lmap.momenta)


def pairing_cs(prob: LagrangianProblem) -> Expr:
    """The symmetric pairing p + p^i_a u^a_i + p^I_a u^a_I; composing the
    non-symmetric pairing with the symmetrizing embedding lands on the same
    expression, so this is also the reference for that one."""
    chart = prob.chart
    out: Expr = Sym(chart.pext())
    for f in chart.fields:
        for I in mi.enumerate_up_to(chart.m, 2):
            if I.order == 0:
                continue
            out = add(out, mul(Sym(chart.mom(f, I)), Sym(chart.jet(f, I))))
    return normal_form(out)
