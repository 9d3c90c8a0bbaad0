"""Hamiltonian-side derivations: the Hamiltonian function through a section of
the Legendre map (regular case), Hamilton-De Donder-Weyl equations, and the
image-submanifold constraints with the induced Hamiltonian (almost-regular)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from . import multiindex as mi
from .extcalc import CoordSpace, Form, exterior_d
from .multiindex import MultiIndex, sym_factor
from .symexpr import (
    Add,
    Expr,
    ExprLike,
    Sym,
    Symbol,
    add,
    as_expr,
    constant_value,
    diff,
    free_symbols,
    is_zero,
    mul,
    normal_form,
    substitute,
    ZERO,
)
from .theory import (
    EquationSet,
    LagrangianProblem,
    LegendreMap,
    hessian,
    hessian_order,
    liouville_form,
    restricted_legendre,
    extended_legendre,
)
from .unified import contraction_equations


class SectionInvariantError(ValueError):
    """A claimed Legendre-map section fails the composition identity."""

    def __init__(self, symbol: Symbol, residual: Expr):
        super().__init__(
            f"section does not invert the Legendre map on {symbol}: residual {residual}"
        )
        self.symbol = symbol
        self.residual = residual


class NonAffineImageError(ValueError):
    """Momentum images are not affine in the higher-order jets, so automatic
    elimination is not attempted."""


@dataclass(frozen=True)
class LegendreSection:
    """Images for the order-2 and order-3 jet coordinates as expressions over
    the restricted momentum chart; unlisted jets default to zero."""

    problem: LagrangianProblem
    images: Mapping[Symbol, Expr]

    def full_images(self) -> dict[Symbol, Expr]:
        chart = self.problem.chart.extended(3)
        out: dict[Symbol, Expr] = {}
        for f in chart.fields:
            for I in mi.enumerate_up_to(chart.m, 3):
                if I.order < 2:
                    continue
                s = chart.jet(f, I)
                out[s] = as_expr(self.images.get(s, ZERO))
        return out

    def validate(self, lmap: Optional[LegendreMap] = None) -> None:
        lmap = lmap or restricted_legendre(self.problem)
        images = self.full_images()
        for p_sym in sorted(lmap.momenta, key=lambda s: s.sort_key()):
            composed = normal_form(substitute(lmap.momenta[p_sym], images))
            residual = normal_form(add(composed, -Sym(p_sym)))
            if not is_zero(residual):
                raise SectionInvariantError(p_sym, residual)


def invert_diagonal_quadratic(prob: LagrangianProblem) -> LegendreSection:
    """Automatic Legendre inversion for Lagrangians whose highest-order part is
    diagonal quadratic with constant nonzero coefficients: the second-order jets
    invert directly and the third-order images split the first-order momentum
    relation evenly across the base directions."""
    chart = prob.chart
    m = chart.m
    H = hessian(prob)
    labels = hessian_order(chart)
    diag: dict[tuple[str, MultiIndex], Fraction] = {}
    for a, (f, I) in enumerate(labels):
        for b in range(len(labels)):
            c = constant_value(H[a][b])
            if a == b:
                if c is None or c == 0:
                    raise NonAffineImageError(
                        "highest-order Hessian is not constant diagonal invertible"
                    )
                diag[(f, I)] = c
            elif c is None or c != 0:
                raise NonAffineImageError("highest-order Hessian is not diagonal")
    images: dict[Symbol, Expr] = {}
    lower: dict[Symbol, Expr] = {}
    for (f, I), c in diag.items():
        # dL/du_I = c u_I + (terms of order <= 1); solve u_I = (p^I - lower)/c
        dL = diff(prob.lagrangian, chart.jet(f, I))
        rest = normal_form(add(dL, -mul(c, Sym(chart.jet(f, I)))))
        images[chart.jet(f, I)] = normal_form(
            mul(Fraction(1, 1) / c, add(Sym(chart.mom(f, I)), -rest))
        )
    chart3 = chart.extended(3)
    for f in chart.fields:
        for i in range(1, m + 1):
            # p^i = dL/du_i - sum_j (1/n(ij)) c_{1_i+1_j} u_{1_i+1_j+1_j}: split evenly
            dle = substitute(diff(prob.lagrangian, chart.jet(f, mi.unit(m, i))), images)
            gap = normal_form(add(dle, -Sym(chart.mom(f, mi.unit(m, i)))))
            for j in range(1, m + 1):
                I = mi.unit(m, i).add_unit(j)
                J = I.add_unit(j)
                images[chart3.jet(f, J)] = normal_form(
                    mul(Fraction(sym_factor(i, j), m) / diag[(f, I)], gap)
                )
    section = LegendreSection(prob, images)
    section.validate()
    return section


def ham_function_regular(
    prob: LagrangianProblem, section: Optional[LegendreSection] = None
) -> Expr:
    """H = p^i u_i + p^I (section image of u_I) - L composed with the section,
    on the restricted momentum chart."""
    if section is None:
        section = invert_diagonal_quadratic(prob)
    else:
        section.validate()
    chart = prob.chart
    images = section.full_images()
    out: Expr = mul(-1, substitute(prob.lagrangian, images))
    for f in chart.fields:
        for i in range(1, chart.m + 1):
            I = mi.unit(chart.m, i)
            out = add(out, mul(Sym(chart.mom(f, I)), Sym(chart.jet(f, I))))
        for I in mi.enumerate_indices(chart.m, 2):
            out = add(out, mul(Sym(chart.mom(f, I)), images[chart.jet(f, I)]))
    return normal_form(out)


# ---------------------------------------------------------------------------
# image submanifold (almost-regular case)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImageSubmanifold:
    """The image of the restricted Legendre map, cut out of the momentum chart
    by closed-form constraints; eliminated coordinates carry embedding images."""

    problem: LagrangianProblem
    constraints: tuple[Expr, ...]
    induced: tuple[Symbol, ...]
    embedding: Mapping[Symbol, Expr]
    solved_jets: Mapping[Symbol, Expr]

    @property
    def dim(self) -> int:
        return len(self.induced)

    def space(self) -> CoordSpace:
        return CoordSpace(self.induced, self.problem.chart.m)

    def embed(self, e: ExprLike) -> Expr:
        """Restrict a momentum-chart expression to the submanifold."""
        return normal_form(substitute(as_expr(e), self.embedding))

    def canonical_section(self) -> LegendreSection:
        """The section built from the jets the elimination solved for, with all
        remaining higher-order jets set to zero, restricted to the submanifold."""
        images = {s: self.embed(e) for s, e in self.solved_jets.items()}
        return LegendreSection(self.problem, images)


def image_submanifold(prob: LagrangianProblem) -> ImageSubmanifold:
    """Eliminate the order-2 and order-3 jets from the momentum image system by
    linear elimination over expressions in the base, field and first-order jet
    coordinates; the relations that survive cut out the image."""
    chart = prob.chart
    chart3 = chart.extended(3)
    lmap = restricted_legendre(prob)
    unknowns = [
        chart3.jet(f, I)
        for f in chart.fields
        for I in mi.enumerate_up_to(chart.m, 3)
        if I.order >= 2
    ]
    unknown_set = set(unknowns)

    equations: list[Expr] = []
    for p_sym in sorted(lmap.momenta, key=lambda s: s.sort_key()):
        equations.append(normal_form(add(Sym(p_sym), -lmap.momenta[p_sym])))

    for e in equations:
        for u in free_symbols(e) & unknown_set:
            c = diff(e, u)
            if free_symbols(c) & unknown_set:
                raise NonAffineImageError(
                    f"momentum image system is not affine in {u}"
                )

    solved: dict[Symbol, Expr] = {}
    pending = list(equations)
    progress = True
    while progress:
        progress = False
        for idx, e in enumerate(pending):
            present = sorted(free_symbols(e) & unknown_set, key=lambda s: s.sort_key())
            for u in present:
                c = diff(e, u)
                cval = constant_value(c)
                if cval:
                    sol = normal_form(add(Sym(u), -mul(Fraction(1, 1) / cval, e)))
                    solved[u] = sol
                    subs = {u: sol}
                    pending = [
                        normal_form(substitute(q, subs)) if k != idx else ZERO
                        for k, q in enumerate(pending)
                    ]
                    solved = {s: normal_form(substitute(v, subs)) for s, v in solved.items()}
                    progress = True
                    break
            if progress:
                break

    constraints = []
    for e in pending:
        if is_zero(e):
            continue
        if free_symbols(e) & unknown_set:
            raise NonAffineImageError(
                "higher-order jets without a constant pivot remain in the image system"
            )
        constraints.append(e)

    # solve each constraint for a momentum coordinate to get the embedding
    embedding: dict[Symbol, Expr] = {}
    for e in constraints:
        candidates = sorted(
            (s for s in free_symbols(e) if s.kind == "mom" and s not in embedding),
            key=lambda s: s.sort_key(),
        )
        pivot = None
        for p_sym in candidates:
            cval = constant_value(diff(e, p_sym))
            if cval:
                pivot = (p_sym, cval)
                break
        if pivot is None:
            raise NonAffineImageError("a constraint has no momentum pivot")
        p_sym, cval = pivot
        embedding[p_sym] = normal_form(add(Sym(p_sym), -mul(Fraction(1, 1) / cval, e)))
    # re-express embeddings among themselves
    for s in list(embedding):
        embedding[s] = normal_form(substitute(embedding[s], {k: v for k, v in embedding.items() if k != s}))

    space = prob.momentum_space()
    induced = tuple(z for z in space.coords if z not in embedding)
    solved_on_p = {
        s: normal_form(substitute(v, embedding)) for s, v in solved.items()
    }
    return ImageSubmanifold(
        problem=prob,
        constraints=tuple(constraints),
        induced=induced,
        embedding=embedding,
        solved_jets=solved_on_p,
    )


def ham_function_almost_regular(
    prob: LagrangianProblem, P: ImageSubmanifold, section: LegendreSection
) -> Expr:
    """H = -(scalar momentum image composed with the section), expressed in the
    induced coordinates of the image submanifold."""
    lmap = extended_legendre(prob)
    images = {s: P.embed(e) for s, e in section.full_images().items()}
    _validate_on_image(prob, P, images)
    return normal_form(mul(-1, substitute(lmap.extended_p, images)))


def _validate_on_image(
    prob: LagrangianProblem, P: ImageSubmanifold, images: Mapping[Symbol, Expr]
) -> None:
    lmap = restricted_legendre(prob)
    for p_sym in sorted(lmap.momenta, key=lambda s: s.sort_key()):
        composed = normal_form(substitute(lmap.momenta[p_sym], images))
        want = P.embed(Sym(p_sym))
        residual = normal_form(add(composed, -want))
        if not is_zero(residual):
            raise SectionInvariantError(p_sym, residual)


# ---------------------------------------------------------------------------
# Hamilton-Cartan forms and field equations
# ---------------------------------------------------------------------------


def hamilton_cartan_form(
    prob: LagrangianProblem, H: Expr, P: Optional[ImageSubmanifold] = None
) -> tuple[Form, Form]:
    """Theta_h (the momentum-bundle pattern with the scalar slot at -H) and
    Omega_h = -d Theta_h, on the full momentum chart or on the submanifold."""
    if P is None:
        space = prob.momentum_space()
        theta = liouville_form(prob, space, mul(-1, H))
    else:
        space = P.space()
        images = {
            s: P.embed(Sym(s))
            for s in prob.momentum_space().coords
            if s.kind == "mom"
        }
        theta = liouville_form(prob, space, mul(-1, P.embed(H)), images)
    return theta, -exterior_d(theta)


def _normalize_dx_sign(e: Expr) -> Expr:
    """Sign-normalize a residual so its earliest opaque-derivative term enters
    positively; residuals without one keep the condition-sign convention."""
    from .theory import _leading_coefficient
    from .unified import _normalize_condition_sign

    e = normal_form(e)
    terms = e.args if isinstance(e, Add) else (e,)
    for t in terms:
        if any(s.kind == "dx" for s in free_symbols(t)):
            lead = _leading_coefficient(t)
            if lead is not None and lead < 0:
                return normal_form(mul(-1, e))
            return e
    return _normalize_condition_sign(e)


def hamilton_ddw_equations(
    prob: LagrangianProblem, H: Expr, P: Optional[ImageSubmanifold] = None
) -> EquationSet:
    """The Hamilton-De Donder-Weyl system: one residual per fiber coordinate of
    the phase space, from contracting Omega_h and pulling back along a generic
    section.  Component derivatives appear as opaque d(.)/dx^i symbols."""
    _, omega = hamilton_cartan_form(prob, H, P)
    chart = prob.chart
    base = CoordSpace(tuple(chart.base_coords()), chart.m)
    eqs = contraction_equations(omega, base)
    return EquationSet(
        eqs.space, tuple((n, _normalize_dx_sign(e)) for n, e in eqs.equations)
    )
