import random
import time

import pytest

from conftest import random_lagrangian
from sofft import parse
from sofft.extcalc import CoordSpace
from sofft.jetspace import JetChart
from sofft import multiindex as mi
from sofft.symexpr import (
    Sym,
    add,
    coef_symbol,
    diff,
    equal,
    free_symbols,
    is_zero,
    mul,
    normal_form,
    substitute,
    PROVEN_EQUAL,
    PROBABLY_EQUAL,
)
from sofft.theory import (
    LagrangianProblem,
    euler_lagrange,
    restricted_legendre,
    unified_forms,
    _normalize_residual_sign,
)
from sofft.unified import (
    contraction_equations,
    first_constraints,
    generic_multivector,
    holonomic_multivector,
    multivector_holonomy_check,
    multivector_residuals,
    run_constraint_algorithm,
    section_equations,
)


def _p(text, prob, order=3):
    return parse(text, prob.chart.extended(order), prob.parameters)


# ---------------------------------------------------------------------------
# section equations
# ---------------------------------------------------------------------------


def test_section_equations_kdv(kdv):
    eqs = section_equations(kdv)
    want = {
        "balance[u]": "d(p.u[1,0])/dx + d(p.u[0,1])/dt",
        "momentum[u,1]": "d(p.u[2,0])/dx + 1/2*d(p.u[1,1])/dt + p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2",
        "momentum[u,2]": "1/2*d(p.u[1,1])/dx + d(p.u[0,2])/dt + p.u[0,1] - 1/2*u[1,0]",
        "algebraic[u,[2,0]]": "p.u[2,0] + u[2,0]",
        "algebraic[u,[1,1]]": "p.u[1,1]",
        "algebraic[u,[0,2]]": "p.u[0,2]",
        "holonomy[u,1]": "u[1,0] - d(u)/dx",
        "holonomy[u,2]": "u[0,1] - d(u)/dt",
        "holonomy2[u,[1,1]]": "u[1,1] - 1/2*d(u[1,0])/dt - 1/2*d(u[0,1])/dx",
    }
    for name, text in want.items():
        assert equal(eqs.get(name), _p(text, kdv)) == PROVEN_EQUAL


def test_section_equations_plate(plate):
    eqs = section_equations(plate)
    # balance group includes the uniform load: dp1/dx + dp2/dy + q = 0
    want = _p("d(p.u[1,0])/dx + d(p.u[0,1])/dy + q", plate)
    assert equal(eqs.get("balance[u]"), want) == PROVEN_EQUAL


def test_section_equations_zero_lagrangian():
    ch = JetChart(2, 1, 2, ("x", "y"), ("u",))
    prob = LagrangianProblem(ch, parse("0", ch))
    eqs = section_equations(prob)
    want = parse("d(p.u[1,0])/dx + d(p.u[0,1])/dy", ch)
    assert equal(eqs.get("balance[u]"), want) == PROVEN_EQUAL


def test_balance_equation_from_contraction_route(kdv):
    # the interior-product route through the unified form gives the same balance
    theta, omega, H = unified_forms(kdv)
    base_space = CoordSpace(tuple(kdv.chart.base_coords()), 2)
    eqs = contraction_equations(omega, base_space)
    got = eqs.get("u")
    want = section_equations(kdv).get("balance[u]")
    assert equal(got, want) == PROVEN_EQUAL


def test_all_section_equations_from_contraction_route(kdv):
    # every closed-form group is reproduced (up to sign) by some contraction
    theta, omega, H = unified_forms(kdv)
    base_space = CoordSpace(tuple(kdv.chart.base_coords()), 2)
    contr = {n: e for n, e in contraction_equations(omega, base_space)}
    closed = {n: e for n, e in section_equations(kdv)}
    matched = 0
    for cname, ce in closed.items():
        for e in contr.values():
            if (
                equal(ce, e) == PROVEN_EQUAL
                or equal(ce, mul(-1, e)) == PROVEN_EQUAL
            ):
                matched += 1
                break
    assert matched == len(closed)


# ---------------------------------------------------------------------------
# constraints and multivector residuals
# ---------------------------------------------------------------------------


def test_first_constraints_kdv(kdv):
    got = dict(first_constraints(kdv))
    assert equal(got["xi[u,[2,0]]"], _p("p.u[2,0] + u[2,0]", kdv, 2)) == PROVEN_EQUAL
    assert equal(got["xi[u,[1,1]]"], _p("p.u[1,1]", kdv, 2)) == PROVEN_EQUAL
    assert equal(got["xi[u,[0,2]]"], _p("p.u[0,2]", kdv, 2)) == PROVEN_EQUAL


def test_first_constraints_plate_and_count(plate):
    got = dict(first_constraints(plate))
    assert equal(got["xi[u,[2,0]]"], _p("p.u[2,0] - u[2,0]", plate, 2)) == PROVEN_EQUAL
    assert equal(got["xi[u,[1,1]]"], _p("p.u[1,1] - 2*u[1,1]", plate, 2)) == PROVEN_EQUAL
    assert equal(got["xi[u,[0,2]]"], _p("p.u[0,2] - u[0,2]", plate, 2)) == PROVEN_EQUAL
    # codimension n m (m+1) / 2
    assert len(got) == 1 * 2 * 3 // 2


def test_multivector_residuals_generic_kdv(kdv):
    X = generic_multivector(kdv)
    eqs = multivector_residuals(kdv, X)
    want = {
        "holonomy0[u,1]": "F.u@1 - u[1,0]",
        "holonomy1[u,[1,1]]": "1/2*F.u[1,0]@2 + 1/2*F.u[0,1]@1 - u[1,1]",
        "balance[u]": "G.u[1,0]@1 + G.u[0,1]@2",
        "momentum[u,1]": "G.u[2,0]@1 + 1/2*G.u[1,1]@2 + p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2",
        "momentum[u,2]": "1/2*G.u[1,1]@1 + G.u[0,2]@2 + p.u[0,1] - 1/2*u[1,0]",
        "algebraic[u,[2,0]]": "p.u[2,0] + u[2,0]",
    }
    for name, text in want.items():
        assert equal(eqs.get(name), _p(text, kdv)) == PROVEN_EQUAL


def test_multivector_residuals_holonomic_ansatz_zeroes_holonomy(kdv):
    X = holonomic_multivector(kdv)
    eqs = multivector_residuals(kdv, X)
    for name, e in eqs:
        if name.startswith("holonomy"):
            assert is_zero(e)


def test_multivector_residuals_zero_rates():
    # holonomic lift with vanishing momentum rates and L = 0: only the
    # momentum-type residuals survive
    ch = JetChart(2, 1, 2, ("x", "y"), ("u",))
    prob = LagrangianProblem(ch, parse("0", ch))
    X = holonomic_multivector(prob)
    zero_top = {}
    for j in (1, 2):
        r = dict(X.rates[j - 1])
        for s in list(r):
            if s.kind == "mom" or (s.kind == "jet" and s.index.order == 3):
                r[s] = normal_form(parse("0", ch))
        zero_top[j] = r
    from sofft.unified import MultiVectorField

    X0 = MultiVectorField(prob, (zero_top[1], zero_top[2]))
    eqs = multivector_residuals(prob, X0)
    nonzero = {n for n, e in eqs if not is_zero(e)}
    assert nonzero == {
        "momentum[u,1]",
        "momentum[u,2]",
        "algebraic[u,[2,0]]",
        "algebraic[u,[1,1]]",
        "algebraic[u,[0,2]]",
    }


def test_multivector_holonomy_check(kdv):
    X = holonomic_multivector(kdv)
    assert multivector_holonomy_check(kdv, X, 1).holds
    # breaking a first-level rate is caught
    from sofft.unified import MultiVectorField

    rates = [dict(r) for r in X.rates]
    rates[0][kdv.chart.jet("u", (0, 0))] = normal_form(parse("0", kdv.chart))
    Xbad = MultiVectorField(kdv, tuple(rates))
    report = multivector_holonomy_check(kdv, Xbad, 1)
    assert not report.holds
    # a generic field with free top-order rates is still holonomic of type 1
    assert multivector_holonomy_check(kdv, X, 2).holds


# ---------------------------------------------------------------------------
# the constraint algorithm
# ---------------------------------------------------------------------------


def test_ladder_kdv(kdv):
    lad = run_constraint_algorithm(kdv)
    lvl0, lvl1, lvl2 = lad.levels
    assert equal(lvl0.constraint("xi[u,[2,0]]"), _p("p.u[2,0] + u[2,0]", kdv)) == PROVEN_EQUAL
    assert equal(lvl0.constraint("xi[u,[1,1]]"), _p("p.u[1,1]", kdv)) == PROVEN_EQUAL
    assert equal(lvl0.constraint("xi[u,[0,2]]"), _p("p.u[0,2]", kdv)) == PROVEN_EQUAL
    assert (
        equal(lvl0.assignment(coef_symbol("G", "u", mi.MultiIndex((2, 0)), 1)), _p("-u[3,0]", kdv))
        == PROVEN_EQUAL
    )
    assert (
        equal(lvl1.constraint("xi[u,1]"), _p("p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2 - u[3,0]", kdv))
        == PROVEN_EQUAL
    )
    assert equal(lvl1.constraint("xi[u,2]"), _p("p.u[0,1] - 1/2*u[1,0]", kdv)) == PROVEN_EQUAL
    # level-1 momentum rates match the tangency display
    assert (
        equal(
            lvl1.assignment(coef_symbol("G", "u", mi.unit(2, 1), 1)),
            _p("1/2*u[1,1] - 6*u[1,0]*u[2,0] + F.u[3,0]@1", kdv),
        )
        == PROVEN_EQUAL
    )
    assert (
        equal(lvl1.assignment(coef_symbol("G", "u", mi.unit(2, 2), 1)), _p("1/2*u[2,0]", kdv))
        == PROVEN_EQUAL
    )
    # final condition and the uniquely determined top-order rate
    assert (
        equal(lvl2.constraint("euler-lagrange[u]"), _p("u[1,1] - 6*u[1,0]*u[2,0] + F.u[3,0]@1", kdv))
        == PROVEN_EQUAL
    )
    assert (
        equal(
            lvl2.assignment(coef_symbol("F", "u", mi.MultiIndex((3, 0)), 1)),
            _p("6*u[1,0]*u[2,0] - u[1,1]", kdv),
        )
        == PROVEN_EQUAL
    )
    assert lad.additional_constraints == ()
    assert not lad.incompatible
    assert lad.terminates_at == "legendre-graph"
    assert not lad.hessian_regular


def test_ladder_plate(plate):
    lad = run_constraint_algorithm(plate)
    lvl0, lvl1, lvl2 = lad.levels
    for name, text in [
        ("xi[u,1]", "p.u[1,0] + u[3,0] + u[1,2]"),
        ("xi[u,2]", "p.u[0,1] + u[2,1] + u[0,3]"),
    ]:
        assert equal(lvl1.constraint(name), _p(text, plate)) == PROVEN_EQUAL
    # level-0 momentum rates per the tangency displays
    want = {
        ("G", (2, 0), 1): "u[3,0]",
        ("G", (1, 1), 1): "2*u[2,1]",
        ("G", (0, 2), 1): "u[1,2]",
        ("G", (2, 0), 2): "u[2,1]",
        ("G", (1, 1), 2): "2*u[1,2]",
        ("G", (0, 2), 2): "u[0,3]",
    }
    for (letter, I, j), text in want.items():
        sym = coef_symbol(letter, "u", mi.MultiIndex(I), j)
        assert equal(lvl0.assignment(sym), _p(text, plate)) == PROVEN_EQUAL
    cond = lvl2.constraint("euler-lagrange[u]")
    want = _p("F.u[3,0]@1 + F.u[1,2]@1 + F.u[2,1]@2 + F.u[0,3]@2 - q", plate)
    assert equal(cond, want) == PROVEN_EQUAL
    assert lad.hessian_regular
    assert lad.terminates_at == "legendre-graph"
    assert lvl2.assignments == ()  # four coefficients, none uniquely determined


def test_ladder_first_order(firstorder):
    lad = run_constraint_algorithm(firstorder)
    lvl0, lvl1, lvl2 = lad.levels
    for name in ("xi[u,[2,0]]", "xi[u,[1,1]]", "xi[u,[0,2]]"):
        c = lvl0.constraint(name)
        syms = free_symbols(c)
        assert len(syms) == 1 and next(iter(syms)).kind == "mom"
    for s, e in lvl0.assignments:
        assert is_zero(e)
    assert (
        equal(lvl1.constraint("xi[u,1]"), _p("p.u[1,0] - u[1,0]", firstorder)) == PROVEN_EQUAL
    )
    # the final condition is the first-order field equation on second jets
    cond = lvl2.constraint("euler-lagrange[u]")
    assert equal(cond, _p("u[2,0] + u[0,2]", firstorder)) == PROVEN_EQUAL
    assert lad.additional_constraints != ()
    assert lad.terminates_at == "beyond-legendre-graph"
    assert not lad.incompatible


def test_ladder_flags_incompatible_system():
    # L = u[1,0]: balance forces 0 = dL/du with zero momenta: pick L = u so the
    # final condition is the constant 1 = 0 after all rates vanish
    ch = JetChart(2, 1, 2, ("x", "y"), ("u",))
    prob = LagrangianProblem(ch, parse("u", ch))
    lad = run_constraint_algorithm(prob)
    assert lad.incompatible
    assert lad.terminates_at == "beyond-legendre-graph"


def test_ladder_tangency_defining_property(kdv, plate):
    # the directional derivative of every level-0/1 constraint along the
    # assigned generators vanishes identically (not just via the closed form)
    for prob in (kdv, plate):
        lad = run_constraint_algorithm(prob)
        lvl0, lvl1, _ = lad.levels
        chart3 = prob.chart.extended(3)
        assignments = dict(lvl0.assignments) | dict(lvl1.assignments)
        X = holonomic_multivector(prob)
        for j in range(1, prob.chart.m + 1):
            rates = dict(X.rates[j - 1])
            for s in list(rates):
                if s.kind == "mom":
                    sym = coef_symbol("G", s.name, s.index, j)
                    rates[s] = assignments[sym]
            for _, constraint in list(lvl0.constraints) + list(lvl1.constraints):
                drift = diff(constraint, chart3.base(j))
                for coord, rate in rates.items():
                    drift = add(drift, mul(rate, diff(constraint, coord)))
                # tangency holds on the constraint submanifold: substitute the
                # level-0/1 momentum constraints before deciding
                onto = {
                    prob.chart.mom("u", I): restricted_legendre(prob).momenta[prob.chart.mom("u", I)]
                    for I in mi.enumerate_up_to(2, 2)
                    if I.order >= 1
                }
                assert is_zero(normal_form(substitute(normal_form(drift), onto)))


def test_ladder_legendre_graph_consistency(kdv, plate, firstorder):
    # substituting the Legendre images into the level-1 constraints gives zero
    for prob in (kdv, plate, firstorder):
        lad = run_constraint_algorithm(prob)
        lmap = restricted_legendre(prob)
        for name, c in lad.levels[1].constraints:
            assert is_zero(normal_form(substitute(c, dict(lmap.momenta))))


# ---------------------------------------------------------------------------
# two-route Euler-Lagrange agreement
# ---------------------------------------------------------------------------


def _ladder_el_via_substitution(prob):
    """Final ladder condition with the free rates replaced by their holonomic
    prolongation values, lifted to the order-4 chart."""
    lad = run_constraint_algorithm(prob)
    chart4 = prob.chart.extended(4)
    out = []
    for f in prob.chart.fields:
        cond = lad.levels[2].constraint(f"euler-lagrange[{f}]")
        subs = {}
        for s in free_symbols(cond):
            if s.kind == "coef" and s.letter == "F":
                subs[s] = Sym(chart4.jet(s.name, s.index.add_unit(s.direction)))
        out.append((f, _normalize_residual_sign(normal_form(substitute(cond, subs)))))
    return out


@pytest.mark.parametrize("fixture", ["kdv", "plate", "firstorder"])
def test_two_route_euler_lagrange_fixtures(fixture, request):
    prob = request.getfixturevalue(fixture)
    direct = euler_lagrange(prob)
    for f, via_ladder in _ladder_el_via_substitution(prob):
        assert equal(direct.get(f), via_ladder) == PROVEN_EQUAL


def test_two_route_euler_lagrange_random():
    rng = random.Random(2024)
    ch = JetChart(2, 1, 2, ("x", "y"), ("u",))
    t0 = time.monotonic()
    for k in range(5):
        L = random_lagrangian(rng, ch)
        prob = LagrangianProblem(ch, L)
        direct = euler_lagrange(prob)
        for f, via_ladder in _ladder_el_via_substitution(prob):
            verdict = equal(direct.get(f), via_ladder, samples=40)
            assert verdict in (PROVEN_EQUAL, PROBABLY_EQUAL)
    assert time.monotonic() - t0 < 10.0
