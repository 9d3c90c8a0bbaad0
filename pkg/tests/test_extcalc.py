import random
from fractions import Fraction

import pytest

from conftest import random_point, random_polynomial
from sofft import parse
from sofft.extcalc import (
    CoordSpace,
    Form,
    VectorField,
    base_contraction,
    contraction_kernel_rank,
    differential,
    exterior_d,
    interior,
    pullback_by_section,
    volume_form,
    wedge,
)
from sofft.jetspace import JetChart
from sofft.symexpr import (
    Sym,
    equal,
    evaluate,
    is_zero,
    normal_form,
    PROVEN_EQUAL,
)
from sofft.theory import (
    canonical_liouville_forms,
    unified_canonical_forms,
    unified_forms,
)


@pytest.fixture(scope="module")
def chart():
    return JetChart(2, 1, 2, ("x", "t"), ("u",))


@pytest.fixture(scope="module")
def small_space(chart):
    coords = tuple(chart.base_coords() + [chart.jet("u", (0, 0)), chart.jet("u", (1, 0))])
    return CoordSpace(coords, 2)


def test_wedge_basis(small_space, chart):
    dx = differential(small_space, chart.base(1))
    dt = differential(small_space, chart.base(2))
    w = wedge(dx, dt)
    assert w.coefficient(chart.base(1), chart.base(2)) == normal_form(parse("1", chart))
    assert wedge(dx, dx).is_zero()


def test_wedge_anticommutes(small_space, chart):
    dx = differential(small_space, chart.base(1))
    du = differential(small_space, chart.jet("u", (0, 0)))
    assert (wedge(du, dx) + wedge(dx, du)).is_zero()


def test_exterior_d_leaf(small_space, chart):
    # d(p dx^dt) has one term dp ^ dx ^ dt; here with a stand-in coefficient u
    vol = volume_form(small_space)
    p_vol = vol.scale(Sym(chart.jet("u", (0, 0))))
    d = exterior_d(p_vol)
    assert d.degree == 3
    got = d.coefficient(chart.jet("u", (0, 0)), chart.base(1), chart.base(2))
    assert equal(got, 1) == PROVEN_EQUAL


def test_dd_zero_on_random_forms(small_space, chart):
    rng = random.Random(7)
    symbols = list(small_space.coords)
    for _ in range(20):
        deg = rng.randint(0, 2)
        keys = set()
        for _ in range(2):
            keys.add(tuple(sorted(rng.sample(range(small_space.dim), deg))))
        raw = {k: random_polynomial(rng, symbols) for k in keys}
        a = Form.build(small_space, deg, raw)
        assert exterior_d(exterior_d(a)).is_zero()


def test_interior_basis(small_space, chart):
    dx = differential(small_space, chart.base(1))
    dt = differential(small_space, chart.base(2))
    X = VectorField.basis(small_space, chart.base(1))
    got = interior(X, wedge(dx, dt))
    assert equal(got.coefficient(chart.base(2)), 1) == PROVEN_EQUAL
    assert interior(X, interior(X, wedge(dx, dt))).is_zero()


def test_interior_antiderivation(small_space, chart):
    rng = random.Random(9)
    symbols = list(small_space.coords)
    for _ in range(15):
        a = Form.build(small_space, 1, {(rng.randint(0, 3),): random_polynomial(rng, symbols)})
        b = Form.build(small_space, 1, {(rng.randint(0, 3),): random_polynomial(rng, symbols)})
        X = VectorField.build(
            small_space, {s: random_polynomial(rng, symbols, max_terms=2) for s in symbols}
        )
        lhs = interior(X, wedge(a, b))
        rhs = wedge(interior(X, a), b) + wedge(a, interior(X, b)).scale(-1)
        assert (lhs + rhs.scale(-1)).is_zero()


def test_interior_ixix_zero(small_space, chart):
    rng = random.Random(13)
    symbols = list(small_space.coords)
    for _ in range(10):
        raw = {
            (0, 1): random_polynomial(rng, symbols),
            (1, 3): random_polynomial(rng, symbols),
            (2, 3): random_polynomial(rng, symbols),
        }
        a = Form.build(small_space, 2, raw)
        X = VectorField.build(
            small_space, {s: random_polynomial(rng, symbols, max_terms=2) for s in symbols}
        )
        assert interior(X, interior(X, a)).is_zero()


# ---------------------------------------------------------------------------
# pullbacks
# ---------------------------------------------------------------------------


def test_pullback_du_chain_rule(small_space, chart):
    base_space = CoordSpace(tuple(chart.base_coords()), 2)
    du = differential(small_space, chart.jet("u", (0, 0)))
    comps = {
        chart.jet("u", (0, 0)): parse("x^2", chart),
        chart.jet("u", (1, 0)): parse("2*x", chart),
    }
    got = pullback_by_section(du, comps, base_space)
    assert equal(got.coefficient(chart.base(1)), parse("2*x", chart)) == PROVEN_EQUAL
    assert is_zero(got.coefficient(chart.base(2)))


def test_pullback_fixes_base_forms(small_space, chart):
    base_space = CoordSpace(tuple(chart.base_coords()), 2)
    vol = volume_form(small_space)
    comps = {
        chart.jet("u", (0, 0)): parse("x*t", chart),
        chart.jet("u", (1, 0)): parse("t", chart),
    }
    got = pullback_by_section(vol, comps, base_space)
    assert equal(got.coefficient(chart.base(1), chart.base(2)), 1) == PROVEN_EQUAL


def test_pullback_commutes_with_wedge_and_d(small_space, chart):
    rng = random.Random(21)
    base_space = CoordSpace(tuple(chart.base_coords()), 2)
    base_syms = [chart.base(1), chart.base(2)]
    for _ in range(10):
        comps = {
            chart.jet("u", (0, 0)): random_polynomial(rng, base_syms),
            chart.jet("u", (1, 0)): random_polynomial(rng, base_syms),
        }
        a = Form.build(
            small_space, 1, {(i,): random_polynomial(rng, list(small_space.coords)) for i in (2, 3)}
        )
        b = Form.build(
            small_space, 1, {(i,): random_polynomial(rng, list(small_space.coords)) for i in (0, 2)}
        )
        lhs = pullback_by_section(wedge(a, b), comps, base_space)
        rhs = wedge(
            pullback_by_section(a, comps, base_space),
            pullback_by_section(b, comps, base_space),
        )
        assert (lhs + rhs.scale(-1)).is_zero()
        lhs = pullback_by_section(exterior_d(a), comps, base_space)
        rhs = exterior_d(pullback_by_section(a, comps, base_space))
        assert (lhs + rhs.scale(-1)).is_zero()


def test_pullback_of_unified_contraction_detects_violation(kdv):
    # a section with p^1 = x violates the balance equation by exactly 1
    prob = kdv
    chart = prob.chart
    theta, omega, H = unified_forms(prob)
    space = omega.space
    base_space = CoordSpace(tuple(chart.base_coords()), 2)
    X = VectorField.basis(space, chart.jet("u", (0, 0)))
    contr = interior(X, omega)
    comps = {z: parse("0", chart) for z in space.fiber_coords()}
    comps[chart.mom("u", (1, 0))] = parse("x", chart)
    got = pullback_by_section(contr, comps, base_space)
    coeff = got.coefficient(chart.base(1), chart.base(2))
    value = evaluate(coeff, {chart.base(1): 0.3, chart.base(2): 0.7})
    assert abs(value - 1.0) < 1e-12


def test_volume_contractions(chart, small_space):
    # base contraction convention: d^{m-1}x_1 = dt, d^{m-1}x_2 = -dx
    c1 = base_contraction(small_space, 1)
    c2 = base_contraction(small_space, 2)
    assert equal(c1.coefficient(chart.base(2)), 1) == PROVEN_EQUAL
    assert equal(c2.coefficient(chart.base(1)), -1) == PROVEN_EQUAL


# ---------------------------------------------------------------------------
# canonical-form identities on the fixtures
# ---------------------------------------------------------------------------


def _omega_from_pattern(prob, H):
    """Independent construction: dH ^ d2x - dp^i ^ du ^ dC_i - (1/n) dp^I ^ du_i ^ dC_j."""
    from sofft import multiindex as mi
    from sofft.multiindex import sym_factor

    chart = prob.chart
    space = prob.unified_space()
    out = wedge(
        Form.build(space, 1, {(w,): d for w, d in _gradient(H, space).items()}),
        volume_form(space),
    )
    for f in chart.fields:
        du = differential(space, chart.jet(f, mi.zero(chart.m)))
        for i in range(1, chart.m + 1):
            dp = differential(space, chart.mom(f, mi.unit(chart.m, i)))
            out = out + wedge(wedge(dp, du), base_contraction(space, i)).scale(-1)
        for i in range(1, chart.m + 1):
            du_i = differential(space, chart.jet(f, mi.unit(chart.m, i)))
            for j in range(1, chart.m + 1):
                I = mi.unit(chart.m, i).add_unit(j)
                dp = differential(space, chart.mom(f, I))
                out = out + wedge(wedge(dp, du_i), base_contraction(space, j)).scale(
                    Fraction(-1, sym_factor(i, j))
                )
    return out


def _gradient(e, space):
    from sofft.symexpr import diff

    out = {}
    for w, z in enumerate(space.coords):
        d = diff(e, z)
        if not is_zero(d):
            out[w] = d
    return out


@pytest.mark.parametrize("fixture", ["kdv", "plate"])
def test_omega_r_equals_minus_d_theta_r(fixture, request):
    prob = request.getfixturevalue(fixture)
    theta, omega, H = unified_forms(prob)
    assert (omega + exterior_d(theta)).is_zero()
    independent = _omega_from_pattern(prob, H)
    assert (omega + independent.scale(-1)).is_zero()


def test_unified_form_degeneracy(kdv):
    # contraction with the order-2 and order-3 jet directions kills the form
    from sofft import multiindex as mi

    theta, omega = unified_canonical_forms(kdv)
    chart3 = kdv.chart.extended(3)
    for I in mi.enumerate_up_to(2, 3):
        if I.order < 2:
            continue
        X = VectorField.basis(omega.space, chart3.jet("u", I))
        assert interior(X, omega).is_zero()


def test_canonical_liouville_nondegenerate(kdv):
    theta, omega = canonical_liouville_forms(kdv)
    rng = random.Random(43)
    for _ in range(5):
        bindings = random_point(rng, omega.space.coords)
        assert contraction_kernel_rank(omega, bindings) == omega.space.dim
