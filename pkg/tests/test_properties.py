"""Standalone property suites over seeded random instances."""

import random
import time

from conftest import random_point, random_polynomial
from sofft.extcalc import CoordSpace, Form, exterior_d
from sofft.jetspace import JetChart, SectionExpr, holonomy_check, prolong, total_derivative
from sofft.numcheck import finite_diff_validate
from sofft.symexpr import equal, PROVEN_EQUAL


CHART = JetChart(2, 1, 2, ("x", "t"), ("u",))


def test_dd_zero_100():
    rng = random.Random(101)
    coords = tuple(CHART.base_coords() + [CHART.jet("u", (0, 0)), CHART.jet("u", (1, 0))])
    space = CoordSpace(coords, 2)
    symbols = list(coords)
    t0 = time.monotonic()
    for _ in range(100):
        deg = rng.randint(0, 2)
        keys = {tuple(sorted(rng.sample(range(space.dim), deg))) for _ in range(2)}
        a = Form.build(
            space, deg, {k: random_polynomial(rng, symbols, max_terms=3) for k in keys}
        )
        assert exterior_d(exterior_d(a)).is_zero()
    assert time.monotonic() - t0 < 20.0


def test_total_derivative_commutation_100():
    rng = random.Random(103)
    ch4 = CHART.extended(4)
    symbols = [CHART.jet("u", I) for I in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)]]
    symbols += [CHART.base(1), CHART.base(2)]
    t0 = time.monotonic()
    for _ in range(100):
        e = random_polynomial(rng, symbols, max_terms=3)
        d12 = total_derivative(total_derivative(e, 1, ch4, cap=3), 2, ch4, cap=4)
        d21 = total_derivative(total_derivative(e, 2, ch4, cap=3), 1, ch4, cap=4)
        assert equal(d12, d21) == PROVEN_EQUAL
    assert time.monotonic() - t0 < 20.0


def test_prolongation_holonomy_100():
    rng = random.Random(107)
    base_syms = [CHART.base(1), CHART.base(2)]
    t0 = time.monotonic()
    for _ in range(100):
        u = random_polynomial(rng, base_syms, max_terms=3, max_power=3)
        s = SectionExpr.from_fields(CHART, {"u": u})
        assert holonomy_check(prolong(s, 2), 1, 2).holds
    assert time.monotonic() - t0 < 20.0


def test_diff_against_finite_differences_100():
    rng = random.Random(109)
    symbols = [CHART.base(1), CHART.base(2), CHART.jet("u", (0, 0))]
    t0 = time.monotonic()
    for _ in range(100):
        e = random_polynomial(rng, symbols, max_terms=3)
        s = rng.choice(symbols)
        pts = [random_point(rng, symbols) for _ in range(3)]
        assert finite_diff_validate(e, s, pts) < 1e-6
    assert time.monotonic() - t0 < 20.0
