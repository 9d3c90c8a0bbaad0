from fractions import Fraction

import pytest

from sofft import LagrangianProblem, parse
from sofft.jetspace import JetChart
from sofft.symexpr import Num, Sym, add, mul, param_symbol


KDV_L = "1/2*(u[1,0]*u[0,1] - 2*u[1,0]^3 - u[2,0]^2)"
PLATE_L = "1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u)"
FIRSTORDER_L = "1/2*(u[1,0]^2 + u[0,1]^2)"
SOLITON = "-sqrt(c)*tanh(sqrt(c)/2*(x - c*t))"


@pytest.fixture(scope="session")
def kdv():
    chart = JetChart(2, 1, 2, ("x", "t"), ("u",))
    return LagrangianProblem(chart, parse(KDV_L, chart))


@pytest.fixture(scope="session")
def plate():
    chart = JetChart(2, 1, 2, ("x", "y"), ("u",))
    return LagrangianProblem(chart, parse(PLATE_L, chart, ("q",)), ("q",))


@pytest.fixture(scope="session")
def firstorder():
    chart = JetChart(2, 1, 2, ("x", "y"), ("u",))
    return LagrangianProblem(chart, parse(FIRSTORDER_L, chart))


def random_polynomial(rng, symbols, max_terms=5, max_factors=3, max_power=2):
    """Random polynomial with small rational coefficients over the symbols."""
    terms = []
    for _ in range(rng.randint(1, max_terms)):
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        if coeff == 0:
            coeff = Fraction(1)
        factors = [Num(coeff)]
        for _ in range(rng.randint(0, max_factors)):
            s = rng.choice(symbols)
            factors.append(Sym(s) ** rng.randint(1, max_power))
        terms.append(mul(*factors))
    return add(*terms)


def random_lagrangian(rng, chart, params=()):
    """Random polynomial Lagrangian of degree <= 3 in the order-<=2 jets."""
    jets = chart.jet_coords(2)
    terms = []
    for _ in range(rng.randint(3, 7)):
        coeff = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
        if coeff == 0:
            coeff = Fraction(2)
        factors = [Num(coeff)]
        for _ in range(rng.randint(1, 3)):
            factors.append(Sym(rng.choice(jets)))
        if params and rng.random() < 0.3:
            factors.append(Sym(param_symbol(rng.choice(params))))
        terms.append(mul(*factors))
    return add(*terms)


def random_point(rng, symbols, lo=-2.0, hi=2.0):
    return {s: rng.uniform(lo, hi) for s in symbols}
