"""Symbolic expression core: immutable trees over chart coordinates and parameters.

Expressions are trees of sums, products, integer powers, quotients and a small
set of unary functions, with exact rational constants.  ``normal_form`` rewrites
any expression into a canonical expanded polynomial over "generators" (symbols,
function applications, inverted multi-term polynomials); golden-string output
and proven equality both rest on that canonical form.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Callable, Mapping, Optional, Union

from .multiindex import MultiIndex

# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

BASE = "base"
JET = "jet"
MOM = "mom"
PEXT = "pext"
PARAM = "param"
DX = "dx"
COEF = "coef"

_KIND_RANK = {BASE: 0, JET: 1, MOM: 2, PEXT: 3, PARAM: 4, DX: 5, COEF: 6}

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "tanh", "sech")

RESERVED_NAMES = set(FUNCTIONS) | {"p", "p0", "d", "F", "G"}


@dataclass(frozen=True)
class Symbol:
    """A chart coordinate, parameter, or derived opaque symbol.

    kind       one of base / jet / mom / pext / param / dx / coef
    name       base-coordinate or parameter name; field name for jet/mom/coef
    index      multi-index for jet/mom/coef kinds (order 0 allowed for jets and
               the F-coefficients, 1..2 for momenta)
    direction  base direction for dx and coef kinds (1-based)
    inner      differentiated symbol, for dx
    letter     "F" or "G", for coef
    """

    kind: str
    name: str = ""
    index: Optional[MultiIndex] = None
    direction: Optional[int] = None
    inner: Optional["Symbol"] = None
    letter: str = ""

    def sort_key(self) -> tuple:
        rank = _KIND_RANK[self.kind]
        if self.kind == BASE:
            return (rank, self.direction)
        if self.kind in (JET, MOM):
            return (rank, self.name, self.index.order, tuple(-e for e in self.index))
        if self.kind == PEXT:
            return (rank,)
        if self.kind == PARAM:
            return (rank, self.name)
        if self.kind == DX:
            return (rank, self.inner.sort_key(), self.direction)
        return (
            rank,
            0 if self.letter == "F" else 1,
            self.name,
            self.index.order,
            tuple(-e for e in self.index),
            self.direction,
        )

    def __str__(self) -> str:
        if self.kind in (BASE, PARAM):
            return self.name
        if self.kind == JET:
            return self.name if self.index.order == 0 else f"{self.name}{self.index}"
        if self.kind == MOM:
            return f"p.{self.name}{self.index}"
        if self.kind == PEXT:
            return "p0"
        if self.kind == DX:
            return f"d({self.inner})/d{self.name}"
        idx = "" if self.index.order == 0 else str(self.index)
        return f"{self.letter}.{self.name}{idx}@{self.direction}"

    def __repr__(self) -> str:
        return f"<{self}>"


def base_symbol(name: str, i: int) -> Symbol:
    return Symbol(BASE, name=name, direction=i)


def jet_symbol(field: str, index: MultiIndex) -> Symbol:
    return Symbol(JET, name=field, index=index)


def momentum_symbol(field: str, index: MultiIndex) -> Symbol:
    if not 1 <= index.order <= 2:
        raise ValueError(f"momentum multi-index order must be 1 or 2, got {index}")
    return Symbol(MOM, name=field, index=index)


def extended_momentum_symbol() -> Symbol:
    return Symbol(PEXT)


def param_symbol(name: str) -> Symbol:
    return Symbol(PARAM, name=name)


def dx_symbol(inner: Symbol, i: int, base_name: str) -> Symbol:
    """Opaque partial derivative of a section component along x^i."""
    return Symbol(DX, name=base_name, direction=i, inner=inner)


def coef_symbol(letter: str, field: str, index: MultiIndex, j: int) -> Symbol:
    """Undetermined multivector coefficient F^field_{index,j} or G^index_{field,j}."""
    if letter not in ("F", "G"):
        raise ValueError("coefficient letter must be F or G")
    return Symbol(COEF, name=field, index=index, direction=j, letter=letter)


# ---------------------------------------------------------------------------
# expression trees
# ---------------------------------------------------------------------------


class Expr:
    """Immutable symbolic expression node."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Num(Fraction(-1)), as_expr(other)))))

    def __rsub__(self, other):
        return Add((as_expr(other), Mul((Num(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, n: int):
        return Pow(self, int(n))

    def __neg__(self):
        return Mul((Num(Fraction(-1)), self))

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Expr({render(self)})"


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, repr=False)
class Sym(Expr):
    symbol: Symbol


@dataclass(frozen=True, repr=False)
class Add(Expr):
    args: tuple


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    args: tuple


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, repr=False)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, repr=False)
class App(Expr):
    func: str
    arg: Expr

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


ExprLike = Union[Expr, int, Fraction]

ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def as_expr(v: ExprLike) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Num(Fraction(v))
    raise TypeError(f"cannot convert {v!r} to Expr")


def add(*args: ExprLike) -> Expr:
    terms = tuple(as_expr(a) for a in args)
    if not terms:
        return ZERO
    return terms[0] if len(terms) == 1 else Add(terms)


def mul(*args: ExprLike) -> Expr:
    factors = tuple(as_expr(a) for a in args)
    if not factors:
        return ONE
    return factors[0] if len(factors) == 1 else Mul(factors)


# ---------------------------------------------------------------------------
# canonical form
#
# A canonical polynomial maps monomials to rational coefficients.  A monomial
# is a sorted tuple of (generator, exponent) pairs with nonzero integer
# exponents.  Generators are symbols, normalized function applications, or
# inverted multi-term polynomials; each carries a comparable key so that the
# whole representation has one deterministic order.
# ---------------------------------------------------------------------------

# generator tags
_GSYM = 0
_GAPP = 1
_GINV = 2


def _gen_key(gen: tuple) -> tuple:
    if gen[0] == _GSYM:
        return (0, gen[1].sort_key())
    if gen[0] == _GAPP:
        return (1, gen[1], _canon_key(gen[2]))
    return (2, _canon_key(gen[1]))


def _canon_key(canon: tuple) -> tuple:
    # canon is a frozen tuple of (monomial, Fraction); monomial is a tuple of
    # (generator, exp).  Replace generators by their keys so comparisons ground
    # out in ints, strings and Fractions.
    return tuple(
        (tuple((_gen_key(g), e) for g, e in mono), coeff) for mono, coeff in canon
    )


def _mono_degree(mono: tuple) -> int:
    return sum(e for _, e in mono)


def _compare_monos(a: tuple, b: tuple) -> int:
    """Display order: total degree ascending, then earliest-generator dominance."""
    da, db = _mono_degree(a), _mono_degree(b)
    if da != db:
        return -1 if da < db else 1
    ia, ib = 0, 0
    while ia < len(a) and ib < len(b):
        ka, kb = _gen_key(a[ia][0]), _gen_key(b[ib][0])
        if ka == kb:
            ea, eb = a[ia][1], b[ib][1]
            if ea != eb:
                # bigger exponent on the shared earliest generator comes first
                return -1 if ea > eb else 1
            ia += 1
            ib += 1
        else:
            # whichever monomial holds the earlier generator comes first
            return -1 if ka < kb else 1
    if ia < len(a):
        return -1
    if ib < len(b):
        return 1
    return 0


_MONO_SORT_KEY = cmp_to_key(_compare_monos)


def _freeze(poly: dict) -> tuple:
    return tuple(sorted(poly.items(), key=lambda kv: _MONO_SORT_KEY(kv[0])))


def _poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for mono, c in b.items():
        nc = out.get(mono, Fraction(0)) + c
        if nc:
            out[mono] = nc
        else:
            out.pop(mono, None)
    return out


def _mono_mul(ma: tuple, mb: tuple) -> tuple:
    exps: dict = {}
    keys: dict = {}
    for g, e in ma + mb:
        k = _gen_key(g)
        keys[k] = g
        exps[k] = exps.get(k, 0) + e
    return tuple((keys[k], exps[k]) for k in sorted(exps) if exps[k] != 0)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = _mono_mul(ma, mb)
            c = ca * cb
            nc = out.get(mono, Fraction(0)) + c
            if nc:
                out[mono] = nc
            else:
                out.pop(mono, None)
    return out


def _poly_const(c: Fraction) -> dict:
    return {(): c} if c else {}


def _poly_pow(base: dict, n: int) -> dict:
    if n == 0:
        return _poly_const(Fraction(1))
    if n < 0:
        return _poly_inv(base, -n)
    out = _poly_const(Fraction(1))
    acc = base
    while n:
        if n & 1:
            out = _poly_mul(out, acc)
        acc = _poly_mul(acc, acc) if n > 1 else acc
        n >>= 1
    return out


def _poly_inv(p: dict, n: int = 1) -> dict:
    """1/p^n.  Single monomials invert exactly; anything else becomes a generator."""
    if not p:
        raise ZeroDivisionError("division by zero expression")
    if len(p) == 1:
        (mono, c), = p.items()
        inv_mono = tuple((g, -e * n) for g, e in mono)
        return {inv_mono: (Fraction(1) / c) ** n}
    frozen = _freeze(p)
    lead = frozen[0][1]
    scaled = {m: c / lead for m, c in p.items()}
    gen = (_GINV, _freeze(scaled))
    return {((gen, -n),): (Fraction(1) / lead) ** n}


def _canon(e: Expr) -> dict:
    if isinstance(e, Num):
        return _poly_const(e.value)
    if isinstance(e, Sym):
        return {(((_GSYM, e.symbol), 1),): Fraction(1)}
    if isinstance(e, Add):
        out: dict = {}
        for a in e.args:
            out = _poly_add(out, _canon(a))
        return out
    if isinstance(e, Mul):
        out = _poly_const(Fraction(1))
        for a in e.args:
            out = _poly_mul(out, _canon(a))
        return out
    if isinstance(e, Pow):
        return _poly_pow(_canon(e.base), e.exponent)
    if isinstance(e, Div):
        return _poly_mul(_canon(e.num), _poly_inv(_canon(e.den)))
    if isinstance(e, App):
        gen = (_GAPP, e.func, _freeze(_canon(e.arg)))
        return {((gen, 1),): Fraction(1)}
    raise TypeError(f"not an expression: {e!r}")


def _gen_to_expr(gen: tuple) -> Expr:
    if gen[0] == _GSYM:
        return Sym(gen[1])
    if gen[0] == _GAPP:
        return App(gen[1], _frozen_to_expr(gen[2]))
    return _frozen_to_expr(gen[1])


def _mono_to_expr(mono: tuple, coeff: Fraction) -> Expr:
    factors: list[Expr] = []
    if coeff != 1 or not mono:
        factors.append(Num(coeff))
    for gen, exp in mono:
        ge = _gen_to_expr(gen)
        factors.append(ge if exp == 1 else Pow(ge, exp))
    return factors[0] if len(factors) == 1 else Mul(tuple(factors))


def _frozen_to_expr(frozen: tuple) -> Expr:
    if not frozen:
        return ZERO
    terms = [_mono_to_expr(m, c) for m, c in frozen]
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def normal_form(e: ExprLike) -> Expr:
    """Canonical expanded form: like monomials collected and deterministically
    ordered, zero terms dropped, function arguments normalized recursively."""
    return _frozen_to_expr(_freeze(_canon(as_expr(e))))


def is_zero(e: ExprLike) -> bool:
    return not _canon(as_expr(e))


def is_constant(e: ExprLike) -> bool:
    c = _canon(as_expr(e))
    return all(m == () for m in c)


def constant_value(e: ExprLike) -> Optional[Fraction]:
    """The exact rational value of a constant expression, else None."""
    c = _canon(as_expr(e))
    if not c:
        return Fraction(0)
    if len(c) == 1 and () in c:
        return c[()]
    return None


# ---------------------------------------------------------------------------
# structural queries and rewriting
# ---------------------------------------------------------------------------


def free_symbols(e: Expr) -> set[Symbol]:
    out: set[Symbol] = set()

    def walk(x: Expr) -> None:
        if isinstance(x, Sym):
            out.add(x.symbol)
        elif isinstance(x, (Add, Mul)):
            for a in x.args:
                walk(a)
        elif isinstance(x, Pow):
            walk(x.base)
        elif isinstance(x, Div):
            walk(x.num)
            walk(x.den)
        elif isinstance(x, App):
            walk(x.arg)

    walk(e)
    return out


def substitute(e: Expr, images: Mapping[Symbol, ExprLike]) -> Expr:
    """Replace symbols by expressions; the result is not normalized."""

    def walk(x: Expr) -> Expr:
        if isinstance(x, Sym):
            img = images.get(x.symbol)
            return x if img is None else as_expr(img)
        if isinstance(x, Add):
            return Add(tuple(walk(a) for a in x.args))
        if isinstance(x, Mul):
            return Mul(tuple(walk(a) for a in x.args))
        if isinstance(x, Pow):
            return Pow(walk(x.base), x.exponent)
        if isinstance(x, Div):
            return Div(walk(x.num), walk(x.den))
        if isinstance(x, App):
            return App(x.func, walk(x.arg))
        return x

    return walk(e)


_DERIVATIVES: dict[str, Callable[[Expr], Expr]] = {
    "sin": lambda a: App("cos", a),
    "cos": lambda a: -App("sin", a),
    "exp": lambda a: App("exp", a),
    "ln": lambda a: Div(ONE, a),
    "sqrt": lambda a: Div(ONE, Mul((Num(Fraction(2)), App("sqrt", a)))),
    "tanh": lambda a: Pow(App("sech", a), 2),
    "sech": lambda a: -Mul((App("sech", a), App("tanh", a))),
}


def diff(e: ExprLike, s: Symbol) -> Expr:
    """Partial derivative treating all other symbols as independent; normalized."""
    return normal_form(_diff(as_expr(e), s))


def _diff(e: Expr, s: Symbol) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.symbol == s else ZERO
    if isinstance(e, Add):
        return Add(tuple(_diff(a, s) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for k in range(len(e.args)):
            factors = list(e.args)
            factors[k] = _diff(factors[k], s)
            terms.append(Mul(tuple(factors)))
        return Add(tuple(terms))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        return Mul((Num(Fraction(e.exponent)), Pow(e.base, e.exponent - 1), _diff(e.base, s)))
    if isinstance(e, Div):
        return Div(
            Add((Mul((_diff(e.num, s), e.den)), -Mul((e.num, _diff(e.den, s))))),
            Pow(e.den, 2),
        )
    if isinstance(e, App):
        return Mul((_DERIVATIVES[e.func](e.arg), _diff(e.arg, s)))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


class EvalError(ValueError):
    pass


class UnboundSymbolError(EvalError):
    def __init__(self, symbol: Symbol):
        super().__init__(f"unbound symbol {symbol}")
        self.symbol = symbol


_EVAL_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
    "sqrt": math.sqrt,
    "tanh": math.tanh,
    "sech": lambda v: 1.0 / math.cosh(v),
}


def evaluate(e: ExprLike, bindings: Mapping[Symbol, float]) -> float:
    """IEEE double evaluation; rationals convert at the leaves."""
    e = as_expr(e)
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(bindings[e.symbol])
        except KeyError:
            raise UnboundSymbolError(e.symbol) from None
    if isinstance(e, Add):
        return sum(evaluate(a, bindings) for a in e.args)
    if isinstance(e, Mul):
        out = 1.0
        for a in e.args:
            out *= evaluate(a, bindings)
        return out
    if isinstance(e, Pow):
        base = evaluate(e.base, bindings)
        if e.exponent < 0 and base == 0.0:
            raise EvalError("zero raised to a negative power")
        return base ** e.exponent
    if isinstance(e, Div):
        den = evaluate(e.den, bindings)
        if den == 0.0:
            raise EvalError("division by zero")
        return evaluate(e.num, bindings) / den
    if isinstance(e, App):
        v = evaluate(e.arg, bindings)
        try:
            return _EVAL_FUNCS[e.func](v)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"domain error in {e.func}({v})") from exc
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# equality verdicts
# ---------------------------------------------------------------------------

PROVEN_EQUAL = "proven-equal"
PROVEN_UNEQUAL = "proven-unequal"
PROBABLY_EQUAL = "probably-equal"

_EQ_SEED = 0x5EED
_EQ_ABS_TOL = 1e-9
_EQ_REJECT = 1e-6


def equal(a: ExprLike, b: ExprLike, samples: int = 20) -> str:
    """Decide equality: canonical-form proof first, then seeded random sampling.

    Residuals below 1e-9 at every point give probably-equal, any residual at or
    above 1e-6 gives proven-unequal; in-between residuals escalate the sample
    count (up to 8x) and the final round is decisive.
    """
    difference = as_expr(a) - as_expr(b)
    frozen = _freeze(_canon(difference))
    if not frozen:
        return PROVEN_EQUAL
    symbols = sorted(free_symbols(difference), key=lambda s: s.sort_key())
    rng = random.Random(_EQ_SEED)
    n = max(samples, 20)
    for _ in range(4):
        worst = 0.0
        taken = 0
        attempts = 0
        while taken < n and attempts < 50 * n:
            attempts += 1
            bindings = {
                s: Fraction(rng.randint(-128, 128), 64) for s in symbols
            }
            try:
                value = evaluate(difference, {s: float(v) for s, v in bindings.items()})
            except EvalError:
                continue  # pole or domain edge: resample
            if not math.isfinite(value):
                continue
            worst = max(worst, abs(value))
            taken += 1
            if worst >= _EQ_REJECT:
                return PROVEN_UNEQUAL
        if taken == 0:
            return PROVEN_UNEQUAL
        if worst < _EQ_ABS_TOL:
            return PROBABLY_EQUAL
        n *= 2  # gray zone: escalate
    return PROVEN_UNEQUAL


def proven_equal(a: ExprLike, b: ExprLike) -> bool:
    return is_zero(as_expr(a) - as_expr(b))


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _render_factor(e: Expr) -> str:
    if isinstance(e, (Sym, App)):
        return _render_node(e)
    if isinstance(e, Num) and e.value >= 0 and e.value.denominator == 1:
        return str(e.value)
    return f"({_render_node(e)})"


def _render_node(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Sym):
        return str(e.symbol)
    if isinstance(e, App):
        return f"{e.func}({_render_node(e.arg)})"
    if isinstance(e, Pow):
        return f"{_render_factor(e.base)}^{e.exponent}"
    if isinstance(e, Div):
        return f"{_render_factor(e.num)}/{_render_factor(e.den)}"
    if isinstance(e, Mul):
        parts = []
        negate = False
        for a in e.args:
            if isinstance(a, Num) and a.value == -1 and not parts and len(e.args) > 1:
                negate = True
                continue
            s = _render_node(a)
            if isinstance(a, (Add, Div)) or (s.startswith("-") and (parts or negate)):
                s = f"({s})"
            parts.append(s)
        joined = "*".join(parts)
        return f"-{joined}" if negate else joined
    if isinstance(e, Add):
        out = ""
        for k, a in enumerate(e.args):
            s = _render_node(a)
            if k == 0:
                out = s
            elif s.startswith("-") and not s[1:].startswith("-"):
                out += " - " + s[1:]
            elif s.startswith("-"):
                out += " - " + f"({s[1:]})"
            else:
                out += " + " + s
        return out if out else "0"
    raise TypeError(f"not an expression: {e!r}")


def render(e: ExprLike) -> str:
    """Deterministic text for an expression (canonical order after normal_form)."""
    return _render_node(as_expr(e))


def canonical_str(e: ExprLike) -> str:
    return render(normal_form(e))
