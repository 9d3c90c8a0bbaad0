"""Recursive-descent parser for the expression grammar.

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' ['-'] integer)?
    base   := number | ident | ident '[' int (',' int)* ']'
            | 'p' '.' ident index | 'F' '.' ident [index] '@' int
            | 'G' '.' ident index '@' int | 'p0'
            | 'd' '(' base ')' '/' 'd' ident
            | func '(' expr ')' | '(' expr ')'

Identifiers resolve against the chart's base coordinates and field names plus
the caller's parameter list.  A bare field name is the order-zero jet symbol.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .multiindex import MultiIndex
from .symexpr import (
    Add,
    App,
    Div,
    Expr,
    FUNCTIONS,
    Mul,
    Num,
    Pow,
    Sym,
    Symbol,
    dx_symbol,
    coef_symbol,
    extended_momentum_symbol,
    jet_symbol,
    momentum_symbol,
)


class ParseError(ValueError):
    """Syntax or resolution failure, carrying the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d+|\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()\[\],.@]))"
)


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        while self.pos < len(text):
            m = _TOKEN_RE.match(text, self.pos)
            if m is None or m.end() == self.pos:
                stripped = text[self.pos:].lstrip()
                if not stripped:
                    break
                at = len(text) - len(stripped)
                raise ParseError(f"unexpected character {stripped[0]!r}", at)
            if m.lastgroup:
                self.tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            self.pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> tuple[str, str, int]:
        kind, text, off = self.next()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", off)
        return kind, text, off


class _Parser:
    def __init__(self, text: str, chart, params: Sequence[str]):
        self.lex = _Lexer(text)
        self.chart = chart
        self.params = {p.name if isinstance(p, Symbol) else str(p) for p in params}

    # grammar ---------------------------------------------------------------

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.lex.peek()
        if kind != "end":
            raise ParseError(f"trailing input {text!r}", off)
        return e

    def expr(self) -> Expr:
        terms: list[Expr] = []
        if self.lex.peek()[1] == "-":
            self.lex.next()
            terms.append(-self.term())
        else:
            terms.append(self.term())
        while self.lex.peek()[1] in ("+", "-"):
            op = self.lex.next()[1]
            t = self.term()
            terms.append(t if op == "+" else -t)
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        out = self.factor()
        while self.lex.peek()[1] in ("*", "/"):
            op = self.lex.next()[1]
            rhs = self.factor()
            out = Mul((out, rhs)) if op == "*" else Div(out, rhs)
        return out

    def factor(self) -> Expr:
        base = self.base()
        if self.lex.peek()[1] == "^":
            self.lex.next()
            sign = 1
            if self.lex.peek()[1] == "-":
                self.lex.next()
                sign = -1
            kind, text, off = self.lex.next()
            if kind != "num" or "." in text:
                raise ParseError("exponent must be an integer", off)
            return Pow(base, sign * int(text))
        return base

    def base(self) -> Expr:
        kind, text, off = self.lex.next()
        if kind == "num":
            if "." in text:
                return Num(Fraction(text))
            return Num(Fraction(int(text)))
        if text == "(":
            e = self.expr()
            self.lex.expect(")")
            return e
        if kind != "ident":
            raise ParseError(f"unexpected token {text!r}", off)
        return self.named(text, off)

    # named things ----------------------------------------------------------

    def named(self, name: str, off: int) -> Expr:
        if name == "p0":
            return Sym(extended_momentum_symbol())
        if name == "p" and self.lex.peek()[1] == ".":
            self.lex.next()
            field, foff = self.ident()
            self.require_field(field, foff)
            index = self.index(foff)
            if not 1 <= index.order <= 2:
                raise ParseError(f"momentum multi-index order must be 1 or 2, got {index}", foff)
            return Sym(momentum_symbol(field, index))
        if name in ("F", "G") and self.lex.peek()[1] == ".":
            self.lex.next()
            field, foff = self.ident()
            self.require_field(field, foff)
            if self.lex.peek()[1] == "[":
                index = self.index(foff)
            elif name == "F":
                index = MultiIndex((0,) * self.chart.m)
            else:
                raise ParseError("G coefficient requires a multi-index", foff)
            self.lex.expect("@")
            jkind, jtext, joff = self.lex.next()
            if jkind != "num":
                raise ParseError("expected a base direction after '@'", joff)
            j = int(jtext)
            if not 1 <= j <= self.chart.m:
                raise ParseError(f"direction {j} out of range [1, {self.chart.m}]", joff)
            return Sym(coef_symbol(name, field, index, j))
        if name == "d" and self.lex.peek()[1] == "(":
            return self.derivative(off)
        if name in FUNCTIONS:
            self.lex.expect("(")
            arg = self.expr()
            self.lex.expect(")")
            return App(name, arg)
        if name in self.params:
            return Sym(Symbol("param", name=name))
        i = self.chart.base_position(name)
        if i is not None:
            return Sym(self.chart.base(i))
        if name in self.chart.fields:
            if self.lex.peek()[1] == "[":
                index = self.index(off)
                if index.order > self.chart.k:
                    raise ParseError(
                        f"jet order {index.order} above chart order {self.chart.k}", off
                    )
                return Sym(jet_symbol(name, index))
            return Sym(jet_symbol(name, MultiIndex((0,) * self.chart.m)))
        raise ParseError(f"unknown identifier {name!r}", off)

    def derivative(self, off: int) -> Expr:
        self.lex.expect("(")
        inner = self.base()
        if not isinstance(inner, Sym):
            raise ParseError("derivative applies to a single symbol", off)
        self.lex.expect(")")
        self.lex.expect("/")
        kind, text, doff = self.lex.next()
        if kind != "ident" or not text.startswith("d") or len(text) < 2:
            raise ParseError("expected d<base-coordinate>", doff)
        base_name = text[1:]
        i = self.chart.base_position(base_name)
        if i is None:
            raise ParseError(f"unknown base coordinate {base_name!r}", doff)
        return Sym(dx_symbol(inner.symbol, i, base_name))

    def ident(self) -> tuple[str, int]:
        kind, text, off = self.lex.next()
        if kind != "ident":
            raise ParseError(f"expected an identifier, found {text!r}", off)
        return text, off

    def require_field(self, name: str, off: int) -> None:
        if name not in self.chart.fields:
            raise ParseError(f"unknown field {name!r}", off)

    def index(self, off: int) -> MultiIndex:
        self.lex.expect("[")
        entries: list[int] = []
        while True:
            kind, text, eoff = self.lex.next()
            if kind != "num" or "." in text:
                raise ParseError("multi-index entries must be integers", eoff)
            entries.append(int(text))
            kind, text, eoff = self.lex.next()
            if text == "]":
                break
            if text != ",":
                raise ParseError(f"expected ',' or ']', found {text!r}", eoff)
        if len(entries) != self.chart.m:
            raise ParseError(
                f"multi-index arity {len(entries)} does not match base dimension {self.chart.m}",
                off,
            )
        return MultiIndex(entries)


def parse(text: str, chart, params: Sequence[str] = ()) -> Expr:
    """Parse an expression over a chart's coordinates and the given parameters."""
    return _Parser(text, chart, params).parse()
