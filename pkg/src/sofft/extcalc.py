"""Sparse exterior algebra over a finite ordered coordinate list.

Forms store coefficients on strictly increasing index tuples; wedge signs come
from permutation parity.  The first `m` coordinates of a space are the base
coordinates, which is all the pullback machinery needs to know.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .symexpr import (
    Expr,
    ExprLike,
    Sym,
    Symbol,
    add,
    as_expr,
    diff,
    dx_symbol,
    free_symbols,
    is_zero,
    mul,
    normal_form,
    render,
    substitute,
    ZERO,
)


@dataclass(frozen=True)
class CoordSpace:
    """Ordered chart coordinates; the first m are the base coordinates."""

    coords: tuple[Symbol, ...]
    m: int

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise ValueError("coordinates must be distinct")
        if not 0 <= self.m <= len(self.coords):
            raise ValueError("invalid base count")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def position(self, s: Symbol) -> int:
        try:
            return self.coords.index(s)
        except ValueError:
            raise KeyError(f"{s} is not a coordinate of this space") from None

    def fiber_coords(self) -> tuple[Symbol, ...]:
        return self.coords[self.m:]


def _sorted_signed(indices: tuple[int, ...]) -> tuple[Optional[tuple[int, ...]], int]:
    """Sort an index tuple, tracking permutation parity; repeats kill the term."""
    idx = list(indices)
    sign = 1
    for a in range(len(idx)):
        for b in range(len(idx) - 1 - a):
            if idx[b] > idx[b + 1]:
                idx[b], idx[b + 1] = idx[b + 1], idx[b]
                sign = -sign
            elif idx[b] == idx[b + 1]:
                return None, 0
    return tuple(idx), sign


@dataclass(frozen=True)
class Form:
    """Sparse exterior form: coefficients on strictly increasing index tuples."""

    space: CoordSpace
    degree: int
    terms: Mapping[tuple[int, ...], Expr]

    @staticmethod
    def build(space: CoordSpace, degree: int, raw: Mapping[tuple[int, ...], ExprLike]) -> "Form":
        """Normalize arbitrary index tuples (signs from sorting, zeros dropped)."""
        out: dict[tuple[int, ...], Expr] = {}
        for key, coeff in raw.items():
            if len(key) != degree:
                raise ValueError(f"key {key} does not match degree {degree}")
            skey, sign = _sorted_signed(tuple(key))
            if sign == 0:
                continue
            e = normal_form(mul(sign, as_expr(coeff)))
            if isinstance(e, type(ZERO)) and is_zero(e):
                continue
            prev = out.get(skey)
            total = normal_form(add(prev, e)) if prev is not None else e
            if is_zero(total):
                out.pop(skey, None)
            else:
                out[skey] = total
        return Form(space, degree, out)

    @staticmethod
    def zero(space: CoordSpace, degree: int) -> "Form":
        return Form(space, degree, {})

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, *coords: Symbol) -> Expr:
        key, sign = _sorted_signed(tuple(self.space.position(c) for c in coords))
        if sign == 0:
            return ZERO
        e = self.terms.get(key)
        return ZERO if e is None else normal_form(mul(sign, e))

    def __add__(self, other: "Form") -> "Form":
        if self.space != other.space or self.degree != other.degree:
            raise ValueError("cannot add forms of different space or degree")
        merged: dict[tuple[int, ...], ExprLike] = dict(self.terms)
        for k, v in other.terms.items():
            merged[k] = add(merged.get(k, ZERO), v)
        return Form.build(self.space, self.degree, merged)

    def __sub__(self, other: "Form") -> "Form":
        return self + other.scale(-1)

    def scale(self, c: ExprLike) -> "Form":
        return Form.build(
            self.space, self.degree, {k: mul(c, v) for k, v in self.terms.items()}
        )

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = self.space.coords
        parts = []
        for key in sorted(self.terms):
            basis = "∧".join(f"d{names[i]}" for i in key) if key else "1"
            coeff = render(self.terms[key])
            if coeff == "1" and key:
                parts.append(basis)
            else:
                wrapped = f"({coeff})" if (" " in coeff or coeff.startswith("-")) else coeff
                parts.append(f"{wrapped}*{basis}" if key else wrapped)
        return " + ".join(parts)


def differential(space: CoordSpace, s: Symbol) -> Form:
    """The 1-form dz for a coordinate z."""
    return Form.build(space, 1, {(space.position(s),): 1})


def wedge(a: Form, b: Form) -> Form:
    if a.space != b.space:
        raise ValueError("wedge requires a common space")
    raw: dict[tuple[int, ...], ExprLike] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            key = ka + kb
            prev = raw.get(key)
            term = mul(va, vb)
            raw[key] = add(prev, term) if prev is not None else term
    return Form.build(a.space, a.degree + b.degree, raw)


def wedge_all(*forms: Form) -> Form:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def exterior_d(a: Form) -> Form:
    """Exterior derivative: d of each coefficient over every chart coordinate."""
    raw: dict[tuple[int, ...], ExprLike] = {}
    for key, coeff in a.terms.items():
        for pos, z in enumerate(a.space.coords):
            dcoeff = diff(coeff, z)
            if is_zero(dcoeff):
                continue
            nkey = (pos,) + key
            prev = raw.get(nkey)
            raw[nkey] = add(prev, dcoeff) if prev is not None else dcoeff
    return Form.build(a.space, a.degree + 1, raw)


@dataclass(frozen=True)
class VectorField:
    """Coefficients over the coordinates of a space (sparse)."""

    space: CoordSpace
    components: Mapping[int, Expr]

    @staticmethod
    def build(space: CoordSpace, comps: Mapping[Symbol, ExprLike]) -> "VectorField":
        out = {}
        for s, e in comps.items():
            e = normal_form(as_expr(e))
            if not is_zero(e):
                out[space.position(s)] = e
        return VectorField(space, out)

    @staticmethod
    def basis(space: CoordSpace, s: Symbol) -> "VectorField":
        return VectorField(space, {space.position(s): as_expr(1)})


def interior(X: VectorField, a: Form) -> Form:
    """Contraction in the first slot: i(X)(dz_{i1}∧…) with alternating signs."""
    if a.degree < 1:
        raise ValueError("interior product needs degree >= 1")
    if X.space != a.space:
        raise ValueError("interior product requires a common space")
    raw: dict[tuple[int, ...], ExprLike] = {}
    for key, coeff in a.terms.items():
        for slot, pos in enumerate(key):
            comp = X.components.get(pos)
            if comp is None:
                continue
            sign = -1 if slot % 2 else 1
            nkey = key[:slot] + key[slot + 1:]
            term = mul(sign, comp, coeff)
            prev = raw.get(nkey)
            raw[nkey] = add(prev, term) if prev is not None else term
    return Form.build(a.space, a.degree - 1, raw)


# ---------------------------------------------------------------------------
# pullbacks
# ---------------------------------------------------------------------------


def pullback_by_map(a: Form, images: Mapping[Symbol, ExprLike], target: CoordSpace) -> Form:
    """Pull back along a smooth map into `a`'s space: coefficients are composed
    with the map and each differential dz becomes d(image of z) on the target.
    Source coordinates shared with the target default to the identity."""
    full: dict[Symbol, Expr] = {}
    for z in a.space.coords:
        if z in images:
            full[z] = as_expr(images[z])
        elif z in target.coords:
            full[z] = Sym(z)
        else:
            raise KeyError(f"map does not bind coordinate {z}")
    out = Form.zero(target, a.degree)
    for key, coeff in a.terms.items():
        term = Form.build(target, 0, {(): substitute(coeff, full)})
        for pos in key:
            img = full[a.space.coords[pos]]
            dimg = Form.build(
                target, 1, {(w,): diff(img, target.coords[w]) for w in range(target.dim)}
            )
            term = wedge(term, dimg)
        out = out + term
    return out


def pullback_by_section(a: Form, components: Mapping[Symbol, ExprLike], base_space: CoordSpace) -> Form:
    """Pull a form back along a section: every non-base coordinate must have a
    closed-form component in the base coordinates."""
    missing = [z for z in a.space.coords[a.space.m:] if z not in components]
    if missing:
        needed = set()
        for coeff in a.terms.values():
            needed |= free_symbols(coeff)
        for key in a.terms:
            needed |= {a.space.coords[p] for p in key}
        unbound = [z for z in missing if z in needed]
        if unbound:
            raise KeyError(f"section does not bind coordinates {[str(z) for z in unbound]}")
        components = dict(components, **{z: ZERO for z in missing})
    return pullback_by_map(a, components, base_space)


def pullback_generic(a: Form, base_space: CoordSpace) -> Form:
    """Pull back along an unspecified section: coordinates stay themselves and
    their derivatives become opaque d(z)/dx^i symbols."""
    m = a.space.m
    base_syms = a.space.coords[:m]
    raw: dict[tuple[int, ...], ExprLike] = {}
    for key, coeff in a.terms.items():
        choices: list[list[tuple[int, Expr]]] = []
        for pos in key:
            z = a.space.coords[pos]
            if z in base_syms:
                choices.append([(base_syms.index(z), as_expr(1))])
            else:
                choices.append(
                    [
                        (i - 1, Sym(dx_symbol(z, i, base_syms[i - 1].name)))
                        for i in range(1, m + 1)
                    ]
                )

        def expand(slot: int, idx: tuple[int, ...], factor: Expr) -> None:
            if slot == len(choices):
                term = mul(coeff, factor)
                prev = raw.get(idx)
                raw[idx] = add(prev, term) if prev is not None else term
                return
            for i, dzi in choices[slot]:
                expand(slot + 1, idx + (i,), mul(factor, dzi))

        expand(0, (), as_expr(1))
    return Form.build(base_space, a.degree, raw)


# ---------------------------------------------------------------------------
# standard building blocks
# ---------------------------------------------------------------------------


def volume_form(space: CoordSpace) -> Form:
    """dx^1 ∧ … ∧ dx^m over the base coordinates."""
    return Form.build(space, space.m, {tuple(range(space.m)): 1})


def base_contraction(space: CoordSpace, i: int) -> Form:
    """d^{m-1}x_i = i(∂/∂x^i)(dx^1∧…∧dx^m)."""
    return interior(VectorField.basis(space, space.coords[i - 1]), volume_form(space))


def contraction_kernel_rank(omega: Form, bindings: Mapping[Symbol, float], threshold: float = 1e-9) -> int:
    """Numeric rank of X -> i(X)omega at a point; the kernel is trivial iff the
    rank equals the space dimension."""
    import numpy as np

    from .symexpr import evaluate

    space = omega.space
    rows: dict[tuple[int, ...], int] = {}
    entries: list[tuple[int, int, float]] = []
    for col, z in enumerate(space.coords):
        contr = interior(VectorField.basis(space, z), omega)
        for key, coeff in contr.terms.items():
            row = rows.setdefault(key, len(rows))
            entries.append((row, col, evaluate(coeff, bindings)))
    if not rows:
        return 0
    mat = np.zeros((len(rows), space.dim))
    for r, c, v in entries:
        mat[r, c] += v
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > threshold * sv[0]).sum())
