"""Truncated p-typical Witt vectors over desk-scale coefficient rings.

A length-n Witt vector is a tuple (x_0, ..., x_{n-1}) over a coefficient
ring; addition and multiplication are given by the universal structure
polynomials S_i, P_i in Z[x_0..x_{n-1}, y_0..y_{n-1}], determined by the
requirement that the ghost map

    w_i(x) = x_0^{p^i} + p x_1^{p^{i-1}} + ... + p^i x_i

is a ring homomorphism.  The structure polynomials are computed once per
(p, n) by solving the ghost equations with exact integer arithmetic (every
division in the recursion is exact over Z, which is asserted) and cached;
evaluation then maps their integer coefficients into the target ring.

Coefficient rings are duck-typed: anything with zero/one/from_int and
add/sub/mul/pow_int works.  F_{p^f} is realised through a precision-1
unramified context, Z/p^M through plain integers, and exact rationals are
available to validate the cache itself.

Lengths are capped at 6 by default; the structure polynomials grow doubly
exponentially and anything longer stops being desk scale.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import LengthMismatch, ShapeMismatch
from .padic import PadicContext, UnramifiedScalar, make_context, teichmuller_lift

__all__ = [
    "WittVector",
    "ZmodCoefficients",
    "FiniteFieldCoefficients",
    "RationalCoefficients",
    "structure_polynomials",
    "ghost",
    "witt_add",
    "witt_mul",
    "witt_neg",
    "teichmuller",
    "verschiebung",
    "witt_frobenius",
    "witt_zero",
    "witt_to_unramified",
    "MAX_LENGTH",
]

MAX_LENGTH = 6


# ---------------------------------------------------------------------------
# coefficient rings


class ZmodCoefficients:
    """Z/m with elements stored as plain ints in [0, m)."""

    def __init__(self, modulus: int):
        self.modulus = modulus

    def __eq__(self, other):
        return isinstance(other, ZmodCoefficients) and self.modulus == other.modulus

    def __repr__(self):
        return f"Z/{self.modulus}"

    def zero(self):
        return 0

    def one(self):
        return 1 % self.modulus

    def from_int(self, c):
        return c % self.modulus

    def add(self, a, b):
        return (a + b) % self.modulus

    def sub(self, a, b):
        return (a - b) % self.modulus

    def mul(self, a, b):
        return (a * b) % self.modulus

    def pow_int(self, a, e):
        return pow(a, e, self.modulus)

    def elements(self):
        return range(self.modulus)


class FiniteFieldCoefficients:
    """F_{p^f}, realised as the precision-1 unramified context."""

    def __init__(self, p: int, f: int):
        self.ctx = make_context(p, 1, f)

    def __eq__(self, other):
        return isinstance(other, FiniteFieldCoefficients) and self.ctx == other.ctx

    def __repr__(self):
        return f"F_{self.ctx.p}^{self.ctx.f}"

    def zero(self):
        return self.ctx.zero_u()

    def one(self):
        return self.ctx.one_u()

    def from_int(self, c):
        return self.ctx.unram_scalar([c] + [0] * (self.ctx.f - 1))

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def pow_int(self, a, e):
        return a.pow(e)

    def elements(self):
        for coeffs in itertools.product(range(self.ctx.p), repeat=self.ctx.f):
            yield self.ctx.unram_scalar(coeffs)


class RationalCoefficients:
    """Exact rationals, used to validate the structure polynomial cache."""

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def from_int(self, c):
        return Fraction(c)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def pow_int(self, a, e):
        return a**e


# ---------------------------------------------------------------------------
# integer multivariate polynomials as {exponent tuple: coefficient}


def _poly_add(a, b):
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, 0) + v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _poly_scale(a, c):
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


def _poly_mul(a, b):
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            w = out.get(k, 0) + va * vb
            if w:
                out[k] = w
            else:
                out.pop(k, None)
    return out


def _poly_pow(a, e):
    nvars = len(next(iter(a))) if a else 0
    result = {(0,) * nvars: 1} if a else {}
    if not a:
        return {} if e > 0 else result
    base = a
    while e:
        if e & 1:
            result = _poly_mul(result, base)
        base = _poly_mul(base, base) if e > 1 else base
        e >>= 1
    return result


def _poly_div_exact(a, n):
    out = {}
    for k, v in a.items():
        q, r = divmod(v, n)
        assert r == 0, "inexact division in Witt structure recursion"
        out[k] = q
    return out


def _var(idx, nvars):
    e = [0] * nvars
    e[idx] = 1
    return {tuple(e): 1}


@functools.lru_cache(maxsize=None)
def structure_polynomials(p: int, n: int, max_length: int = MAX_LENGTH):
    """Sum and product polynomials (S_0..S_{n-1}, P_0..P_{n-1}) for W_n.

    Variables are ordered x_0..x_{n-1}, y_0..y_{n-1}.  Solving the ghost
    equations over the rationals collapses to a recursion whose divisions
    are exact over Z; the integrality is asserted term by term.
    """
    if n < 1:
        raise LengthMismatch("Witt length must be at least 1")
    if n > max_length:
        raise LengthMismatch(
            f"Witt length {n} exceeds the cap {max_length}; pass max_length to raise it")
    nv = 2 * n
    xs = [_var(i, nv) for i in range(n)]
    ys = [_var(n + i, nv) for i in range(n)]

    def ghost_of(vals, i):
        acc = {}
        for j in range(i + 1):
            acc = _poly_add(acc, _poly_scale(_poly_pow(vals[j], p ** (i - j)), p**j))
        return acc

    sums = []
    for i in range(n):
        rhs = _poly_add(ghost_of(xs, i), ghost_of(ys, i))
        for j in range(i):
            rhs = _poly_add(rhs, _poly_scale(_poly_pow(sums[j], p ** (i - j)), -(p**j)))
        sums.append(_poly_div_exact(rhs, p**i))
    prods = []
    for i in range(n):
        rhs = _poly_mul(ghost_of(xs, i), ghost_of(ys, i))
        for j in range(i):
            rhs = _poly_add(rhs, _poly_scale(_poly_pow(prods[j], p ** (i - j)), -(p**j)))
        prods.append(_poly_div_exact(rhs, p**i))
    return tuple(sums), tuple(prods)


def _evaluate(poly, ring, values):
    acc = ring.zero()
    for exps, coeff in poly.items():
        term = ring.from_int(coeff)
        for idx, e in enumerate(exps):
            if e:
                term = ring.mul(term, ring.pow_int(values[idx], e))
        acc = ring.add(acc, term)
    return acc


# ---------------------------------------------------------------------------
# vectors and operations


@dataclass(frozen=True)
class WittVector:
    """A truncated p-typical Witt vector over a coefficient ring."""

    p: int
    ring: object
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __len__(self):
        return len(self.components)


def _check_pair(u: WittVector, v: WittVector):
    if u.p != v.p or len(u) != len(v) or u.ring != v.ring:
        raise LengthMismatch("Witt vectors of different shape combined")


def witt_zero(p, ring, n) -> WittVector:
    return WittVector(p, ring, (ring.zero(),) * n)


def ghost(w: WittVector):
    """Ghost components (w_0, ..., w_{n-1})."""
    ring, p = w.ring, w.p
    out = []
    for i in range(len(w)):
        acc = ring.zero()
        for j in range(i + 1):
            acc = ring.add(
                acc,
                ring.mul(ring.from_int(p**j),
                         ring.pow_int(w.components[j], p ** (i - j))))
        out.append(acc)
    return tuple(out)


def witt_add(u: WittVector, v: WittVector) -> WittVector:
    _check_pair(u, v)
    sums, _ = structure_polynomials(u.p, len(u))
    vals = list(u.components) + list(v.components)
    return WittVector(u.p, u.ring,
                      tuple(_evaluate(s, u.ring, vals) for s in sums))


def witt_mul(u: WittVector, v: WittVector) -> WittVector:
    _check_pair(u, v)
    _, prods = structure_polynomials(u.p, len(u))
    vals = list(u.components) + list(v.components)
    return WittVector(u.p, u.ring,
                      tuple(_evaluate(s, u.ring, vals) for s in prods))


def witt_neg(u: WittVector) -> WittVector:
    """Additive inverse, by the usual p-odd shortcut or binary search fallback.

    For odd p, -(x_i) = (-x_i).  For p = 2 negation is computed from the
    structure polynomials by solving u + (-u) = 0 one component at a time,
    which stays exact because S_i is x_i + y_i + (terms in lower variables).
    """
    ring, p, n = u.ring, u.p, len(u)
    if p != 2:
        return WittVector(p, ring, tuple(ring.sub(ring.zero(), c) for c in u.components))
    sums, _ = structure_polynomials(p, n)
    neg = []
    for i in range(n):
        vals = list(u.components) + neg + [ring.zero()] * (n - i)
        s_i = _evaluate(sums[i], ring, vals)
        neg.append(ring.sub(ring.zero(), s_i))
    return WittVector(p, ring, tuple(neg))


def teichmuller(p, ring, a, n) -> WittVector:
    """The multiplicative lift [a] = (a, 0, ..., 0)."""
    return WittVector(p, ring, (a,) + (ring.zero(),) * (n - 1))


def verschiebung(w: WittVector) -> WittVector:
    """V shifts components right; the top component falls off the truncation."""
    return WittVector(w.p, w.ring,
                      (w.ring.zero(),) + w.components[:-1])


def witt_frobenius(w: WittVector) -> WittVector:
    """Componentwise x -> x^p.

    Over a perfect coefficient ring of characteristic p this is the Witt
    Frobenius, with F([a]) = [a^p] and F(V(w)) = p * w; over other rings
    only the Teichmueller rule survives.
    """
    return WittVector(w.p, w.ring,
                      tuple(w.ring.pow_int(c, w.p) for c in w.components))


def witt_to_unramified(w: WittVector, ctx: PadicContext) -> UnramifiedScalar:
    """The ring isomorphism W_N(F_q) = O_K / p^N by Teichmueller expansion.

    (x_i) = sum_i V^i[x_i] and V^i[x] = p^i [x^{p^{-i}}], so the image is
    sum_i tau(x_i^{p^{-i}}) p^i; the inverse-Frobenius twist on the
    component is what makes the map additive (for f = 1 it is invisible).
    Requires components in F_{p^f} with length(w) = ctx.N and matching
    residue degree.
    """
    if not isinstance(w.ring, FiniteFieldCoefficients):
        raise ShapeMismatch("witt_to_unramified needs finite-field components")
    if w.ring.ctx.p != ctx.p or w.ring.ctx.f != ctx.f:
        raise ShapeMismatch("component field does not match the target context")
    if len(w) != ctx.N:
        raise ShapeMismatch(
            f"length {len(w)} does not match target precision {ctx.N}")
    acc = ctx.zero_u()
    f = ctx.f
    for i, c in enumerate(w.components):
        untwisted = c.pow(ctx.p ** ((-i) % f)) if f > 1 else c
        acc = acc + teichmuller_lift(ctx, untwisted).times_p_power(i)
    return acc
