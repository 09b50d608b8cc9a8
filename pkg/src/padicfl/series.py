"""Truncated power series over Z/p^N certifying the period-series lemma.

The variable X stands for pi/p.  The series of t/p in X is

    t/p = sum_{n >= 1} (-1)^{n+1} (p^{n-1} / n) X^n,

whose coefficients are p-integral with v_p(c_n) = n - 1 - v_p(n) and tend
to zero p-adically.  Factoring out one power of X gives t/p = X v; the
unit inverse w of v is constructed by Newton iteration and certified by an
independent multiplication check, which is the finite content of the
lemma ("v is a unit").

The log/exp compatibility pi = exp(t) - 1, t = log(1 + pi) is checked as
an identity of formal power series over the exact rationals, since the
intermediate coefficients (denominators n!) are not p-integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotAUnit
from .padic import PadicContext, PadicScalar, make_context

__all__ = [
    "TruncatedSeries",
    "t_over_p_series",
    "unit_factor",
    "log_exp_roundtrip",
    "coefficient_valuation_closed_form",
]


@dataclass(frozen=True)
class TruncatedSeries:
    """Polynomial in X of degree <= degree_bound with Z/p^N coefficients."""

    ctx: PadicContext
    degree_bound: int
    coeffs: tuple[PadicScalar, ...]

    def __post_init__(self):
        assert len(self.coeffs) == self.degree_bound + 1

    def coefficient(self, n: int) -> PadicScalar:
        return self.coeffs[n]

    def mul(self, other: "TruncatedSeries") -> "TruncatedSeries":
        d = self.degree_bound
        out = [self.ctx.zero() for _ in range(d + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j > d:
                    break
                out[i + j] = out[i + j] + a * b
        return TruncatedSeries(self.ctx, d, tuple(out))

    def sub(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return TruncatedSeries(self.ctx, self.degree_bound, tuple(
            a - b for a, b in zip(self.coeffs, other.coeffs)))

    def is_one(self) -> bool:
        return self.coeffs[0].value == 1 and all(c.is_zero for c in self.coeffs[1:])

    def to_json_obj(self):
        return [c.to_json_obj() for c in self.coeffs]


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def coefficient_valuation_closed_form(p: int, n: int) -> int:
    """v_p of the X^n coefficient of t/p: n - 1 - v_p(n)."""
    return n - 1 - _int_valuation(n, p)


def t_over_p_series(p: int, nprec: int, degree: int) -> TruncatedSeries:
    """The series of t/p in X = pi/p, coefficients reduced mod p^N.

    Coefficient of X^n is (-1)^{n+1} p^{n-1} / n; the p-part of n cancels
    into p^{n-1} (valuation n - 1 - v_p(n) >= 0) and the prime-to-p part
    is inverted mod p^N.
    """
    ctx = make_context(p, nprec, 1)
    pn = p**nprec
    coeffs = [ctx.zero()]
    for n in range(1, degree + 1):
        vn = _int_valuation(n, p)
        unit_part = n // p**vn
        value = pow(p, n - 1 - vn, pn) * pow(unit_part, -1, pn) % pn
        if n % 2 == 0:
            value = -value % pn
        coeffs.append(ctx.int_scalar(value))
    return TruncatedSeries(ctx, degree, tuple(coeffs))


def unit_factor(p: int, nprec: int, degree: int):
    """The factorisation t/p = X v and the certified inverse of v.

    v is the degree-shifted series of t/p; w is built by Newton iteration
    (w <- w(2 - v w), doubling the matched degree) and then re-checked by
    one full multiplication, so the unit certificate does not depend on
    the iteration being right.
    """
    tp = t_over_p_series(p, nprec, degree + 1)
    ctx = tp.ctx
    v = TruncatedSeries(ctx, degree, tuple(tp.coeffs[1:degree + 2]))
    if not v.coeffs[0].is_unit():
        raise NotAUnit("constant term of v is not a unit")
    w_coeffs = [v.coeffs[0].inverse()] + [ctx.zero()] * degree
    w = TruncatedSeries(ctx, degree, tuple(w_coeffs))
    two = TruncatedSeries(ctx, degree, tuple(
        [ctx.int_scalar(2)] + [ctx.zero()] * degree))
    matched = 1
    while matched <= degree:
        w = w.mul(two.sub(v.mul(w)))
        matched *= 2
    assert v.mul(w).is_one(), "Newton inversion failed to converge"
    return v, w


def _compose(outer: list[Fraction], inner: list[Fraction], degree: int) -> list[Fraction]:
    """outer(inner(T)) truncated at degree; inner must have zero constant term."""
    assert inner[0] == 0
    out = [Fraction(0)] * (degree + 1)
    out[0] = outer[0]
    power = [Fraction(0)] * (degree + 1)
    power[0] = Fraction(1)

    def mul(a, b):
        res = [Fraction(0)] * (degree + 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                if i + j > degree:
                    break
                res[i + j] += x * y
        return res

    for k in range(1, len(outer)):
        power = mul(power, inner)
        if all(c == 0 for c in power):
            break
        for i in range(degree + 1):
            out[i] += outer[k] * power[i]
    return out


def log_exp_roundtrip(p: int, nprec: int, degree: int) -> bool:
    """log(1 + (exp(T) - 1)) = T and exp(log(1 + T)) - 1 = T, exactly.

    Computed over the rationals (the intermediate coefficients are not
    p-integral); p and the precision do not enter the verdict and are
    accepted only for interface symmetry.
    """
    fact = [1] * (degree + 2)
    for i in range(1, degree + 2):
        fact[i] = fact[i - 1] * i
    exp_minus_1 = [Fraction(0)] + [Fraction(1, fact[n]) for n in range(1, degree + 1)]
    log_1_plus = [Fraction(0)] + [Fraction((-1) ** (n + 1), n)
                                  for n in range(1, degree + 1)]
    ident = [Fraction(0), Fraction(1)] + [Fraction(0)] * (degree - 1)
    first = _compose(log_1_plus, exp_minus_1, degree)
    second = _compose(exp_minus_1, log_1_plus, degree)
    return first == ident and second == ident
