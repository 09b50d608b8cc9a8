"""Exact arithmetic in Z/p^N and in the unramified extension of degree f.

The p-adic integers are modelled flat at a fixed precision: Z_p becomes
Z/p^N with N >= 1 digits, and the ring of integers of the unramified
extension of degree f becomes (Z/p^N)[X] / (m(X)) for a monic degree-f
modulus m.  An ``UnramifiedScalar`` stores its f coordinates in the basis
1, w, ..., w^{f-1}, where w is the class of X.

Modulus selection is deterministic so results reproduce across runs:
m mod p is the lexicographically least irreducible monic polynomial over
F_p of degree f (coefficients compared from the highest degree down), and
m itself is the lift whose roots are the Teichmueller representatives,
i.e. m divides X^{p^f} - X at precision N.  With this lift the Frobenius
automorphism acts on the generator by w |-> w^p exactly; it is still
recomputed by Newton iteration and checked against the context invariants.

All values are immutable.  Mixing scalars from different contexts raises
ContextMismatch instead of coercing; silently changing precision is the
classic p-adic bug this library refuses to have.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .errors import (
    ContextMismatch,
    InexactDivision,
    NotAUnit,
    NotPrime,
    PrecisionZero,
)

__all__ = [
    "PadicContext",
    "PadicScalar",
    "UnramifiedScalar",
    "make_context",
    "valuation",
    "frobenius",
    "exact_divide_by_p",
]


# ---------------------------------------------------------------------------
# small integer / F_p[X] helpers


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _prime_divisors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_rem(a: list[int], m: list[int], p: int) -> list[int]:
    """Remainder of a modulo the monic polynomial m, over F_p."""
    a = [c % p for c in a]
    dm = len(m) - 1
    while len(a) - 1 >= dm and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        shift = len(a) - 1 - dm
        lead = a[-1]
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - lead * c) % p
        a.pop()
    return _fp_trim(a)


def _fp_mulmod(a, b, m, p):
    res = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            res[i + j] = (res[i + j] + ca * cb) % p
    return _fp_rem(res, m, p)


def _fp_powmod(a, e, m, p):
    result = [1]
    base = _fp_rem(list(a), m, p)
    while e:
        if e & 1:
            result = _fp_mulmod(result, base, m, p)
        base = _fp_mulmod(base, base, m, p)
        e >>= 1
    return result


def _fp_gcd(a, b, p):
    a, b = _fp_trim([c % p for c in a]), _fp_trim([c % p for c in b])
    while b:
        inv = pow(b[-1], -1, p)
        b_monic = [(c * inv) % p for c in b]
        a, b = b, _fp_rem(a, b_monic, p)
    return a


def _fp_sub(a, b, p):
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p
           for i in range(n)]
    return _fp_trim(out)


def _fp_is_irreducible(m: list[int], p: int) -> bool:
    """Irreducibility of a monic polynomial over F_p.

    Uses the standard criterion: X^{p^f} = X mod m, and for every prime
    l dividing f, gcd(X^{p^{f/l}} - X, m) = 1.
    """
    f = len(m) - 1
    if f < 1:
        return False
    x = [0, 1]
    if _fp_sub(_fp_powmod(x, p**f, m, p), _fp_rem(list(x), m, p), p):
        return False
    for ell in _prime_divisors(f):
        d = _fp_sub(_fp_powmod(x, p ** (f // ell), m, p), x, p)
        g = _fp_gcd(d, m, p)
        if len(g) - 1 != 0:
            return False
    return True


def _least_irreducible(p: int, f: int) -> list[int]:
    """Lexicographically least irreducible monic polynomial of degree f.

    Polynomials are compared by their coefficient sequence read from the
    highest degree down, which is integer order on
    c_{f-1} p^{f-1} + ... + c_0.
    """
    for code in range(p**f):
        coeffs = [0] * f
        k = code
        for i in range(f):
            coeffs[i] = k % p
            k //= p
        cand = coeffs + [1]
        if _fp_is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found")  # unreachable


# ---------------------------------------------------------------------------
# raw coordinate arithmetic mod (modulus, p^N)
#
# Coordinates are tuples of f ints in [0, p^N).  These helpers carry the
# modulus explicitly so they can be used while a context is being built.


def _um_add(a, b, pn):
    return tuple((x + y) % pn for x, y in zip(a, b))


def _um_sub(a, b, pn):
    return tuple((x - y) % pn for x, y in zip(a, b))


def _um_mul(a, b, modulus, pn):
    f = len(a)
    prod = [0] * (2 * f - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            prod[i + j] = (prod[i + j] + ca * cb) % pn
    # reduce by the monic modulus
    for d in range(2 * f - 2, f - 1, -1):
        lead = prod[d]
        if lead:
            for i in range(f):
                prod[d - f + i] = (prod[d - f + i] - lead * modulus[i]) % pn
        prod[d] = 0
    return tuple(prod[:f])


def _um_pow(a, e, modulus, pn):
    f = len(a)
    result = tuple([1] + [0] * (f - 1))
    base = a
    while e:
        if e & 1:
            result = _um_mul(result, base, modulus, pn)
        base = _um_mul(base, base, modulus, pn)
        e >>= 1
    return result


def _int_valuation(v: int, p: int, cap: int) -> int:
    if v == 0:
        return cap
    k = 0
    while v % p == 0 and k < cap:
        v //= p
        k += 1
    return k


def _um_valuation(a, p, cap):
    return min(_int_valuation(c, p, cap) for c in a)


def _um_inv(a, modulus, p, n):
    """Inverse of a unit mod (modulus, p^n).

    Starts from the residue-field inverse a^(q-2) with q = p^f, then
    Hensel-lifts by y <- y(2 - ay), doubling the correct digits each step.
    """
    pn = p**n
    f = len(a)
    if _um_valuation(a, p, n) != 0:
        raise NotAUnit("element has positive valuation")
    abar = _fp_trim([c % p for c in a])
    mpoly = [c % p for c in modulus] + [1]
    q = p**f
    inv_modp = _fp_powmod(abar, q - 2, mpoly, p)
    y = tuple((inv_modp[i] if i < len(inv_modp) else 0) % pn for i in range(f))
    two = tuple([2] + [0] * (f - 1))
    known = 1
    while known < n:
        ay = _um_mul(a, y, modulus, pn)
        y = _um_mul(y, _um_sub(two, ay, pn), modulus, pn)
        known *= 2
    return y


def _um_eval_int_poly(coeffs, x, modulus, pn):
    """Evaluate a polynomial with integer coefficients at x, by Horner."""
    f = len(x)
    acc = tuple([0] * f)
    for c in reversed(coeffs):
        acc = _um_mul(acc, x, modulus, pn)
        acc = _um_add(acc, tuple([c % pn] + [0] * (f - 1)), pn)
    return acc


# ---------------------------------------------------------------------------
# context construction


def _teichmuller_modulus(p: int, nprec: int, f: int) -> tuple[int, ...]:
    """Monic degree-f lift of the least irreducible polynomial whose roots
    are Teichmueller representatives at precision nprec.

    Returns the low-degree coefficients (length f); the leading coefficient
    is always 1.  Computed inside the trivial-lift presentation: the class
    of X is stabilised under x -> x^{p^f}, its p-power conjugates are
    collected, and the product of (X - conjugate) is expanded.  The
    coefficients of that product are fixed by the Frobenius, hence have
    zero coordinates in degrees >= 1; that is asserted, not assumed.
    """
    mbar = _least_irreducible(p, f)
    if nprec == 1:
        return tuple(mbar[:f])
    pn = p**nprec
    triv = tuple(c % pn for c in mbar[:f])
    q = p**f
    if f == 1:
        root = (-mbar[0]) % pn
        for _ in range(nprec + 1):
            root = pow(root, q, pn)
        return ((-root) % pn,)
    omega = tuple([0, 1] + [0] * (f - 2))
    tau = omega
    for _ in range(nprec + 1):
        tau = _um_pow(tau, q, triv, pn)
    assert _um_pow(tau, q, triv, pn) == tau
    conjugates = [tau]
    for _ in range(f - 1):
        conjugates.append(_um_pow(conjugates[-1], p, triv, pn))
    # expand prod (X - c_i); poly coefficients live in the trivial ring
    poly = [tuple([1] + [0] * (f - 1))]  # constant polynomial 1
    zero = tuple([0] * f)
    for c in conjugates:
        neg_c = _um_sub(zero, c, pn)
        new = [zero] * (len(poly) + 1)
        for i, coef in enumerate(poly):
            new[i + 1] = _um_add(new[i + 1], coef, pn)
            new[i] = _um_add(new[i], _um_mul(coef, neg_c, triv, pn), pn)
        poly = new
    assert len(poly) == f + 1 and poly[f] == tuple([1] + [0] * (f - 1))
    for coef in poly[:f]:
        assert all(c == 0 for c in coef[1:]), "lifted modulus not rational"
    return tuple(poly[i][0] for i in range(f))


@dataclass(frozen=True)
class PadicContext:
    """Arithmetic context: prime p, precision N, residue degree f.

    modulus holds the low-degree coefficients (m_0, ..., m_{f-1}) of the
    monic modulus; frobenius_image holds the coordinates of sigma(w).
    """

    p: int
    N: int
    f: int
    modulus: tuple[int, ...]
    frobenius_image: tuple[int, ...]

    @property
    def pn(self) -> int:
        return self.p**self.N

    def with_precision(self, nprec: int) -> "PadicContext":
        """The compatible context at a (usually lower) precision."""
        return make_context(self.p, nprec, self.f)

    def zero_u(self) -> "UnramifiedScalar":
        return UnramifiedScalar(self, (0,) * self.f)

    def one_u(self) -> "UnramifiedScalar":
        return UnramifiedScalar(self, (1,) + (0,) * (self.f - 1))

    def omega(self) -> "UnramifiedScalar":
        if self.f == 1:
            return UnramifiedScalar(self, ((-self.modulus[0]) % self.pn,))
        return UnramifiedScalar(self, (0, 1) + (0,) * (self.f - 2))

    def zero(self) -> "PadicScalar":
        return PadicScalar(self, 0)

    def one(self) -> "PadicScalar":
        return PadicScalar(self, 1)

    def int_scalar(self, v: int) -> "PadicScalar":
        return PadicScalar(self, v % self.pn)

    def unram_scalar(self, coeffs) -> "UnramifiedScalar":
        coeffs = tuple(int(c) % self.pn for c in coeffs)
        if len(coeffs) != self.f:
            raise ContextMismatch(f"expected {self.f} coordinates, got {len(coeffs)}")
        return UnramifiedScalar(self, coeffs)

    def to_json_obj(self) -> dict:
        return {
            "p": self.p,
            "N": self.N,
            "f": self.f,
            "modulus": [str(c) for c in self.modulus] + ["1"],
        }


@functools.lru_cache(maxsize=None)
def make_context(p: int, nprec: int, f: int) -> PadicContext:
    """Build the deterministic context for (p, N, f).

    The modulus reduces mod p to the least irreducible polynomial and its
    roots are Teichmueller representatives; sigma(w) is found by Newton
    iteration on the modulus starting from w^p and verified to be an exact
    root at precision N.
    """
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if nprec < 1:
        raise PrecisionZero("precision must be at least 1")
    if f < 1:
        raise ValueError("residue degree must be at least 1")
    modulus = _teichmuller_modulus(p, nprec, f)
    pn = p**nprec
    mono = list(modulus) + [1]
    deriv = [(i * mono[i]) % pn for i in range(1, f + 1)]
    omega = (0, 1) + (0,) * (f - 2) if f >= 2 else ((-modulus[0]) % pn,)
    y = _um_pow(omega, p, modulus, pn)
    for _ in range(nprec + 2):
        my = _um_eval_int_poly(mono, y, modulus, pn)
        if all(c == 0 for c in my):
            break
        dy = _um_eval_int_poly(deriv, y, modulus, pn)
        y = _um_sub(y, _um_mul(my, _um_inv(dy, modulus, p, nprec), modulus, pn), pn)
    assert all(c == 0 for c in _um_eval_int_poly(mono, y, modulus, pn)), \
        "Newton iteration for the Frobenius image did not converge"
    ctx = PadicContext(p=p, N=nprec, f=f, modulus=modulus, frobenius_image=y)
    # invariant: frobenius_image = w^p mod p
    wp = _um_pow(omega, p, modulus, pn)
    assert all((a - b) % p == 0 for a, b in zip(y, wp))
    return ctx


# ---------------------------------------------------------------------------
# scalars


def _same_ctx(a, b):
    if a.ctx != b.ctx:
        raise ContextMismatch("operands from different contexts")


@dataclass(frozen=True)
class PadicScalar:
    """An element of Z/p^N, the flat model of Z_p at precision N."""

    ctx: PadicContext
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.ctx.pn)

    def __add__(self, other):
        _same_ctx(self, other)
        return PadicScalar(self.ctx, self.value + other.value)

    def __sub__(self, other):
        _same_ctx(self, other)
        return PadicScalar(self.ctx, self.value - other.value)

    def __neg__(self):
        return PadicScalar(self.ctx, -self.value)

    def __mul__(self, other):
        _same_ctx(self, other)
        return PadicScalar(self.ctx, self.value * other.value)

    def valuation(self) -> int:
        return _int_valuation(self.value, self.ctx.p, self.ctx.N)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def is_unit(self) -> bool:
        return self.value % self.ctx.p != 0

    def inverse(self) -> "PadicScalar":
        if not self.is_unit():
            raise NotAUnit("cannot invert a non-unit scalar")
        return PadicScalar(self.ctx, pow(self.value, -1, self.ctx.pn))

    def times_p_power(self, k: int) -> "PadicScalar":
        if k < 0:
            raise InexactDivision("use exact_divide_by_p for division")
        return PadicScalar(self.ctx, self.value * self.ctx.p**k)

    def shift_down(self, k: int, target: PadicContext | None = None) -> "PadicScalar":
        """Divide by p^k, staying in the same context unless target given.

        The result is only meaningful modulo p^{N-k}; callers track that.
        """
        if self.valuation() < k:
            raise InexactDivision(
                f"valuation {self.valuation()} < {k}, division not exact")
        tgt = target if target is not None else self.ctx
        return PadicScalar(tgt, self.value // self.ctx.p**k)

    def embed(self) -> "UnramifiedScalar":
        return UnramifiedScalar(
            self.ctx, (self.value,) + (0,) * (self.ctx.f - 1))

    def reduce_to(self, target: PadicContext) -> "PadicScalar":
        if target.p != self.ctx.p or target.N > self.ctx.N:
            raise ContextMismatch("can only reduce to lower precision, same p")
        return PadicScalar(target, self.value)

    def to_json_obj(self) -> str:
        return str(self.value)

    @classmethod
    def from_json_obj(cls, ctx: PadicContext, obj) -> "PadicScalar":
        return PadicScalar(ctx, int(obj))


@dataclass(frozen=True)
class UnramifiedScalar:
    """An element of W(F_{p^f}) / p^N in the polynomial basis 1, w, ..., w^{f-1}."""

    ctx: PadicContext
    coeffs: tuple[int, ...]

    def __post_init__(self):
        pn = self.ctx.pn
        object.__setattr__(self, "coeffs", tuple(c % pn for c in self.coeffs))
        if len(self.coeffs) != self.ctx.f:
            raise ContextMismatch("coordinate count does not match residue degree")

    def __add__(self, other):
        _same_ctx(self, other)
        return UnramifiedScalar(self.ctx, _um_add(self.coeffs, other.coeffs, self.ctx.pn))

    def __sub__(self, other):
        _same_ctx(self, other)
        return UnramifiedScalar(self.ctx, _um_sub(self.coeffs, other.coeffs, self.ctx.pn))

    def __neg__(self):
        return UnramifiedScalar(self.ctx, tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        _same_ctx(self, other)
        return UnramifiedScalar(
            self.ctx,
            _um_mul(self.coeffs, other.coeffs, self.ctx.modulus, self.ctx.pn))

    def pow(self, e: int) -> "UnramifiedScalar":
        return UnramifiedScalar(
            self.ctx, _um_pow(self.coeffs, e, self.ctx.modulus, self.ctx.pn))

    def valuation(self) -> int:
        return _um_valuation(self.coeffs, self.ctx.p, self.ctx.N)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_unit(self) -> bool:
        return self.valuation() == 0

    def inverse(self) -> "UnramifiedScalar":
        return UnramifiedScalar(
            self.ctx,
            _um_inv(self.coeffs, self.ctx.modulus, self.ctx.p, self.ctx.N))

    def times_p_power(self, k: int) -> "UnramifiedScalar":
        if k < 0:
            raise InexactDivision("use exact_divide_by_p for division")
        pk = self.ctx.p**k
        return UnramifiedScalar(self.ctx, tuple(c * pk for c in self.coeffs))

    def shift_down(self, k: int, target: PadicContext | None = None) -> "UnramifiedScalar":
        if self.valuation() < k:
            raise InexactDivision(
                f"valuation {self.valuation()} < {k}, division not exact")
        pk = self.ctx.p**k
        tgt = target if target is not None else self.ctx
        return UnramifiedScalar(tgt, tuple(c // pk for c in self.coeffs))

    def as_padic(self) -> PadicScalar:
        """The element as a PadicScalar; requires all higher coordinates zero."""
        if any(c != 0 for c in self.coeffs[1:]):
            raise ValueError("element is not rational over Z_p")
        return PadicScalar(self.ctx, self.coeffs[0])

    def reduce_to(self, target: PadicContext) -> "UnramifiedScalar":
        if target.p != self.ctx.p or target.f != self.ctx.f or target.N > self.ctx.N:
            raise ContextMismatch("can only reduce to lower precision, same (p, f)")
        return UnramifiedScalar(target, self.coeffs)

    def to_json_obj(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json_obj(cls, ctx: PadicContext, obj) -> "UnramifiedScalar":
        if isinstance(obj, str):
            obj = [obj]
        return ctx.unram_scalar([int(c) for c in obj])


# ---------------------------------------------------------------------------
# module-level operations


def valuation(x) -> int:
    """Largest k <= N with x in p^k * (ring); N for x = 0 ("at least N")."""
    return x.valuation()


@functools.lru_cache(maxsize=None)
def _sigma_power_basis(ctx: PadicContext, s: int) -> tuple[tuple[int, ...], ...]:
    """Coordinates of sigma^s(w^j) for j = 0..f-1."""
    f, pn, mod = ctx.f, ctx.pn, ctx.modulus
    if s == 0:
        return tuple(
            tuple(1 if i == j else 0 for i in range(f)) for j in range(f))
    prev = _sigma_power_basis(ctx, s - 1)
    g = ctx.frobenius_image
    out = []
    for j in range(f):
        # sigma^s(w^j) = sigma(sigma^{s-1}(w^j)); apply sigma by substituting
        # frobenius_image into the coordinate polynomial
        coeffs = prev[j]
        acc = tuple([0] * f)
        gp = tuple([1] + [0] * (f - 1))
        for c in coeffs:
            term = tuple((c * t) % pn for t in gp)
            acc = _um_add(acc, term, pn)
            gp = _um_mul(gp, g, mod, pn)
        out.append(acc)
    return tuple(out)


def frobenius(x, s: int = 1):
    """Apply sigma^s; sigma is the lift of the p-power map on the residue field.

    PadicScalars are fixed; for UnramifiedScalars the exponent is taken
    mod f since sigma has order f.
    """
    if isinstance(x, PadicScalar):
        return x
    ctx = x.ctx
    s = s % ctx.f
    if s == 0:
        return x
    basis = _sigma_power_basis(ctx, s)
    acc = tuple([0] * ctx.f)
    for c, img in zip(x.coeffs, basis):
        acc = _um_add(acc, tuple((c * t) % ctx.pn for t in img), ctx.pn)
    return UnramifiedScalar(ctx, acc)


def exact_divide_by_p(x, k: int = 1):
    """Divide by p^k; partial, defined only when valuation(x) >= k.

    The result lives in the context at precision N - k: digits above that
    are unknowable after the division, so the precision drop is explicit.
    """
    ctx = x.ctx
    if ctx.N - k < 1:
        raise PrecisionZero(f"division by p^{k} leaves no precision")
    if x.valuation() < k:
        raise InexactDivision(f"valuation {x.valuation()} < {k}")
    target = ctx.with_precision(ctx.N - k)
    if isinstance(x, PadicScalar):
        return PadicScalar(target, x.value // ctx.p**k)
    return UnramifiedScalar(target, tuple(c // ctx.p**k for c in x.coeffs))


def teichmuller_lift(ctx: PadicContext, residue: UnramifiedScalar) -> UnramifiedScalar:
    """Teichmueller representative in ctx of a precision-1 residue.

    Stabilises the trivial lift under x -> x^{p^f}; the result satisfies
    x^{p^f} = x exactly at precision N.
    """
    if residue.ctx.p != ctx.p or residue.ctx.f != ctx.f:
        raise ContextMismatch("residue from an incompatible context")
    x = ctx.unram_scalar(residue.coeffs)
    q = ctx.p**ctx.f
    for _ in range(ctx.N + 1):
        x = x.pow(q)
    assert x.pow(q) == x
    return x
