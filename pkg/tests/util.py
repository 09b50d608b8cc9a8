"""Shared generators and independent oracles for the test suite.

The oracles here deliberately avoid the library's own elimination code:
elementary divisors come from gcds of integer minors, determinants from
Fraction arithmetic, and module cohomology from literal enumeration.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from padicfl.flmod import (
    FLModule,
    base_change,
    direct_sum,
    tate_twist,
    unramified_line,
    tate_type_line,
    validate,
)
from padicfl.linalg import KMat, Mat, det_exact, invert_unimodular
from padicfl.padic import make_context


def rand_unimodular(ctx, n, rng, kind="ok"):
    """Random matrix invertible mod p^N (unit determinant)."""
    pn = ctx.pn
    while True:
        if kind == "ok":
            rows = [[ctx.unram_scalar([rng.randrange(pn) for _ in range(ctx.f)])
                     for _ in range(n)] for _ in range(n)]
        else:
            rows = [[ctx.int_scalar(rng.randrange(pn)) for _ in range(n)]
                    for _ in range(n)]
        m = Mat.from_rows(ctx, rows, kind)
        if n == 0 or det_exact(m).is_unit():
            return m


def rand_valid_module(ctx, rng, max_rank=2, allow_torsion=True,
                      allow_twist=True) -> FLModule:
    """Random validated module built from canonical summands.

    Pieces: unramified lines with random units, Tate-type lines with small
    jumps, torsion lines; then an optional twist and a random unimodular
    base change to hide the adapted basis.
    """
    pn = ctx.pn

    def rand_unit():
        while True:
            c = [rng.randrange(pn) for _ in range(ctx.f)]
            s = ctx.unram_scalar(c)
            if s.is_unit():
                return s

    def piece():
        kind = rng.choice(["unram", "tate", "tors"] if allow_torsion
                          else ["unram", "tate"])
        if kind == "unram":
            return unramified_line(ctx, rand_unit())
        if kind == "tate":
            return tate_type_line(ctx, rng.choice([-1, 0, 1, 2]))
        d = rng.randrange(1, 4)
        return unramified_line(ctx, rand_unit(), divisor=d)

    while True:
        m = piece()
        if max_rank >= 2 and rng.random() < 0.6:
            m = direct_sum(m, piece())
        if allow_twist and rng.random() < 0.4:
            m = tate_twist(m, rng.choice([-1, 1]))
        if len(set(m.divisors)) == 1:
            # an arbitrary unimodular matrix is an automorphism of the
            # ambient module only when all divisors agree
            m = base_change(m, rand_unimodular(ctx, m.rank, rng, "ok"))
        # a sum can be unrepresentable (torsion exponent inside the jump
        # spread kills the stored Frobenius); validate rejects those
        if validate(m).ok:
            return m


def rand_uniform_jump_module(ctx, rng, max_rank=2, allow_torsion=True):
    """Random validated module with a single filtration jump.

    Quotients by p of such modules stay representable, which makes them
    the natural inputs for multiplication-by-p exact sequences.
    """
    pn = ctx.pn

    def rand_unit():
        while True:
            s = ctx.unram_scalar([rng.randrange(pn) for _ in range(ctx.f)])
            if s.is_unit():
                return s

    def piece():
        d = rng.randrange(2, 4) if (allow_torsion and rng.random() < 0.4) else None
        return unramified_line(ctx, rand_unit(), divisor=d)

    m = piece()
    if max_rank >= 2 and rng.random() < 0.6:
        m = direct_sum(m, piece())
    m = tate_twist(m, rng.choice([-1, 0, 1]))
    if len(set(m.divisors)) == 1:
        m = base_change(m, rand_unimodular(ctx, m.rank, rng, "ok"))
    rep = validate(m)
    assert rep.ok, rep.violations
    return m


# ---------------------------------------------------------------------------
# independent Smith-form oracle: gcd of k x k minors over the integers


def _int_minor_det(rows):
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        # parity by counting inversions
        inv = sum(1 for i in range(n) for j in range(i + 1, n)
                  if seen[i] > seen[j])
        sign = -1 if inv % 2 else 1
        prod = 1
        for i, j in enumerate(perm):
            prod *= rows[i][j]
        total += sign * prod
    return total


def divisor_exponents_oracle(int_rows, p, nprec):
    """Elementary divisor exponents of a matrix over Z/p^N via minor gcds.

    e_1 + ... + e_k = v_p(gcd of all k x k minors), capped at N.
    """
    r = len(int_rows)
    c = len(int_rows[0]) if r else 0
    t = min(r, c)
    exps = []
    prev = 0
    for k in range(1, t + 1):
        g = 0
        for rowsel in itertools.combinations(range(r), k):
            for colsel in itertools.combinations(range(c), k):
                sub = [[int_rows[i][j] for j in colsel] for i in rowsel]
                g = math.gcd(g, _int_minor_det(sub))
                if g == 1:
                    break
            if g == 1:
                break
        if g == 0:
            vk = nprec * k  # all k-minors vanish mod anything
        else:
            vk = 0
            gg = g
            while gg % p == 0:
                gg //= p
                vk += 1
        total_k = min(vk, prev + nprec)
        exps.append(min(total_k - prev, nprec))
        prev = prev + exps[-1]
    return exps


def fraction_det(int_rows):
    n = len(int_rows)
    m = [[Fraction(x) for x in row] for row in int_rows]
    det = Fraction(1)
    for k in range(n):
        piv = None
        for i in range(k, n):
            if m[i][k] != 0:
                piv = i
                break
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        det *= m[k][k]
        inv = 1 / m[k][k]
        for i in range(k + 1, n):
            factor = m[i][k] * inv
            if factor == 0:
                continue
            for j in range(k, n):
                m[i][j] -= factor * m[k][j]
    return det


# ---------------------------------------------------------------------------
# literal enumeration of small modules (f = 1)


class SmallModule:
    """Finite module prod Z/p^{d_j} with a matrix phi, for brute force."""

    def __init__(self, module: FLModule):
        assert module.ctx.f == 1
        self.m = module
        self.p = module.ctx.p
        self.nprec = module.ctx.N
        self.mods = [self.p ** min(d, self.nprec) for d in module.divisors]

    def reduce(self, vec):
        return tuple(int(x) % md for x, md in zip(vec, self.mods))

    def elements(self):
        return itertools.product(*[range(md) for md in self.mods])

    def add(self, x, y):
        return self.reduce([a + b for a, b in zip(x, y)])

    def scale(self, c, x):
        return self.reduce([c * a for a in x])

    def apply(self, int_matrix, x):
        return self.reduce([sum(int_matrix[i][j] * x[j] for j in range(len(x)))
                            for i in range(len(int_matrix))])

    def span(self, gens):
        out = {self.reduce([0] * len(self.mods))}
        frontier = [self.reduce([0] * len(self.mods))]
        gens = [self.reduce(g) for g in gens]
        while frontier:
            cur = frontier.pop()
            for g in gens:
                nxt = self.add(cur, g)
                if nxt not in out:
                    out.add(nxt)
                    frontier.append(nxt)
        return out

    def order_of(self, x, subgroup):
        k = 0
        cur = x
        while cur not in subgroup:
            cur = self.scale(self.p, cur)  # p^k * x needs iterating scale
            k += 1
            if k > self.nprec + 1:
                raise AssertionError("order computation ran away")
        return k


def int_matrix(mat: Mat):
    if mat.kind == "zp":
        return [[e.value for e in row] for row in mat.entries]
    return [[e.coeffs[0] for e in row] for row in mat.entries]


def phi_module_base_change(d, u_mat: Mat):
    """Filtered phi-module in the coordinates x = U y (U integral KMat-able)."""
    from padicfl.flmod import FilteredPhiModule
    from padicfl.linalg import mat_frobenius
    uinv = invert_unimodular(u_mat)
    phi = KMat(uinv @ d.phi.mat @ mat_frobenius(u_mat, 1), d.phi.shift)
    filt = tuple((j, KMat(uinv @ b.mat, b.shift)) for j, b in d.filtration)
    return FilteredPhiModule(d.ctx, d.rank, phi, filt)
