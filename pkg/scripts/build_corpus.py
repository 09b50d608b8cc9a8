#!/usr/bin/env python3
"""Regenerate the bundled instance corpus.

Every expect block is derived here from first principles (explicit integer
valuations, norm formulas for rank-1 characters, block additivity), never
by running the measure pipeline, so the corpus stays an independent
fixture for it.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from padicfl.flmod import (  # noqa: E402
    direct_sum,
    flmodule_to_json,
    tate_type_line,
    unramified_line,
)
from padicfl.linalg import Mat  # noqa: E402
from padicfl.padic import make_context  # noqa: E402

PREC = 10
OUT = Path(__file__).resolve().parent.parent / "src" / "padicfl" / "instances"


def vp(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("vp(0)")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def sqrt_mod(a: int, p: int, nprec: int) -> int:
    """Hensel square root for odd p, starting from a root mod p."""
    pn = p**nprec
    x = next(r for r in range(p) if (r * r - a) % p == 0)
    for _ in range(nprec + 1):
        x = (x - (x * x - a) * pow(2 * x, -1, pn)) % pn
    assert (x * x - a) % pn == 0
    return x


def write(name: str, obj: dict):
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / name
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    print("wrote", path.name)


def unram_instance(p: int, u: int, name: str):
    """Rank 1, f = 1, jump 0, phi^0 = u.  P(1) = 1 - u; H^1 = Z_p/(1 - u)."""
    ctx = make_context(p, PREC, 1)
    m = unramified_line(ctx, ctx.unram_scalar([u]))
    v = vp(1 - u, p)
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": v, "identity_holds": True,
                     "h1_torsion": [v] if v else []}
    write(name, obj)


def tate_instance(p: int, n: int, name: str):
    """Rank 1, jump n, phi^n = 1.  P(1) = 1 - p^n.

    n > 0: v_p(1 - p^n) = 0 and H^1 = 0.  n < 0: v = n (clear denominators)
    and H^1 is free of rank 1 with relative index -n against Lambda_0.
    """
    ctx = make_context(p, PREC, 1)
    m = tate_type_line(ctx, n)
    v = 0 if n > 0 else n
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": v, "identity_holds": True, "h1_torsion": []}
    write(name, obj)


def split_instance(p: int, u: int, n: int, name: str):
    """unramified(u) + tate(n): both sides add blockwise."""
    ctx = make_context(p, PREC, 1)
    m = direct_sum(unramified_line(ctx, ctx.unram_scalar([u])),
                   tate_type_line(ctx, n))
    vu = vp(1 - u, p)
    vt = 0 if n > 0 else n
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": vu + vt, "identity_holds": True,
                     "h1_torsion": [vu] if vu else []}
    write(name, obj)


def nonsplit_instance(p: int, u: int, uprime: int, name: str):
    """Ordinary non-split: phi^0 = [[u, p], [0, p u']], jumps 0 and 1.

    P(1) = (1 - u)(1 - p u'); the second factor is a unit, so
    v_P(1) = v_p(1 - u), and H^1 = coker(I - phi^0) has that length.
    """
    ctx = make_context(p, PREC, 1)
    one, zero = ctx.one_u(), ctx.zero_u()
    phi = Mat.from_rows(ctx, [
        [ctx.unram_scalar([u]), one.times_p_power(1)],
        [zero, ctx.unram_scalar([uprime]).times_p_power(1)]], "ok")
    from padicfl.flmod import FLModule
    m = FLModule(ctx, (PREC, PREC),
                 ((0, Mat.identity(ctx, 2, "ok")),
                  (1, Mat.from_rows(ctx, [[zero], [one]], "ok"))), phi)
    v = vp(1 - u, p)
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": v, "identity_holds": True,
                     "h1_torsion": [v] if v else []}
    write(name, obj)


def f2_norm_instance(p: int, name: str):
    """f = 2, rank 1, alpha = sqrt(1+p) in Z_p: norm alpha sigma(alpha) = 1+p,
    so P(1) = -p and both sides are 1."""
    ctx = make_context(p, PREC, 2)
    alpha = ctx.unram_scalar([sqrt_mod(1 + p, p, PREC), 0])
    m = unramified_line(ctx, alpha)
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": 1, "identity_holds": True, "h1_torsion": [1]}
    write(name, obj)


def f2_unit_instance(p: int, name: str):
    """f = 2, rank 1, alpha = 1 + omega (trace of alpha is a unit).

    For the modulus X^2 + c the norm of 1 + omega is m(-1) = 1 + c, a unit
    mod p here, so P(1) = -c is a unit and both sides vanish.
    """
    ctx = make_context(p, PREC, 2)
    assert ctx.modulus[1] == 0, "expected a modulus of the form X^2 + c"
    c = ctx.modulus[0]
    assert c % p != 0 and (1 + c) % p != 0
    alpha = ctx.unram_scalar([1, 1])
    m = unramified_line(ctx, alpha)
    obj = flmodule_to_json(m)
    obj["expect"] = {"v_P_at_1": 0, "identity_holds": True, "h1_torsion": []}
    write(name, obj)


def pvanishes_instance(p: int, name: str):
    """phi^0 = 1 at jump 0: P(X) = 1 - X vanishes at 1."""
    ctx = make_context(p, PREC, 1)
    m = unramified_line(ctx, ctx.one_u())
    obj = flmodule_to_json(m)
    obj["expect_error"] = "PVanishesAtOne"
    write(name, obj)


def torsion_instance(p: int, d: int, name: str):
    """Torsion rank 1 with phi^0 = 1: H^0 = H^1 = O/p^d (cohomology demo)."""
    ctx = make_context(p, PREC, 1)
    from padicfl.flmod import FLModule
    m = FLModule(ctx, (d,), ((0, Mat.identity(ctx, 1, "ok")),),
                 Mat.from_rows(ctx, [[ctx.one_u()]], "ok"))
    obj = flmodule_to_json(m)
    obj["note"] = "torsion instance for the cohomology subcommand"
    (OUT / "extra").mkdir(parents=True, exist_ok=True)
    path = OUT / "extra" / name
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    print("wrote extra/" + name)


def main():
    unram_instance(3, 1 + 3, "unram_1p_p3.json")
    unram_instance(5, 1 + 5, "unram_1p_p5.json")
    unram_instance(2, 1 + 2, "unram_1p_p2.json")
    unram_instance(3, 1 + 9, "unram_1p2_p3.json")
    unram_instance(5, 1 + 25, "unram_1p2_p5.json")
    tate_instance(3, -1, "tate_m1_p3.json")
    tate_instance(3, -2, "tate_m2_p3.json")
    tate_instance(2, -1, "tate_m1_p2.json")
    tate_instance(3, 1, "tate_1_p3.json")
    tate_instance(5, 2, "tate_2_p5.json")
    split_instance(3, 4, -1, "rank2_split_p3.json")
    split_instance(5, 6, -1, "rank2_split_p5.json")
    split_instance(2, 3, 1, "rank2_split_p2.json")
    nonsplit_instance(3, 4, 1, "rank2_nonsplit_p3.json")
    nonsplit_instance(5, 6, 2, "rank2_nonsplit_p5.json")
    f2_norm_instance(3, "rank1_f2_norm1p_p3.json")
    f2_unit_instance(3, "rank1_f2_unit_p3.json")
    f2_unit_instance(5, "rank1_f2_unit_p5.json")
    pvanishes_instance(3, "pvanishes_p3.json")
    torsion_instance(3, 4, "torsion_p3.json")


if __name__ == "__main__":
    main()
