"""Command-line front end.

Reads module instances from JSON (see flmod.flmodule_from_json for the
schema), dispatches to the library, and prints machine-readable reports
with sorted keys so output is byte-for-byte deterministic.

Exit codes: 0 success (identity holds, module valid, ...), 1 mathematical
negative (identity fails, not strongly divisible, invalid module), 2 input
or usage error (including a failed L-factor hypothesis), 3 precision
error.  Diagnostics go to stderr; NO_COLOR is respected trivially since
nothing is ever coloured.

An instance file may carry an "expect" block
    {"h1_torsion": [...], "v_P_at_1": int, "identity_holds": bool}
or {"expect_error": "ErrorName"}; mismatches are reported and exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import flmod, measure, series, witt
from .errors import (
    ExactArithmeticError,
    InsufficientPrecision,
    PrecisionLoss,
    PrecisionZero,
    PVanishesAtOne,
)
from .linalg import DEFAULT_MARGIN
from .padic import make_context

__all__ = ["main", "run", "instances_dir"]

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_PRECISION = 3


def instances_dir() -> Path:
    """Directory with the bundled instance corpus."""
    return Path(__file__).resolve().parent / "instances"


def _emit(obj, pretty: bool):
    if pretty:
        print(json.dumps(obj, sort_keys=True, indent=2))
    else:
        print(json.dumps(obj, sort_keys=True, separators=(",", ":")))


def _load_instance(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit2(f"cannot read instance file {path}: {exc}")


class SystemExit2(Exception):
    """Input/usage error carrying a message for stderr."""


def _module_from(obj):
    try:
        return flmod.flmodule_from_json(obj)
    except (KeyError, ValueError, ExactArithmeticError) as exc:
        raise SystemExit2(f"malformed instance: {exc}")


def _check_expect(expect, report_obj, errors):
    """Compare an expect block against a measure report dict."""
    if "v_P_at_1" in expect and expect["v_P_at_1"] != report_obj["v_P_at_1"]:
        errors.append(
            f"expected v_P_at_1={expect['v_P_at_1']}, got {report_obj['v_P_at_1']}")
    if "identity_holds" in expect and \
            bool(expect["identity_holds"]) != report_obj["identity_holds"]:
        errors.append("identity_holds mismatch")
    if "h1_torsion" in expect and \
            [int(x) for x in expect["h1_torsion"]] != \
            report_obj["h1"]["torsion_exponents"]:
        errors.append(
            f"expected h1 torsion {expect['h1_torsion']}, "
            f"got {report_obj['h1']['torsion_exponents']}")


def _cmd_measure_one(path, margin, pretty):
    obj = _load_instance(path)
    expect = obj.get("expect", {})
    expect_error = obj.get("expect_error")
    try:
        m = _module_from(obj)
        rep = measure.verify_measure_identity(m, margin)
    except PVanishesAtOne as exc:
        if expect_error == "PVanishesAtOne":
            _emit({"file": str(path), "expected_error": "PVanishesAtOne",
                   "matched": True}, pretty)
            return EXIT_OK
        raise SystemExit2(f"L-factor hypothesis fails: {exc}")
    if expect_error:
        print(f"expected error {expect_error} did not occur", file=sys.stderr)
        return EXIT_NEGATIVE
    out = rep.to_json_obj()
    errors: list[str] = []
    if expect:
        _check_expect(expect, out, errors)
    out["file"] = str(path)
    if errors:
        out["expect_failures"] = errors
    _emit(out, pretty)
    if errors or not rep.identity_holds:
        return EXIT_NEGATIVE
    return EXIT_OK


def _cmd_measure(args):
    if args.input_dir:
        paths = sorted(Path(args.input_dir).glob("*.json"))
        if not paths:
            raise SystemExit2(f"no instance files in {args.input_dir}")
        worst = EXIT_OK
        for path in paths:
            code = _cmd_measure_one(str(path), args.margin, args.pretty)
            worst = max(worst, code)
        return worst
    if not args.input:
        raise SystemExit2("measure needs --input or --input-dir")
    return _cmd_measure_one(args.input, args.margin, args.pretty)


def _cmd_validate(args):
    m = _module_from(_load_instance(args.input))
    rep = flmod.validate(m, args.margin)
    _emit({
        "ok": rep.ok,
        "violations": [
            {"code": v.code, "message": v.message} for v in rep.violations],
    }, args.pretty)
    return EXIT_OK if rep.ok else EXIT_NEGATIVE


def _cmd_cohomology(args):
    m = _module_from(_load_instance(args.input))
    rep = flmod.validate(m, args.margin)
    if not rep.ok:
        raise SystemExit2(f"module does not validate: {rep.first.message}")
    h0 = flmod.h0(m, args.margin, finite=args.finite)
    h1 = flmod.h1(m, args.margin, finite=args.finite)

    def enc(s):
        return {"torsion_exponents": list(s.torsion_exponents),
                "free_rank": s.free_rank,
                "all_exponents": list(s.exponents)}

    _emit({"h0": enc(h0), "h1": enc(h1), "finite_semantics": args.finite},
          args.pretty)
    return EXIT_OK


def _cmd_admissible(args):
    m = _module_from(_load_instance(args.input))
    rep = flmod.validate(m, args.margin)
    if not rep.ok:
        raise SystemExit2(f"module does not validate: {rep.first.message}")
    if not m.is_torsion_free:
        raise SystemExit2("admissibility is defined for torsion-free modules")
    res = flmod.is_admissible(flmod.to_filtered_phi_module(m), args.margin)
    _emit({"verdict": res.verdict, "hodge_number": res.hodge,
           "newton_number": res.newton,
           "witness": None if res.witness is None else str(res.witness)},
          args.pretty)
    return EXIT_OK if res.verdict == "admissible" else EXIT_NEGATIVE


def _cmd_strong_div(args):
    m = _module_from(_load_instance(args.input))
    rep = flmod.validate(m, args.margin)
    if not rep.ok:
        raise SystemExit2(f"module does not validate: {rep.first.message}")
    ok = flmod.is_strongly_divisible(m, args.margin)
    _emit({"strongly_divisible": ok}, args.pretty)
    return EXIT_OK if ok else EXIT_NEGATIVE


def _cmd_lfunction(args):
    m = _module_from(_load_instance(args.input))
    rep = flmod.validate(m, args.margin)
    if not rep.ok:
        raise SystemExit2(f"module does not validate: {rep.first.message}")
    if not m.is_torsion_free:
        raise SystemExit2("the local factor is defined for torsion-free modules")
    factor = measure.euler_factor(flmod.to_filtered_phi_module(m), args.margin)
    out = factor.to_json_obj()
    try:
        out["v_P_at_1"] = factor.valuation_at_one(args.margin)
    except PVanishesAtOne:
        out["v_P_at_1"] = None
        out["P_vanishes_at_1"] = True
    _emit(out, args.pretty)
    return EXIT_OK


def _cmd_lemma_unit(args):
    v, w = series.unit_factor(args.p, args.prec, args.xdeg)
    product_is_one = v.mul(w).is_one()
    _emit({
        "p": args.p, "precision": args.prec, "degree": args.xdeg,
        "v_coefficients": v.to_json_obj(),
        "w_coefficients": w.to_json_obj(),
        "unit_certified": product_is_one,
    }, args.pretty)
    return EXIT_OK if product_is_one else EXIT_NEGATIVE


def _cmd_witt_table(args):
    ring = witt.FiniteFieldCoefficients(args.p, args.f)
    q = args.p**args.f
    if q**args.n > 4096:
        raise SystemExit2("table too large; keep q^n <= 4096")
    import itertools as it
    elements = [witt.WittVector(args.p, ring, comps)
                for comps in it.product(list(ring.elements()), repeat=args.n)]

    def enc(wv):
        return [c.to_json_obj() for c in wv.components]

    add_table = [[enc(witt.witt_add(u, v)) for v in elements] for u in elements]
    mul_table = [[enc(witt.witt_mul(u, v)) for v in elements] for u in elements]
    _emit({
        "p": args.p, "length": args.n, "f": args.f,
        "elements": [enc(u) for u in elements],
        "addition": add_table,
        "multiplication": mul_table,
    }, args.pretty)
    return EXIT_OK


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--margin", type=int, default=DEFAULT_MARGIN,
                        help="precision margin in digits (default 3)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="pretty", action="store_false",
                     default=False, help="compact JSON output (default)")
    fmt.add_argument("--pretty", dest="pretty", action="store_true",
                     help="indented JSON output")
    ap = argparse.ArgumentParser(
        prog="padicfl",
        description="exact p-adic module computations at finite precision")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    def with_input(p):
        p.add_argument("--input", help="instance JSON file")
        return p

    with_input(add("validate", "check module invariants"))
    pc = with_input(add("cohomology", "H^0 and H^1 of 1 - phi^0"))
    pc.add_argument("--finite", action="store_true",
                    help="literal finite kernel/cokernel mod p^N")
    with_input(add("admissible", "admissibility of the phi-module"))
    with_input(add("strong-div", "strong divisibility"))
    with_input(add("lfunction", "local L-factor coefficients"))
    pm = with_input(add("measure", "verify the measure identity"))
    pm.add_argument("--input-dir", help="run on every *.json file in a directory")
    pl = add("lemma-unit", "certify the period-series unit factor")
    pl.add_argument("--p", type=int, required=True)
    pl.add_argument("--prec", type=int, required=True)
    pl.add_argument("--xdeg", type=int, required=True)
    pw = add("witt-table", "addition/multiplication tables of W_n(F_q)")
    pw.add_argument("--p", type=int, required=True)
    pw.add_argument("--n", type=int, required=True)
    pw.add_argument("--f", type=int, default=1)
    return ap


_COMMANDS = {
    "validate": _cmd_validate,
    "cohomology": _cmd_cohomology,
    "admissible": _cmd_admissible,
    "strong-div": _cmd_strong_div,
    "lfunction": _cmd_lfunction,
    "measure": _cmd_measure,
    "lemma-unit": _cmd_lemma_unit,
    "witt-table": _cmd_witt_table,
}


def run(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    handler = _COMMANDS[args.command]
    needs_input = args.command in (
        "validate", "cohomology", "admissible", "strong-div", "lfunction")
    if needs_input and not args.input:
        print(f"{args.command} needs --input", file=sys.stderr)
        return EXIT_INPUT
    try:
        return handler(args)
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except (InsufficientPrecision, PrecisionLoss, PrecisionZero) as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except PVanishesAtOne as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ExactArithmeticError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
