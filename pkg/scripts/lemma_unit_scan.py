#!/usr/bin/env python3
"""Tabulate the period-series coefficients and certify the unit factor.

For each prime, prints the valuation of the X^n coefficient of t/p next
to the closed form n - 1 - v_p(n), and whether the Newton-constructed
inverse of the unit factor v passes the independent multiplication check.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from padicfl.series import (  # noqa: E402
    coefficient_valuation_closed_form,
    t_over_p_series,
    unit_factor,
)

PRIMES = (2, 3, 5)
DEGREE = 20
PREC = 25


def main():
    for p in PRIMES:
        series = t_over_p_series(p, PREC, DEGREE)
        v, w = unit_factor(p, 10, DEGREE)
        certified = v.mul(w).is_one()
        print(f"p = {p}: unit factor certified = {certified}")
        print("  n :" + "".join(f"{n:>4}" for n in range(1, DEGREE + 1)))
        print("  v :" + "".join(
            f"{series.coefficient(n).valuation():>4}"
            for n in range(1, DEGREE + 1)))
        print("  cf:" + "".join(
            f"{coefficient_valuation_closed_form(p, n):>4}"
            for n in range(1, DEGREE + 1)))
        mismatch = [n for n in range(1, DEGREE + 1)
                    if series.coefficient(n).valuation()
                    != coefficient_valuation_closed_form(p, n)]
        print(f"  mismatches: {mismatch or 'none'}\n")


if __name__ == "__main__":
    main()
