#!/usr/bin/env python3
"""Run the measure-identity verifier over the bundled corpus and print a table.

Exit status is nonzero if any instance fails its expectation.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from padicfl.cli import instances_dir  # noqa: E402
from padicfl.errors import PVanishesAtOne  # noqa: E402
from padicfl.flmod import flmodule_from_json  # noqa: E402
from padicfl.measure import verify_measure_identity  # noqa: E402


def main():
    failures = 0
    rows = []
    for path in sorted(instances_dir().glob("*.json")):
        obj = json.loads(path.read_text())
        label = path.stem
        if "expect_error" in obj:
            try:
                verify_measure_identity(flmodule_from_json(obj))
                rows.append((label, "-", "-", "MISSED ERROR"))
                failures += 1
            except PVanishesAtOne:
                rows.append((label, "-", "-", "expected error ok"))
            continue
        rep = verify_measure_identity(flmodule_from_json(obj))
        status = "ok" if rep.identity_holds else "IDENTITY FAILS"
        exp = obj.get("expect", {})
        if exp and rep.v_P_at_1 != exp.get("v_P_at_1", rep.v_P_at_1):
            status = "EXPECT MISMATCH"
        if status != "ok" and not status.startswith("expected"):
            failures += 1
        rows.append((label, rep.v_P_at_1, rep.log_p_mu, status))
    width = max(len(r[0]) for r in rows) + 2
    print(f"{'instance':<{width}}{'v_p(P(1))':>10}{'log_p mu':>10}  status")
    for label, v1, mu, status in rows:
        print(f"{label:<{width}}{v1!s:>10}{mu!s:>10}  {status}")
    print(f"\n{len(rows)} instances, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
