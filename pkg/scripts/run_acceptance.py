"""Run the acceptance experiments and print one PASS/FAIL line each.

    python3 scripts/run_acceptance.py            # all criteria
    python3 scripts/run_acceptance.py 2 5 10     # a subset
    python3 scripts/run_acceptance.py --json out.json
"""
import argparse
import json
import sys

import numpy as np

from degenlab.experiments import CRITERIA, run_criterion


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("criteria", nargs="*", type=int, default=sorted(CRITERIA))
    ap.add_argument("--json", help="write measured values to this file")
    args = ap.parse_args(argv)
    results = []
    for n in args.criteria:
        out = run_criterion(n)
        print(f"{out.line()}  ({out.seconds:.1f}s)", flush=True)
        results.append({"criterion": n, "title": out.title, "passed": bool(out.passed),
                        "seconds": out.seconds,
                        "measured": {k: _plain(v) for k, v in out.measured.items()}})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0 if all(r["passed"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
