"""Run the acceptance criteria and write a JSON summary.

    python scripts/run_acceptance.py            # all ten
    python scripts/run_acceptance.py 1 4 8      # a subset
"""
import argparse
import sys

from weighted_perms.acceptance import CRITERIA, run_all
from weighted_perms.formats import dump_json


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("numbers", nargs="*", type=int)
    ap.add_argument("--json", default=None, help="write results here")
    args = ap.parse_args()
    bad = [k for k in args.numbers if k not in CRITERIA]
    if bad:
        ap.error(f"unknown criteria {bad}")
    results = run_all(args.numbers or None)
    if args.json:
        dump_json([{"criterion": r.number, "title": r.title, "passed": r.passed, "elapsed": r.elapsed,
                    "budget": r.budget, "detail": r.detail} for r in results], args.json)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
