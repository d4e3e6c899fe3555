"""Check every bundled golden value and print a compact table.

Usage: python3 scripts/reproduce_examples.py [--only ex2] [--failures]
"""
import argparse
import sys

from qmarkov.corpus import golden_table, run_golden


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", help="restrict to one fixture")
    ap.add_argument("--failures", action="store_true", help="print failing cases only")
    args = ap.parse_args()
    cases = [c for c in golden_table() if args.only is None or c.fixture == args.only]
    results = run_golden(cases)
    width = max(len(r.case.label) for r in results)
    for r in results:
        if args.failures and r.passed:
            continue
        print(f"{r.case.label:<{width}}  {r.expected:>16.12g}  {r.value:>16.12g}  {r.error:9.2e}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} passed")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
