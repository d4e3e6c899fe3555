"""Hunter's formula across many random g-inverses of I - T.

For each fixture, draws members of families a, b and c, reports the worst
g-inverse residual and how far the resulting mean hitting times spread.

Usage: python3 scripts/ginverse_survey.py [--count 30] [--seed 0] [--scale 0.3]
"""
import argparse
import itertools

import numpy as np

from qmarkov.corpus import analysis, fixture_names
from qmarkov.formulas import hunter_general
from qmarkov.ginverse import ginverse_from_form, is_ginverse, random_forms
from qmarkov.hitting import probe_densities


def survey(name, count, seed, scale):
    an = analysis(name)
    a = np.eye(an.t.order) - an.t.matrix
    rho = probe_densities(an.t.k)[0]
    pairs = list(itertools.permutations(range(an.t.n), 2))
    residuals, rows = [], []
    for form in random_forms(an.t.order, count, seed=seed, scale=scale):
        g = ginverse_from_form(an.t, an.pi_vec, form)
        residuals.append(is_ginverse(a, g)[1])
        rows.append([hunter_general(an.t, an.omega, an.ops.D, g, rho, j, i) for j, i in pairs])
    rows = np.array(rows)
    spread = float(np.max(rows.max(axis=0) - rows.min(axis=0)))
    cond = max(np.linalg.cond(ginverse_from_form(an.t, an.pi_vec, f))
               for f in random_forms(an.t.order, min(count, 6), seed=seed, scale=scale))
    return max(residuals), spread, cond


def main():
    ap = argparse.ArgumentParser(description="Hunter's formula over random g-inverses")
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", type=float, default=0.3, help="size of the free parameters")
    args = ap.parse_args()
    print(f"{'fixture':<11} {'max residual':>13} {'value spread':>13} {'max cond(G)':>12}")
    for name in fixture_names():
        res, spread, cond = survey(name, args.count, args.seed, args.scale)
        print(f"{name:<11} {res:13.2e} {spread:13.2e} {cond:12.3g}")


if __name__ == "__main__":
    main()
