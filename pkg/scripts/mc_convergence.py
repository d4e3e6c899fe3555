"""Monte Carlo error against sample count for one hitting time.

Prints the estimate, its standard error and the z-score against the operator
value as the number of trajectories grows.  The z-scores should stay O(1)
while the standard error shrinks like 1/sqrt(samples).

Usage: python3 scripts/mc_convergence.py [model] [--from 0] [--to 1] [--rho mixed]
"""
import argparse
import time

from qmarkov.corpus import analysis, load_fixture
from qmarkov.densities import parse_density
from qmarkov.hitting import tau_and_pi
from qmarkov.trajectory import TrajectoryConfig, estimate_hitting


def main():
    ap = argparse.ArgumentParser(description="Monte Carlo convergence for a mean hitting time")
    ap.add_argument("model", nargs="?", default="ex2", help="bundled fixture name")
    ap.add_argument("--from", dest="source", type=int, default=0)
    ap.add_argument("--to", dest="target", type=int, default=1)
    ap.add_argument("--rho", default="mixed")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--max-samples", type=int, default=1_000_000)
    args = ap.parse_args()

    an = analysis(args.model)
    model = load_fixture(args.model).model
    rho = parse_density(args.rho, model.k, lambda v: an.pi.blocks[v])
    exact = tau_and_pi(an.ops, rho, args.source, args.target).tau
    print(f"{args.model} {args.source}->{args.target} rho={args.rho}: operator value {exact:.10g}")
    print(f"{'samples':>9} {'mean':>12} {'stderr':>10} {'z':>7} {'seconds':>8}")
    samples = 1000
    while samples <= args.max_samples:
        start = time.perf_counter()
        est = estimate_hitting(model, (args.source, rho), args.target,
                               TrajectoryConfig(samples=samples, seed=args.seed, workers=args.workers))
        z = (est.mean - exact) / est.stderr if est.stderr else float("nan")
        print(f"{samples:9d} {est.mean:12.6f} {est.stderr:10.2e} {z:7.2f} {time.perf_counter() - start:8.2f}")
        samples *= 10


if __name__ == "__main__":
    main()
