"""Seeded convergence runs of a preset on chosen functions; prints success counts."""
import argparse

import numpy as np

from unified_aos.bench import make_problem
from unified_aos.engine import run
from unified_aos.presets import preset


def parse():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="U-AOS-FW")
    ap.add_argument("--functions", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--evals-per-dim", type=int, default=20_000)
    ap.add_argument("--seeds", type=int, default=15)
    ap.add_argument("--target", type=float, default=1e-8)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse()
    aos, de = preset(args.preset)
    budget = args.evals_per_dim * args.dim
    for fid in args.functions:
        problem = make_problem(fid, 1, args.dim)
        results = [run(problem, de, aos, budget, seed, target=args.target)
                   for seed in range(1, args.seeds + 1)]
        solved = [r for r in results if r.precision <= args.target]
        evals = np.median([r.evaluations_used for r in solved]) if solved else float("nan")
        print(f"f{fid:02d} d{args.dim}: {len(solved)}/{args.seeds} reached {args.target:g}, "
              f"median evaluations {evals:.0f}")
