"""A small tuning run on the built-in training set, seeded with the tuned presets."""
import argparse
import sys

from unified_aos.cli import main


def parse():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", default="300")
    ap.add_argument("--evals-per-dim", default="200")
    ap.add_argument("--out", default="tuned.json")
    ap.add_argument("--log", default="tuning_log.csv")
    ap.add_argument("--seed", default="1")
    return ap.parse_args()


if __name__ == "__main__":
    args = parse()
    sys.exit(main(["tune", "--budget", args.budget, "--evals-per-dim", args.evals_per_dim,
                   "--starting-presets", "--seed", args.seed, "--out", args.out,
                   "--log", args.log]))
