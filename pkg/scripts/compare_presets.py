"""Replicate several presets on a few functions, then write ECDF and aRT tables."""
import argparse
from pathlib import Path

from unified_aos.cli import main


def parse():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--presets", nargs="+",
                    default=["U-AOS-FW", "RecPM-AOS", "F-AUC-MAB", "Compass", "PM-AdapSS-NN"])
    ap.add_argument("--functions", nargs="+", default=["1", "2", "8", "15"])
    ap.add_argument("--dim", default="5")
    ap.add_argument("--runs", default="5")
    ap.add_argument("--evals-per-dim", type=int, default=2000)
    ap.add_argument("--parallel", default="1")
    ap.add_argument("--out", default="preset_comparison")
    return ap.parse_args()


if __name__ == "__main__":
    args = parse()
    budget = str(args.evals_per_dim * int(args.dim))
    for name in args.presets:
        out = Path(args.out) / name
        main(["replicate", "--preset", name, "--tuned", "--functions", *args.functions,
              "--dim", args.dim, "--runs", args.runs, "--budget", budget,
              "--parallel", args.parallel, "--out", str(out)])
        summaries = str(out / "summaries.jsonl")
        main(["ecdf", summaries, "--out", str(out / "ecdf.csv")])
        main(["art", summaries, "--target", "1", "--target", "1e-3", "--target", "1e-8",
              "--out", str(out / "art.csv")])
        final = (out / "ecdf.csv").read_text().strip().splitlines()[-1]
        print(f"{name}: final ECDF point (budget, fraction) = {final}")
