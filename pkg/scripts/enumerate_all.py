"""Smoke-run every component combination and write a pass/fail report."""
import argparse
import sys
import time

from unified_aos.cli import main


def parse():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--report", default="enumerate_report.csv")
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--generations", type=int, default=5)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse()
    start = time.perf_counter()
    code = main(["enumerate", "--generations", str(args.generations), "--report", args.report,
                 "--parallel", str(args.parallel)])
    print(f"elapsed {time.perf_counter() - start:.1f} s")
    sys.exit(code)
