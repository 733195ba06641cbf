#!/usr/bin/env python3
"""Run the branching-rule comparison (approx vs GCT selection quality) across
a density sweep and write one CSV per density.

Example:
    python3 scripts/branch_study.py --n 50 --samples 100 --out results/
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from spectralqp.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--densities", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="branch_study_out")
    args = ap.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    for rho in args.densities:
        path = os.path.join(args.out, f"branch_study_n{args.n}_d{rho:g}.csv")
        code = cli_main(
            [
                "branch-study",
                "--n", str(args.n),
                "--density", str(rho),
                "--samples", str(args.samples),
                "--seed", str(args.seed),
                "--out", path,
            ]
        )
        if code != 0:
            return code
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(run())
