#!/usr/bin/env python3
"""Emit the CSV inputs for the three standard figures into an output directory.

Figure 1: threshold versus relocation hazard at two volatilities.
Figure 2: linearized buy-minus-rent differences for two markets.
Figure 3: threshold heat map over the hazard x volatility grid.
"""

import argparse
import sys
from pathlib import Path

from rentbuy.cli import run_command


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", str(args.seed)]

    jobs = [
        (
            "fig1_sweep_lambda.csv",
            ["sweep", "--axis", "lambda", "--grid", "0.05:0.30:26",
             "--series", "sigma_x=0.15", "--series", "sigma_x=0.25"],
        ),
        (
            "fig2_compare_markets.csv",
            ["compare", "--left", "atlanta", "--right", "columbus", "--x-grid", "5:25:81"],
        ),
        (
            "fig3_threshold_map.csv",
            ["map", "--lambda", "0.05:0.30:21", "--sigma", "0.10:0.35:21"],
        ),
    ]
    for name, argv in jobs:
        dest = outdir / name
        code = run_command(argv + seed + ["--out", str(dest)])
        if code != 0:
            print(f"error: {argv[0]} exited with {code}", file=sys.stderr)
            return code
        print(f"wrote {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
