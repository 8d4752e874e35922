#!/usr/bin/env python3
"""Run the desk-scale experiment end to end and print the headline tables."""

import argparse
import csv
from pathlib import Path

from rootdiag.config import desk_config
from rootdiag.pipeline import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out_desk"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    config = desk_config(global_seed=args.seed, out_dir=str(args.out))
    manifest = run_pipeline(config, workers=args.workers)
    for stage, seconds in manifest.stage_seconds.items():
        tag = "cached" if stage in manifest.skipped else f"{seconds:7.1f}s"
        print(f"  {stage:<10} {tag}")

    for kind in ("random", "center"):
        print(f"\nbest model by R^2 per horizon ({kind} split):")
        with open(args.out / f"best_by_T_{kind}.csv") as fh:
            for row in csv.DictReader(fh):
                print(
                    f"  T={row['T']:>3}  {row['best_family']:<14}"
                    f" R2={float(row['r2']):6.3f}"
                    f"  fit={float(row['fit_s']):.2e}s"
                    f"  test/sample={float(row['test_per_sample_s']):.2e}s"
                )

    print("\ndiagnostic cost versus quality:")
    with open(args.out / "cost_table.csv") as fh:
        for row in csv.DictReader(fh):
            if row["T"] in ("1", "3", "11", "35"):
                print(
                    f"  T={row['T']:>3}  k_req={row['k_req']:>3}"
                    f"  speedup={float(row['speedup']):5.1f}x"
                    f"  R2(center)={float(row['r2_center']):.3f}"
                    f"  R2(random)={float(row['r2_random']):.3f}"
                )


if __name__ == "__main__":
    main()
