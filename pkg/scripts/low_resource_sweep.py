#!/usr/bin/env python3
"""Train-fraction sweep: primed vs baseline argument models.

Trains both systems at several training-set fractions over several seeds,
then prints the mean argument F1 per (system, fraction) and the primed
minus baseline gap per fraction from the summary CSV.
"""

import argparse
import csv
import sys
from collections import defaultdict

from primeie.experiments import ExperimentConfig, run_experiment


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", required=True, help="output directory for the sweep")
    p.add_argument("--fractions", default="0.2,0.4,1.0",
                   help="comma-separated train fractions")
    p.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seeds")
    p.add_argument("--train-n", type=int, default=800)
    p.add_argument("--jobs", type=int, default=1)
    return p.parse_args()


def mean_f1_by_cell(csv_path, level="argument", pair="a-a"):
    cells = defaultdict(list)
    with open(csv_path, encoding="utf-8") as f:
        for row in csv.DictReader(f):
            if row["level"] == level and row["language_pair"] == pair:
                cells[(row["system"], float(row["fraction"]))].append(float(row["f1"]))
    return {k: sum(v) / len(v) for k, v in cells.items()}


def main():
    args = parse_args()
    cfg = ExperimentConfig(
        out_dir=args.out,
        fractions=tuple(float(x) for x in args.fractions.split(",")),
        seeds=tuple(int(x) for x in args.seeds.split(",")),
        train_n=args.train_n,
        jobs=args.jobs,
    )
    csv_path = run_experiment(cfg, echo=lambda msg: print(msg, file=sys.stderr))
    means = mean_f1_by_cell(csv_path)
    systems = sorted({s for s, _ in means})
    print(f"\n{'fraction':>8}  " + "  ".join(f"{s:>10}" for s in systems) + f"  {'gap':>7}")
    for fraction in sorted({f for _, f in means}):
        row = [means[(s, fraction)] for s in systems]
        gap = means[("primed", fraction)] - means[("baseline", fraction)]
        print(f"{fraction:>8g}  " + "  ".join(f"{v:>10.4f}" for v in row) + f"  {gap:>+7.4f}")
    print(f"\nsummary: {csv_path}")


if __name__ == "__main__":
    main()
