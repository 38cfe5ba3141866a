#!/usr/bin/env python3
"""Writes a synthetic ICU-style cohort in the wide CSV layout read by `faft fit`.

Columns: id, sex (M/F), age, sofa_1..sofa_5 (daily organ-failure scores over
the first five days, a few cells left as NA), day (death or censoring day,
counted from admission) and death (1 = died). Survival beyond day 5 follows
log(day - 5) = 3 + 0.3 sex - 0.02 (age - 60) - 0.08 mean(sofa) + Gumbel noise,
administratively censored at day 90 and by uniform loss to follow-up.
"""

import argparse
import csv

import numpy as np


def make_rows(n, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        male = rng.random() < 0.55
        age = int(np.clip(rng.normal(62.0, 15.0), 18, 95))
        start = rng.uniform(2.0, 12.0)
        slope = rng.normal(0.0, 1.0)
        sofa = [int(np.clip(round(start + slope * k + rng.normal(0.0, 1.0)), 0, 24)) for k in range(5)]
        mean_sofa = float(np.mean(sofa))
        noise = -np.log(rng.exponential())  # standard Gumbel (maximum)
        log_t = 3.0 + 0.3 * (1 if male else -1) - 0.02 * (age - 60) - 0.08 * mean_sofa + 0.5 * noise
        t = 5.0 + np.exp(log_t)
        c = min(90.0, 5.0 + rng.uniform(1.0, 120.0))
        death = int(t <= c)
        day = int(np.ceil(min(t, c)))
        day = max(day, 6)
        cells = [str(v) for v in sofa]
        if rng.random() < 0.05:
            cells[int(rng.integers(0, 5))] = "NA"
        rows.append([f"P{i + 1:04d}", "M" if male else "F", str(age), *cells, str(day), str(death)])
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=413)
    parser.add_argument("--seed", type=int, default=2016)
    parser.add_argument("--out", default="sofa_synthetic.csv")
    args = parser.parse_args()
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["id", "sex", "age", "sofa_1", "sofa_2", "sofa_3", "sofa_4", "sofa_5", "day", "death"])
        writer.writerows(make_rows(args.n, args.seed))


if __name__ == "__main__":
    main()
