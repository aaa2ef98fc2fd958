"""Tabulate mu(z, Lambda(z, delta)) / delta for the built-in models and report each constant c.

    python scripts/relative_inverse_table.py --csv ratios.csv
"""
import argparse
import csv

import numpy as np

from boxheat import geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-points", type=int, default=50)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    zs = rng.uniform(-2, 2, args.n_points) + 1j * rng.uniform(-2, 2, args.n_points)
    deltas = np.logspace(-3, 3, 61)
    rows = []
    print(f"{'model':<16} {'min ratio':>10} {'max ratio':>10} {'c':>8}")
    for name, p in sorted(geometry.standard_models().items()):
        r = geometry.relative_inverse_ratios(p, zs, deltas)
        c = geometry.relative_inverse_constant(p, zs, deltas)
        print(f"{name:<16} {r.min():>10.4f} {r.max():>10.4f} {c:>8.4f}")
        for z, row in zip(zs, r):
            rows += [(name, z.real, z.imag, d, v) for d, v in zip(deltas, row)]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "x", "y", "delta", "ratio"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
