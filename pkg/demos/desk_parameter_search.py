"""The search that froze the shipped desk-scale constant schedule.

The margin certifier needs a schedule (delta, C, N, epsilon) where all four
pair-function inequalities hold with positive margin over the unit-ball pair
region. The separated regime is the fussy one: its tug margin behaves like
eps^2 * (C*delta*(1-delta)/(n+2) - O(1)) * t^(delta-2), so C*delta has to
clear a hard floor before anything certifies. This script sweeps a small
(delta, C) grid at modest sample counts, prints the worst margin and the
binding inequality for each cell, and then re-checks the frozen schedule
plus a deliberately weak C as a negative control.

DESK_SCHEDULE in dpplab.comparison is the n=2 cell this search selected,
validated at 1e4 samples by the acceptance suite.
"""

import argparse

from dpplab import ComparisonParams, DESK_SCHEDULE, certify_region


def sweep_cell(delta, C, samples, seed):
    p = ComparisonParams(n=2, delta=delta, C=C, N=40, epsilon=0.05, theta=0.1)
    reports = certify_region(p, n_samples=samples, seed=seed)
    worst = min(reports, key=lambda r: r.min_margin)
    return worst.min_margin, worst.inequality


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200,
                    help="pairs per cell (the freeze run used 1e4)")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--wide", action="store_true",
                    help="sweep the full grid instead of the 2x2 corner")
    args = ap.parse_args()

    deltas = (0.05, 0.1, 0.15, 0.2, 0.3) if args.wide else (0.1, 0.2)
    Cs = (10.0, 50.0, 100.0, 250.0, 1000.0) if args.wide else (10.0, 250.0)

    print(f"worst margin over inequalities I, II, III, T "
          f"({args.samples} pairs per cell)\n")
    header = "delta\\C " + "".join(f"{c:>14g}" for c in Cs)
    print(header)
    for d in deltas:
        cells = []
        for c in Cs:
            margin, binding = sweep_cell(d, c, args.samples, args.seed)
            mark = "+" if margin > 0 else "-"
            cells.append(f"{mark}{margin:9.2e}({binding})")
        print(f"{d:7.2f} " + "".join(f"{s:>14s}" for s in cells))

    print("\npositive cells need C*delta large; the frozen schedule is")
    print(f"  {DESK_SCHEDULE}")
    p = ComparisonParams(**DESK_SCHEDULE)
    reports = certify_region(p, n_samples=args.samples, seed=args.seed)
    for rep in reports:
        print(f"  inequality {rep.inequality}: min margin "
              f"{rep.min_margin:.4g} over {len(rep.samples)} pairs")

    weak = ComparisonParams(n=2, delta=0.2, C=1.5, N=40, epsilon=0.05)
    rep = certify_region(weak, inequalities=("I",),
                         n_samples=123, seed=5)[0]
    flipped = sum(1 for s in rep.samples if s["margin"] < 0)
    print(f"\nnegative control C=1.5: min margin {rep.min_margin:.4g}, "
          f"{flipped} separated-regime pairs flip sign")


if __name__ == "__main__":
    main()
