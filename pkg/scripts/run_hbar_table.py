#!/usr/bin/env python3
"""Effective-speed tables over slope or drive.

Two table kinds:
    slope: speeds over a slope grid at drive 0 (the slope-response law;
           all rows pin to zero for the standard potential).
    drive: speeds over a drive grid at slope 0 (the drive-response law,
           odd in the drive, with a pinning plateau around 0).

Usage:
    python scripts/run_hbar_table.py --kind drive --s 0.3 --out d03.csv
    python scripts/run_hbar_table.py --kind slope --s 0.75 --workers 4
"""

import argparse
import sys
import time
from fractions import Fraction

import numpy as np

from fracpn.cell import TABLE_COLUMNS, CellProblemSpec, as_rational, hbar_table
from fracpn.potential import PeriodicPotential
from fracpn.runio import write_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=("slope", "drive"), required=True)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--horizon", type=float, default=150.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if args.kind == "slope":
        slopes = [Fraction(k, 2) for k in range(-3, 6)]   # -3/2 .. 5/2
        drives = [0.0]
    else:
        slopes = [Fraction(0)]
        drives = [round(f, 10) for f in np.arange(-2.0, 2.0 + 1e-9, 0.2)]

    base = CellProblemSpec(
        s=args.s, slope=as_rational(slopes[0]), drive=0.0,
        potential=PeriodicPotential.standard(),
        n=args.n, horizon=args.horizon,
    )
    t0 = time.time()
    rows = hbar_table(base, slopes=slopes, drives=drives, workers=args.workers)
    print(f"{len(rows)} rows in {time.time()-t0:.0f}s")
    for r in rows:
        p = f"{r['slope_num']}/{r['slope_den']}"
        print(f"  p={p:>6} F={r['drive']:+.2f}  speed={r['speed']:+.6f} "
              f"unc={r['uncertainty']:.1e} conv={r['converged']}")

    out = args.out or f"hbar-{args.kind}-s{args.s}.csv"
    write_csv(out, TABLE_COLUMNS, rows,
              {"quantity": "effective-speed-table", "s": args.s,
               "kind": args.kind})
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
