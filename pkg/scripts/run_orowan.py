#!/usr/bin/env python3
"""Small-slope speed law sweep.

Solves the s = 1/2 standing layer, then measures effective speeds at
slope = delta * p0, drive = delta^(2s) * L0 for a decreasing list of delta,
comparing ratio = speed / delta^(1+2s) against the limit c0 |p0| L0
(= 2 pi for the standard potential with p0 = L0 = 1).

Usage: python scripts/run_orowan.py [--deltas 0.2 0.1 0.05] [--out orowan.csv]
"""

import argparse
import sys
import time

from fracpn.hull import OROWAN_COLUMNS, orowan_check
from fracpn.layer import solve_layer
from fracpn.potential import PeriodicPotential
from fracpn.runio import write_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--p0", type=float, default=1.0)
    ap.add_argument("--L0", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--horizon", type=float, default=200.0)
    ap.add_argument("--out", default="orowan.csv")
    args = ap.parse_args()

    t0 = time.time()
    lay = solve_layer(0.5, PeriodicPotential.standard(), R_dom=20.0, n=2048)
    print(f"layer: c0 = {lay.c0:.6f}  ({time.time()-t0:.0f}s)")

    rep = orowan_check(args.deltas, args.p0, args.L0, lay,
                       n=args.n, horizon=args.horizon)
    print(f"target c0 |p0| L0 = {rep.target:.6f}")
    print(f"{'delta':>8} {'speed':>12} {'ratio':>10} {'abs_err':>10}")
    for r in rep.rows:
        print(f"{r['delta']:>8} {r['lambda']:>12.6g} {r['ratio']:>10.4f} "
              f"{r['abs_err']:>10.4f}")
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)

    write_csv(args.out, OROWAN_COLUMNS, rep.rows,
              {"quantity": "small-slope-speed-law", "target": rep.target})
    print(f"wrote {args.out}  ({time.time()-t0:.0f}s total)")
    return 0 if not rep.warnings else 1


if __name__ == "__main__":
    sys.exit(main())
