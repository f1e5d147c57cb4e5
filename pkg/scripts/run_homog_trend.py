#!/usr/bin/env python3
"""Oscillatory-to-effective convergence trend e(eps) for both scaling branches.

Weak branch ("super", s >= 1/2): operator weight eps^(2s-1), order-one
potential.  Desk-scale setup: s = 0.75, slope 1/2, bump 0.25 sin(2 pi x),
horizon 0.15.  The slope-response law is built from a drive-0 table.

Strong branch ("sub", s <= 1/2): order-one operator, potential well depth
eps^(-2s).  Desk-scale setup: s = 0.3, slope 0, bump 0.35 sin(2 pi x),
horizon 0.3.  The drive-response law is built from a slope-0 table.

Usage: python scripts/run_homog_trend.py [--branch weak|strong|both] [--workers N]
"""

import argparse
import sys
import time
from fractions import Fraction

import numpy as np

from fracpn.cell import CellProblemSpec, hbar_table
from fracpn.homog import (
    DriveLaw,
    EpsProblemSpec,
    InitialProfile,
    SlopeLaw,
    convergence_report,
)
from fracpn.potential import PeriodicPotential

W = PeriodicPotential.standard()


def weak_trend(workers: int) -> dict:
    base = CellProblemSpec(s=0.75, slope=Fraction(0), drive=0.0, potential=W,
                           n=256, horizon=150.0)
    rows = hbar_table(base, slopes=[Fraction(k, 2) for k in range(-3, 6)],
                      drives=[0.0], workers=workers)
    law = SlopeLaw.from_rows(rows, drive=0.0)
    specs = [
        EpsProblemSpec(branch="super", eps=e, s=0.75, slope=0.5,
                       profile=InitialProfile(terms=((0.25, 1, "sin"),)),
                       potential=W, n=256, horizon=0.15)
        for e in (0.5, 0.25, 0.125)
    ]
    return convergence_report(specs, law)


def strong_trend(workers: int) -> dict:
    base = CellProblemSpec(s=0.3, slope=Fraction(0), drive=0.0, potential=W,
                           n=256, horizon=150.0)
    drives = [round(f, 10) for f in np.arange(-2.0, 2.0 + 1e-9, 0.2)]
    rows = hbar_table(base, slopes=[Fraction(0)], drives=drives, workers=workers)
    law = DriveLaw.from_rows(rows, slope_num=0, slope_den=1)
    specs = [
        EpsProblemSpec(branch="sub", eps=e, s=0.3, slope=0.0,
                       profile=InitialProfile(terms=((0.35, 1, "sin"),)),
                       potential=W, n=256, horizon=0.3)
        for e in (0.5, 0.25)
    ]
    return convergence_report(specs, law)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--branch", choices=("weak", "strong", "both"), default="both")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    ok = True
    for name, fn in (("weak", weak_trend), ("strong", strong_trend)):
        if args.branch not in (name, "both"):
            continue
        t0 = time.time()
        rep = fn(args.workers)
        ok &= rep["monotone_decreasing"]
        print(f"{name} branch ({time.time()-t0:.0f}s): "
              f"eps = {rep['eps_list']}  e(eps) = "
              + ", ".join(f"{e:.4f}" for e in rep["errors"])
              + f"  monotone = {rep['monotone_decreasing']}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
