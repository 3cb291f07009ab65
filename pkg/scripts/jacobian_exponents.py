#!/usr/bin/env python3
"""Median scaling exponents of J, det M1 and dz/domega over random dual angles.

    python3 scripts/jacobian_exponents.py --norm euclidean lp:4 lp:1.5 --angles 32
"""

import argparse
import sys

import numpy as np

from hcdlab.heisenberg import Geometry
from hcdlab.jacobian import exponent_survey


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--norm", nargs="+", default=["euclidean", "lp:4"])
    ap.add_argument("--angles", type=int, default=32)
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    # angles on a flat of the dual ball have J = 0 at every t and no slope;
    # medians are taken over the remaining angles and the rest are counted
    print(f"{'norm':<12}{'J':>8}{'detM1':>8}{'dz/dw':>8}  spread(J)  outliers  degenerate")
    for label in args.norm:
        s = exponent_survey(Geometry(label), args.angles, args.omega, args.r, seed=args.seed)
        med = [np.nanmedian(v) for v in (s.slope_J, s.slope_M1, s.slope_dzdw)]
        q1, q3 = np.nanpercentile(s.slope_J, [25, 75])
        flat = int(np.count_nonzero(np.isnan(s.slope_J)))
        print(f"{label:<12}{med[0]:8.3f}{med[1]:8.3f}{med[2]:8.3f}"
              f"  {q3 - q1:9.3g}  {len(s.outliers) - flat:8d}  {flat:10d}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
