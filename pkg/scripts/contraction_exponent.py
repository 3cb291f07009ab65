#!/usr/bin/env python3
"""Volume exponent of geodesic homotheties toward the identity.

Every C^1 norm gives 5. A lens norm is included for comparison: a ball
target away from the flat directions contracts at nearly the same rate.
"""

import argparse
import sys

from hcdlab.cd_harness import default_target, homothety_exponent
from hcdlab.heisenberg import IDENTITY, Geometry


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--norm", nargs="+", default=["euclidean", "lp:4", "lp:1.5", "lens:1,2"])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    for label in args.norm:
        g = Geometry(label)
        fit = homothety_exponent(g, IDENTITY, default_target(g), args.seed, n=args.samples)
        print(f"{label:<10} slope {fit.slope:.3f}  r2 {fit.r2:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
