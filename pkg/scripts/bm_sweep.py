#!/usr/bin/env python3
"""Brunn-Minkowski sweep over (K, N) for one norm, plus the A = B control.

The midpoint cloud is sampled once per norm and reused across (K, N).

    python3 scripts/bm_sweep.py --norm lp:4 --N 3 4 10 --K 0 -0.5
"""

import argparse
import sys
import time

from hcdlab.cd_harness import BMConfig, bm_report, degenerate_config
from hcdlab.cli import dumps


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--norm", default="lp:4")
    ap.add_argument("--K", type=float, nargs="+", default=[0.0])
    ap.add_argument("--N", type=float, nargs="+", default=[3.0, 4.0, 10.0])
    ap.add_argument("--rho", type=float, default=2.0**-6)
    ap.add_argument("--samples", type=int, default=BMConfig.n_samples)
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=0xC0FFEE)
    args = ap.parse_args(argv)

    cfg = BMConfig(n_samples=args.samples)
    out = []
    for K in args.K:
        for N in args.N:
            t0 = time.perf_counter()
            rec = bm_report(args.norm, K, N, args.rho, args.seed, cfg)
            d = rec.details
            print(f"K={K:+g} N={N:g}  violated={rec.violated}  M/B={d['ratio_M_B']:.3f}  "
                  f"lhs={rec.lhs:.4g} rhs={rec.rhs:.4g}  ({time.perf_counter() - t0:.1f} s)",
                  file=sys.stderr)
            out.append(rec.as_dict())
    ctrl = bm_report(args.norm, 0.0, args.N[0], args.rho, args.seed, degenerate_config(cfg))
    print(f"control  violated={ctrl.violated}  M/B={ctrl.details['ratio_M_B']:.1f}", file=sys.stderr)
    out.append(ctrl.as_dict())
    sys.stdout.write(dumps(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
