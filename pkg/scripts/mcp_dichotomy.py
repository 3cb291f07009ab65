#!/usr/bin/env python3
"""MCP on the Euclidean norm (holds for N = 5) against the lens witness (fails).

    python3 scripts/mcp_dichotomy.py --targets 5 --samples 50000
"""

import argparse
import sys

from hcdlab.cd_harness import MCPConfig, WitnessRegion, ball_target, mcp_report, mcp_singular_witness
from hcdlab.heisenberg import IDENTITY, Geometry


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--targets", type=int, default=5)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--lens", default="lens:1,2")
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=0xC0FFEE)
    args = ap.parse_args(argv)

    e = Geometry("euclidean")
    cfg = MCPConfig(n_samples=args.samples)
    print("euclidean ball targets")
    for N in (5.0, 3.0):
        for t in (0.125, 0.25, 0.5):
            hits = sum(
                mcp_report(e, IDENTITY, ball_target(e, s), t, 0.0, N, s, cfg).violated
                for s in range(args.targets)
            )
            print(f"  N={N:g} t={t:<6g} violated on {hits}/{args.targets}")

    g = Geometry(args.lens)
    w = mcp_singular_witness(g, args.seed)
    print(f"{args.lens} witness: t0={w.t0:.4f}  vol G(A;1)={w.A_volume.value:.3e}  "
          f"confinement |y|<={w.max_abs_y:.1e} |z|<={w.max_abs_z:.1e}")
    for frac in (0.25, 0.5, 1.0):
        rec = mcp_report(g, IDENTITY, WitnessRegion(g, w), frac * w.t0, 0.0, 5.0, args.seed, cfg)
        ladder = [d["value"] for d in rec.estimates if d["name"].startswith("midpoint_set")]
        print(f"  t={frac:g}*t0  violated={rec.violated}  rhs={rec.rhs:.3e}  lhs ladder="
              + ", ".join(f"{v:.2e}" for v in ladder))
    return 0


if __name__ == "__main__":
    sys.exit(main())
