"""Acceptance criteria 1–10, one PASS/FAIL line each.

Runs under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.  A criterion passes only when its
numerical check holds and it finishes inside its runtime budget.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hcdlab.cd_harness import (  # noqa: E402
    MCPConfig,
    PROFILES,
    WitnessRegion,
    area_chord_check,
    ball_target,
    bm_report,
    degenerate_config,
    mcp_report,
    mcp_singular_witness,
)
from hcdlab.cd_harness import bm as _bm  # noqa: E402
from hcdlab.convex_trig import (  # noqa: E402
    NormSpec,
    correspond_many,
    polar,
    pythagorean_residual,
    trig_xy,
    unit_ball,
)
from hcdlab.heisenberg import IDENTITY, Covector, Geometry, exp_xyz, swept_area_residual  # noqa: E402
from hcdlab.jacobian import exponent_survey, midpoint_jacobian  # noqa: E402

from oracles import parabola_area, parabola_chord, rk4_geodesic  # noqa: E402

SEED = 0xC0FFEE


def judge(emit, k: int, limit: float, check):
    start = time.perf_counter()
    ok, detail = check()
    dt = time.perf_counter() - start
    passed = bool(ok) and dt < limit
    emit(f"{'PASS' if passed else 'FAIL'} criterion {k:>2}: {detail} [{dt:.2f} s of {limit:g} s]")
    assert ok, detail
    assert dt < limit, f"took {dt:.1f} s, budget {limit:g} s"


def covectors(g: Geometry, n: int, seed: int):
    rng = np.random.default_rng(seed)
    P = 2.0 * g.S_dual
    return [
        Covector(float(rng.uniform(0, P)), float(rng.uniform(-0.95, 0.95) * P), float(rng.uniform(0.2, 2.0)))
        for _ in range(n)
    ]


def test_c01_euclidean_trig(verdict):
    def check():
        body = unit_ball(NormSpec.parse("euclidean", resolution=2**14))
        th = 2 * math.pi * np.arange(360) / 360
        c, s = trig_xy(body, th)
        err = max(np.max(np.abs(c - np.cos(th))), np.max(np.abs(s - np.sin(th))))
        return err < 1e-7, f"Euclidean cos/sin max error {err:.2e} (< 1e-7)"

    judge(verdict, 1, 1.0, check)


def test_c02_pythagorean(verdict):
    def check():
        worst = {}
        bodies = {"lp:3": unit_ball("lp:3"), "lp:4": unit_ball("lp:4"),
                  "lens-polar": polar(unit_ball("lens:1,2"))}
        for name, body in bodies.items():
            th = body.period * (np.arange(360) + 0.5) / 360
            psi, corner, _, _ = correspond_many(body, th)
            assert not corner.any()
            worst[name] = float(np.max(np.abs(pythagorean_residual(body, th, psi))))
        w = max(worst.values())
        parts = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
        return w < 1e-6, f"Pythagorean residual {parts} (< 1e-6)"

    judge(verdict, 2, 5.0, check)


def test_c03_rk4_oracle(verdict):
    def check():
        worst = {}
        for label in ("euclidean", "lp:4"):
            g = Geometry(label)
            err = 0.0
            for c in covectors(g, 100, 3):
                ts, X, Y, Z = rk4_geodesic(label, *c.as_tuple())
                x, y, z = exp_xyz(g, c.phi, c.omega, c.r, ts)
                err = max(err, np.max(np.abs(x - X)), np.max(np.abs(y - Y)), np.max(np.abs(z - Z)))
            worst[label] = err
        parts = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
        return max(worst.values()) < 1e-7, f"exp vs RK4 sup error {parts} (< 1e-7)"

    judge(verdict, 3, 10.0, check)


def test_c04_swept_area(verdict):
    def check():
        worst = {}
        for label in ("euclidean", "lp:4"):
            g = Geometry(label)
            worst[label] = max(swept_area_residual(g, c, 1.0, 10_000) for c in covectors(g, 50, 4))
        parts = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
        return max(worst.values()) < 1e-5, f"|z - swept area| {parts} (< 1e-5)"

    judge(verdict, 4, 10.0, check)


def test_c05_jacobian_slopes(verdict):
    def check():
        ok = True
        parts = []
        for label in ("euclidean", "lp:4"):
            s = exponent_survey(Geometry(label), n_phi=32, seed=SEED)
            j, m1, zw = s.median("J"), s.median("M1"), s.median("dzdw")
            ok &= abs(j - 5) <= 0.1 and abs(m1 - 2) <= 0.1 and abs(zw - 3) <= 0.15
            parts.append(f"{label} J {j:.3f} detM1 {m1:.3f} dz/dw {zw:.3f}")
        return ok, "median slopes " + "; ".join(parts)

    judge(verdict, 5, 60.0, check)


def test_c06_midpoint_jacobian(verdict):
    def check():
        ok = True
        parts = []
        for label in ("euclidean", "lp:4"):
            g = Geometry(label)
            rng = np.random.default_rng(6)
            P = 2.0 * g.S_dual
            dev = peak = 0.0
            for _ in range(16):
                c = Covector(float(rng.uniform(0, P)), float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 2)))
                dev = max(dev, abs(32 * midpoint_jacobian(g, c, 2.0**-8) - 1))
                peak = max(peak, *(midpoint_jacobian(g, c, 2.0**-k) for k in range(6, 11)))
            ok &= dev < 0.1 and peak <= 1 / 16
            parts.append(f"{label} rel. dev. {dev:.2e}, max {peak:.4f}")
        return ok, "midpoint Jacobian vs 1/32: " + "; ".join(parts)

    judge(verdict, 6, 30.0, check)


@pytest.mark.slow
def test_c07_bm(verdict):
    def check():
        _bm._CLOUDS.clear()
        g = Geometry("lp:4")
        recs = {N: bm_report(g, 0.0, N, 2.0**-6, SEED) for N in (3, 4, 10)}
        ctrl = bm_report(g, 0.0, 4, 2.0**-6, SEED, degenerate_config())
        ok = all(r.violated and r.details["stabilized"] for r in recs.values()) and not ctrl.violated
        ratio = recs[3].details["ratio_M_B"]
        flags = " ".join(f"N={N}:{r.violated}" for N, r in recs.items())
        return ok, (f"LP(4) BM violated {flags}, vol M/vol B {ratio:.3f}; "
                    f"control violated={ctrl.violated} (ratio {ctrl.details['ratio_M_B']:.1f})")

    judge(verdict, 7, 300.0, check)


@pytest.mark.slow
def test_c08_mcp(verdict):
    def check():
        e = Geometry("euclidean")
        cfg = MCPConfig(n_samples=50_000, n_rhs=10_000)
        five = [mcp_report(e, IDENTITY, ball_target(e, s), t, 0.0, 5, s, cfg).violated
                for s in range(5) for t in (0.25, 0.5)]
        three = [mcp_report(e, IDENTITY, ball_target(e, s), 0.25, 0.0, 3, s, cfg).violated
                 for s in range(5)]
        lens = Geometry("lens:1,2")
        w = mcp_singular_witness(lens, SEED)
        rec = mcp_report(lens, IDENTITY, WitnessRegion(lens, w), 0.5 * w.t0, 0.0, 5, SEED)
        ladder = [d["value"] for d in rec.estimates if d["name"].startswith("midpoint_set")]
        ok = (not any(five)) and all(three) and rec.violated and rec.details["vanishing"] and rec.rhs > 0
        return ok, (f"Euclidean N=5 violated {sum(five)}/10, N=3 (t=1/4) violated {sum(three)}/5; "
                    f"Lens witness violated={rec.violated}, LHS ladder "
                    + " > ".join(f"{v:.1e}" for v in ladder) + f", RHS {rec.rhs:.2e}")

    judge(verdict, 8, 300.0, check)


def test_c09_witness(verdict):
    def check():
        w = mcp_singular_witness(Geometry("lens:1,2"), SEED, n_confine=10_000)
        b = w.branching
        conf = max(w.max_abs_y, w.max_abs_z)
        ok = conf < 1e-9 and len(w.probe_times) == 3 and max(w.probe_times) < w.t0
        ok &= b["max_gap_before"] < 1e-9 and b["max_gap_after"] > 1e-3
        return ok, (f"confinement max(|y|,|z|) {conf:.1e} at t0/8, t0/4, t0/2 (t0 = {w.t0:.4f}); "
                    f"branching gap {b['max_gap_before']:.1e} before t = {b['t_split']:.4f}, "
                    f"{b['max_gap_after']:.1e} after")

    judge(verdict, 9, 30.0, check)


def test_c10_lemma(verdict):
    def check():
        par = area_chord_check(PROFILES["parabola"], (-1.0, 1.0))
        cos = area_chord_check(PROFILES["cosine"], (-1.0, 1.0))
        s = par.table[:, 0]
        err = float(np.max(np.abs(par.table[:, 5] - parabola_area(s) / parabola_chord(s) ** 2)))
        ok = par.strict and cos.strict and err < 1e-5
        return ok, f"parabola strict={par.strict} (oracle error {err:.1e}), cosine strict={cos.strict}"

    judge(verdict, 10, 1.0, check)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_c")):
        try:
            fn(print)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
