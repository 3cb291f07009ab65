"""Area-to-chord ratio under a concave profile.

For a concave f on [α₀, β₀] vanishing at both ends, a level s cuts the graph
at α(s) < β(s).  With d(s) = β − α and a(s) = ∫_α^β (f − s), the ratio
a/d² decreases strictly in s when f is C¹.  A tent profile keeps the ratio
constant, which is why the C¹ hypothesis is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from ..errors import NotConcave, UsageError

TABLE_COLUMNS = ("s", "alpha", "beta", "d", "a", "ratio")


@dataclass(frozen=True)
class LemmaCheck:
    strict: bool  # ratio strictly monotone in the expected direction
    monotone: bool  # non-strictly monotone in that direction
    table: np.ndarray  # rows of TABLE_COLUMNS
    orientation: str

    def __iter__(self):
        yield self.strict
        yield self.table


def _check_concave(f, lo: float, hi: float, n: int = 2001, tol: float = 1e-9) -> np.ndarray:
    x = np.linspace(lo, hi, n)
    y = np.array([f(v) for v in x], float)
    second = y[:-2] - 2.0 * y[1:-1] + y[2:]
    scale = max(1.0, float(np.max(np.abs(y))))
    if np.any(second > tol * scale):
        k = int(np.argmax(second))
        raise NotConcave(f"profile is not concave near x = {x[k + 1]:.6g}")
    return x, y


def area_chord_check(
    f,
    interval: tuple[float, float],
    s_grid=None,
    n: int = 64,
    orientation: str = "level",
    tol: float = 1e-12,
) -> LemmaCheck:
    """Tabulate a(s)/d(s)² and test its monotonicity.

    ``orientation="level"`` reads the ratio against the level s and expects
    it to decrease; ``"cap"`` reads it against the cap height max f − s and
    expects it to increase.  Both describe the same fact.
    """
    if orientation not in ("level", "cap"):
        raise UsageError(f"unknown orientation {orientation!r}")
    lo, hi = (float(v) for v in interval)
    if not hi > lo:
        raise UsageError("interval must have positive length")
    x, y = _check_concave(f, lo, hi)
    k = int(np.argmax(y))
    a0, b0 = x[max(k - 1, 0)], x[min(k + 1, len(x) - 1)]
    opt = minimize_scalar(lambda v: -f(v), bounds=(a0, b0), method="bounded",
                          options={"xatol": 1e-13})
    xs = float(opt.x) if -opt.fun >= y[k] else float(x[k])
    fmax = float(f(xs))
    if not fmax > 0:
        raise UsageError("profile must be positive inside the interval")
    if s_grid is None:
        s_grid = np.linspace(0.0, fmax, n + 2)[1:-1]
    rows = []
    for s in np.asarray(s_grid, float):
        if not 0 <= s < fmax:
            raise UsageError(f"level {s} is outside [0, max f)")
        al = lo if s == 0 else brentq(lambda v: f(v) - s, lo, xs, xtol=1e-14, rtol=1e-15)
        be = hi if s == 0 else brentq(lambda v: f(v) - s, xs, hi, xtol=1e-14, rtol=1e-15)
        area, _ = quad(lambda v: f(v) - s, al, be, points=[xs], epsabs=1e-14, epsrel=1e-13,
                       limit=200)
        d = be - al
        rows.append((s, al, be, d, area, area / (d * d)))
    table = np.array(rows, float)
    if orientation == "cap":
        table = table[::-1].copy()  # cap height grows as s falls
        diffs = np.diff(table[:, 5])
        strict, mono = bool(np.all(diffs > tol)), bool(np.all(diffs > -tol))
    else:
        diffs = np.diff(table[:, 5])
        strict, mono = bool(np.all(diffs < -tol)), bool(np.all(diffs < tol))
    return LemmaCheck(strict, mono, table, orientation)


# reference profiles


def parabola(x):
    return 1.0 - x * x


def cosine(x):
    return float(np.cos(0.5 * np.pi * x))


def tent(x):
    return 1.0 - abs(x)


PROFILES = {"parabola": parabola, "cosine": cosine, "tent": tent}


def parabola_ratio(s):
    """Closed form √(1 − s)/3 for the parabola."""
    return np.sqrt(1.0 - np.asarray(s, float)) / 3.0
