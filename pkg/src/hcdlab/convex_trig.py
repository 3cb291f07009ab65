"""Generalized trigonometric functions of planar convex bodies.

A convex body Ω with the origin in its interior is parametrized by the
generalized angle θ: P_θ is the boundary point such that the sector of Ω
between the positive x-axis and the ray through P_θ has area θ/2.  Then
cos_Ω(θ), sin_Ω(θ) are the coordinates of P_θ and the period is 2𝕊 where 𝕊
is the area of Ω.

Each supported norm family carries exact evaluators (closed forms or
high-order panel quadrature) so that the trigonometric functions are accurate
to a few ulps and smooth enough to be finite-differenced.  A body also keeps a
sampled boundary polyline and its cumulative sector table for plumbing.

All evaluators are vectorized over numpy arrays of angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta as _beta
from scipy.special import betainc, betaincinv

from .errors import CornerAngle, DegenerateBody, InvalidSpec, NotOnBoundary

TWO_PI = 2.0 * math.pi
CORNER_TURN = 1e-4  # turning angle (rad) above which a polygon vertex is a corner
CORNER_TOL = 1e-12  # angle distance (relative to 𝕊) treated as "at the corner"
BOUNDARY_TOL = 1e-6
DEFAULT_RESOLUTION = 4096

_GL_X, _GL_W = leggauss(16)


@dataclass(frozen=True)
class Regularity:
    strictly_convex: bool
    c1: bool
    c11: bool
    smooth: bool


@dataclass(frozen=True)
class GeneralizedAngle:
    """An angle read modulo the period 2𝕊 of some body."""

    value: float

    def reduced(self, period: float) -> "GeneralizedAngle":
        return GeneralizedAngle(float(reduce_angle(self.value, period)))


def reduce_angle(theta, period):
    """Reduce ``theta`` into ``[0, period)``; idempotent."""
    th = np.mod(np.asarray(theta, dtype=float), period)
    th = np.where(th >= period, th - period, th)
    return th if th.ndim else float(th)


def _polar_angle(x, y):
    a = np.arctan2(y, x)
    a = np.where(a < 0.0, a + TWO_PI, a)
    return np.where(a >= TWO_PI, 0.0, a)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _scalarize(*arrays):
    if all(np.ndim(a) == 0 for a in arrays):
        out = tuple(float(a) for a in arrays)
    else:
        out = arrays
    return out if len(out) > 1 else out[0]


# ---------------------------------------------------------------------------
# norm specifications


@dataclass(frozen=True)
class NormSpec:
    """Declarative description of a norm family.

    Families: ``euclidean``, ``lp`` (param ``p``), ``lens`` (params ``c``,
    ``R`` with R − c = 1) and ``table`` (a counterclockwise point list).
    """

    family: str
    p: float | None = None
    c: float | None = None
    R: float | None = None
    points: tuple[tuple[float, float], ...] | None = None
    resolution: int = DEFAULT_RESOLUTION
    source: str | None = None

    @classmethod
    def parse(cls, text: str, resolution: int = DEFAULT_RESOLUTION) -> "NormSpec":
        """Parse ``euclidean | lp:<p> | lens:<c>,<R> | table:@<csv>``."""
        raw = text.strip()
        head, _, arg = raw.partition(":")
        head = head.lower()
        try:
            if head == "euclidean" and not arg:
                return cls("euclidean", resolution=resolution)
            if head == "lp":
                return cls("lp", p=float(arg), resolution=resolution)
            if head == "lens":
                c, R = (float(v) for v in arg.split(","))
                return cls("lens", c=c, R=R, resolution=resolution)
            if head == "table" and arg.startswith("@"):
                path = Path(arg[1:])
                pts = np.loadtxt(path, delimiter=",", ndmin=2)
                if pts.shape[1] != 2:
                    raise ValueError("table rows must be x,y pairs")
                return cls(
                    "table",
                    points=tuple(map(tuple, pts.tolist())),
                    resolution=resolution,
                    source=str(path),
                )
        except (ValueError, OSError) as exc:
            raise InvalidSpec(f"cannot parse norm spec {text!r}: {exc}") from exc
        raise InvalidSpec(
            f"unknown norm spec {text!r}; grammar: euclidean | lp:<p> | "
            "lens:<c>,<R> | table:@<path>"
        )

    def __str__(self) -> str:
        if self.family == "euclidean":
            return "euclidean"
        if self.family == "lp":
            return f"lp:{self.p:g}"
        if self.family == "lens":
            return f"lens:{self.c:g},{self.R:g}"
        return f"table:@{self.source}" if self.source else "table"

    def validate(self) -> None:
        if self.resolution < 8:
            raise InvalidSpec("resolution must be at least 8")
        if self.family == "lp":
            if self.p is None or not self.p > 1.0 or not math.isfinite(self.p):
                raise InvalidSpec(f"LP requires p > 1, got {self.p}")
        elif self.family == "lens":
            c, R = self.c, self.R
            if c is None or R is None or not c > 0 or not R > c:
                raise InvalidSpec(f"Lens requires 0 < c < R, got c={c}, R={R}")
            if abs((R - c) - 1.0) > 1e-12:
                raise InvalidSpec(f"Lens requires R - c = 1, got {R - c}")
        elif self.family == "table":
            if self.points is None or len(self.points) < 8:
                raise InvalidSpec("table bodies need at least 8 points")
        elif self.family != "euclidean":
            raise InvalidSpec(f"unknown family {self.family!r}")


# ---------------------------------------------------------------------------
# families: exact evaluators


class _Family:
    """Exact evaluators for one body.  Angles are pre-reduced by callers."""

    area: float
    regularity: Regularity
    label: str
    corner_thetas: np.ndarray = np.empty(0)
    kink_thetas: np.ndarray = np.empty(0)
    flat_thetas: tuple[tuple[float, float], ...] = ()

    def gauge(self, x, y):
        raise NotImplementedError

    def sector(self, alpha):
        """θ of the boundary point on the ray at polar angle alpha ∈ [0, 2π)."""
        raise NotImplementedError

    def point(self, theta):
        """Boundary point P_θ for θ ∈ [0, 2𝕊)."""
        raise NotImplementedError

    def dual(self, x, y):
        """Gradient of the gauge (degree-0 homogeneous); a point of ∂Ω°."""
        raise NotImplementedError

    def corner_duals(self, k: int):
        """Endpoints (before, after) of the normal cone at corner ``k``."""
        raise NotImplementedError

    def polar(self) -> "_Family":
        raise NotImplementedError


class _Euclidean(_Family):
    label = "euclidean"

    def __init__(self):
        self.area = math.pi
        self.regularity = Regularity(True, True, True, True)

    def gauge(self, x, y):
        return np.hypot(x, y)

    def sector(self, alpha):
        return np.asarray(alpha, dtype=float)

    def point(self, theta):
        return np.cos(theta), np.sin(theta)

    def dual(self, x, y):
        n = np.hypot(x, y)
        return x / n, y / n

    def polar(self):
        return self


def _rot_quarter(q, X, Y):
    """Rotate (X, Y) by q quarter turns, exactly."""
    x = np.select([q == 0, q == 1, q == 2], [X, -Y, -X], Y)
    y = np.select([q == 0, q == 1, q == 2], [Y, X, -Y], -X)
    return x, y


class _LP(_Family):
    """Unit ball of the ℓ^p norm.  Sector areas are incomplete beta values."""

    def __init__(self, p: float):
        self.p = float(p)
        self.label = f"lp:{self.p:g}"
        self._a = 1.0 / self.p
        self._quad = _beta(self._a, self._a) / self.p  # θ-extent of one quadrant
        self.area = 2.0 * self._quad
        self.regularity = Regularity(
            strictly_convex=True,
            c1=True,
            c11=self.p >= 2.0,
            smooth=float(self.p).is_integer() and int(self.p) % 2 == 0,
        )
        if self.p < 2.0:
            self.kink_thetas = self._quad * np.arange(4.0)

    def gauge(self, x, y):
        ax, ay = np.abs(x), np.abs(y)
        m = np.maximum(ax, ay)
        safe = np.where(m > 0, m, 1.0)
        g = m * ((ax / safe) ** self.p + (ay / safe) ** self.p) ** self._a
        return np.where(m > 0, g, 0.0)

    def sector(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        q = np.clip(np.floor(alpha / (math.pi / 2)), 0, 3)
        loc = alpha - q * (math.pi / 2)
        c, s = np.abs(np.cos(loc)), np.abs(np.sin(loc))
        cp, sp = c**self.p, s**self.p
        tot = cp + sp
        low = s <= c
        w_small = np.where(low, sp, cp) / tot
        frac = betainc(self._a, self._a, w_small)
        loc_theta = np.where(low, frac, 1.0 - frac) * self._quad
        return q * self._quad + loc_theta

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        q = np.clip(np.floor(theta / self._quad), 0, 3)
        u = (theta - q * self._quad) / self._quad
        low = u <= 0.5
        w = betaincinv(self._a, self._a, np.where(low, u, 1.0 - u))
        big = (1.0 - w) ** self._a
        small = w**self._a
        X = np.where(low, big, small)
        Y = np.where(low, small, big)
        return _rot_quarter(q, X, Y)

    def dual(self, x, y):
        g = self.gauge(x, y)
        ux, uy = x / g, y / g
        pm = self.p - 1.0
        return np.sign(ux) * np.abs(ux) ** pm, np.sign(uy) * np.abs(uy) ** pm

    def polar(self):
        q = self.p / (self.p - 1.0)
        return _Euclidean() if abs(q - 2.0) < 1e-15 else _LP(q)


class _Lens(_Family):
    """Intersection of the disks of radius R centred at (0, ±c), R − c = 1.

    The upper boundary arc belongs to the circle centred at (0, −c).  For the
    point (R cos β, −c + R sin β) twice the swept area from the corner is
    R²(β − β₀) + cR(cos β − cos β₀), which is inverted by Newton's method.
    """

    def __init__(self, c: float, R: float):
        self.c, self.R = float(c), float(R)
        self.label = f"lens:{self.c:g},{self.R:g}"
        self.a = math.sqrt(R * R - c * c)
        self.b0 = math.atan2(c, self.a)
        self._half = self._f(math.pi - self.b0)
        self.area = self._half
        self.regularity = Regularity(True, False, False, False)
        self.corner_thetas = np.array([0.0, self.area])
        self.kink_thetas = self.corner_thetas

    def _f(self, b):
        c, R = self.c, self.R
        return R * R * (b - self.b0) + c * R * np.cos(b) - c * self.a

    def gauge(self, x, y):
        c, a = self.c, self.a
        ay = np.abs(y)
        return (c * ay + np.sqrt(c * c * ay * ay + a * a * (x * x + y * y))) / (a * a)

    def sector(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        lower = alpha >= math.pi
        al = np.where(lower, alpha - math.pi, alpha)
        s = np.sin(al)
        rho = -self.c * s + np.sqrt(self.c**2 * s * s + self.a**2)
        b = np.arctan2(rho * s + self.c, rho * np.cos(al))
        th = self._f(b)
        th = np.where(al == 0.0, 0.0, th)
        return th + np.where(lower, self.area, 0.0)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        lower = theta >= self.area
        tl = np.where(lower, theta - self.area, theta)
        c, R = self.c, self.R
        b = self.b0 + tl / self.area * (math.pi - 2.0 * self.b0)
        for _ in range(60):
            step = (self._f(b) - tl) / (R * R - c * R * np.sin(b))
            b = np.clip(b - step, self.b0, math.pi - self.b0)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(b))):
                break
        x = R * np.cos(b)
        y = -c + R * np.sin(b)
        x = np.where(tl == 0.0, self.a, x)
        y = np.where(tl == 0.0, 0.0, y)
        sgn = np.where(lower, -1.0, 1.0)
        return sgn * x, sgn * y

    def dual(self, x, y):
        c, a, R = self.c, self.a, self.R
        S = np.sqrt(c * c * y * y + a * a * (x * x + y * y))
        gx = x / S
        gy = (c * np.sign(y) + R * R * y / S) / (a * a)
        return gx, gy

    def corner_duals(self, k):
        a, c = self.a, self.c
        if k == 0:
            return (1 / a, -c / a**2), (1 / a, c / a**2)
        return (-1 / a, c / a**2), (-1 / a, -c / a**2)

    def polar(self):
        return _LensPolar(self.c, self.R)


class _Radial(_Family):
    """Body given by a piecewise-analytic radial function ρ(α).

    Sector areas come from composite 16-point Gauss–Legendre quadrature of
    ρ² on panels aligned with the breakpoints; the inverse uses Newton with
    dθ/dα = ρ².
    """

    max_panel = 0.02

    def _build(self, breaks: Sequence[float]):
        nodes, owner = [], []
        for i in range(len(breaks) - 1):
            lo, hi = breaks[i], breaks[i + 1]
            m = max(1, int(math.ceil((hi - lo) / self.max_panel)))
            nodes.extend(np.linspace(lo, hi, m + 1)[:-1])
            owner.extend([i] * m)
        nodes.append(breaks[-1])
        self._nodes = np.asarray(nodes)
        self._owner = np.asarray(owner)
        panel = self._gauss(self._nodes[:-1], self._nodes[1:], self._owner)
        self._cum = np.concatenate([[0.0], np.cumsum(panel)])
        self.area = 0.5 * float(self._cum[-1])

    def _rho(self, alpha, piece):
        raise NotImplementedError

    def _gauss(self, lo, hi, piece):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[..., None] + half[..., None] * _GL_X
        r = self._rho(pts, np.asarray(piece)[..., None])
        return half * np.sum(_GL_W * r * r, axis=-1)

    def _panel_of_alpha(self, alpha):
        k = np.searchsorted(self._nodes, alpha, side="right") - 1
        return np.clip(k, 0, len(self._owner) - 1)

    def sector(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        k = self._panel_of_alpha(alpha)
        return self._cum[k] + self._gauss(self._nodes[k], alpha, self._owner[k])

    def radius(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return self._rho(alpha, self._owner[self._panel_of_alpha(alpha)])

    def point(self, theta):
        shape = np.shape(theta)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        k = np.searchsorted(self._cum, theta, side="right") - 1
        k = np.clip(k, 0, len(self._owner) - 1)
        lo, hi = self._nodes[k], self._nodes[k + 1]
        c0, c1 = self._cum[k], self._cum[k + 1]
        piece = self._owner[k]
        al = lo + (theta - c0) / (c1 - c0) * (hi - lo)
        live = np.ones(al.shape, dtype=bool)
        for _ in range(12):
            f = c0[live] + self._gauss(lo[live], al[live], piece[live]) - theta[live]
            r = self._rho(al[live], piece[live])
            step = f / (r * r)
            al[live] = np.clip(al[live] - step, lo[live], hi[live])
            # a residual of a few ulps of θ is the rounding floor: stop there
            conv = (np.abs(step) <= 1e-16 * (1.0 + np.abs(al[live]))) | (
                np.abs(f) <= 4.0 * np.finfo(float).eps * (1.0 + np.abs(theta[live]))
            )
            live[np.nonzero(live)[0][conv]] = False
            if not live.any():
                break
        r = self._rho(al, piece)
        return (r * np.cos(al)).reshape(shape), (r * np.sin(al)).reshape(shape)


class _LensPolar(_Radial):
    """Polar body of the lens: two flat segments x = ±1/a joined by conic arcs.

    Every piece has support-type gauge h(v) = A·v_x + B·v_y + C·|v|, so
    ρ(γ) = 1/(A cos γ + B sin γ + C) and ∇h = (A, B) + C·v/|v|.
    """

    def __init__(self, c: float, R: float):
        self.c, self.R = float(c), float(R)
        self.label = f"lens-polar:{self.c:g},{self.R:g}"
        a = self.a = math.sqrt(R * R - c * c)
        b0 = self.b0 = math.atan2(c, a)
        pi = math.pi
        self._breaks = np.array([0.0, b0, pi - b0, pi + b0, TWO_PI - b0, TWO_PI])
        self._A = np.array([a, 0.0, -a, 0.0, a])
        self._B = np.array([0.0, -c, 0.0, c, 0.0])
        self._Cc = np.array([0.0, R, 0.0, R, 0.0])
        self._build(list(self._breaks))
        self.regularity = Regularity(False, True, False, False)
        tf = c / a**3  # θ-extent of half a flat segment
        S = self.area
        self.flat_thetas = ((-tf, tf), (S - tf, S + tf))
        self.kink_thetas = np.array([tf, S - tf, S + tf, 2 * S - tf])

    def _rho(self, alpha, piece):
        return 1.0 / (
            self._A[piece] * np.cos(alpha) + self._B[piece] * np.sin(alpha) + self._Cc[piece]
        )

    def _region(self, x, y):
        al = _polar_angle(x, y)
        k = np.searchsorted(self._breaks, al, side="right") - 1
        return np.clip(k, 0, 4)

    def gauge(self, x, y):
        k = self._region(x, y)
        return self._A[k] * x + self._B[k] * y + self._Cc[k] * np.hypot(x, y)

    def dual(self, x, y):
        k = self._region(x, y)
        n = np.hypot(x, y)
        C = self._Cc[k]
        return self._A[k] + C * x / n, self._B[k] + C * y / n

    def polar(self):
        return _Lens(self.c, self.R)


class _Polygon(_Family):
    """Convex polygon with the origin inside; sector area is linear on edges."""

    def __init__(self, pts, label: str = "table"):
        V = np.asarray(pts, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise InvalidSpec("polygon needs an (n, 2) array of points")
        keep = np.linalg.norm(V - np.roll(V, -1, axis=0), axis=1) > 1e-14
        V = V[keep]
        E = np.roll(V, -1, axis=0) - V
        N = np.stack([E[:, 1], -E[:, 0]], axis=1)
        d = np.einsum("ij,ij->i", N, V)
        if np.any(d <= 0):
            raise DegenerateBody("origin is not interior to the polygon")
        lens = np.linalg.norm(E, axis=1)
        turn = _cross2(np.roll(E, 1, axis=0), E) / (np.roll(lens, 1) * lens)
        if np.any(turn < -1e-9):
            raise InvalidSpec("table polygon is not convex and counterclockwise")
        ang = np.unwrap(np.arctan2(V[:, 1], V[:, 0]))
        closing = math.atan2(_cross2(V[-1], V[0]), np.dot(V[-1], V[0]))
        if not np.all(np.diff(ang) > 0) or abs(ang[-1] - ang[0] + closing - TWO_PI) > 1e-9:
            raise InvalidSpec("table polygon must wind once counterclockwise")
        self.V, self.E, self.N, self.d = V, E, N, d
        self._ang = ang - ang[0]
        self._ang0 = ang[0]
        crs = _cross2(V, np.roll(V, -1, axis=0))
        self._C = np.concatenate([[0.0], np.cumsum(crs)])
        self.area = 0.5 * float(self._C[-1])
        self.label = label
        self.regularity = Regularity(False, False, False, False)
        self._raw0 = float(self._raw(np.array(0.0)))
        turning = np.arcsin(np.clip(turn, -1, 1))
        self._is_corner = turning > CORNER_TURN
        ct = np.mod(self._C[:-1] - self._raw0, 2 * self.area)
        self._corner_idx = np.nonzero(self._is_corner)[0]
        self.corner_thetas = ct[self._corner_idx]
        self.kink_thetas = self.corner_thetas
        self.flat_thetas = self._flats(ct)

    def _edge(self, alpha):
        rel = np.mod(np.asarray(alpha, float) - self._ang0, TWO_PI)
        k = np.searchsorted(self._ang, rel, side="right") - 1
        return np.clip(k, 0, len(self.V) - 1)

    def _raw(self, alpha):
        k = self._edge(alpha)
        ux, uy = np.cos(alpha), np.sin(alpha)
        lam = self.d[k] / (self.N[k, 0] * ux + self.N[k, 1] * uy)
        px, py = lam * ux, lam * uy
        return self._C[k] + (self.V[k, 0] * py - self.V[k, 1] * px)

    def _flats(self, ct):
        idx = self._corner_idx
        if len(idx) == 0:
            return ()
        out = []
        period = 2 * self.area
        for i, k in enumerate(idx):
            j = idx[(i + 1) % len(idx)]
            t0, t1 = ct[k], ct[j]
            if t1 <= t0:
                t1 += period
            out.append((float(t0), float(t1)))
        return tuple(out)

    def gauge(self, x, y):
        k = self._edge(_polar_angle(x, y))
        return (self.N[k, 0] * x + self.N[k, 1] * y) / self.d[k]

    def sector(self, alpha):
        return np.mod(self._raw(np.asarray(alpha, float)) - self._raw0, 2 * self.area)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        raw = np.mod(theta + self._raw0, 2 * self.area)
        k = np.clip(np.searchsorted(self._C, raw, side="right") - 1, 0, len(self.V) - 1)
        s = (raw - self._C[k]) / (self._C[k + 1] - self._C[k])
        x = self.V[k, 0] + s * self.E[k, 0]
        y = self.V[k, 1] + s * self.E[k, 1]
        k0 = self._edge(0.0)
        x = np.where(theta == 0.0, self.d[k0] / self.N[k0, 0], x)
        y = np.where(theta == 0.0, 0.0, y)
        return x, y

    def dual(self, x, y):
        k = self._edge(_polar_angle(x, y))
        return self.N[k, 0] / self.d[k], self.N[k, 1] / self.d[k]

    def corner_duals(self, k):
        v = self._corner_idx[k]
        prev = (v - 1) % len(self.V)
        return (
            (self.N[prev, 0] / self.d[prev], self.N[prev, 1] / self.d[prev]),
            (self.N[v, 0] / self.d[v], self.N[v, 1] / self.d[v]),
        )

    def polar(self):
        P = self.N / self.d[:, None]
        return _Polygon(P, label=f"polar({self.label})")


def _family_for(spec: NormSpec) -> _Family:
    spec.validate()
    if spec.family == "euclidean" or (spec.family == "lp" and spec.p == 2.0):
        return _Euclidean()
    if spec.family == "lp":
        return _LP(spec.p)
    if spec.family == "lens":
        return _Lens(spec.c, spec.R)
    return _Polygon(spec.points, label=str(spec))


# ---------------------------------------------------------------------------
# bodies


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Planar convex body with its sector-area parametrization.

    ``boundary`` holds ``resolution`` points at equally spaced polar angles,
    ``sector_table`` the matching θ values followed by 2𝕊.
    """

    family: _Family
    boundary: np.ndarray
    total_area: float
    sector_table: np.ndarray
    regularity: Regularity
    resolution: int
    label: str

    @classmethod
    def from_family(cls, fam: _Family, resolution: int = DEFAULT_RESOLUTION):
        alpha = TWO_PI * np.arange(resolution) / resolution
        theta = np.asarray(fam.sector(alpha), dtype=float)
        theta[0] = 0.0
        x, y = fam.point(theta)
        bnd = np.stack([np.broadcast_to(x, theta.shape), np.broadcast_to(y, theta.shape)], 1)
        table = np.concatenate([theta, [2.0 * fam.area]])
        return cls(fam, bnd, float(fam.area), table, fam.regularity, resolution, fam.label)

    @classmethod
    def from_points(cls, points, resolution: int = DEFAULT_RESOLUTION):
        pts = np.asarray(points, dtype=float)
        if len(pts) < 8:
            raise InvalidSpec("table bodies need at least 8 points")
        return cls.from_family(_Polygon(pts), resolution)

    @property
    def period(self) -> float:
        return 2.0 * self.total_area

    @cached_property
    def polar_body(self) -> "ConvexBody":
        return ConvexBody.from_family(self.family.polar(), self.resolution)

    def corner_thetas(self) -> np.ndarray:
        return np.asarray(self.family.corner_thetas, dtype=float)

    def kink_thetas(self) -> np.ndarray:
        return np.asarray(self.family.kink_thetas, dtype=float)

    def gauge(self, x, y):
        return self.family.gauge(np.asarray(x, float), np.asarray(y, float))


def unit_ball(spec: NormSpec | str) -> ConvexBody:
    """Closed unit ball of the norm described by ``spec``."""
    if isinstance(spec, str):
        spec = NormSpec.parse(spec)
    return ConvexBody.from_family(_family_for(spec), spec.resolution)


def polar(body: ConvexBody) -> ConvexBody:
    """Polar body Ω° = {(p, q) : px + qy ≤ 1 on Ω}."""
    if not np.all(body.gauge(*body.boundary.T) > 0):
        raise DegenerateBody("origin must be interior")
    return body.polar_body


# ---------------------------------------------------------------------------
# trigonometry


def trig_xy(body: ConvexBody, theta):
    """Vectorized P_θ as a pair of arrays (cos_Ω, sin_Ω)."""
    th = reduce_angle(np.asarray(theta, dtype=float), body.period)
    x, y = body.family.point(th)
    return np.broadcast_to(x, np.shape(th)) * 1.0, np.broadcast_to(y, np.shape(th)) * 1.0


def trig_eval(body: ConvexBody, theta):
    """(cos_Ω(θ), sin_Ω(θ)); floats for scalar θ, arrays otherwise."""
    x, y = trig_xy(body, theta)
    return _scalarize(x, y)


def angle_of(body: ConvexBody, p, tol: float = BOUNDARY_TOL):
    """Generalized angle in [0, 2𝕊) of a boundary point."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    g = body.gauge(x, y)
    if np.any(np.abs(g - 1.0) > tol):
        raise NotOnBoundary(f"point is off the boundary (gauge {np.max(g)!r})")
    th = reduce_angle(body.family.sector(_polar_angle(x, y)), body.period)
    return _scalarize(th)


def sector_of_direction(body: ConvexBody, x, y):
    """θ of the boundary point in the direction of (x, y), no boundary check."""
    return reduce_angle(body.family.sector(_polar_angle(x, y)), body.period)


def _corner_index(body: ConvexBody, theta):
    """Index of the corner at θ (or −1), vectorized."""
    ct = body.corner_thetas()
    theta = np.asarray(theta, float)
    if ct.size == 0:
        return np.full(theta.shape, -1)
    P = body.period
    dist = np.abs(np.mod(theta[..., None] - ct + 0.5 * P, P) - 0.5 * P)
    hit = dist <= CORNER_TOL * P
    return np.where(hit.any(axis=-1), np.argmax(hit, axis=-1), -1)


def correspond_many(body: ConvexBody, theta):
    """Vectorized C°: returns (ψ, corner_mask, ψ_lo, ψ_hi).

    At corners ψ is the midpoint of the dual interval [ψ_lo, ψ_hi]; ψ_lo may
    be negative so that ψ_lo ≤ ψ_hi.
    """
    th = reduce_angle(np.asarray(theta, float), body.period)
    pol = body.polar_body
    x, y = body.family.point(th)
    dx, dy = body.family.dual(x, y)
    psi = np.asarray(sector_of_direction(pol, dx, dy), float)
    lo = psi.copy()
    hi = psi.copy()
    idx = _corner_index(body, th)
    corner = idx >= 0
    if np.any(corner):
        for k in np.unique(idx[corner]):
            (bx, by), (ax, ay) = body.family.corner_duals(int(k))
            plo = float(sector_of_direction(pol, bx, by))
            phi_ = float(sector_of_direction(pol, ax, ay))
            if plo > phi_:
                plo -= pol.period
            m = idx == k
            lo = np.where(m, plo, lo)
            hi = np.where(m, phi_, hi)
            psi = np.where(m, reduce_angle(0.5 * (plo + phi_), pol.period), psi)
    return psi, corner, lo, hi


def correspond(body: ConvexBody, theta):
    """Dual angle ψ = C°(θ); raises CornerAngle at corners of Ω.

    The inverse correspondence C∘ is the same call on the polar body.
    """
    psi, corner, lo, hi = correspond_many(body, theta)
    if np.any(corner):
        i = int(np.argmax(corner)) if np.ndim(corner) else 0
        th = float(np.ravel(reduce_angle(np.asarray(theta, float), body.period))[i])
        raise CornerAngle(th, float(np.ravel(lo)[i]), float(np.ravel(hi)[i]))
    return _scalarize(psi)


def trig_derivative(body: ConvexBody, theta):
    """(sin_Ω′(θ), cos_Ω′(θ)) = (cos_Ω°(ψ), −sin_Ω°(ψ)) with ψ = C°(θ)."""
    psi = correspond(body, theta)
    c, s = trig_xy(body.polar_body, psi)
    return _scalarize(c, -s)


def dual_point(body: ConvexBody, theta):
    """Point of ∂Ω° dual to P_θ (the gradient of the gauge), vectorized."""
    x, y = trig_xy(body, theta)
    return body.family.dual(x, y)


def pythagorean_residual(body: ConvexBody, theta, psi):
    """cos_Ω(θ)cos_Ω°(ψ) + sin_Ω(θ)sin_Ω°(ψ) − 1."""
    c, s = trig_xy(body, theta)
    cp, sp = trig_xy(body.polar_body, psi)
    return _scalarize(c * cp + s * sp - 1.0)


def boundary_hausdorff(a: ConvexBody, b: ConvexBody) -> float:
    """Hausdorff distance between the sampled boundaries."""
    from scipy.spatial import cKDTree

    da, _ = cKDTree(b.boundary).query(a.boundary)
    db, _ = cKDTree(a.boundary).query(b.boundary)
    return float(max(da.max(), db.max()))
