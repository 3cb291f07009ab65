"""Sub-Finsler Heisenberg group: group law, exponential and logarithm maps.

Geodesics from the identity are indexed by a covector (φ, ω, r): φ is an
angle on the dual body Ω°, ω the rate at which the dual angle is swept and r
the speed.  With S, C the trigonometric functions of Ω° and δ = ωt,

    x = (r/ω)(S(φ+δ) − S(φ)),  y = −(r/ω)(C(φ+δ) − C(φ)),
    z = r²/(2ω²) · B(φ, δ),    B = δ + C(φ+δ)S(φ) − S(φ+δ)C(φ).

B is twice the area cut from Ω° by the chord Q_φ Q_{φ+δ}.  For small δ it is
evaluated as ∫₀^δ ⟨Q_{φ+s} − Q_φ, D_{φ+s}⟩ ds, D being the dual point on ∂Ω,
which avoids the cancellation in the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .convex_trig import (
    ConvexBody,
    NormSpec,
    correspond_many,
    reduce_angle,
    sector_of_direction,
    trig_xy,
    unit_ball,
)
from .errors import NoConvergence, OnVerticalAxis, ZeroSpeed

EPS_SWITCH = 1e-4  # below |ωt| the bracket B uses its quadratic expansion
DELTA_QUAD = 0.05  # below |ωt| x, y, B use quadrature instead of closed forms
LOG_MAX_ITER = 200
LOG_SCAN = 512

_QX, _QW = leggauss(24)
_HX, _HW = leggauss(12)


@dataclass(frozen=True)
class HPoint:
    """Element (x, y, z) of ℍ."""

    x: float
    y: float
    z: float

    def __mul__(self, other: "HPoint") -> "HPoint":
        return mul(self, other)

    def inv(self) -> "HPoint":
        return inv(self)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


IDENTITY = HPoint(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Covector:
    """Initial covector (φ, ω, r) of a normal extremal through e."""

    phi: float
    omega: float
    r: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be non-negative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi, self.omega, self.r)


@dataclass(frozen=True)
class GeodesicArc:
    start: HPoint
    cov: Covector
    horizon: tuple[float, float]
    minimal: bool


def mul(p: HPoint, q: HPoint) -> HPoint:
    """(x,y,z)⋆(x′,y′,z′) = (x+x′, y+y′, z+z′+½(xy′ − x′y))."""
    return HPoint(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - q.x * p.y))


def inv(p: HPoint) -> HPoint:
    return HPoint(-p.x, -p.y, -p.z)


def hmul_arrays(x1, y1, z1, x2, y2, z2):
    return x1 + x2, y1 + y2, z1 + z2 + 0.5 * (x1 * y2 - x2 * y1)


class Geometry:
    """A left-invariant sub-Finsler structure on ℍ.

    Holds the unit ball Ω of the norm on the horizontal plane and its polar Ω°.
    """

    def __init__(self, norm: NormSpec | str | ConvexBody):
        if isinstance(norm, ConvexBody):
            body = norm
            self.spec = None
        else:
            self.spec = NormSpec.parse(norm) if isinstance(norm, str) else norm
            body = unit_ball(self.spec)
        self.primal = body
        self.dual = body.polar_body
        self.S_dual = self.dual.total_area
        self.label = str(self.spec) if self.spec is not None else body.label
        sing = np.concatenate([self.dual.kink_thetas(), self.dual.corner_thetas()])
        self.singular = np.unique(reduce_angle(sing, 2.0 * self.S_dual))

    def __repr__(self) -> str:
        return f"Geometry({self.label!r})"

    # -- dual-body helpers -------------------------------------------------
    def Q(self, psi):
        return trig_xy(self.dual, psi)

    def D(self, psi):
        """Dual point of Q_ψ: (cos_Ω(ψ∘), sin_Ω(ψ∘))."""
        qx, qy = trig_xy(self.dual, psi)
        dx, dy = self.dual.family.dual(qx, qy)
        return np.broadcast_to(dx, np.shape(qx)), np.broadcast_to(dy, np.shape(qx))

    def norm(self, x, y):
        return self.primal.gauge(x, y)


# ---------------------------------------------------------------------------
# exponential map


def _nodes(g: Geometry, phi, delta):
    """Quadrature nodes and weights for ∫_φ^{φ+δ} f(ψ) dψ, shape (..., 24).

    Near a kink or corner κ of Ω° the integrand has a power or jump
    singularity; there ψ = κ + w³ is used, split at w = 0.
    """
    phi = np.asarray(phi, float)[..., None]
    delta = np.asarray(delta, float)[..., None]
    nodes = phi + 0.5 * delta * (_QX + 1.0)
    weights = 0.5 * delta * _QW
    if g.singular.size == 0:
        return nodes, weights
    period = 2.0 * g.S_dual
    mid = phi[..., 0] + 0.5 * delta[..., 0]
    diff = reduce_angle(g.singular - mid[..., None] + 0.5 * period, period) - 0.5 * period
    k = np.argmin(np.abs(diff), axis=-1)
    kappa = mid + np.take_along_axis(diff, k[..., None], axis=-1)[..., 0]
    near = np.abs(kappa - mid) <= 1.5 * np.abs(delta[..., 0])
    if not np.any(near):
        return nodes, weights
    a = phi[near, 0] - kappa[near]
    b = a + delta[near, 0]
    w0, w1 = np.cbrt(a), np.cbrt(b)
    m = np.where(w0 * w1 < 0, 0.0, w1)
    parts = []
    for lo, hi in ((w0, m), (m, w1)):
        h = 0.5 * (hi - lo)[:, None]
        w = lo[:, None] + h * (_HX + 1.0)
        parts.append((kappa[near][:, None] + w**3, 3.0 * w * w * h * _HW))
    nodes = nodes.copy()
    weights = np.broadcast_to(weights, nodes.shape).copy()
    nodes[near] = np.concatenate([parts[0][0], parts[1][0]], axis=-1)
    weights[near] = np.concatenate([parts[0][1], parts[1][1]], axis=-1)
    return nodes, weights


def _bracket_quad(g: Geometry, phi, delta):
    """B(φ, δ) by quadrature of ⟨Q_{φ+s} − Q_φ, D_{φ+s}⟩."""
    psi, w = _nodes(g, phi, delta)
    q0x, q0y = g.Q(np.asarray(phi, float)[..., None])
    qx, qy = g.Q(psi)
    dx, dy = g.dual.family.dual(qx, qy)
    f = (qx - q0x) * dx + (qy - q0y) * dy
    return np.sum(w * f, axis=-1)


def _dual_mean(g: Geometry, phi, delta):
    """Mean of D over [φ, φ+δ]; equals (x, y)/(r t)."""
    delta = np.asarray(delta, float)
    zero = delta == 0
    d = np.where(zero, 1.0, delta)
    psi, w = _nodes(g, phi, d)
    dx, dy = g.D(psi)
    mx, my = np.sum(w * dx, axis=-1) / d, np.sum(w * dy, axis=-1) / d
    if np.any(zero):
        px, py = g.D(phi)
        mx, my = np.where(zero, px, mx), np.where(zero, py, my)
    return mx, my


def _near_singular(g: Geometry, phi, width: float):
    """True where a kink or corner of Ω° lies within ``width`` of φ."""
    phi = np.asarray(phi, float)
    if g.singular.size == 0:
        return np.zeros(phi.shape, dtype=bool)
    period = 2.0 * g.S_dual
    d = reduce_angle(g.singular - phi[..., None] + 0.5 * period, period) - 0.5 * period
    return np.any(np.abs(d) <= width, axis=-1)


def bracket(g: Geometry, phi, delta):
    """B(φ, δ) = δ + C(φ+δ)S(φ) − S(φ+δ)C(φ), evaluated stably."""
    phi, delta = np.broadcast_arrays(np.asarray(phi, float), np.asarray(delta, float))
    shape = phi.shape
    phi, delta = np.atleast_1d(phi), np.atleast_1d(delta)
    out = np.empty(phi.shape)
    ad = np.abs(delta)
    big = ad >= DELTA_QUAD
    # the Taylor expansion needs a smooth window of width 2ε_switch around φ
    tiny = (ad < EPS_SWITCH) & (ad > 0)
    if np.any(tiny):
        tiny[tiny] = ~_near_singular(g, phi[tiny], 2.0 * EPS_SWITCH)
    mid = ~big & ~tiny & (ad > 0)
    out[ad == 0] = 0.0
    if np.any(big):
        c0, s0 = g.Q(phi[big])
        c1, s1 = g.Q(phi[big] + delta[big])
        out[big] = delta[big] + c1 * s0 - s1 * c0
    if np.any(mid):
        out[mid] = _bracket_quad(g, phi[mid], delta[mid])
    if np.any(tiny):
        e = EPS_SWITCH
        bp = _bracket_quad(g, phi[tiny], np.full(np.count_nonzero(tiny), e))
        bm = _bracket_quad(g, phi[tiny], np.full(np.count_nonzero(tiny), -e))
        k1 = 3.0 * (bp - bm) / e**3
        k2 = 12.0 * (bp + bm) / e**4
        d = delta[tiny]
        out[tiny] = d**3 * k1 / 6.0 + d**4 * k2 / 24.0
    return out.reshape(shape)


def _q_distinct(g: Geometry, phi):
    """Q on an array that often repeats one φ (a single geodesic sampled in t)."""
    u, inv = np.unique(phi, return_inverse=True)
    if len(u) == len(phi):
        return g.Q(phi)
    cx, cy = g.Q(u)
    return cx[inv], cy[inv]


def exp_xyz(g: Geometry, phi, omega, r, t):
    """Vectorized exponential map from e; returns arrays (x, y, z)."""
    phi, omega, r, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (phi, omega, r, t))
    )
    shape = phi.shape
    phi, omega, r, t = (np.atleast_1d(v) for v in (phi, omega, r, t))
    delta = omega * t
    x = np.empty(phi.shape)
    y = np.empty(phi.shape)
    B = np.empty(phi.shape)
    big = np.abs(delta) >= DELTA_QUAD
    if np.any(big):
        p, w, rr, d = phi[big], omega[big], r[big], delta[big]
        c0, s0 = _q_distinct(g, p)
        c1, s1 = g.Q(p + d)
        x[big] = rr / w * (s1 - s0)
        y[big] = -rr / w * (c1 - c0)
        B[big] = d + c1 * s0 - s1 * c0  # same closed form as bracket()
    small = ~big
    if np.any(small):
        mx, my = _dual_mean(g, phi[small], delta[small])
        rt = r[small] * t[small]
        x[small] = rt * mx
        y[small] = rt * my
        B[small] = bracket(g, phi[small], delta[small])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(
            big,
            r * r / (2.0 * np.where(big, omega, 1.0) ** 2) * B,
            (r * t) ** 2 / (2.0 * np.where(big, 1.0, delta) ** 2) * B,
        )
    z = np.where(np.abs(delta) < EPS_SWITCH, _tiny_z(g, phi, delta, r, t), z)
    return x.reshape(shape), y.reshape(shape), z.reshape(shape)


def _tiny_z(g: Geometry, phi, delta, r, t):
    """z for |δ| < ε_switch, written without the 1/δ² factor."""
    out = np.zeros(phi.shape)
    tiny = (np.abs(delta) < EPS_SWITCH) & (delta != 0)
    if np.any(tiny):
        near = np.zeros(phi.shape, dtype=bool)
        near[tiny] = _near_singular(g, phi[tiny], 2.0 * EPS_SWITCH)
        if np.any(near):
            d = delta[near]
            out[near] = 0.5 * (r[near] * t[near] / d) ** 2 * _bracket_quad(g, phi[near], d)
        tiny &= ~near
    if np.any(tiny):
        e = EPS_SWITCH
        n = np.count_nonzero(tiny)
        bp = _bracket_quad(g, phi[tiny], np.full(n, e))
        bm = _bracket_quad(g, phi[tiny], np.full(n, -e))
        k1 = 3.0 * (bp - bm) / e**3
        k2 = 12.0 * (bp + bm) / e**4
        d = delta[tiny]
        out[tiny] = (r[tiny] * t[tiny]) ** 2 * (d * k1 / 12.0 + d * d * k2 / 48.0)
    return out


def exp_map(g: Geometry, cov: Covector, t: float) -> HPoint:
    """Point at time t of the normal geodesic from e with covector ``cov``."""
    x, y, z = exp_xyz(g, cov.phi, cov.omega, cov.r, t)
    return HPoint(float(x), float(y), float(z))


def cut_time(g: Geometry, cov: Covector) -> float:
    """t* = 2𝕊°/|ω|, or ∞ for ω = 0."""
    if cov.r == 0:
        raise ZeroSpeed("cut time is undefined for the constant curve")
    if cov.omega == 0:
        return math.inf
    return 2.0 * g.S_dual / abs(cov.omega)


def geodesic_arc(g: Geometry, start: HPoint, cov: Covector, T: float) -> GeodesicArc:
    return GeodesicArc(start, cov, (0.0, T), T < cut_time(g, cov))


# ---------------------------------------------------------------------------
# logarithm


def _model_F(beta):
    """Chord ratio B/(2|chord|²) for the unit disk at sweep β."""
    beta = np.asarray(beta, float)
    small = beta < 0.5
    b2 = beta * beta
    series = beta * b2 / 6 * (1 - b2 / 20 * (1 - b2 / 42 * (1 - b2 / 72 * (1 - b2 / 110))))
    num = np.where(small, series, beta - np.sin(beta))
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / (8.0 * np.sin(0.5 * beta) ** 2)


def _model_dF(beta):
    beta = np.asarray(beta, float)
    b2 = beta * beta
    s2 = np.sin(0.5 * beta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (2 * s2 * 8 * s2 - (beta - np.sin(beta)) * 4 * np.sin(beta)) / (64 * s2 * s2)
    return np.where(beta < 0.5, 1 / 12 + b2 / 240 + b2 * b2 / 6048, big)


def _newton(fdf, a, b, x0, tol=1e-14, maxit=100):
    """Vectorized Newton iteration safeguarded by the bracket [a, b].

    ``fdf(sel, x)`` returns (f, f′) for the entries ``sel``; f must be
    increasing with f(a) < 0 < f(b).
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    x = np.array(x0, dtype=float)
    live = np.ones(x.shape, dtype=bool)
    for _ in range(maxit):
        sel = np.nonzero(live)[0]
        if sel.size == 0:
            break
        xs = x[sel]
        f, df = fdf(sel, xs)
        a[sel] = np.where(f < 0, xs, a[sel])
        b[sel] = np.where(f >= 0, xs, b[sel])
        with np.errstate(divide="ignore", invalid="ignore"):
            nx = xs - f / df
        bad = ~(nx > a[sel]) | ~(nx < b[sel]) | ~np.isfinite(nx)
        nx = np.where(bad, 0.5 * (a[sel] + b[sel]), nx)
        scale = 1.0 + np.abs(nx)
        done = (np.abs(nx - xs) <= tol * scale) | (b[sel] - a[sel] <= 4e-16 * scale) | (f == 0)
        x[sel] = np.where(f == 0, xs, nx)
        live[sel[done]] = False
    return x


def _model_inv(f):
    """Inverse of ``_model_F`` on [0, 2π): a smooth monotone transform."""
    f = np.asarray(f, float)
    pos = f > 0
    fp = np.where(pos, f, 1.0)
    b0 = np.where(fp < 0.3, 12 * fp, 2 * math.pi - np.sqrt(math.pi / fp))
    b0 = np.clip(b0, 1e-300, 2 * math.pi * (1 - 1e-16))

    def fdf(sel, x):
        return _model_F(x) - fp[sel], _model_dF(x)

    out = _newton(fdf, np.zeros(f.shape), np.full(f.shape, 2 * math.pi), b0)
    return np.where(pos, out, 0.0)


def _solve_phi(g: Geometry, dx, dy, lo, hi, s, p0=None):
    """φ′ ∈ [lo − s, hi] with Q_{φ′+s} − Q_{φ′} parallel to (dx, dy)."""

    def fdf(sel, p):
        q0x, q0y = g.Q(p)
        q1x, q1y = g.Q(p + s[sel])
        c = dx[sel] * (q1y - q0y) - dy[sel] * (q1x - q0x)
        d0x, d0y = g.dual.family.dual(q0x, q0y)
        d1x, d1y = g.dual.family.dual(q1x, q1y)
        return c, dx[sel] * (d1x - d0x) + dy[sel] * (d1y - d0y)

    guess = 0.5 * (lo + hi) - 0.5 * s
    if p0 is not None:
        guess = np.where((p0 > lo - s) & (p0 < hi), p0, guess)
    return _newton(fdf, lo - s, hi, guess, tol=1e-15)


def _chord(g: Geometry, p, s):
    """|Q_{p+s} − Q_p|; short sweeps use |∫D| to avoid cancellation."""
    q0x, q0y = g.Q(p)
    q1x, q1y = g.Q(p + s)
    chord = np.hypot(q1x - q0x, q1y - q0y)
    small = s < DELTA_QUAD
    if np.any(small):
        mx, my = _dual_mean(g, p[small], s[small])
        chord[small] = s[small] * np.hypot(mx, my)
    return chord


def _ratio(g: Geometry, dx, dy, lo, hi, s, p0=None):
    """F(s) = B/(2|chord|²) together with the chord data for sweep s > 0."""
    p = _solve_phi(g, dx, dy, lo, hi, s, p0)
    chord = _chord(g, p, s)
    B = bracket(g, p, s)
    return B / (2.0 * chord * chord), p, chord


def _solve_joint(g: Geometry, dx, dy, lo, hi, tau, s0, maxit=40):
    """Newton on (φ′, s) for the chord condition and F(φ′, s) = τ together.

    Uses ∂B/∂s = ⟨Δ, D₁⟩ and ∂B/∂φ′ = ⟨Δ, D₀ + D₁⟩ with Δ = Q₁ − Q₀.  Entries
    that leave the admissible region or stall are flagged for the nested solver.
    """
    S2 = 2.0 * g.S_dual
    s = np.array(s0, dtype=float)
    p = 0.5 * (lo + hi) - 0.5 * s
    ok = np.zeros(s.shape, dtype=bool)
    live = np.ones(s.shape, dtype=bool)
    for _ in range(maxit):
        sel = np.nonzero(live)[0]
        if sel.size == 0:
            break
        ps, ss = p[sel], s[sel]
        ex, ey = dx[sel], dy[sel]
        q0x, q0y = g.Q(ps)
        q1x, q1y = g.Q(ps + ss)
        d0x, d0y = g.dual.family.dual(q0x, q0y)
        d1x, d1y = g.dual.family.dual(q1x, q1y)
        ax, ay = q1x - q0x, q1y - q0y
        c = ex * ay - ey * ax
        c_s = ex * d1x + ey * d1y
        c_p = ex * (d1x - d0x) + ey * (d1y - d0y)
        big = ss >= DELTA_QUAD
        B = ss + q1x * q0y - q1y * q0x
        if not np.all(big):
            B[~big] = bracket(g, ps[~big], ss[~big])
        c2 = ax * ax + ay * ay
        B_s = ax * d1x + ay * d1y
        B_p = ax * (d0x + d1x) + ay * (d0y + d1y)
        c2_s = 2.0 * (ax * -d1y + ay * d1x)
        c2_p = 2.0 * (ax * -(d1y - d0y) + ay * (d1x - d0x))
        with np.errstate(divide="ignore", invalid="ignore"):
            F = B / (2.0 * c2)
            F_s = B_s / (2.0 * c2) - F * c2_s / c2
            F_p = B_p / (2.0 * c2) - F * c2_p / c2
            h = F - tau[sel]
            det = c_p * F_s - c_s * F_p
            dp = (-c * F_s + c_s * h) / det
            ds = (-c_p * h + c * F_p) / det
        np_ = ps + dp
        ns = ss + ds
        ns = np.where(ns <= 0, 0.5 * ss, ns)
        ns = np.where(ns >= S2, 0.5 * (ss + S2), ns)
        np_ = np.clip(np_, lo[sel] - ns, hi[sel])
        finite = np.isfinite(np_) & np.isfinite(ns)
        conv = (
            finite
            & (np.abs(ns - ss) <= 1e-11 * ss)
            & (np.abs(np_ - ps) <= 1e-11 * (1 + np.abs(ps)))
            & (ex * ax + ey * ay > 0)  # chord points along d, not against it
            & (np.abs(h) <= 1e-9 * (tau[sel] + 1e-300) + 1e-300)
        )
        p[sel] = np.where(finite, np_, ps)
        s[sel] = np.where(finite, ns, ss)
        ok[sel[conv]] = True
        live[sel[conv | ~finite]] = False
    return p, s, ok


def log_xyz(g: Geometry, x, y, z, check: bool = True):
    """Vectorized logarithm at time 1.

    Returns (φ, ω, r, status) where status is 0 on success, 1 on the vertical
    axis and 2 when the residual test failed.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    shape = x.shape
    x, y, z = x.ravel(), y.ravel(), z.ravel()
    n = x.size
    phi = np.zeros(n)
    omega = np.zeros(n)
    r = np.zeros(n)
    status = np.zeros(n, dtype=int)
    L = np.hypot(x, y)
    axis = L <= 1e-14 * (1.0 + np.sqrt(np.abs(z)))
    status[axis] = 1
    ok = ~axis
    ux = np.where(ok, x, 1.0) / np.where(ok, L, 1.0)
    uy = np.where(ok, y, 0.0) / np.where(ok, L, 1.0)
    # support angle interval of Ω° in direction u
    theta = sector_of_direction(g.primal, ux, uy)
    psi_mid, _, plo, phi_hi = correspond_many(g.primal, theta)
    # z within rounding noise of a straight segment is read as one
    flat = ok & (np.abs(z) <= 1e-12 * L * L)
    if np.any(flat):
        phi[flat] = psi_mid[flat]
        r[flat] = g.norm(x[flat], y[flat])
    act = ok & ~flat
    if np.any(act):
        idx = np.nonzero(act)[0]
        dx, dy = -uy[idx], ux[idx]
        lo, hi = plo[idx], phi_hi[idx]
        tau = np.abs(z[idx]) / L[idx] ** 2
        target = _model_inv(tau)
        S2 = 2.0 * g.S_dual
        lam2 = g.S_dual / math.pi

        def Phi(sel, s):
            warm = res_p[sel] if started else None
            F, p, chord = _ratio(g, dx[sel], dy[sel], lo[sel], hi[sel], s, warm)
            return _model_inv(F) - target[sel], p, chord

        jp, js, jok = _solve_joint(g, dx, dy, lo, hi, tau, lam2 * target)
        a = np.zeros(idx.size)
        fa = -target
        b = np.full(idx.size, S2)
        fb = 2 * math.pi - target
        s = np.clip(lam2 * target, 1e-300, S2 * (1 - 1e-12))
        side = np.zeros(idx.size, dtype=int)
        res_p = np.zeros(idx.size)
        res_c = np.ones(idx.size)
        live = ~jok
        s = np.where(jok, js, s)
        res_p = np.where(jok, jp, res_p)
        started = False
        for _ in range(LOG_MAX_ITER):
            sel = np.nonzero(live)[0]
            if sel.size == 0:
                break
            fs, p, chord = Phi(sel, s[sel])
            started = True
            res_p[sel], res_c[sel] = p, chord
            neg = fs < 0
            # Illinois bookkeeping
            a_sel, b_sel = a[sel], b[sel]
            fa_sel, fb_sel = fa[sel], fb[sel]
            sd = side[sel]
            fb_sel = np.where(neg & (sd == -1), 0.5 * fb_sel, fb_sel)
            fa_sel = np.where(~neg & (sd == 1), 0.5 * fa_sel, fa_sel)
            a_sel = np.where(neg, s[sel], a_sel)
            fa_sel = np.where(neg, fs, fa_sel)
            b_sel = np.where(neg, b_sel, s[sel])
            fb_sel = np.where(neg, fb_sel, fs)
            side[sel] = np.where(neg, -1, 1)
            a[sel], b[sel], fa[sel], fb[sel] = a_sel, b_sel, fa_sel, fb_sel
            with np.errstate(divide="ignore", invalid="ignore"):
                ns = (a_sel * fb_sel - b_sel * fa_sel) / (fb_sel - fa_sel)
            bad = ~(ns > a_sel) | ~(ns < b_sel) | ~np.isfinite(ns)
            ns = np.where(bad, 0.5 * (a_sel + b_sel), ns)
            done = (np.abs(fs) <= 1e-15 * (1.0 + target[sel])) | (b_sel - a_sel <= 4e-15 * b_sel)
            s[sel] = np.where(done, s[sel], ns)
            live[sel[done]] = False
        if np.any(jok):
            res_c[jok] = _chord(g, res_p[jok], s[jok])
        sgn = np.sign(z[idx])
        om = sgn * s
        ph = np.where(sgn > 0, res_p, res_p + s)
        omega[idx] = om
        phi[idx] = ph
        r[idx] = s * L[idx] / res_c
    phi = np.where(ok, reduce_angle(phi, 2.0 * g.S_dual), 0.0)
    if check and np.any(ok):
        ex, ey, ez = exp_xyz(g, phi[ok], omega[ok], r[ok], 1.0)
        res = np.sqrt((ex - x[ok]) ** 2 + (ey - y[ok]) ** 2 + (ez - z[ok]) ** 2)
        qn = np.sqrt(x[ok] ** 2 + y[ok] ** 2 + z[ok] ** 2)
        fail = ~(res <= 1e-8 * (1.0 + qn))
        st = status[ok]
        st[fail] = 2
        status[ok] = st
    return (
        phi.reshape(shape),
        omega.reshape(shape),
        r.reshape(shape),
        status.reshape(shape),
    )


def level_family(g: Geometry, x: float, y: float, sweeps):
    """Covectors (φ, s, r) with ω = s > 0 whose time-1 point lies over (x, y).

    For each sweep s the chord of Ω° parallel to R₉₀(x, y) is located; its
    rescaling to length |(x, y)| fixes r, and the reached height is
    z(s) = |(x, y)|²·F(s) with F the area-to-chord² ratio.  Returns arrays
    (φ, r, z, F).
    """
    s = np.asarray(sweeps, float)
    L = math.hypot(x, y)
    if L == 0:
        raise OnVerticalAxis("level family needs a point off the vertical axis")
    ux, uy = x / L, y / L
    theta = sector_of_direction(g.primal, np.array(ux), np.array(uy))
    _, _, lo, hi = correspond_many(g.primal, theta)
    n = s.size
    F, p, chord = _ratio(
        g, np.full(n, -uy), np.full(n, ux), np.full(n, float(lo)), np.full(n, float(hi)), s
    )
    phi = reduce_angle(p, 2.0 * g.S_dual)
    return phi, s * L / chord, L * L * F, F


def _scan_log(g: Geometry, q: HPoint) -> Covector:
    """Fallback: coarse scan of the sweep for a sign change, then bisection."""
    L = math.hypot(q.x, q.y)
    ux, uy = q.x / L, q.y / L
    theta = sector_of_direction(g.primal, np.array(ux), np.array(uy))
    _, _, lo, hi = correspond_many(g.primal, theta)
    tau = abs(q.z) / L**2
    dx, dy = np.full(LOG_SCAN, -uy), np.full(LOG_SCAN, ux)
    grid = 2.0 * g.S_dual * (np.arange(1, LOG_SCAN + 1) - 0.5) / LOG_SCAN
    F, _, _ = _ratio(g, dx, dy, np.full(LOG_SCAN, float(lo)), np.full(LOG_SCAN, float(hi)), grid)
    above = np.nonzero(F >= tau)[0]
    if above.size == 0:
        raise NoConvergence("no sign change in sweep scan", bracket=(grid[0], grid[-1]))
    k = above[0]
    a = grid[k - 1] if k > 0 else 0.0
    b = grid[k]
    one = lambda v: np.array([v])  # noqa: E731
    for _ in range(LOG_MAX_ITER):
        m = 0.5 * (a + b)
        Fm, p, chord = _ratio(g, one(-uy), one(ux), one(float(lo)), one(float(hi)), one(m))
        if Fm[0] < tau:
            a = m
        else:
            b = m
        if b - a <= 2e-16 * b:
            break
    s = 0.5 * (a + b)
    _, p, chord = _ratio(g, one(-uy), one(ux), one(float(lo)), one(float(hi)), one(s))
    sgn = math.copysign(1.0, q.z)
    ph = float(p[0]) if sgn > 0 else float(p[0]) + s
    return Covector(float(reduce_angle(ph, 2 * g.S_dual)), sgn * s, s * L / float(chord[0]))


def log_map(g: Geometry, q: HPoint) -> Covector:
    """Unique covector with exp_map(cov, 1) = q and 1 < cut time."""
    phi, omega, r, st = log_xyz(g, q.x, q.y, q.z)
    if int(st) == 1:
        raise OnVerticalAxis(f"{q} lies on the vertical axis; geodesics are not unique")
    cov = Covector(float(phi), float(omega), float(r))
    if int(st) == 2:
        cov = _scan_log(g, q)
        e = exp_map(g, cov, 1.0)
        res = math.dist(e.as_tuple(), q.as_tuple())
        if not res <= 1e-8 * (1.0 + math.hypot(q.x, q.y, q.z)):
            raise NoConvergence(
                f"log_map residual {res:.3e} at {q}", bracket=(0.0, 2 * g.S_dual), residual=res
            )
    return cov


# ---------------------------------------------------------------------------
# derived maps


def distance(g: Geometry, p: HPoint, q: HPoint) -> float:
    d = mul(inv(p), q)
    if math.hypot(d.x, d.y) <= 1e-14 * (1.0 + math.sqrt(abs(d.z))):
        return 2.0 * math.sqrt(g.S_dual * abs(d.z))
    return log_map(g, d).r


def distance_arrays(g: Geometry, x, y, z):
    """Vectorized distance from e (NaN where the solver failed)."""
    phi, omega, r, st = log_xyz(g, x, y, z)
    on = st == 1
    out = np.where(st == 0, r, np.nan)
    return np.where(on, 2.0 * np.sqrt(g.S_dual * np.abs(z)), out)


def t_midpoint(g: Geometry, p: HPoint, q: HPoint, t: float) -> HPoint:
    """Point at fraction t along the geodesic from p to q."""
    if p == q:
        return p
    cov = log_map(g, mul(inv(p), q))
    return mul(p, exp_map(g, cov, t))


def t_midpoint_arrays(g: Geometry, p, q, t):
    """Vectorized t-midpoints; p, q are (..., 3) arrays.  Returns (m, status)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    dx, dy, dz = hmul_arrays(-p[..., 0], -p[..., 1], -p[..., 2], q[..., 0], q[..., 1], q[..., 2])
    phi, omega, r, st = log_xyz(g, dx, dy, dz)
    same = (dx == 0) & (dy == 0) & (dz == 0)  # constant curve
    st = np.where(same, 0, st)
    r = np.where(same, 0.0, r)
    ex, ey, ez = exp_xyz(g, phi, omega, r, t)
    mx, my, mz = hmul_arrays(p[..., 0], p[..., 1], p[..., 2], ex, ey, ez)
    return np.stack([mx, my, mz], axis=-1), st


def inverse_geodesic(g: Geometry, m: HPoint, q: HPoint) -> HPoint:
    """I_m(q) = m ⋆ exp(log(m⁻¹⋆q), −1).

    m is the midpoint of (I_m(q), q) when the doubled arc is minimal, that is
    when the sweep of log(m⁻¹⋆q) is below 𝕊° in absolute value.
    """
    cov = log_map(g, mul(inv(m), q))
    return mul(m, exp_map(g, cov, -1.0))


def inverse_geodesic_arrays(g: Geometry, m, q):
    m = np.asarray(m, float)
    q = np.asarray(q, float)
    dx, dy, dz = hmul_arrays(-m[..., 0], -m[..., 1], -m[..., 2], q[..., 0], q[..., 1], q[..., 2])
    phi, omega, r, st = log_xyz(g, dx, dy, dz)
    ex, ey, ez = exp_xyz(g, phi, omega, r, -1.0)
    px, py, pz = hmul_arrays(m[..., 0], m[..., 1], m[..., 2], ex, ey, ez)
    return np.stack([px, py, pz], axis=-1), st


def swept_area_residual(g: Geometry, cov: Covector, t: float, grid: int = 10_000) -> float:
    """|z(t) − A(t)| with A the trapezoid oriented area swept by (x, y)."""
    ts = np.linspace(0.0, t, grid + 1)
    x, y, z = exp_xyz(g, cov.phi, cov.omega, cov.r, ts)
    area = 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    return abs(float(z[-1]) - area)
