"""Finite-difference Jacobians of the exponential and midpoint maps.

The exponential map at time t is E_t(φ, ω, r) = (x, y, z).  Its Jacobian
determinant is assembled by cofactors along the z row,

    J = |z_ω det M1 − z_φ det M2 + z_r det M3|,

with M1 = ∂(x, y)/∂(r, φ), M2 = ∂(x, y)/∂(r, ω), M3 = ∂(x, y)/∂(φ, ω).
For C^{1,1} norms J ∼ |t|⁵, det M1 ∼ t², z_ω ∼ t³.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .convex_trig import reduce_angle
from .errors import CornerEncountered, NonPositiveValue, UsageError
from .heisenberg import Covector, Geometry, exp_xyz, log_xyz

DYADIC_GRID = tuple(2.0**-k for k in range(4, 11))
MIN_FIT_POINTS = 6
SCAN_COLUMNS = ("t", "J", "detM1", "detM2", "detM3", "dz_domega", "dz_dphi", "dz_dr")


@dataclass(frozen=True)
class JacobianSample:
    cov: Covector
    t: float
    J: float
    detM1: float
    detM2: float
    detM3: float
    step: tuple[float, float, float]  # (h_r, h_φ, h_ω)
    jac: np.ndarray = field(repr=False, compare=False)  # rows x, y, z; columns r, φ, ω

    @property
    def dz_domega(self) -> float:
        return float(self.jac[2, 2])

    @property
    def dz_dphi(self) -> float:
        return float(self.jac[2, 1])

    @property
    def dz_dr(self) -> float:
        return float(self.jac[2, 0])

    def row(self) -> tuple[float, ...]:
        return (
            self.t,
            self.J,
            self.detM1,
            self.detM2,
            self.detM3,
            self.dz_domega,
            self.dz_dphi,
            self.dz_dr,
        )


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    t_grid: tuple[float, ...]


def fd_step(t: float) -> float:
    return max(1e-6, 1e-4 * abs(t))


def _check_corners(g: Geometry, cov: Covector, t: float, h: float) -> None:
    corners = np.asarray(g.dual.corner_thetas(), float)
    if corners.size == 0:
        return
    period = 2.0 * g.S_dual
    reach = h * (1.0 + abs(t))
    for psi in (cov.phi, cov.phi + cov.omega * t):
        d = np.abs(reduce_angle(corners - psi + 0.5 * period, period) - 0.5 * period)
        if np.any(d <= reach):
            raise CornerEncountered(
                f"stencil around dual angle {psi:.6g} touches a corner of the dual body"
            )


def _jacobians(g: Geometry, phi, omega, r, t, h):
    """Central-difference 3×3 Jacobians, vectorized over the leading axis."""
    phi, omega, r, t, h = np.broadcast_arrays(
        *(np.asarray(v, float) for v in (phi, omega, r, t, h))
    )
    base = np.stack([r, phi, omega], axis=-1)
    jac = np.empty(phi.shape + (3, 3))
    for k in range(3):
        up = base.copy()
        dn = base.copy()
        up[..., k] += h
        dn[..., k] -= h
        pu = exp_xyz(g, up[..., 1], up[..., 2], up[..., 0], t)
        pd = exp_xyz(g, dn[..., 1], dn[..., 2], dn[..., 0], t)
        for i in range(3):
            jac[..., i, k] = (pu[i] - pd[i]) / (2.0 * h)
    return jac


def _cofactors(jac):
    xr, xp, xw = jac[..., 0, 0], jac[..., 0, 1], jac[..., 0, 2]
    yr, yp, yw = jac[..., 1, 0], jac[..., 1, 1], jac[..., 1, 2]
    m1 = xr * yp - yr * xp
    m2 = xr * yw - yr * xw
    m3 = xp * yw - yp * xw
    J = np.abs(jac[..., 2, 2] * m1 - jac[..., 2, 1] * m2 + jac[..., 2, 0] * m3)
    return J, m1, m2, m3


def exp_jacobian(g: Geometry, cov: Covector, t: float, h: float | None = None) -> JacobianSample:
    """Jacobian determinant of E_t at ``cov`` with its cofactor pieces."""
    if cov.r <= 0:
        raise UsageError("exp_jacobian needs r > 0")
    if cov.omega == 0:
        raise UsageError("exp_jacobian needs ω ≠ 0")
    if not abs(t) < 2.0 * g.S_dual / abs(cov.omega):
        raise UsageError(f"|t| = {abs(t)} is not below the cut time")
    h = fd_step(t) if h is None else float(h)
    _check_corners(g, cov, t, h)
    jac = _jacobians(g, cov.phi, cov.omega, cov.r, t, h)
    J, m1, m2, m3 = _cofactors(jac)
    return JacobianSample(cov, float(t), float(J), float(m1), float(m2), float(m3), (h, h, h), jac)


def exp_jacobian_grid(g: Geometry, cov: Covector, t_grid) -> list[JacobianSample]:
    return [exp_jacobian(g, cov, float(t)) for t in t_grid]


def scaling_exponent(values) -> ExponentFit:
    """Least-squares slope of log v against log |t|."""
    pts = [(float(t), float(v)) for t, v in values]
    if len(pts) < MIN_FIT_POINTS:
        raise UsageError(f"need at least {MIN_FIT_POINTS} samples, got {len(pts)}")
    bad = [(t, v) for t, v in pts if not v > 0 or t == 0]
    if bad:
        raise NonPositiveValue(f"non-positive sample {bad[0]}")
    lt = np.log([abs(t) for t, _ in pts])
    lv = np.log([v for _, v in pts])
    fit = linregress(lt, lv)
    return ExponentFit(
        float(fit.slope),
        float(fit.intercept),
        float(min(1.0, fit.rvalue**2)),
        tuple(t for t, _ in pts),
    )


def _midpoint_map(g: Geometry, q):
    """q ↦ t-midpoint of (e, q) at ½, vectorized over rows of q."""
    phi, omega, r, st = log_xyz(g, q[:, 0], q[:, 1], q[:, 2])
    if np.any(st != 0):
        from .heisenberg import HPoint, log_map

        for i in np.nonzero(st != 0)[0]:  # scalar path raises the proper error
            c = log_map(g, HPoint(*map(float, q[i])))
            phi[i], omega[i], r[i] = c.phi, c.omega, c.r
    return np.stack(exp_xyz(g, phi, omega, r, 0.5), axis=-1)


def midpoint_jacobian(g: Geometry, cov: Covector, t: float, rel_step: float = 1e-4) -> float:
    """|det d M(e, ·)| at q = E_t(cov), by central differences in q.

    Steps are anisotropic: rel_step·|(x, y)| horizontally and rel_step·|z|
    vertically, matching the t versus t³ scaling of the two directions.
    """
    if cov.r <= 0 or cov.omega == 0:
        raise UsageError("midpoint_jacobian needs r > 0 and ω ≠ 0")
    if not 0 < t < 2.0 * g.S_dual / abs(cov.omega):
        raise UsageError("t must lie in (0, cut time)")
    q = np.array(exp_xyz(g, cov.phi, cov.omega, cov.r, t), dtype=float).ravel()
    L = math.hypot(q[0], q[1])
    steps = np.array([rel_step * L, rel_step * L, rel_step * abs(q[2])])
    stencil = np.repeat(q[None, :], 6, axis=0)
    for k in range(3):
        stencil[2 * k, k] += steps[k]
        stencil[2 * k + 1, k] -= steps[k]
    m = _midpoint_map(g, stencil)
    jac = np.empty((3, 3))
    for k in range(3):
        jac[:, k] = (m[2 * k] - m[2 * k + 1]) / (2.0 * steps[k])
    return float(abs(np.linalg.det(jac)))


def jacobian_ratio(g: Geometry, cov: Covector, t: float) -> float:
    """J(cov, t/2) / J(cov, t); equal to the midpoint Jacobian by the chain rule."""
    return exp_jacobian(g, cov, 0.5 * t).J / exp_jacobian(g, cov, t).J


@dataclass(frozen=True)
class ExponentSurvey:
    """Per-angle exponent fits and their medians."""

    phis: np.ndarray
    slope_J: np.ndarray
    slope_M1: np.ndarray
    slope_dzdw: np.ndarray
    outliers: tuple[float, ...]

    def median(self, which: str) -> float:
        return float(np.median(getattr(self, f"slope_{which}")))


def exponent_survey(
    g: Geometry,
    n_phi: int = 32,
    omega: float = 1.0,
    r: float = 1.0,
    t_grid=DYADIC_GRID,
    seed: int = 0,
    tol: float = 0.25,
) -> ExponentSurvey:
    """Fit the J, det M1 and ∂z/∂ω exponents at random dual angles.

    Angles whose J slope is more than ``tol`` away from 5 are reported as
    outliers; the expansions only hold for almost every angle.
    """
    rng = np.random.default_rng(seed)
    phis = rng.uniform(0.0, 2.0 * g.S_dual, n_phi)
    tg = np.asarray(t_grid, float)
    P, T = np.meshgrid(phis, tg, indexing="ij")
    h = np.vectorize(fd_step)(T)
    jac = _jacobians(g, P, omega, r, T, h)
    J, m1, _, _ = _cofactors(jac)
    dzdw = jac[..., 2, 2]
    lt = np.log(tg)

    def slopes(v):
        v = np.abs(v)
        out = np.full(n_phi, np.nan)
        for i in range(n_phi):
            if np.all(v[i] > 0):
                out[i] = np.polyfit(lt, np.log(v[i]), 1)[0]
        return out

    sJ = slopes(J)
    outliers = tuple(float(p) for p, s in zip(phis, sJ) if not abs(s - 5.0) <= tol)
    return ExponentSurvey(phis, sJ, slopes(m1), slopes(dzdw), outliers)
