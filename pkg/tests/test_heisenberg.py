import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcdlab.errors import OnVerticalAxis, ZeroSpeed
from hcdlab.heisenberg import (
    EPS_SWITCH,
    IDENTITY,
    Covector,
    HPoint,
    cut_time,
    distance,
    exp_map,
    exp_xyz,
    geodesic_arc,
    inv,
    inverse_geodesic,
    log_map,
    mul,
    swept_area_residual,
    t_midpoint,
)

from conftest import geometry
from oracles import rk4_geodesic, shoelace

coord = st.floats(-3, 3, allow_nan=False)
points = st.builds(HPoint, coord, coord, coord)
NORMS = ["euclidean", "lp:4"]


def random_covs(g, n, seed, rmax=2.0):
    """Covectors with 1 < cut time (|ω| < 2𝕊°)."""
    rng = np.random.default_rng(seed)
    P = 2 * g.S_dual
    return [
        Covector(float(rng.uniform(0, P)), float(rng.uniform(-0.95, 0.95) * P),
                 float(rng.uniform(0.2, rmax)))
        for _ in range(n)
    ]


def close_mod(a, b, period, tol):
    return abs(math.remainder(a - b, period)) < tol


# -- group law ----------------------------------------------------------------


def test_mul_example():
    assert mul(HPoint(1, 0, 0), HPoint(0, 1, 0)) == HPoint(1, 1, 0.5)


@given(points)
def test_identity_and_inverse(p):
    assert p * IDENTITY == p and IDENTITY * p == p
    assert mul(p, inv(p)) == IDENTITY
    assert mul(p, HPoint(-p.x, -p.y, -p.z)) == IDENTITY


@given(points, points, points)
def test_associative(p, q, r):
    a = ((p * q) * r).as_array()
    b = (p * (q * r)).as_array()
    assert np.allclose(a, b, rtol=0, atol=1e-13)


# -- exponential map ----------------------------------------------------------


def test_euclidean_half_turn(euclid):
    p = exp_map(euclid, Covector(0.0, math.pi, 1.0), 1.0)
    assert np.allclose(p.as_tuple(), (0, 2 / math.pi, 1 / (2 * math.pi)), atol=1e-14)


@pytest.mark.parametrize("label", NORMS + ["lens:1,2"])
def test_straight_lines(label):
    g = geometry(label)
    for phi in np.linspace(0, 2 * g.S_dual, 7):
        d = g.D(phi)
        for t in (-1.3, 0.4, 2.0):
            p = exp_map(g, Covector(float(phi), 0.0, 1.7), t)
            assert np.allclose(p.as_tuple(), (1.7 * d[0] * t, 1.7 * d[1] * t, 0.0), atol=1e-13)


@given(st.floats(0, 10), st.floats(-10, 10), st.floats(-5, 5))
def test_constant_curve(phi, om, t):
    assert exp_map(geometry("lp:4"), Covector(phi, om, 0.0), t) == IDENTITY


@pytest.mark.parametrize("label", NORMS)
def test_rk4_oracle(label):
    g = geometry(label)
    for c in random_covs(g, 20, 11):
        ts, X, Y, Z = rk4_geodesic(label, *c.as_tuple())
        x, y, z = exp_xyz(g, c.phi, c.omega, c.r, ts)
        err = max(np.abs(X - x).max(), np.abs(Y - y).max(), np.abs(Z - z).max())
        assert err < 1e-7


@pytest.mark.parametrize("label", NORMS)
def test_small_sweep_continuity(label):
    g = geometry(label)
    for phi in (0.3, 1.1, 2.0):
        base = np.array(exp_map(g, Covector(phi, 0.0, 1.0), 1.0).as_tuple())
        for om in (1e-12, 1e-8, 0.5 * EPS_SWITCH, 2 * EPS_SWITCH):
            p = np.array(exp_map(g, Covector(phi, om, 1.0), 1.0).as_tuple())
            assert np.abs(p - base).max() < 2 * om
        # both sides of the switch agree with the RK4 oracle
        for om in (0.999 * EPS_SWITCH, 1.001 * EPS_SWITCH):
            ts, X, Y, Z = rk4_geodesic(label, phi, om, 1.0)
            x, y, z = exp_xyz(g, phi, om, 1.0, 1.0)
            assert abs(z - Z[-1]) < 1e-12 and abs(x - X[-1]) < 1e-9


@pytest.mark.parametrize("label", NORMS)
def test_time_reversal(label):
    g = geometry(label)
    for c in random_covs(g, 10, 12):
        fwd = exp_map(g, c, 0.7)
        back = exp_map(g, Covector(c.phi + c.omega * 0.7, c.omega, c.r), -0.7)
        assert np.allclose(mul(fwd, back).as_tuple(), 0.0, atol=1e-12)


@pytest.mark.parametrize("label", NORMS)
def test_speed_is_r(label):
    g = geometry(label)
    h = 1e-6
    for c in random_covs(g, 10, 13):
        for t in (0.1, 0.5, 0.9):
            x1, y1, _ = exp_xyz(g, c.phi, c.omega, c.r, t + h)
            x0, y0, _ = exp_xyz(g, c.phi, c.omega, c.r, t - h)
            v = g.norm((x1 - x0) / (2 * h), (y1 - y0) / (2 * h))
            assert abs(v - c.r) < 1e-5


@pytest.mark.parametrize("label", NORMS + ["lens:1,2"])
def test_planar_projection_on_dual_sphere(label):
    g = geometry(label)
    for c in random_covs(g, 10, 14):
        if c.omega == 0:
            continue
        cx, cy = g.Q(c.phi)
        for t in np.linspace(0.05, 1.0, 7):
            x, y, _ = exp_xyz(g, c.phi, c.omega, c.r, t)
            k = c.omega / c.r
            # undo the dilation and rotation, shift back onto ∂Ω°
            gauge = g.dual.gauge(cx - k * y, cy + k * x)
            assert abs(gauge - 1.0) < 1e-6


# -- cut time -----------------------------------------------------------------


def test_cut_time_examples(euclid, lp4):
    assert cut_time(euclid, Covector(0, math.pi, 1)) == pytest.approx(2.0, abs=1e-15)
    assert cut_time(lp4, Covector(0, 0.0, 1)) == math.inf
    with pytest.raises(ZeroSpeed):
        cut_time(euclid, Covector(0, 1.0, 0.0))
    arc = geodesic_arc(euclid, IDENTITY, Covector(0, math.pi, 1), 1.5)
    assert arc.minimal


@given(st.floats(0.01, 50), st.sampled_from(NORMS))
def test_cut_time_homogeneous(om, label):
    g = geometry(label)
    a = cut_time(g, Covector(0.1, om, 1))
    b = cut_time(g, Covector(0.1, 2 * om, 1))
    assert b == pytest.approx(a / 2, rel=1e-15)


# -- logarithm ----------------------------------------------------------------


@pytest.mark.parametrize("label", NORMS)
def test_log_exp_roundtrip(label):
    g = geometry(label)
    P = 2 * g.S_dual
    for c in random_covs(g, 200, 15):
        back = log_map(g, exp_map(g, c, 1.0))
        assert close_mod(back.phi, c.phi, P, 1e-6)
        assert abs(back.omega - c.omega) < 1e-6
        assert abs(back.r - c.r) < 1e-6


@pytest.mark.parametrize("label", NORMS + ["lp:1.5"])
@given(q=points)
def test_exp_log_roundtrip(label, q):
    g = geometry(label)
    if math.hypot(q.x, q.y) < 1e-3:
        return
    c = log_map(g, q)
    assert abs(c.omega) < 2 * g.S_dual
    p = exp_map(g, c, 1.0)
    assert math.dist(p.as_tuple(), q.as_tuple()) < 1e-8 * (1 + math.hypot(*q.as_tuple()))


def test_log_planar(euclid):
    c = log_map(euclid, HPoint(1, 0, 0))
    assert c.omega == 0 and abs(c.r - 1) < 1e-12
    assert exp_map(euclid, c, 1.0) == HPoint(1.0, 0.0, 0.0)


def test_log_vertical_axis(lp4):
    with pytest.raises(OnVerticalAxis):
        log_map(lp4, HPoint(0, 0, 1))
    with pytest.raises(OnVerticalAxis):
        t_midpoint(lp4, IDENTITY, HPoint(0, 0, 1), 0.5)


# -- distance -----------------------------------------------------------------


@pytest.mark.parametrize("label", NORMS)
@given(x=coord, y=coord)
def test_planar_distance(label, x, y):
    g = geometry(label)
    if math.hypot(x, y) < 1e-6:
        return
    assert abs(distance(g, IDENTITY, HPoint(x, y, 0)) - g.norm(x, y)) < 1e-7


@pytest.mark.parametrize("label", NORMS)
def test_no_shorter_competitor(label):
    # any arc of length r ends within primal distance r of the plane origin
    g = geometry(label)
    for c in random_covs(g, 300, 16):
        x, y, _ = exp_xyz(g, c.phi, c.omega, c.r, 1.0)
        assert g.norm(x, y) <= c.r * (1 + 1e-12)


@pytest.mark.parametrize("label", NORMS)
def test_vertical_distance(label):
    g = geometry(label)
    S = g.S_dual
    for z in (0.3, -1.7, 4.0):
        d = distance(g, IDENTITY, HPoint(0, 0, z))
        assert abs(d - 2 * math.sqrt(S * abs(z))) < 1e-6
        # loops closing at their cut time, over a grid of sweep rates
        best = math.inf
        for om in np.linspace(0.5, 20, 40):
            r = om * math.sqrt(abs(z) / S)
            T = cut_time(g, Covector(0.4, math.copysign(om, z), r))
            x, y, zz = exp_xyz(g, 0.4, math.copysign(om, z), r, T)
            assert math.hypot(x, y) < 1e-9 * r and abs(zz - z) < 1e-9 * (1 + abs(z))
            best = min(best, r * T)
        assert abs(best - d) < 1e-6


@pytest.mark.parametrize("label", NORMS)
def test_left_invariance(label):
    g = geometry(label)
    rng = np.random.default_rng(17)
    for _ in range(15):
        a, p, q = (HPoint(*rng.uniform(-1.5, 1.5, 3)) for _ in range(3))
        d0 = distance(g, p, q)
        assert abs(distance(g, a * p, a * q) - d0) < 1e-8
        m0 = t_midpoint(g, p, q, 0.3)
        m1 = t_midpoint(g, a * p, a * q, 0.3)
        assert np.allclose((a * m0).as_tuple(), m1.as_tuple(), atol=1e-7)


# -- midpoints and inverse geodesics -----------------------------------------


@pytest.mark.parametrize("label", NORMS)
def test_midpoints(label):
    g = geometry(label)
    rng = np.random.default_rng(18)
    for _ in range(15):
        p, q = (HPoint(*rng.uniform(-1.5, 1.5, 3)) for _ in range(2))
        assert np.allclose(t_midpoint(g, p, q, 0).as_tuple(), p.as_tuple(), atol=1e-8)
        assert np.allclose(t_midpoint(g, p, q, 1).as_tuple(), q.as_tuple(), atol=1e-8)
        m = t_midpoint(g, p, q, 0.5)
        d = distance(g, p, q)
        assert abs(distance(g, p, m) - d / 2) < 1e-6
        assert abs(distance(g, m, q) - d / 2) < 1e-6
    for c in random_covs(g, 10, 19):
        q = exp_map(g, c, 1.0)
        for t in (0.25, 0.6):
            assert np.allclose(t_midpoint(g, IDENTITY, q, t).as_tuple(),
                               exp_map(g, c, t).as_tuple(), atol=1e-7)


def test_midpoint_of_equal_points(lp4):
    p = HPoint(0.2, -0.1, 0.3)
    assert t_midpoint(lp4, p, p, 0.4) == p


@pytest.mark.parametrize("label", NORMS)
def test_inverse_geodesic(label):
    g = geometry(label)
    for c in random_covs(g, 10, 20, rmax=1.0):
        for t in (0.3, 0.45):
            q = exp_map(g, c, t)
            p = inverse_geodesic(g, IDENTITY, q)
            assert np.allclose(p.as_tuple(), exp_map(g, c, -t).as_tuple(), atol=1e-7)
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(20):
        m = HPoint(*rng.uniform(-1, 1, 3))
        q = m * HPoint(*rng.uniform(-1, 1, 2), rng.uniform(-0.1, 0.1))
        p = inverse_geodesic(g, m, q)
        assert np.allclose(inverse_geodesic(g, m, p).as_tuple(), q.as_tuple(), atol=1e-6)
        # m is the midpoint only while the doubled arc stays before its cut time
        if abs(log_map(g, inv(m) * q).omega) < g.S_dual:
            assert np.allclose(t_midpoint(g, p, q, 0.5).as_tuple(), m.as_tuple(), atol=1e-6)
            checked += 1
    assert checked >= 5


# -- swept area ---------------------------------------------------------------


def test_swept_area_euclidean(euclid):
    for c in random_covs(euclid, 20, 22):
        assert swept_area_residual(euclid, c, 1.0, 10_000) < 1e-6


def test_swept_area_straight(lp4):
    assert swept_area_residual(lp4, Covector(0.9, 0.0, 1.3), 1.0) < 1e-13


def test_swept_area_lp4_converges(lp4):
    for c in random_covs(lp4, 10, 23):
        assert swept_area_residual(lp4, c, 1.0, 10_000) < 1e-5
        # independent shoelace on the same samples
        ts = np.linspace(0, 1, 10_001)
        x, y, z = exp_xyz(lp4, c.phi, c.omega, c.r, ts)
        assert abs(shoelace(x, y) - z[-1]) == pytest.approx(
            swept_area_residual(lp4, c, 1.0, 10_000), abs=1e-15)
        r1 = swept_area_residual(lp4, c, 1.0, 500)
        r2 = swept_area_residual(lp4, c, 1.0, 1000)
        assert 3.0 < r1 / r2 < 5.0


def test_swept_area_lens(lens):
    # corners of Ω put kinks in the dual angle; the identity still holds
    for c in random_covs(lens, 20, 24):
        assert swept_area_residual(lens, c, 1.0, 10_000) < 1e-5
