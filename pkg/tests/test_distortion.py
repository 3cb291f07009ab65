import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcdlab.cd_harness import DistortionParams, sigma, tau, tau_value
from hcdlab.errors import OutOfDomain, UsageError

from oracles import tau_mp

ts = st.floats(0.0, 1.0)


@given(N=st.floats(1.01, 50), theta=st.floats(0, 100))
def test_sigma_flat(N, theta):
    assert sigma(DistortionParams(0.0, N, 0.3, theta)) == 0.3


def test_sigma_small_theta():
    assert abs(sigma(DistortionParams(1.0, 2.0, 0.5, 1e-9)) - 0.5) < 1e-6


def test_sigma_domain():
    with pytest.raises(OutOfDomain):
        sigma(DistortionParams(1.0, 1.0, 0.5, math.pi))
    with pytest.raises(UsageError):
        DistortionParams(0.0, 3.0, 1.5, 1.0)
    with pytest.raises(UsageError):
        DistortionParams(0.0, 3.0, 0.5, -1.0)
    with pytest.raises(UsageError):
        tau(DistortionParams(0.0, 1.0, 0.5, 1.0))


@given(N=st.floats(1.01, 50), t=ts, theta=st.floats(0, 100))
def test_tau_flat(N, t, theta):
    assert tau_value(0.0, N, t, theta) == pytest.approx(t, rel=1e-14, abs=1e-300)


@given(K=st.floats(-10, 10), N=st.floats(2, 20), t=ts)
def test_tau_small_theta(K, N, t):
    assert abs(tau_value(K, N, t, 1e-9) - t) < 1e-6


def test_curvature_sign():
    # sinh(tk)/sinh(k) < t < sin(tk)/sin(k): negative K pulls τ below t
    v = tau_value(-5.0, 3.0, 0.5, 1.0)
    assert v < 0.5
    assert v == pytest.approx(tau_mp(-5, 3, 0.5, 1), rel=1e-13)
    assert tau_value(5.0, 3.0, 0.5, 1.0) > 0.5


@given(K=st.floats(-20, 3), N=st.floats(2, 20), t=ts, theta=st.floats(0, 1.5))
def test_tau_matches_high_precision(K, N, t, theta):
    assert tau_value(K, N, t, theta) == pytest.approx(tau_mp(K, N, t, theta), rel=1e-11, abs=1e-300)


def test_huge_negative_curvature_is_finite():
    v = tau_value(-1e6, 3.0, 0.5, 10.0)
    assert 0 <= v < 1e-100 and math.isfinite(v)


@given(K=st.floats(-10, 3), N=st.floats(2, 20), theta=st.floats(0, 1.5))
def test_monotone_in_t(K, N, theta):
    # for K > 0 monotonicity needs θ√(K/(N−1)) ≤ π/2, past that sin(tk) peaks before t = 1
    if K > 0 and theta * math.sqrt(K / (N - 1)) > math.pi / 2:
        return
    grid = np.linspace(0, 1, 41)
    s = [sigma(DistortionParams(K, N, t, theta)) for t in grid]
    tv = [tau_value(K, N, t, theta) for t in grid]
    assert s[0] == 0 and abs(s[-1] - 1) < 1e-12
    assert np.all(np.diff(s) >= -1e-15) and np.all(np.diff(tv) >= -1e-15)
