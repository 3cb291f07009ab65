"""Distortion coefficients σ and τ of the model spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import OutOfDomain, UsageError


@dataclass(frozen=True)
class DistortionParams:
    K: float
    N: float
    t: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise UsageError(f"t = {self.t} is outside [0, 1]")
        if self.theta < 0:
            raise UsageError(f"θ = {self.theta} is negative")


def _sigma(K: float, N: float, t: float, theta: float) -> float:
    if N <= 0:
        raise UsageError(f"dimension parameter {N} must be positive")
    if K == 0 or theta == 0:
        return t
    k = theta * math.sqrt(abs(K) / N)
    if k < 1e-4:  # series in k; the closed forms lose digits or divide by 0
        return t * (1.0 + math.copysign(1.0, K) * (1.0 - t * t) * k * k / 6.0)
    if K > 0:
        if K * theta * theta >= N * math.pi**2:
            raise OutOfDomain(f"Kθ² = {K * theta * theta:.6g} ≥ Nπ²: coefficient is +∞")
        return math.sin(t * k) / math.sin(k)
    if k > 700:  # sinh overflows; the ratio is e^{-(1-t)k}
        return math.exp(-(1.0 - t) * k) * (1 - math.exp(-2 * t * k)) / (1 - math.exp(-2 * k))
    return math.sinh(t * k) / math.sinh(k)


def sigma(params: DistortionParams) -> float:
    """σ_{K,N}^{(t)}(θ)."""
    return _sigma(params.K, params.N, params.t, params.theta)


def tau(params: DistortionParams) -> float:
    """τ_{K,N}^{(t)}(θ) = t^{1/N} σ_{K,N−1}^{(t)}(θ)^{1−1/N}."""
    K, N, t, theta = params.K, params.N, params.t, params.theta
    if N <= 1:
        raise UsageError(f"N = {N} must exceed 1")
    s = _sigma(K, N - 1.0, t, theta)
    return t ** (1.0 / N) * s ** (1.0 - 1.0 / N)


def tau_value(K: float, N: float, t: float, theta: float) -> float:
    return tau(DistortionParams(K, N, t, theta))
