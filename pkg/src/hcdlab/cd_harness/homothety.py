"""Volume contraction of geodesic homotheties Ω_t^p = {M_t(p, q) : q ∈ Ω}."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConstructionFailed, OnVerticalAxis, UsageError
from ..heisenberg import Geometry, HPoint, exp_xyz, hmul_arrays
from ..jacobian import ExponentFit, scaling_exponent
from .measure import (
    MeasureEstimate,
    Sampler,
    ball_sampler,
    frame_ladder,
    midpoint_cloud,
    point_sampler,
    whitening_frame,
)

HOMOTHETY_GRID = tuple(2.0**-k for k in range(1, 7))


def translated_sampler(p: HPoint, sampler: Sampler) -> Sampler:
    """Samples of p ⋆ Ω; left translation is affine with unit determinant."""
    px, py, pz = p.as_tuple()

    def sample(rng, n):
        q = sampler(rng, n)
        return np.stack(hmul_arrays(px, py, pz, q[:, 0], q[:, 1], q[:, 2]), axis=-1)

    return sample


def default_target(g: Geometry, radius: float = 0.05, phi: float = 0.7, omega: float = 0.3):
    """Small ball around the endpoint of a slowly turning unit geodesic."""
    c = tuple(float(v) for v in exp_xyz(g, phi, omega, 1.0, 1.0))
    return ball_sampler(c, radius)


def homothety_volumes(
    g: Geometry,
    p: HPoint,
    sampler: Sampler,
    t_grid,
    seed: int,
    n: int = 100_000,
    voxel: float = 0.25,
    workers: int | None = None,
) -> list[MeasureEstimate]:
    """Voxel volume of Ω_t^p at each t, each in the cloud's own whitening frame.

    A common frame-relative voxel keeps the discretization bias the same
    fraction at every t, so it cancels in the log-log slope.
    """
    out = []
    for t in t_grid:
        if not 0 < t <= 1:
            raise UsageError(f"t = {t} is outside (0, 1]")
        try:
            pts, _ = midpoint_cloud(g, point_sampler(p.as_tuple()), sampler, t, n, seed, workers)
        except OnVerticalAxis as exc:
            raise ConstructionFailed(str(exc)) from exc
        frame = whitening_frame(pts)
        out.append(frame_ladder(pts, voxel, seed, 1, frame)[0])
    return out


def homothety_exponent(
    norm,
    p: HPoint,
    sampler: Sampler,
    seed: int,
    t_grid=HOMOTHETY_GRID,
    n: int = 100_000,
    voxel: float = 0.25,
    workers: int | None = None,
) -> ExponentFit:
    """Fitted exponent d in vol(Ω_t^p) ∼ t^d; 5 for every C¹ norm."""
    g = norm if isinstance(norm, Geometry) else Geometry(norm)
    vols = homothety_volumes(g, p, sampler, t_grid, seed, n, voxel, workers)
    return scaling_exponent([(t, v.value) for t, v in zip(t_grid, vols)])


def unit_time_ratio(
    norm, p: HPoint, sampler: Sampler, seed: int, n: int = 100_000, voxel: float = 0.25
) -> float:
    """vol(Ω_1^p) / vol(Ω) against an independent sample of Ω on a shared frame.

    At t = 1 the homothety is the identity, so the ratio is 1 up to
    estimator noise.
    """
    g = norm if isinstance(norm, Geometry) else Geometry(norm)
    pts, _ = midpoint_cloud(g, point_sampler(p.as_tuple()), sampler, 1.0, n, seed)
    ref = sampler(np.random.default_rng([seed, 1]), n)
    frame = whitening_frame(ref)
    a = frame_ladder(pts, voxel, seed, 1, frame)[0].value
    b = frame_ladder(ref, voxel, seed, 1, frame)[0].value
    return a / b if b > 0 else math.nan
