"""Monte Carlo and voxel-occupancy volume estimators.

Work is cut into fixed-size chunks, each with its own child of one
``SeedSequence``.  Chunks are independent of the worker count, so results are
bit-identical for any value of ``HCDLAB_THREADS``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import EmptyBox, OnVerticalAxis, UsageError
from ..heisenberg import Geometry, t_midpoint_arrays

CHUNK = 16384
MAX_DROP_RATE = 1e-3

Sampler = Callable[[np.random.Generator, int], np.ndarray]
PairSampler = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    stderr: float
    n_samples: int
    voxel: float
    seed: int
    coverage: float = 1.0  # Good–Turing sample coverage of voxel estimates

    def ci(self, z: float = 2.576) -> tuple[float, float]:
        return (self.value - z * self.stderr, self.value + z * self.stderr)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "voxel": self.voxel,
            "seed": self.seed,
            "coverage": self.coverage,
        }


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("HCDLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"HCDLAB_THREADS={env!r} is not an integer") from None
    return 1


def run_chunks(fn, n: int, seed: int, workers: int | None = None, chunk: int = CHUNK) -> list:
    """Apply ``fn(rng, size)`` to consecutive chunks; results in chunk order."""
    if n <= 0:
        raise UsageError("sample count must be positive")
    sizes = [chunk] * (n // chunk) + ([n % chunk] if n % chunk else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.Generator(np.random.PCG64(s)), m) for s, m in zip(seqs, sizes)]
    w = worker_count(workers)
    if w == 1 or len(jobs) == 1:
        return [fn(rng, m) for rng, m in jobs]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _box(box) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray([b[0] for b in box], float)
    hi = np.asarray([b[1] for b in box], float)
    if lo.shape != (3,) or not np.all(hi > lo):
        raise EmptyBox(f"box {box} has no volume")
    return lo, hi


def mc_integral(f, box, n: int, seed: int, workers: int | None = None) -> MeasureEstimate:
    """∫_box f by uniform sampling; ``f`` maps an (m, 3) array to m weights."""
    lo, hi = _box(box)
    vol = float(np.prod(hi - lo))

    def chunk(rng, m):
        pts = lo + (hi - lo) * rng.random((CHUNK, 3))[:m]
        w = np.asarray(f(pts), float)
        return float(w.sum()), float((w * w).sum())

    parts = run_chunks(chunk, n, seed, workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(0.0, s2 / n - mean * mean)
    return MeasureEstimate(vol * mean, vol * math.sqrt(var / n), n, 0.0, seed)


def mc_volume(indicator, box, n: int, seed: int, workers: int | None = None) -> MeasureEstimate:
    """Hit fraction times box volume, with binomial standard error."""
    return mc_integral(lambda p: np.asarray(indicator(p), bool).astype(float), box, n, seed, workers)


def voxel_volume(points: np.ndarray, h: float) -> tuple[float, int, int]:
    """Occupied-voxel volume of a point cloud on the grid hℤ³.

    Returns (volume, occupied voxels, voxels hit exactly once).
    """
    if not h > 0:
        raise UsageError("voxel size must be positive")
    pts = np.asarray(points, float)
    if pts.size == 0:
        return 0.0, 0, 0
    idx = np.floor(pts / h).astype(np.int64)
    idx -= idx.min(axis=0)
    span = idx.max(axis=0) + 1
    if float(np.prod(span.astype(float))) < 2.0**62:
        key = idx[:, 0] + span[0] * (idx[:, 1] + span[1] * idx[:, 2])
        _, counts = np.unique(key, return_counts=True)
    else:
        _, counts = np.unique(idx, axis=0, return_counts=True)
    occ = int(counts.size)
    return occ * h**3, occ, int(np.count_nonzero(counts == 1))


def voxel_estimate(points: np.ndarray, h: float, seed: int) -> MeasureEstimate:
    vol, occ, single = voxel_volume(points, h)
    n = len(points)
    coverage = 1.0 - single / n if n else 0.0
    return MeasureEstimate(vol, 0.0, n, h, seed, coverage)


def voxel_ladder(points: np.ndarray, h: float, seed: int, levels: int = 3) -> list[MeasureEstimate]:
    """Voxel estimates at h, h/2, h/4, …"""
    return [voxel_estimate(points, h / 2**k, seed) for k in range(levels)]


@dataclass(frozen=True)
class Frame:
    """Affine frame z = (p − center)·W in which a cloud has unit covariance."""

    center: np.ndarray
    W: np.ndarray

    @property
    def unit_volume(self) -> float:
        """Lebesgue volume of one unit cube of the frame."""
        return 1.0 / abs(float(np.linalg.det(self.W)))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, float) - self.center) @ self.W


def whitening_frame(points: np.ndarray) -> Frame:
    pts = np.asarray(points, float)
    if len(pts) < 4:
        raise UsageError("need at least 4 points to fit a frame")
    w, V = np.linalg.eigh(np.cov(pts.T))
    if not np.all(w > 0):
        raise UsageError("point cloud is degenerate")
    return Frame(pts.mean(axis=0), V / np.sqrt(w))


def frame_ladder(
    points: np.ndarray, h: float, seed: int, levels: int = 3, frame: Frame | None = None
) -> list[MeasureEstimate]:
    """Voxel ladder taken in a whitening frame, reported in Lebesgue units.

    Voxels of side h in the frame are parallelepipeds; the reported ``voxel``
    is the side of the cube with the same volume.
    """
    frame = whitening_frame(points) if frame is None else frame
    z = frame.apply(points)
    unit = frame.unit_volume
    out = []
    for k in range(levels):
        hk = h / 2**k
        e = voxel_estimate(z, hk, seed)
        out.append(
            MeasureEstimate(e.value * unit, 0.0, e.n_samples, hk * unit ** (1 / 3), seed, e.coverage)
        )
    return out


def stabilized(ests: list[MeasureEstimate], slack: float = 0.03, step: float = 0.3) -> bool:
    """Non-increasing under refinement (within ``slack``) and settling.

    The last refinement may change the value by at most ``step`` relative, and
    the finest level must be well sampled.
    """
    v = [e.value for e in ests]
    if any(x <= 0 for x in v):
        return False
    mono = all(b <= a * (1 + slack) for a, b in zip(v, v[1:]))
    settle = abs(v[-1] - v[-2]) <= step * v[-2]
    return mono and settle and ests[-1].coverage >= 0.9


def vanishing(ests: list[MeasureEstimate], factor: float = 2.5) -> bool:
    """Each halving of h shrinks the estimate by at least ``factor``.

    A set of dimension d < 3 loses a factor 2^{3−d}; a true volume does not.
    """
    v = [e.value for e in ests]
    return all(b * factor <= a for a, b in zip(v, v[1:]))


def midpoint_cloud(
    g: Geometry,
    A_sampler: Sampler | None,
    B_sampler: Sampler | None,
    t: float,
    n_pairs: int,
    seed: int,
    workers: int | None = None,
    max_drop: float = MAX_DROP_RATE,
    pair_sampler: PairSampler | None = None,
) -> tuple[np.ndarray, int]:
    """t-midpoints of sampled pairs, with the count of dropped pairs.

    Pairs come from independent draws of the two samplers, or jointly from
    ``pair_sampler``.  Rows with non-finite coordinates count as dropped.
    """
    if pair_sampler is None:
        if A_sampler is None or B_sampler is None:
            raise UsageError("need both samplers or a pair sampler")

        def pair_sampler(rng, n):
            return np.asarray(A_sampler(rng, n), float), np.asarray(B_sampler(rng, n), float)

    def chunk(rng, m):
        # full-size draws keep every chunk a prefix of the larger run
        a, b = pair_sampler(rng, CHUNK)
        a, b = np.asarray(a, float)[:m], np.asarray(b, float)[:m]
        fin = np.isfinite(a).all(axis=1) & np.isfinite(b).all(axis=1)
        mids, st = t_midpoint_arrays(g, a[fin], b[fin], t)
        ok = st == 0
        return mids[ok], int(m - np.count_nonzero(ok))

    parts = run_chunks(chunk, n_pairs, seed, workers)
    dropped = sum(p[1] for p in parts)
    if dropped > max_drop * n_pairs:
        raise OnVerticalAxis(
            f"{dropped} of {n_pairs} pairs have no unique geodesic (tolerance {max_drop:.1%})"
        )
    return np.concatenate([p[0] for p in parts]), dropped


def midpoint_set_volume(
    g: Geometry,
    A_sampler: Sampler,
    B_sampler: Sampler,
    t: float,
    n_pairs: int,
    voxel: float,
    seed: int,
    workers: int | None = None,
) -> MeasureEstimate:
    """Occupied-voxel volume of M_t(A, B) from ``n_pairs`` sampled pairs."""
    pts, _ = midpoint_cloud(g, A_sampler, B_sampler, t, n_pairs, seed, workers)
    return voxel_estimate(pts, voxel, seed)


# -- samplers -----------------------------------------------------------------


def ball_sampler(center, radius: float) -> Sampler:
    """Uniform points in the Euclidean ball of ℝ³."""
    c = np.asarray(center, float)

    def sample(rng, n):
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        return c + radius * np.cbrt(rng.random(n))[:, None] * v

    return sample


def point_sampler(p) -> Sampler:
    p = np.asarray(p, float)
    return lambda rng, n: np.broadcast_to(p, (n, 3)).copy()


def pool_sampler(pool: np.ndarray) -> Sampler:
    """Draw with replacement from a precomputed point pool."""
    pool = np.asarray(pool, float)
    return lambda rng, n: pool[rng.integers(0, len(pool), n)]


def ball_volume(radius: float) -> float:
    return 4.0 / 3.0 * math.pi * radius**3
