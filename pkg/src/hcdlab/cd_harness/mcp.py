"""Measure contraction: flat parts of Ω°, the singular witness and MCP reports.

When Ω has a corner, Ω° has a flat segment.  Geodesics whose dual angle runs
along that segment are straight lines, so for small t all midpoints between
e and a positive-volume set A land on a segment of the x-axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..convex_trig import ConvexBody, trig_xy
from ..errors import (
    ConstructionFailed,
    NoFlatPart,
    OnVerticalAxis,
    UsageError,
    WitnessInvalid,
)
from ..heisenberg import (
    IDENTITY,
    Geometry,
    HPoint,
    exp_xyz,
    level_family,
    log_xyz,
)
from .distortion import tau_value
from .measure import (
    CHUNK,
    Frame,
    MeasureEstimate,
    ball_sampler,
    ball_volume,
    frame_ladder,
    midpoint_cloud,
    point_sampler,
    run_chunks,
    stabilized,
    vanishing,
)
from .records import ViolationRecord, named, params_block

COLLINEAR_TOL = 1e-9
CONFINE_TOL = 1e-9


# -- flat parts ---------------------------------------------------------------


@dataclass(frozen=True)
class FlatSegment:
    psi_start: float
    psi_end: float
    endpoints: tuple[tuple[float, float], tuple[float, float]]
    xbar: float  # x-coordinate of the segment once rotated to be vertical
    rotation: float  # that rotation angle, in (−π/2, π/2]


def _line_dist(p0, p1, x, y):
    ex, ey = p1[0] - p0[0], p1[1] - p0[1]
    n = math.hypot(ex, ey)
    return np.abs((x - p0[0]) * ey - (y - p0[1]) * ex) / n


def flat_parts(body: ConvexBody, n_check: int = 33) -> list[FlatSegment]:
    """Maximal straight segments of ∂body with their angle intervals.

    Candidates come from the body's family; each is checked for collinearity
    on ``n_check`` interior samples and for maximality just past both ends.
    """
    out = []
    for t0, t1 in body.family.flat_thetas:
        x0, y0 = (float(v) for v in trig_xy(body, t0))
        x1, y1 = (float(v) for v in trig_xy(body, t1))
        p0, p1 = (x0, y0), (x1, y1)
        scale = math.hypot(x1 - x0, y1 - y0)
        if scale <= 0:
            continue
        ts = np.linspace(t0, t1, n_check)
        xs, ys = trig_xy(body, ts)
        if np.max(_line_dist(p0, p1, xs, ys)) > COLLINEAR_TOL * (1 + scale):
            continue
        step = 0.05 * (t1 - t0)
        ox, oy = trig_xy(body, np.array([t0 - step, t1 + step]))
        if np.min(_line_dist(p0, p1, ox, oy)) <= COLLINEAR_TOL * (1 + scale):
            continue  # not maximal
        ang = math.atan2(y1 - y0, x1 - x0)
        rot = math.pi / 2 - ang  # turn the segment to point along +y
        rot = (rot + math.pi / 2) % math.pi - math.pi / 2
        if rot <= -math.pi / 2:
            rot += math.pi
        c, s = math.cos(rot), math.sin(rot)
        xbar = c * x0 - s * y0
        out.append(FlatSegment(float(t0), float(t1), (p0, p1), xbar, rot))
    return out


# -- the singular witness -----------------------------------------------------


@dataclass(frozen=True)
class McpWitness:
    box: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]  # φ, ω, r
    t0: float
    A_volume: MeasureEstimate
    max_abs_y: float
    max_abs_z: float
    segment: FlatSegment
    eps: float
    phi0: float
    phi1: float
    rbar: float
    jz_min_length: float
    branching: dict = field(default_factory=dict)
    probe_times: tuple[float, ...] = ()

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.box])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.box])

    def sample_covectors(self, rng, n: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((n, 3))

    def contains(self, phi, omega, r, period: float) -> np.ndarray:
        return in_box(self.box, phi, omega, r, period)


def in_box(box, phi, omega, r, period: float) -> np.ndarray:
    """Membership of covectors in an open box; φ is compared modulo the period."""
    (p0, p1), (w0, w1), (r0, r1) = box
    mid = 0.5 * (p0 + p1)
    dp = (np.asarray(phi) - mid + 0.5 * period) % period - 0.5 * period
    omega, r = np.asarray(omega), np.asarray(r)
    return (np.abs(dp) < 0.5 * (p1 - p0)) & (omega > w0) & (omega < w1) & (r > r0) & (r < r1)


def _corner_t0(box, psi1: float) -> float:
    (p0, p1), (w0, w1), _ = box
    return min((psi1 - p) / w for p in (p0, p1) for w in (w0, w1))


def _image_box(g: Geometry, box, rng, n: int = 4096, pad: float = 0.05):
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    cov = lo + (hi - lo) * rng.random((n, 3))
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(3, -1).T
    cov = np.concatenate([cov, corners])
    pts = np.stack(exp_xyz(g, cov[:, 0], cov[:, 1], cov[:, 2], 1.0), axis=-1)
    a, b = pts.min(axis=0), pts.max(axis=0)
    w = b - a
    return a - pad * w, b + pad * w


def _witness_volume(g: Geometry, box, seed: int, n: int, workers=None):
    """vol G(𝒜; 1) by membership sampling of its bounding box."""
    rng = np.random.default_rng(seed)
    lo, hi = _image_box(g, box, rng)
    vol = float(np.prod(hi - lo))
    period = 2.0 * g.S_dual

    def chunk(rng, m):
        pts = lo + (hi - lo) * rng.random((m, 3))
        phi, om, r, st = log_xyz(g, pts[:, 0], pts[:, 1], pts[:, 2])
        hit = (st == 0) & in_box(box, phi, om, r, period)
        return int(np.count_nonzero(hit)), int(np.count_nonzero(st != 0))

    parts = run_chunks(chunk, n, seed + 1, workers, chunk=1024)
    hits = sum(p[0] for p in parts)
    frac = hits / n
    est = MeasureEstimate(vol * frac, vol * math.sqrt(frac * (1 - frac) / n), n, 0.0, seed)
    return est, (lo, hi)


def _confinement(g: Geometry, cov: np.ndarray, times) -> tuple[float, float]:
    """max |y|, |z| of t-midpoints between e and exp(cov, 1)."""
    q = exp_xyz(g, cov[:, 0], cov[:, 1], cov[:, 2], 1.0)
    phi, om, r, st = log_xyz(g, *q)
    if np.any(st != 0):
        raise WitnessInvalid(f"{int(np.count_nonzero(st))} witness endpoints failed to invert")
    my = mz = 0.0
    for t in times:
        _, y, z = exp_xyz(g, phi, om, r, t)
        my = max(my, float(np.max(np.abs(y))))
        mz = max(mz, float(np.max(np.abs(z))))
    return my, mz


def _level_lines(g, box, psi1, rng, n_probe: int, period: float) -> float:
    """Check the z-interval property at ``n_probe`` endpoints.

    Each probe endpoint (x̃, ỹ, z) is swept through the family of chords of Ω°
    parallel to R₉₀(x̃, ỹ).  The chord ratio must grow strictly with the
    sweep, the family must stay in 𝒜 on an interval around the probe, and the
    heights reached there form an interval J_z of positive length.
    Returns the smallest |J_z| / z found.
    """
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    inner_lo = lo + 0.25 * (hi - lo)
    inner_hi = hi - 0.25 * (hi - lo)
    worst = math.inf
    found = 0
    for _ in range(50 * n_probe):
        if found >= n_probe:
            break
        phi, om, r = inner_lo + (inner_hi - inner_lo) * rng.random(3)
        if phi + om <= psi1 + 0.1 * (hi[1] - lo[1]):
            continue  # stays on the flat up to time 1: z = 0
        x, y, z = (float(v) for v in exp_xyz(g, phi, om, r, 1.0))
        width = 0.25 * (hi[1] - lo[1])
        s = np.linspace(om - width, om + width, 41)
        fphi, fr, fz, F = level_family(g, x, y, s)
        if not np.all(np.diff(F) > 0):
            raise WitnessInvalid(f"chord ratio is not increasing at probe {(phi, om, r)}")
        k = 20  # the probe's own sweep
        if not abs(fz[k] - z) <= 1e-9 * (1 + abs(z)):
            raise WitnessInvalid("level family does not pass through the probe")
        inside = in_box(box, fphi, s, fr, period)
        if not inside[k]:
            raise WitnessInvalid("probe covector recovered outside 𝒜")
        a = b = k
        while a > 0 and inside[a - 1]:
            a -= 1
        while b < len(s) - 1 and inside[b + 1]:
            b += 1
        jz = fz[b] - fz[a]
        if not jz > 0:
            raise WitnessInvalid("z-interval over the probe is degenerate")
        ex, ey, ez = exp_xyz(g, fphi[[a, b]], s[[a, b]], fr[[a, b]], 1.0)
        if not (
            np.allclose(ex, x, atol=1e-9) and np.allclose(ey, y, atol=1e-9)
            and np.allclose(ez, fz[[a, b]], atol=1e-9)
        ):
            raise WitnessInvalid("level family endpoints miss the vertical line")
        worst = min(worst, jz / z)
        found += 1
    if found < n_probe:
        raise WitnessInvalid(f"only {found} of {n_probe} probes left the flat part")
    return worst


def _branching(g: Geometry, phi0, rbar, eps, psi1) -> dict:
    w_hi, w_lo = rbar + 1.8 * eps, rbar - 1.8 * eps
    t_split = (psi1 - phi0) / w_hi
    before = np.linspace(0.0, t_split, 65)[1:]
    after = np.linspace(t_split, 1.0, 65)[1:]

    def gap(ts):
        p = np.stack(exp_xyz(g, phi0, w_hi, rbar, ts))
        q = np.stack(exp_xyz(g, phi0, w_lo, rbar, ts))
        return np.max(np.abs(p - q), axis=0)

    gb, ga = gap(before), gap(after)
    info = {
        "covectors": [[phi0, w_hi, rbar], [phi0, w_lo, rbar]],
        "t_split": t_split,
        "max_gap_before": float(gb.max()),
        "max_gap_after": float(ga.max()),
    }
    if not (gb.max() < CONFINE_TOL and ga.max() > 1e-3):
        raise WitnessInvalid(f"branching pair does not separate cleanly: {info}")
    return info


def mcp_singular_witness(
    norm,
    seed: int,
    n_volume: int = 4096,
    n_confine: int = 10_000,
    n_probe: int = 16,
    workers: int | None = None,
) -> McpWitness:
    """Box 𝒜 of covectors whose short geodesics run along a flat of Ω°."""
    g = norm if isinstance(norm, Geometry) else Geometry(norm)
    reg = g.primal.regularity
    if reg.c1 or not reg.strictly_convex:
        raise UsageError(f"{g.label} is not a strictly convex norm with a corner")
    flats = flat_parts(g.dual)
    if not flats:
        raise NoFlatPart(f"the dual ball of {g.label} has no straight segment")
    seg = flats[0]
    psi0, psi1 = seg.psi_start, seg.psi_end
    period = 2.0 * g.S_dual
    phi0 = 0.5 * (psi0 + psi1)
    phi1 = psi1 + 0.5 * (psi1 - phi0)
    rbar = phi1 - phi0
    eps = 0.9 * min(0.5 * (phi1 - psi1), 0.25 * (psi1 - phi0))
    w = 2.0 * eps
    box = ((phi0 - w, phi0 + w), (rbar - w, rbar + w), (rbar - w, rbar + w))
    t0 = _corner_t0(box, psi1)
    if not t0 > 0:
        raise WitnessInvalid("t0 is not positive")

    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    cov = lo + (hi - lo) * rng.random((n_confine, 3))
    times = (t0 / 8, t0 / 4, t0 / 2)
    my, mz = _confinement(g, cov, times)
    if not max(my, mz) < CONFINE_TOL:
        raise WitnessInvalid(f"midpoints leave the x-axis: |y| ≤ {my:.3e}, |z| ≤ {mz:.3e}")
    jz = _level_lines(g, box, psi1, rng, n_probe, period)
    branch = _branching(g, phi0, rbar, eps, psi1)
    vol, _ = _witness_volume(g, box, seed, n_volume, workers)
    if not vol.ci()[0] > 0:
        raise WitnessInvalid(f"volume of G(𝒜; 1) not separated from 0: {vol}")
    return McpWitness(
        box, t0, vol, my, mz, seg, eps, phi0, phi1, rbar, jz, branch, times
    )


# -- target regions -----------------------------------------------------------


class Region:
    """A target set A: a covering sampler plus integration against volume."""

    label: str

    def sampler(self):
        raise NotImplementedError

    def integrate(self, g: Geometry, apex: HPoint, f, n: int, seed: int, workers=None):
        """∫_A f(d(apex, y)) dy as a MeasureEstimate."""
        raise NotImplementedError


def _apex_distance(g: Geometry, apex: HPoint, pts: np.ndarray):
    a = np.asarray(apex.as_tuple())
    x = pts[:, 0] - a[0]
    y = pts[:, 1] - a[1]
    z = pts[:, 2] - a[2] - 0.5 * (a[0] * pts[:, 1] - pts[:, 0] * a[1])
    return log_xyz(g, x, y, z)


@dataclass(frozen=True)
class BallRegion(Region):
    center: tuple[float, float, float]
    radius: float

    @property
    def label(self) -> str:
        return f"ball(r={self.radius:g})"

    def sampler(self):
        return ball_sampler(self.center, self.radius)

    def integrate(self, g, apex, f, n, seed, workers=None):
        sample = self.sampler()
        vol = ball_volume(self.radius)

        def chunk(rng, m):
            pts = sample(rng, CHUNK)[:m]
            _, _, r, st = _apex_distance(g, apex, pts)
            if np.any(st != 0):
                raise ConstructionFailed("target ball meets the vertical axis through the apex")
            v = np.asarray(f(r), float)
            return float(v.sum()), float((v * v).sum())

        parts = run_chunks(chunk, n, seed, workers)
        s1 = math.fsum(p[0] for p in parts)
        s2 = math.fsum(p[1] for p in parts)
        mean = s1 / n
        sd = math.sqrt(max(0.0, s2 / n - mean * mean))
        return MeasureEstimate(vol * mean, vol * sd / math.sqrt(n), n, 0.0, seed)


@dataclass(frozen=True)
class WitnessRegion(Region):
    """G(𝒜; 1) for a singular witness; the apex must be e."""

    g: Geometry
    witness: McpWitness

    label = "witness"

    def sampler(self):
        w = self.witness
        lo, hi = w.lo, w.hi
        g = self.g

        def sample(rng, n):
            c = lo + (hi - lo) * rng.random((n, 3))
            return np.stack(exp_xyz(g, c[:, 0], c[:, 1], c[:, 2], 1.0), axis=-1)

        return sample

    def integrate(self, g, apex, f, n, seed, workers=None):
        if apex != IDENTITY:
            raise UsageError("the witness region is built for the apex e")
        rng = np.random.default_rng(seed)
        lo, hi = _image_box(g, self.witness.box, rng)
        vol = float(np.prod(hi - lo))
        period = 2.0 * g.S_dual

        def chunk(rng, m):
            pts = lo + (hi - lo) * rng.random((m, 3))
            phi, om, r, st = log_xyz(g, pts[:, 0], pts[:, 1], pts[:, 2])
            hit = (st == 0) & self.witness.contains(phi, om, r, period)
            v = np.where(hit, np.asarray(f(np.where(hit, r, 0.0)), float), 0.0)
            return float(v.sum()), float((v * v).sum())

        parts = run_chunks(chunk, n, seed + 1, workers, chunk=1024)
        s1 = math.fsum(p[0] for p in parts)
        s2 = math.fsum(p[1] for p in parts)
        mean = s1 / n
        sd = math.sqrt(max(0.0, s2 / n - mean * mean))
        return MeasureEstimate(vol * mean, vol * sd / math.sqrt(n), n, 0.0, seed)


def ball_target(g: Geometry, seed: int, radius: float = 0.05, omega: float = math.pi, r: float = 1.0):
    """Ball around exp(φ, ±ω, r; 1) with φ and the sign drawn from the seed."""
    rng = np.random.default_rng(seed)
    phi = float(rng.uniform(0.0, 2.0 * g.S_dual))
    om = omega if rng.random() < 0.5 else -omega
    c = tuple(float(v) for v in exp_xyz(g, phi, om, r, 1.0))
    return BallRegion(c, radius)


# -- the report ---------------------------------------------------------------


@dataclass(frozen=True)
class MCPConfig:
    n_samples: int = 200_000
    n_rhs: int = 20_000
    voxel: float = 0.5  # coarsest voxel side in the cloud's frame
    levels: int = 3
    workers: int | None = None


def _frame(points: np.ndarray) -> Frame:
    """Whitening frame; flat directions are floored at 1e-6 of the widest variance."""
    pts = np.asarray(points, float)
    w, V = np.linalg.eigh(np.cov(pts.T))
    w = np.maximum(w, 1e-6 * w.max())
    return Frame(pts.mean(axis=0), V / np.sqrt(w))


def mcp_report(
    norm,
    apex: HPoint,
    A: Region,
    t: float,
    K: float,
    N: float,
    seed: int,
    cfg: MCPConfig = MCPConfig(),
) -> ViolationRecord:
    """Test 𝔪(M_t({apex}, A)) ≥ ∫_A τ^N(d(apex, y)) dy."""
    g = norm if isinstance(norm, Geometry) else Geometry(norm)
    if not 0 < t <= 1:
        raise UsageError("t must lie in (0, 1]")
    if N <= 1:
        raise UsageError("N must exceed 1")
    try:
        pts, dropped = midpoint_cloud(
            g, point_sampler(apex.as_tuple()), A.sampler(), t, cfg.n_samples, seed, cfg.workers
        )
    except OnVerticalAxis as exc:
        raise ConstructionFailed(str(exc)) from exc
    ladder = frame_ladder(pts, cfg.voxel, seed, cfg.levels, _frame(pts))
    vals = [e.value for e in ladder]
    stable = stabilized(ladder)
    shrinking = vanishing(ladder)

    def weight(d):
        return np.array([tau_value(K, N, t, float(x)) ** N for x in np.ravel(d)])

    if K == 0:
        weight = lambda d: np.full(np.shape(d), t**N)  # noqa: E731
    rhs_est = A.integrate(g, apex, weight, cfg.n_rhs, seed + 1, cfg.workers)
    rhs = rhs_est.value
    rhs_low = rhs_est.ci()[0]
    lhs = max(vals) if not shrinking else vals[-1]
    violated = bool(rhs_low > 0 and ((stable and max(vals) < rhs_low) or (shrinking and vals[-1] < rhs_low)))
    est = [named(f"midpoint_set@{e.voxel:.3g}", e) for e in ladder]
    est.append(named("rhs_integral", rhs_est))
    return ViolationRecord(
        experiment="mcp",
        norm=g.label,
        params=params_block(K, N, t, None, seed),
        lhs=lhs,
        rhs=rhs,
        margin=(rhs - lhs) / rhs if rhs > 0 else float("nan"),
        violated=violated,
        estimates=est,
        provenance={"grid": "whitened", "voxels": [e.voxel for e in ladder], "samples": cfg.n_samples},
        details={
            "apex": list(apex.as_tuple()),
            "target": A.label,
            "stabilized": stable,
            "vanishing": shrinking,
            "dropped": dropped,
            "max_abs_y": float(np.max(np.abs(pts[:, 1] - apex.y))) if len(pts) else 0.0,
            "max_abs_z": float(np.max(np.abs(pts[:, 2] - apex.z))) if len(pts) else 0.0,
        },
    )
