"""Randomized checkers for the inequalities behind the isodiametric stability result.

Every checker samples admissible configurations from a seeded substream,
evaluates the geometric quantity with :mod:`geometry_core` primitives and
compares it with the closed-form bound.  Results are :class:`CheckReport`
records that serialize to one JSON object per line; the wall-clock duration
is kept out of the serialized form so reruns are byte-identical.

``tighten`` multiplies each bound (or shrinks the allowed constant) and is
only meant for sanity runs that confirm a checker can fail.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, Delaunay

from .bodies import (
    BallPolytope,
    PointCloud,
    _sample_gap,
    ball_body,
    cap_cut_ball,
    circumradius,
    complete,
    depth_at,
    diameter,
    enclosing_ball,
    inradius,
    parallel_body,
    reuleaux_triangle,
)
from . import kernels
from .errors import DomainError, NotApplicable
from .geometry_core import (
    Kind,
    Space,
    angle,
    ball_outer_normal,
    direction,
    distance,
    distance_to_chord,
    exp_map,
    geodesic_point,
    log_map,
    perpendicular_bisector,
    reflect,
    reflect_vector,
    side,
    tangent_angle,
    tangent_basis,
    unit_tangent,
)
from .measures import (
    ball_volume,
    make_rng,
    mc_volume,
    sample_ball,
    stability_constants,
    write_csv,
)
from .projections import chart_forward_array
from .symmetrize import two_point_cloud, two_point_membership

SIGMA = 3.0
MC_CHUNK = 1 << 16


def _py(v):
    if isinstance(v, dict):
        return {k: _py(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_py(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_py(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


@dataclass
class CheckReport:
    """Outcome of one checker run.

    ``margin`` is measured minus bound at the worst trial, with the sign
    arranged so that non-negative is good.  Monte Carlo checks pass when
    ``margin >= -sigma_slack * sigma`` at every trial.
    """

    check_name: str
    space: str
    dim: int
    parameters: dict
    trials: int
    measured: dict
    bound: float | None
    margin: float
    passed: bool
    seed: int
    sigma_slack: float = 0.0
    notes: str = ""
    duration: float = field(default=0.0, compare=False)

    def as_dict(self) -> dict:
        keys = ["check_name", "space", "dim", "parameters", "trials", "measured", "bound",
                "margin", "passed", "seed", "sigma_slack", "notes"]
        return {k: _py(getattr(self, k)) for k in keys}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), separators=(",", ":"), allow_nan=True)


@dataclass
class ScalingFit:
    """Log-log fit of a response against a strictly decreasing positive grid."""

    eps: list
    values: list
    slope: float
    slope_stderr: float
    intercept: float
    expected: float
    low_confidence: bool
    passed: bool
    space: str = ""
    dim: int = 0
    D: float = 0.0
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.eps, dtype=float)
        if np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise DomainError("grid must be strictly decreasing and positive")

    def as_dict(self) -> dict:
        keys = ["space", "dim", "D", "eps", "values", "slope", "slope_stderr", "intercept",
                "expected", "low_confidence", "passed", "seed", "extra"]
        return {k: _py(getattr(self, k)) for k in keys}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), separators=(",", ":"))


def _stats(a):
    a = np.asarray(a, dtype=float)
    return {"min": float(a.min()), "mean": float(a.mean()), "max": float(a.max())}


def _finish(name, sp, params, trials, measured, bound, margins, seed, t0, sigma=None,
            notes="", extra=None):
    margins = np.atleast_1d(np.asarray(margins, dtype=float))
    if sigma is None:
        slack = 0.0
        score = margins
    else:
        slack = SIGMA
        score = margins + SIGMA * np.atleast_1d(np.asarray(sigma, dtype=float))
    worst = int(np.argmin(score))
    stats = _stats(measured) if measured is not None else {}
    if sigma is not None:
        stats["sigma_at_worst"] = float(np.atleast_1d(sigma)[worst])
    if extra:
        stats.update(extra)
    b = np.atleast_1d(np.asarray(bound, dtype=float)) if bound is not None else None
    return CheckReport(
        check_name=name,
        space=sp.kind.value if isinstance(sp, Space) else str(sp),
        dim=sp.dim if isinstance(sp, Space) else int(params.get("n", 0)),
        parameters=params,
        trials=int(trials),
        measured=stats,
        bound=None if b is None else float(b[worst % b.size]),
        margin=float(margins[worst]),
        passed=bool(np.all(score >= 0)),
        seed=int(seed),
        sigma_slack=slack,
        notes=notes,
        duration=time.perf_counter() - t0,
    )


def _frames(sp: Space, count, rng, k=2):
    """``count`` random orthonormal ``k``-frames of the tangent space at ``e``."""
    g = rng.standard_normal((count, sp.dim, k))
    q, _ = np.linalg.qr(g)
    basis = tangent_basis(sp, sp.origin())
    return np.einsum("cdk,da->cka", q, basis)


def _corner_mask(count, frac, rng):
    m = np.zeros(count, dtype=bool)
    m[: int(frac * count)] = True
    return rng.permutation(m)


# ------------------------------------------------------ reflected normals


def _ballboundary_bound(sp: Space, R, eta):
    if sp.kind is Kind.EUCLIDEAN:
        return 2 * eta / (math.sqrt(26) * R)
    if sp.kind is Kind.HYPERBOLIC:
        return math.sinh(eta) / (math.sinh(2.5 * R) * math.sqrt(2) * math.cosh(R))
    return 3 * eta / (8 * math.sqrt(2) * R)


def _ballboundary_domain(sp: Space, R, eta):
    if R <= 0 or eta <= 0:
        raise DomainError("R and eta must be positive")
    if sp.kind is Kind.SPHERICAL:
        if R >= math.pi / 2 or eta >= min(R / 3, math.pi / 6 - R / 3):
            raise DomainError("no admissible configurations for these (R, eta) on the sphere")
    elif eta >= R / 2:
        raise DomainError("eta must be below R/2")


def ballboundary_configs(sp: Space, R, eta, trials, rng, corner_frac=0.2):
    """Admissible ``(y0, y1, p)`` triples; a fraction sits on the corner ``d(p, y0) = R + eta``.

    Corners alternate between a right angle at ``y0`` and a nearly
    collinear configuration.
    """
    F = _frames(sp, trials, rng)
    w1, wp = F[:, 0], F[:, 1]
    alpha = (0.5 * math.pi) * (1.0 - rng.random(trials))
    lmax = 3 * R + eta
    if sp.kind is Kind.SPHERICAL:
        lmax = min(lmax, 0.5 * math.pi)
    ell = R + eta + (lmax - R - eta) * rng.random(trials)
    corner = _corner_mask(trials, corner_frac, rng)
    ell[corner] = R + eta
    ci = np.nonzero(corner)[0]
    alpha[ci[::2]] = 0.5 * math.pi
    alpha[ci[1::2]] = 1e-3
    e = sp.origin()
    y0 = np.broadcast_to(e, w1.shape).copy()
    y1 = geodesic_point(sp, e, w1, R)
    w2 = np.cos(alpha)[:, None] * w1 + np.sin(alpha)[:, None] * wp
    p = geodesic_point(sp, e, w2, ell)
    return y0, y1, p


def reflected_normal_angle(sp: Space, y0, y1, p):
    """Angle at ``p`` between the mirrored ball normal at ``y1`` and the outward radial direction."""
    H = perpendicular_bisector(sp, p, y1)
    v = reflect_vector(H, ball_outer_normal(sp, y0, y1))
    u = -direction(sp, p, y0)
    return tangent_angle(sp, v, u)


def check_ballboundary(sp: Space, R=1.0, eta=0.1, trials=10_000, seed=0, tighten=1.0):
    t0 = time.perf_counter()
    _ballboundary_domain(sp, R, eta)
    rng = make_rng(seed, "ballboundary", sp.code, sp.dim)
    y0, y1, p = ballboundary_configs(sp, R, eta, trials, rng)
    ang = reflected_normal_angle(sp, y0, y1, p)
    bound = tighten * _ballboundary_bound(sp, R, eta)
    return _finish("ballboundary", sp, {"R": R, "eta": eta, "tighten": tighten}, trials, ang,
                   bound, ang - bound, seed, t0)


def check_ballboundary0(sp: Space, R=1.0, trials=10_000, seed=0, offset=0.05):
    """Mirrored normals agree exactly when ``p`` is on the sphere, and differ off it."""
    t0 = time.perf_counter()
    if sp.kind is Kind.SPHERICAL and R >= math.pi / 2:
        raise DomainError("spherical radius must be below pi/2")
    rng = make_rng(seed, "ballboundary0", sp.code, sp.dim)
    F = _frames(sp, trials, rng)
    w, wp = F[:, 0], F[:, 1]
    e = sp.origin()
    y0 = np.broadcast_to(e, w.shape).copy()
    y1 = geodesic_point(sp, e, w, R)
    y2 = geodesic_point(sp, e, -w, R)
    beta = 0.05 + (math.pi - 0.1) * rng.random(trials)
    dp = np.cos(beta)[:, None] * w + np.sin(beta)[:, None] * wp

    def mismatch(r):
        p = geodesic_point(sp, e, dp, r)
        v1 = reflect_vector(perpendicular_bisector(sp, p, y1), ball_outer_normal(sp, y0, y1))
        v2 = reflect_vector(perpendicular_bisector(sp, p, y2), ball_outer_normal(sp, y0, y2))
        return tangent_angle(sp, v1, v2)

    on = mismatch(np.full(trials, R))
    off = np.minimum(mismatch(np.full(trials, R * (1 - offset))),
                     mismatch(np.full(trials, R * (1 + offset))))
    margins = np.minimum(1e-9 - on, off - 1e-4)
    return _finish("ballboundary0", sp, {"R": R, "offset": offset}, trials, on, 1e-9, margins,
                   seed, t0, extra={"on_sphere_max": float(on.max()),
                                    "off_sphere_min": float(off.min())})


# ---------------------------------------------------------- Pythagorean


def _pythagorean_bound(sp: Space, R, eta):
    if sp.kind is Kind.EUCLIDEAN:
        return math.sqrt(2 * R * eta)
    if sp.kind is Kind.HYPERBOLIC:
        return math.sqrt(math.tanh(R) * eta)
    return math.sqrt(math.tan(R) * eta)


def _bisect_length(f, lo, hi, iters=80):
    """Vectorized bisection for the first root of an increasing ``f`` on ``[lo, hi]``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = f(mid) >= 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return hi


def pythagorean_configs(sp: Space, R, eta, trials, rng, corner_frac=0.2):
    """Triangles with ``d(y0, y1) = R``, angle at ``y1`` at most a right angle, ``d(y0, p) >= R + eta``."""
    F = _frames(sp, trials, rng)
    w, wp = F[:, 0], F[:, 1]
    e = sp.origin()
    y1 = geodesic_point(sp, e, w, R)
    a = direction(sp, y1, e)  # at y1, toward y0.  wp is tangent at y1 and orthogonal to a.
    cap = 3 * R + eta
    if sp.kind is Kind.SPHERICAL:
        cap = min(cap, math.pi - 1e-6)
    beta = np.empty(trials)
    ell = np.empty(trials)
    todo = np.arange(trials)
    while todo.size:
        b = 0.5 * math.pi * rng.random(todo.size)
        ln = cap * rng.random(todo.size)
        u = np.cos(b)[:, None] * a[todo] + np.sin(b)[:, None] * wp[todo]
        ok = distance(sp, e, geodesic_point(sp, y1[todo], u, ln)) >= R + eta
        beta[todo[ok]] = b[ok]
        ell[todo[ok]] = ln[ok]
        todo = todo[~ok]
    corner = np.nonzero(_corner_mask(trials, corner_frac, rng))[0]
    if corner.size:
        beta[corner] = 0.5 * math.pi
        uc = wp[corner]

        def excess(t):
            return distance(sp, e, geodesic_point(sp, y1[corner], uc, t)) - (R + eta)

        ell[corner] = _bisect_length(excess, np.zeros(corner.size), np.full(corner.size, R + eta))
    u = np.cos(beta)[:, None] * a + np.sin(beta)[:, None] * wp
    p = geodesic_point(sp, y1, u, ell)
    y0 = np.broadcast_to(e, w.shape).copy()
    return y0, y1, p


def check_pythagorean(sp: Space, R=1.0, eta=0.1, trials=10_000, seed=0, tighten=1.0):
    t0 = time.perf_counter()
    if R <= 0 or eta < 0:
        raise DomainError("need R > 0 and eta >= 0")
    if sp.kind is Kind.SPHERICAL and (R > math.pi / 4 or eta > math.pi / 4):
        raise DomainError("spherical R and eta must be at most pi/4")
    rng = make_rng(seed, "pythagorean", sp.code, sp.dim)
    y0, y1, p = pythagorean_configs(sp, R, eta, trials, rng)
    d = distance(sp, y1, p)
    bound = tighten * _pythagorean_bound(sp, R, eta)
    # bisection leaves corner points at most a few ulps past R + eta
    return _finish("pythagorean", sp, {"R": R, "eta": eta, "tighten": tighten}, trials, d, bound,
                   d - bound, seed, t0)


# ------------------------------------------------------------ triangles


def _triangle_points(sp: Space, trials, rng, reach):
    return [sample_ball(sp, sp.origin(), reach, trials, rng) for _ in range(3)]


def check_sumtwoangles(sp: Space, trials=10_000, seed=0, tighten=1.0, corner_frac=0.2):
    """Any two angles of a triangle sum to less than ``pi / tighten``.

    On the sphere every side is kept below ``pi/2``.  A fraction of the
    triangles is nearly degenerate, where the sum approaches ``pi``.
    """
    t0 = time.perf_counter()
    rng = make_rng(seed, "sumtwoangles", sp.code, sp.dim)
    reach = 0.77 if sp.kind is Kind.SPHERICAL else 1.5
    A = np.empty((trials, sp.ambient))
    B = np.empty_like(A)
    C = np.empty_like(A)
    todo = np.arange(trials)
    while todo.size:
        a, b, c = _triangle_points(sp, todo.size, rng, reach)
        near = rng.random(todo.size) < corner_frac
        if near.any():
            # squeeze c toward the segment [a, b]
            lam = rng.random(int(near.sum()))
            m = geodesic_point(sp, a[near], direction(sp, a[near], b[near]),
                               lam * distance(sp, a[near], b[near]))
            s = 10.0 ** rng.uniform(-4, -1, int(near.sum()))
            c[near] = geodesic_point(sp, m, direction(sp, m, c[near]), s * distance(sp, m, c[near]))
        ok = np.ones(todo.size, dtype=bool)
        for x, y in ((a, b), (b, c), (c, a)):
            dd = distance(sp, x, y)
            ok &= dd > 1e-12
            if sp.kind is Kind.SPHERICAL:
                ok &= dd < 0.5 * math.pi
        A[todo[ok]], B[todo[ok]], C[todo[ok]] = a[ok], b[ok], c[ok]
        todo = todo[~ok]
    ga = angle(sp, B, A, C)
    gb = angle(sp, A, B, C)
    gc = angle(sp, A, C, B)
    worst = np.maximum(np.maximum(ga + gb, gb + gc), ga + gc)
    bound = math.pi / tighten
    return _finish("sumtwoangles", sp, {"tighten": tighten}, trials, worst, bound, bound - worst,
                   seed, t0)


def angle_excess(sp: Space, y0, y1, z):
    """``angle(y0, y1, z) - angle(y0, z, y1)``: angle at ``y1`` minus angle at ``z``."""
    return angle(sp, y0, y1, z) - angle(sp, y0, z, y1)


def check_angle_monotone(sp: Space, trials=10_000, seed=0):
    """Moving ``z`` toward ``y0`` along ``[z, y0]`` strictly lowers the angle excess."""
    t0 = time.perf_counter()
    rng = make_rng(seed, "anglemonotone", sp.code, sp.dim)
    reach = 0.7 if sp.kind is Kind.SPHERICAL else 1.5
    y0, y1, z = _triangle_points(sp, trials, rng, reach)
    lam = 0.01 + 0.98 * rng.random(trials)
    w = geodesic_point(sp, z, direction(sp, z, y0), lam * distance(sp, z, y0))
    margin = angle_excess(sp, y0, y1, z) - angle_excess(sp, y0, y1, w)
    return _finish("angle_monotone", sp, {}, trials, margin, 0.0, margin, seed, t0)


# ------------------------------------------------- Euclidean hull sliver


def ballconvexhull_volume(n, r, alpha, samples, rng):
    """MC volume of the hull of two touching-at-``p`` balls beyond both tangent halfspaces.

    ``p`` is the origin, the centers are at distance ``r`` from it with
    angle ``alpha`` at ``p``.  Returns ``(value, stderr)`` arrays, one entry
    per angle.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    k = alpha.size
    h, s = 0.5 * alpha, np.sin(0.5 * alpha)
    c = np.cos(h)
    W1 = np.zeros((k, n))
    W1[:, 0], W1[:, 1] = -r * c, r * s
    W2 = W1.copy()
    W2[:, 1] = -r * s
    x0max = r * (1 - c)
    x1max = np.minimum(x0max / np.tan(h), r * (1 + s))
    lo = np.zeros((k, n))
    hi = np.full((k, n), float(r))
    lo[:, 1:] = -r
    hi[:, 0] = x0max
    lo[:, 1], hi[:, 1] = -x1max, x1max
    box = np.prod(hi - lo, axis=1)
    X = lo[:, None, :] + (hi - lo)[:, None, :] * rng.random((k, samples, n))
    # distance to the segment [w1, w2]
    seg = W2 - W1
    tt = np.clip(np.einsum("ksn,kn->ks", X - W1[:, None], seg) / np.einsum("kn,kn->k", seg, seg)[:, None],
                 0.0, 1.0)
    foot = W1[:, None] + tt[..., None] * seg[:, None]
    inside = np.einsum("ksn,ksn->ks", X - foot, X - foot) <= r * r
    inside &= np.einsum("ksn,kn->ks", X, -W1) >= 0
    inside &= np.einsum("ksn,kn->ks", X, -W2) >= 0
    q = inside.mean(axis=1)
    return box * q, box * np.sqrt(q * (1 - q) / samples)


def ballconvexhull_bound(n, r, alpha0, alpha1):
    cn = 1.0 / (2.0 ** (4 * n) * n**n)
    return cn * r**n * alpha0 ** (n + 1) * math.cos(alpha1 / 2)


def check_ballconvexhull(n=2, r=1.0, alpha0=math.pi / 6, alpha1=5 * math.pi / 6, trials=10_000,
                         samples=4096, seed=0, tighten=1.0, batch=128):
    t0 = time.perf_counter()
    if not 0 < alpha0 <= alpha1 < math.pi:
        raise DomainError("need 0 < alpha0 <= alpha1 < pi")
    rng = make_rng(seed, "ballconvexhull", n)
    alpha = alpha0 + (alpha1 - alpha0) * rng.random(trials)
    alpha[0], alpha[1] = alpha0, alpha1
    vals = np.empty(trials)
    ses = np.empty(trials)
    for i in range(0, trials, batch):
        sub = make_rng(seed, "ballconvexhull", n, i)
        vals[i:i + batch], ses[i:i + batch] = ballconvexhull_volume(n, r, alpha[i:i + batch], samples, sub)
    bound = tighten * ballconvexhull_bound(n, r, alpha0, alpha1)
    sp = Space(Kind.EUCLIDEAN, n)
    return _finish("ballconvexhull", sp,
                   {"n": n, "r": r, "alpha0": alpha0, "alpha1": alpha1, "samples": samples,
                    "tighten": tighten}, trials, vals, bound, vals - bound, seed, t0, sigma=ses)


# --------------------------------------------------- two-point symmetral


def _cloud_within(sp, P, Q, rho):
    return kernels.chord_min(sp.code, np.ascontiguousarray(P), np.ascontiguousarray(Q)) <= distance_to_chord(sp, rho)


def random_cloud(sp: Space, rng, kind="cloud", size=12):
    """A random finite set near ``e``: scattered points, or samples of two overlapping balls."""
    c = sample_ball(sp, sp.origin(), 0.3, 1, rng)[0]
    if kind == "cloud":
        return PointCloud(sp, sample_ball(sp, c, 0.5, size, rng))
    a, b = sample_ball(sp, c, 0.3, 2, rng)
    s = 0.1 + 0.2 * rng.random()
    m = 20 * size
    return PointCloud(sp, np.vstack([sample_ball(sp, a, s, m // 2, rng),
                                     sample_ball(sp, b, s, m - m // 2, rng)]))


def check_two_point_parallel(sp: Space, rho=0.3, trials=100, points=100_000, seed=0,
                             body_kind="cloud", tol=1e-9):
    """Parallel domain of the symmetral inside the symmetral of the parallel domain.

    Points are sampled near the symmetral; each one within ``rho`` of it must
    be accepted by the symmetral of the ``rho + tol`` neighbourhood.  The
    volumes of both parallel domains are compared on common samples.
    """
    t0 = time.perf_counter()
    rng = make_rng(seed, "twopoint", sp.code, sp.dim, body_kind)
    per = max(points // trials, 1)
    violations = 0
    vmargin = np.empty(trials)
    vsig = np.empty(trials)
    for i in range(trials):
        X = random_cloud(sp, rng, body_kind)
        a, b = sample_ball(sp, X.bounding[0], 0.6, 2, rng)
        H = perpendicular_bisector(sp, a, b)
        T = two_point_cloud(X, H)
        base = T.points[rng.integers(0, len(T), per)]
        U = unit_tangent(sp, base, rng.standard_normal((per, sp.ambient)))
        P = geodesic_point(sp, base, U, 1.2 * rho * rng.random(per))
        lhs = _cloud_within(sp, P, T.points, rho)
        mirror = reflect(H, P)
        inX = _cloud_within(sp, P, X.points, rho + tol)
        inXm = _cloud_within(sp, mirror, X.points, rho + tol)
        rhs = np.where(side(H, P) >= 0, inX | inXm, inX & inXm)
        violations += int(np.count_nonzero(lhs & ~rhs))
        # volume comparison on common uniform samples
        allp = np.vstack([X.points, T.points])
        cc, rr = enclosing_ball(sp, allp)
        Q = sample_ball(sp, cc, rr + rho, per, rng)
        A = _cloud_within(sp, Q, X.points, rho).astype(float)
        Bm = _cloud_within(sp, Q, T.points, rho).astype(float)
        V = ball_volume(sp, rr + rho).value
        diff = A - Bm
        vmargin[i] = V * diff.mean()
        vsig[i] = V * diff.std(ddof=1) / math.sqrt(per) if per > 1 else 0.0
    rep = _finish("two_point_parallel", sp,
                  {"rho": rho, "points": per * trials, "body_kind": body_kind, "tol": tol},
                  trials, vmargin, 0.0, vmargin, seed, t0, sigma=vsig,
                  extra={"containment_violations": violations})
    if violations:
        rep.passed = False
    return rep


# ------------------------------------------------------ improvement step


def _chart(sp: Space, P):
    return chart_forward_array(sp, P)


def hull_gap(body, hull_points, samples, seed, tag="hullgap"):
    """MC volume of ``conv(hull_points) \\ body`` inside the body's bounding ball.

    The hull is taken in the central chart, where geodesic convexity is
    linear.  Returns ``(value, stderr)``.
    """
    sp = body.space
    c, R = body.bounding
    Y = _chart(sp, hull_points)
    tri = Delaunay(Y[ConvexHull(Y).vertices])
    hits = 0
    done = 0
    i = 0
    while done < samples:
        m = min(MC_CHUNK, samples - done)
        P = sample_ball(sp, c, R, m, make_rng(seed, tag, i))
        inh = tri.find_simplex(_chart(sp, P)) >= 0
        if inh.any():
            idx = np.nonzero(inh)[0]
            hits += int(np.count_nonzero(~body.contains(P[idx])))
        done += m
        i += 1
    V = ball_volume(sp, R).value
    q = hits / samples
    return V * q, V * math.sqrt(q * (1 - q) / samples)


def improve_setup(sp: Space, D, body, witness=None):
    """Witness pair, midpoint, farthest boundary point and its distance for the improvement step."""
    if witness is None:
        dval, x1, x2 = diameter(body)
    else:
        x1, x2 = (np.asarray(w, dtype=float) for w in witness)
        dval = float(distance(sp, x1, x2))
    if abs(dval - D) > 1e-6:
        raise DomainError("the witness pair is not at distance D")
    y0 = geodesic_point(sp, x1, direction(sp, x1, x2), 0.5 * dval)
    B = body.boundary_sample()
    dist = distance(sp, B, y0)
    j = int(np.argmax(dist))
    return x1, x2, y0, B[j], float(dist[j])


def check_improve(sp: Space, D=1.0, body=None, eta=None, samples=400_000, seed=0, tighten=1.0,
                  witness=None, boundary=4096):
    """Hull gap after one symmetrization of the parallel body, against its lower bound.

    The hyperplanes searched are the perpendicular bisectors of ``[p, y_i]``
    described in the notes of the README; a failure on this family does not
    say that no good hyperplane exists.
    """
    t0 = time.perf_counter()
    if body is None:
        body = reuleaux_triangle(sp, D)
    n = sp.dim
    const = stability_constants(sp, D)
    rho = const.rho
    x1, x2, y0, z, far = improve_setup(sp, D, body, witness)
    avail = far - 0.5 * D
    if avail <= 1e-9:
        raise NotApplicable("no boundary point beyond D/2 from the midpoint")
    if eta is None:
        eta = min(avail, const.eta0 * (1 - 1e-9))
    if not 0 < eta < const.eta0 or eta > avail + 1e-12:
        raise DomainError("eta outside the admissible range")
    Y = parallel_body(body, rho)
    y1 = geodesic_point(sp, x1, -direction(sp, x1, x2), rho)
    y2 = geodesic_point(sp, x2, -direction(sp, x2, x1), rho)
    p = geodesic_point(sp, y0, direction(sp, y0, z), far + rho)
    bY = Y.boundary_sample(boundary)
    best = (-math.inf, 0.0, -1)
    for k, yi in enumerate((y1, y2)):
        if angle(sp, p, y0, yi) > 0.5 * math.pi + 1e-12:
            continue
        H = perpendicular_bisector(sp, yi, p)
        T = two_point_membership(Y, H)
        cand = np.vstack([bY, reflect(H, bY)])
        pts = cand[T.contains(cand)]
        gap, se = hull_gap(T, pts, samples, seed, tag=f"improve{k}")
        if gap > best[0]:
            best = (gap, se, k)
    gap, se, k = best
    bound = tighten * const.gamma1_tilde * eta ** ((3 * n + 2) / 2)
    return _finish("improve", sp,
                   {"D": D, "eta": eta, "rho": rho, "samples": samples, "tighten": tighten},
                   1, [gap], bound, [gap - bound], seed, t0, sigma=[se],
                   extra={"available_eta": avail, "hyperplane": k},
                   notes="hyperplane family: bisectors of [p, y_i]")


def improve_family_body(sp: Space, D, eta, tol=1e-3):
    """Completion of ``{x1, x2, z}`` where ``z`` sits ``D/2 + eta`` from the midpoint of ``[x1, x2]``.

    Returns ``(body, (x1, x2))``.
    """
    e = sp.origin()
    b = tangent_basis(sp, e)
    x1 = geodesic_point(sp, e, b[0], 0.5 * D)
    x2 = geodesic_point(sp, e, -b[0], 0.5 * D)
    z = geodesic_point(sp, e, b[1], 0.5 * D + eta)
    if distance(sp, z, x1) > D:
        raise DomainError("eta too large for a set of diameter D")
    body, _ = complete(PointCloud(sp, np.vstack([x1, x2, z])), D, tol=tol)
    return body, (x1, x2)


# --------------------------------------------------- R + r = D and friends


def rr_bodies(sp: Space, D, seeds=5, seed=0, tol=1e-3, size=5):
    """Ball, Reuleaux triangle (planar) and completions of random ``size``-point seeds."""
    out = [("ball", ball_body(sp, sp.origin(), 0.5 * D))]
    if sp.dim == 2:
        out.append(("reuleaux", reuleaux_triangle(sp, D)))
    rng = make_rng(seed, "rr", sp.code, sp.dim)
    for i in range(seeds):
        X = shrink_to_diameter(sp, sample_ball(sp, sp.origin(), 0.5 * D, size, rng), D)
        out.append((f"completion{i}", complete(X, D, tol=tol)[0]))
    return out


def shrink_to_diameter(sp: Space, P, D):
    """Scale normal coordinates about ``e`` until the set has diameter at most ``D``."""
    e = sp.origin()
    V = log_map(sp, e, P)
    X = PointCloud(sp, P)
    if diameter(X)[0] <= D:
        return X
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if diameter(PointCloud(sp, exp_map(sp, e, mid * V)))[0] <= D * (1 - 1e-12):
            lo = mid
        else:
            hi = mid
    return PointCloud(sp, exp_map(sp, e, lo * V))


def check_rr(sp: Space, D=1.0, bodies=None, tol=1e-3, seed=0):
    """Circumradius plus inradius equals the width, with a diameter through the circumcenter."""
    t0 = time.perf_counter()
    if bodies is None:
        bodies = rr_bodies(sp, D, seed=seed, tol=tol)
    errs, cdist, derr = [], [], []
    for _, body in bodies:
        R, c = circumradius(body)
        r, ic, _ = inradius(body)
        errs.append(abs(R + r - D))
        cdist.append(float(distance(sp, c, ic)))
        B = body.boundary_sample()
        x1 = B[int(np.argmax(distance(sp, B, c)))]
        u = -direction(sp, c, x1)
        t = float(depth_ray(body, c, u))
        derr.append(abs(R + t - D))
    errs, cdist, derr = map(np.asarray, (errs, cdist, derr))
    margins = np.minimum(np.minimum(1e-5 - errs, 10 * tol - cdist), 10 * tol - derr)
    return _finish("rr", sp, {"D": D, "tol": tol, "bodies": [b[0] for b in bodies]}, len(bodies),
                   errs, 1e-5, margins, seed, t0,
                   extra={"center_distance_max": float(cdist.max()),
                          "diameter_through_center_err_max": float(derr.max())})


def depth_ray(body, z, u):
    if isinstance(body, BallPolytope):
        return body.exits(z, u[None])[0][0]
    return body.exits(z, u[None])[0]


def check_parallel_radii(sp: Space, D=1.0, rho=0.2, bodies=None, tol=1e-5, seed=0):
    """Circumradius and inradius of a parallel body both grow by exactly ``rho``."""
    t0 = time.perf_counter()
    if sp.kind is Kind.SPHERICAL and D + 2 * rho >= math.pi / 2:
        raise DomainError("need D + 2 rho < pi/2 on the sphere")
    if bodies is None:
        bodies = rr_bodies(sp, D, seeds=1, seed=seed)
    eR, er = [], []
    for _, body in bodies:
        R = circumradius(body)[0]
        r = inradius(body)[0]
        K = parallel_body(body, rho)
        eR.append(abs(circumradius(K)[0] - R - rho))
        er.append(abs(inradius(K)[0] - r - rho))
    eR, er = np.asarray(eR), np.asarray(er)
    worst = np.maximum(eR, er)
    return _finish("parallel_radii", sp, {"D": D, "rho": rho, "bodies": [b[0] for b in bodies]},
                   len(bodies), worst, tol, tol - worst, seed, t0,
                   extra={"circumradius_err_max": float(eR.max()), "inradius_err_max": float(er.max())})


# ------------------------------------------------------- isodiametric


def run_isodiametric_mc(sp: Space, D=1.0, trials=100, samples=20_000, seed=0, tol=0.02, tighten=1.0):
    """Sampled volume of random diameter-``D`` bodies never beats the ``D/2`` ball.

    Each body is the completion of a random cloud; its diameter is certified
    as the sampled diameter plus twice the half-spacing of the sample.  The
    ball itself is run as the equality case.
    """
    t0 = time.perf_counter()
    if sp.kind is Kind.SPHERICAL and D >= math.pi / 2:
        raise DomainError("spherical D must be below pi/2 for completions")
    rng = make_rng(seed, "isodiametric", sp.code, sp.dim)
    vals, bounds, sig = [], [], []
    for i in range(trials):
        k = int(rng.integers(3, 11))
        X = shrink_to_diameter(sp, sample_ball(sp, sp.origin(), 0.5 * D, k, rng), D)
        body, _ = complete(X, D, tol=tol)
        Dc = diameter(body)[0] + 2 * _sample_gap(body)
        est = mc_volume(body, samples, seed, tag=f"iso{i}")
        vals.append(est.value)
        sig.append(est.stderr)
        bounds.append(ball_volume(sp, 0.5 * Dc).value / tighten)
    vals, bounds, sig = map(np.asarray, (vals, bounds, sig))
    ball = ball_body(sp, sp.origin(), 0.5 * D)
    eq = mc_volume(ball, samples, seed, tag="iso_ball")
    Vb = ball_volume(sp, 0.5 * D).value
    eq_ok = abs(eq.value - Vb) <= max(eq.stderr, 1e-12 * Vb)
    rep = _finish("isodiametric", sp, {"D": D, "samples": samples, "tol": tol, "tighten": tighten}, trials,
                  vals / bounds, 1.0, bounds - vals, seed, t0, sigma=sig,
                  extra={"ball_estimate": eq.value, "ball_exact": Vb, "ball_stderr": eq.stderr})
    rep.passed = rep.passed and bool(eq_ok)
    return rep


# -------------------------------------------------------- stability


def run_stability_scaling(sp: Space, D=1.0, eps_grid=(1e-2, 1e-3, 1e-4, 1e-5), seed=0,
                          value_tol=1e-6, center_tol=1e-4):
    """Inradius deficit of cap-cut balls against the cut volume fraction, in log-log.

    A grid point is flagged when the sampled and refined inradius disagree by
    more than ``value_tol`` or the near-optimal restarts are more than
    ``center_tol`` apart.  The objective is flat at its maximum, so centers
    agree only to about the square root of the value tolerance.
    """
    if sp.kind is Kind.SPHERICAL and D > math.pi / 2:
        raise DomainError("spherical D must be at most pi/2")
    eps = [float(e) for e in eps_grid]
    vals, flagged = [], 0
    for e in eps:
        body, _ = cap_cut_ball(sp, D, e)
        r, _, info = inradius(body)
        vals.append(0.5 * D - r)
        if info.get("spread", 0.0) > center_tol or abs(info.get("sampled", r) - r) > value_tol:
            flagged += 1
    x, y = np.log(eps), np.log(vals)
    (slope, icpt), cov = np.polyfit(x, y, 1, cov=True) if len(eps) > 3 else (np.polyfit(x, y, 1), np.zeros((2, 2)))
    expected = 2.0 / (sp.dim + 1)
    return ScalingFit(eps=eps, values=[float(v) for v in vals], slope=float(slope),
                      slope_stderr=float(math.sqrt(max(cov[0, 0], 0.0))), intercept=float(icpt),
                      expected=expected, low_confidence=flagged > 0.1 * len(eps),
                      passed=abs(slope - expected) <= 0.05, space=sp.kind.value, dim=sp.dim,
                      D=float(D), seed=int(seed), extra={"flagged": flagged})


def scaling_csv(fit: ScalingFit) -> str:
    return write_csv(["eps", "deficit"], list(zip(fit.eps, fit.values)))


def run_stability_endtoend(sp: Space, D=1.0, eps=1e-3, samples=200_000, seed=0, mode="illustrative",
                           boundary=4096, radius_tol=1e-9):
    """Two-sided ball sandwich and hull-excess volume for a cap-cut ball.

    In ``strict`` mode with ``eps`` below the stability threshold the
    result is a pass/fail verdict on the theorem; otherwise the run is
    illustrative and the same quantities are reported with the radii the
    theorem would give.  ``radius_tol`` absorbs the rounding of the
    circumradius and depth solvers, so the ball itself is not failed by an ulp.
    """
    t0 = time.perf_counter()
    const = stability_constants(sp, D)
    strict = mode == "strict" and eps < const.eps_threshold
    n = sp.dim
    if eps == 0:
        X = ball_body(sp, sp.origin(), 0.5 * D)
    else:
        X = cap_cut_ball(sp, D, eps)[0]
    R, c = circumradius(X)
    depth = depth_at(X, c)
    delta = const.gamma * eps ** (2.0 / (3 * n + 2))
    r_in, r_out = 0.5 * D - delta, 0.5 * D + delta
    VB = ball_volume(sp, 0.5 * D).value
    if eps == 0:
        gap, se = 0.0, 0.0
    else:
        bnd = X.boundary_sample(boundary)
        gap, se = hull_gap(X, bnd, samples, seed, tag="endtoend")
    margins = [r_out - R + radius_tol, depth - r_in + radius_tol, eps * VB - gap]
    sig = [0.0, 0.0, se]
    label = "strict" if strict else "illustrative"
    notes = ("strict: eps below the stability threshold" if strict else
             "illustrative: eps at or above the stability threshold, not a verdict on the theorem")
    if r_in <= 0:
        notes += "; inner radius from the constants is non-positive"
    return _finish("stability_endtoend", sp, {"D": D, "eps": eps, "mode": label, "samples": samples,
                                               "radius_tol": radius_tol},
                   3, margins, None, margins, seed, t0, sigma=sig, notes=notes,
                   extra={"circumradius": R, "depth_at_center": depth, "delta": delta,
                          "r_in": r_in, "r_out": r_out, "hull_excess": gap, "hull_excess_se": se,
                          "eps_volume": eps * VB, "constants": const.as_dict()})


# ------------------------------------------------------------- registry


def suite(name, sp: Space, cfg: dict):
    """Run the named checker with settings from ``cfg``; returns a list of reports."""
    g = cfg.get
    seed = g("seed", 0)
    sph = sp.kind is Kind.SPHERICAL
    if name == "ballboundary":
        return [check_ballboundary(sp, g("R") or 1.0, g("eta") or 0.1, g("trials") or 10_000, seed)]
    if name == "ballboundary0":
        return [check_ballboundary0(sp, g("R") or 1.0, g("trials") or 10_000, seed)]
    if name == "pythagorean":
        R = g("R") or (0.7 if sph else 1.0)
        return [check_pythagorean(sp, R, g("eta") or 0.1, g("trials") or 10_000, seed)]
    if name == "sumtwoangles":
        return [check_sumtwoangles(sp, g("trials") or 10_000, seed)]
    if name == "anglemonotone":
        return [check_angle_monotone(sp, g("trials") or 10_000, seed)]
    if name == "ballconvexhull":
        if sp.kind is not Kind.EUCLIDEAN:
            raise NotApplicable("the hull sliver bound is Euclidean")
        return [check_ballconvexhull(sp.dim, g("R") or 1.0, trials=g("trials") or 10_000,
                                     samples=g("samples") or 4096, seed=seed)]
    if name == "twopointparallel":
        return [check_two_point_parallel(sp, g("rho") or 0.3, points=g("samples") or 100_000,
                                         seed=seed, body_kind=k) for k in ("cloud", "balls")]
    if name == "improve":
        return [check_improve(sp, g("D") or 1.0, eta=g("eta"), samples=g("samples") or 400_000,
                              seed=seed)]
    if name == "rr":
        return [check_rr(sp, g("D") or 1.0, seed=seed)]
    if name == "parallelradii":
        return [check_parallel_radii(sp, g("D") or 1.0, g("rho") or 0.2, seed=seed)]
    if name == "isodiametric":
        return [run_isodiametric_mc(sp, g("D") or 1.0, g("trials") or 100, g("samples") or 20_000, seed)]
    if name == "endtoend":
        return [run_stability_endtoend(sp, g("D") or 1.0, g("eps") if g("eps") is not None else 1e-3,
                                       g("samples") or 200_000, seed, g("mode") or "illustrative")]
    raise KeyError(name)


CHECKS = ("ballboundary", "ballboundary0", "pythagorean", "sumtwoangles", "anglemonotone",
          "ballconvexhull", "twopointparallel", "improve", "rr", "parallelradii", "isodiametric",
          "endtoend")
