"""Two-point symmetrization of bodies and finite sets.

For a hyperplane ``H`` with positive side ``H+`` and reflection ``s``, the
symmetral of ``X`` keeps a point ``p`` of ``H+`` if ``p`` or ``s(p)`` is in
``X``, and a point of the negative side only if both are.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .bodies import OracleBody, PointCloud, diameter
from .errors import CompositionDepthError, DomainError
from .geometry_core import (
    Hyperplane,
    Kind,
    chord2,
    distance,
    distance_to_chord,
    geodesic_point,
    log_map,
    normalize_point,
    perpendicular_bisector,
    reflect,
    side,
    tangent_basis,
    tangent_inner,
)
from .measures import ball_volume, make_rng, sample_ball
from .projections import chart_forward_array, chart_inverse_array

MAX_DEPTH = 8


def _pair_rule(on_pos, a, b):
    return np.where(on_pos, a | b, a & b)


def two_point_membership(X, H: Hyperplane, max_depth=MAX_DEPTH) -> OracleBody:
    """Oracle for the two-point symmetral of ``X`` in ``H``.

    Raises
    ------
    CompositionDepthError
        If ``X`` already carries ``max_depth`` nested symmetrizations; each
        level doubles the cost of a membership query.
    """
    sp = X.space
    depth = getattr(X, "depth", 0) + 1
    if depth > max_depth:
        raise CompositionDepthError(f"composition depth {depth} exceeds {max_depth}")

    def member(P):
        P = np.atleast_2d(P)
        return _pair_rule(side(H, P) >= 0, X.contains(P), X.contains(reflect(H, P)))

    c, R = X.bounding
    c2 = reflect(H, c)
    half = 0.5 * float(distance(sp, c, c2))
    mid = c if half == 0 else normalize_point(sp, c + c2) if sp.kind is not Kind.EUCLIDEAN else 0.5 * (c + c2)
    return OracleBody(sp, member, mid, half + R, label="two_point", depth=depth,
                      star_center=mid)


def two_point_cloud(X: PointCloud, H: Hyperplane, match_tol=1e-9) -> PointCloud:
    """Two-point symmetral of a finite set.

    A point on the negative side whose mirror image is within ``match_tol``
    of a point of ``X`` stays; otherwise it is replaced by its mirror image.
    """
    sp = X.space
    P = X.points
    neg = side(H, P) < 0
    if not neg.any():
        return PointCloud(sp, P.copy())
    mirrored = reflect(H, P[neg])
    near = kernels.chord_min(sp.code, mirrored, P) <= distance_to_chord(sp, match_tol)
    out = P.copy()
    idx = np.nonzero(neg)[0]
    out[idx[~near]] = mirrored[~near]
    if sp.kind is not Kind.EUCLIDEAN:
        out = normalize_point(sp, out)
    return PointCloud(sp, out)


def paired_counts(X, H: Hyperplane, P):
    """Hit counts of ``X`` and of its symmetral over the pairs ``(p, s(p))``.

    The two counts agree exactly: on every pair the symmetral takes the
    ``or`` and the ``and`` of the two memberships.
    """
    T = two_point_membership(X, H, max_depth=10**9)
    Q = reflect(H, P)
    x = int(np.count_nonzero(X.contains(P))) + int(np.count_nonzero(X.contains(Q)))
    t = int(np.count_nonzero(T.contains(P))) + int(np.count_nonzero(T.contains(Q)))
    return x, t


# ------------------------------------------------------- re-materialization


class RasterBody(OracleBody):
    """Planar body stored as a boolean grid in normal coordinates about a center."""

    def __init__(self, sp, center, radius, grid, label="raster"):
        self.grid = grid
        self.res = grid.shape[0]
        self._basis = tangent_basis(sp, center)
        super().__init__(sp, self._member, center, radius, label=label, depth=0)

    def _cell(self, P):
        v = log_map(self.space, self.center, P)
        xy = np.stack([tangent_inner(self.space, v, b) for b in self._basis], axis=-1)
        ij = np.floor((xy / self.radius + 1.0) * 0.5 * self.res).astype(np.int64)
        return ij

    def _member(self, P):
        P = np.atleast_2d(P)
        ij = self._cell(P)
        ok = np.all((ij >= 0) & (ij < self.res), axis=1)
        out = np.zeros(P.shape[0], dtype=bool)
        out[ok] = self.grid[ij[ok, 0], ij[ok, 1]]
        return out


def rasterize(X, res=512, center=None, radius=None) -> RasterBody:
    """Re-materialize a planar oracle body on a ``res x res`` grid."""
    sp = X.space
    if sp.dim != 2:
        raise DomainError("re-materialization is planar only")
    c, R = X.bounding
    c = c if center is None else center
    R = R if radius is None else radius
    s = (np.arange(res) + 0.5) / res * 2.0 - 1.0
    gx, gy = np.meshgrid(s * R, s * R, indexing="ij")
    basis = tangent_basis(sp, c)
    V = gx.reshape(-1, 1) * basis[0] + gy.reshape(-1, 1) * basis[1]
    r = np.sqrt(gx**2 + gy**2).reshape(-1)
    inside = r <= R
    grid = np.zeros(res * res, dtype=bool)
    nz = inside & (r > 0)
    pts = geodesic_point(sp, c, V[nz] / r[nz, None], r[nz])
    grid[nz] = X.contains(pts)
    if (inside & (r == 0)).any():
        grid[inside & (r == 0)] = X.contains(c[None])[0]
    return RasterBody(sp, c, R, grid.reshape(res, res))


# ----------------------------------------------------------- iteration


@dataclass
class SymmetrizationStep:
    hyperplane: Hyperplane
    x: np.ndarray
    y: np.ndarray


@dataclass
class IterationTrace:
    steps: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (iter, symdiff, stderr, diameter)
    body: object = None
    status: str = "completed"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["iter", "symdiff_estimate", "stderr", "diameter_estimate"])
        for it, v, se, d in self.rows:
            w.writerow([it, repr(float(v)), repr(float(se)), repr(float(d))])
        return buf.getvalue()


def _draw(sp, member, center, R, rng, max_draws=100_000, batch=4096):
    drawn = 0
    while drawn < max_draws:
        m = min(batch, max_draws - drawn)
        P = sample_ball(sp, center, R, m, rng)
        drawn += m
        hit = np.nonzero(member(P))[0]
        if hit.size:
            return P[hit[0]]
    return None


def symdiff_estimate(X, center, radius, samples, rng, cover=None):
    """Monte Carlo volume of ``X`` symmetric-difference ``B(center, radius)``."""
    sp = X.space
    cc, R = cover if cover is not None else (center, radius)
    P = sample_ball(sp, cc, R, samples, rng)
    inB = chord2(sp, P, center) <= distance_to_chord(sp, radius)
    inX = X.contains(P)
    hits = int(np.count_nonzero(inB ^ inX))
    V = ball_volume(sp, R).value
    p = hits / samples
    inside = P[inX]
    if inside.shape[0] > 1500:
        inside = inside[:: inside.shape[0] // 1500 + 1]
    diam = diameter(PointCloud(sp, inside))[0] if inside.shape[0] > 1 else 0.0
    return V * p, V * math.sqrt(p * (1 - p) / samples), diam


def matched_target(X, samples=100_000, seed=0):
    """Ball centered at the chart barycenter of ``X`` with the same volume."""
    sp = X.space
    c, R = X.bounding
    P = sample_ball(sp, c, R, samples, make_rng(seed, "target"))
    inside = P[X.contains(P)]
    if inside.shape[0] == 0:
        raise DomainError("body has no sampled interior")
    V = ball_volume(sp, R).value * inside.shape[0] / samples
    if sp.kind is Kind.EUCLIDEAN:
        center = inside.mean(axis=0)
    else:
        center = chart_inverse_array(sp, chart_forward_array(sp, inside).mean(axis=0))
    hi = math.pi if sp.kind is Kind.SPHERICAL else 2 * R + 1.0
    r = brentq(lambda t: ball_volume(sp, t).value - V, 0.0, hi)
    return center, r


def iterate_to_ball(X, center, radius, iterations, seed, samples=20000, max_depth=4,
                    res=512, max_draws=100_000) -> IterationTrace:
    """Repeatedly symmetrize ``X`` toward the ball ``B(center, radius)``.

    Each step draws ``x`` in the ball but not in ``X`` and ``y`` in ``X`` but
    not in the ball, and symmetrizes in their bisector oriented so that the
    ball center lies on the positive side.  Planar oracle bodies are
    re-materialized on a grid whenever the composition depth would exceed
    ``max_depth``.  The trace stops early, with ``status`` recording the
    round, when either point cannot be drawn within ``max_draws``.
    """
    sp = X.space
    center = np.asarray(center, dtype=float)
    lim = distance_to_chord(sp, radius)
    cX, RX = X.bounding
    cover_R = max(float(distance(sp, center, cX)) + RX, radius)
    if sp.kind is Kind.SPHERICAL:
        cover_R = min(cover_R, math.pi)
    cover = (center, cover_R)
    trace = IterationTrace()
    est_rng = make_rng(seed, 1)
    v, se, d = symdiff_estimate(X, center, radius, samples, est_rng, cover)
    trace.rows.append((0, v, se, d))
    cur = X
    for it in range(1, iterations + 1):
        rng = make_rng(seed, 2, it)

        def in_gap(P, body=cur):
            return (chord2(sp, P, center) <= lim) & ~body.contains(P)

        def outside(P, body=cur):
            return body.contains(P) & (chord2(sp, P, center) > lim)

        x = _draw(sp, in_gap, center, radius, rng, max_draws)
        y = _draw(sp, outside, *cover, rng, max_draws)
        if x is None or y is None:
            trace.status = f"sampling_failed_at_{it}"
            break
        H = perpendicular_bisector(sp, x, y)
        if side(H, center) < 0:
            H = H.flipped()
        if getattr(cur, "depth", 0) + 1 > max_depth:
            cur = rasterize(cur, res=res, center=center, radius=cover_R)
        cur = two_point_membership(cur, H, max_depth=max_depth)
        trace.steps.append(SymmetrizationStep(H, x, y))
        v, se, d = symdiff_estimate(cur, center, radius, samples, make_rng(seed, 1, it), cover)
        trace.rows.append((it, v, se, d))
    trace.body = cur
    return trace
