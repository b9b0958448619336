"""Bodies, metric hulls, radii and the greedy completion to constant width.

Three representations share one interface (``space``, ``contains``,
``distance``, ``bounding``, ``boundary_sample``):

* :class:`PointCloud`, a finite set;
* :class:`BallPolytope`, an intersection of equal-radius balls;
* :class:`OracleBody`, defined by a vectorized membership predicate.
"""
from __future__ import annotations

import json
import math
from functools import cached_property

import numpy as np
from scipy import optimize

from . import kernels
from .errors import DegenerateError, DomainError
from .geometry_core import (
    Hyperplane,
    Kind,
    Space,
    ball_outer_normal,
    bilinear_form,
    check_points,
    chord2,
    chord_to_distance,
    direction,
    distance,
    distance_to_chord,
    exp_map,
    geodesic_point,
    geodesic_velocity,
    grid_directions,
    normalize_point,
    side,
    space as make_space,
    tangent_basis,
    tangent_inner,
)

BOUNDARY_DIRECTIONS = 8192
MEMBER_SLACK = 1e-12


# ---------------------------------------------------------- enclosing balls


def _ball_through(sp: Space, S):
    """Smallest ball having all rows of ``S`` on its boundary."""
    k = S.shape[0]
    if k == 1:
        return S[0].copy(), 0.0
    if sp.kind is Kind.EUCLIDEAN:
        A = S[1:] - S[0]
        G = A @ A.T
        lam = np.linalg.lstsq(G, 0.5 * np.diag(G), rcond=None)[0]
        c = S[0] + lam @ A
    else:
        G = bilinear_form(sp, S[:, None, :], S[None, :, :])
        lam = np.linalg.lstsq(G, np.ones(k), rcond=None)[0]
        w = lam @ S
        if sp.kind is Kind.HYPERBOLIC and w[0] < 0:
            w = -w
        if bilinear_form(sp, w, w) <= 0:
            raise DegenerateError("support set has no enclosing center")
        c = normalize_point(sp, w)
    return c, float(chord_to_distance(sp, chord2(sp, S, c).max()))


def _inside(sp, p, ball):
    c, r = ball
    return chord2(sp, p, c) <= distance_to_chord(sp, r) * (1 + 1e-12) + 1e-15


def _mtf(sp, P, order, end, support):
    ball = _ball_through(sp, P[support]) if support else None
    if len(support) == sp.dim + 1:
        return ball
    for pos in range(end):
        i = order[pos]
        if ball is None or not _inside(sp, P[i], ball):
            ball = _mtf(sp, P, order, pos, support + [i])
            order.insert(0, order.pop(pos))
    return ball


def enclosing_ball(sp: Space, P):
    """Minimal enclosing ball of a finite point set: ``(center, radius)``.

    Move-to-front recursion on a working subset, grown with the worst
    violators until every point is enclosed.  In the sphere the points must
    lie in an open hemisphere.
    """
    P = np.ascontiguousarray(P, dtype=float)
    m = P.shape[0]
    if m == 0:
        raise DomainError("empty point set")
    if sp.kind is Kind.EUCLIDEAN:
        c0 = P.mean(axis=0)
    else:
        s = P.sum(axis=0)
        if sp.kind is Kind.SPHERICAL and np.linalg.norm(s) < 1e-12:
            raise DomainError("points are not in an open hemisphere")
        c0 = normalize_point(sp, s)
    q = chord2(sp, P, c0)
    work = list(np.argsort(q)[::-1][: min(m, 2 * sp.dim + 2)])
    for _ in range(200):
        order = list(range(len(work)))
        Pw = P[work]
        c, r = _mtf(sp, Pw, order, len(work), [])
        q = chord2(sp, P, c)
        lim = distance_to_chord(sp, r) * (1 + 1e-12) + 1e-15
        bad = np.nonzero(q > lim)[0]
        if bad.size == 0:
            break
        worst = bad[np.argsort(q[bad])[::-1][:4]]
        work.extend(int(i) for i in worst if i not in work)
    else:
        raise DomainError("enclosing ball iteration did not converge")
    if sp.kind is Kind.SPHERICAL:
        if r >= math.pi / 2 or np.any(P @ c <= 0):
            raise DomainError("points are not in an open hemisphere")
    return c, r


# ---------------------------------------------------------------- bodies


class Body:
    space: Space

    def contains(self, P):
        raise NotImplementedError

    def distance(self, P):
        raise NotImplementedError

    @property
    def bounding(self):
        raise NotImplementedError

    def boundary_sample(self, count=BOUNDARY_DIRECTIONS):
        raise NotImplementedError


class PointCloud(Body):
    def __init__(self, sp: Space, points):
        self.space = sp
        P = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = np.ascontiguousarray(check_points(sp, P))

    def __len__(self):
        return self.points.shape[0]

    def contains(self, P, slack=MEMBER_SLACK):
        return self.distance(P) <= slack

    def distance(self, P):
        P = np.atleast_2d(P)
        return chord_to_distance(self.space, kernels.chord_min(self.space.code, P, self.points))

    @cached_property
    def bounding(self):
        return enclosing_ball(self.space, self.points)

    def boundary_sample(self, count=None):
        return self.points


class BallPolytope(Body):
    """Intersection of the balls of radius ``radius`` about each center."""

    def __init__(self, sp: Space, centers, radius, bounding_radius=None):
        self.space = sp
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        self.centers = np.ascontiguousarray(check_points(sp, C))
        self.radius = float(radius)
        if self.radius <= 0:
            raise DomainError("radius must be positive")
        self._bounding_radius = bounding_radius
        if self.center_radius > self.radius + 1e-12:
            raise DomainError("the balls have empty intersection")

    @cached_property
    def _center_ball(self):
        return enclosing_ball(self.space, self.centers)

    @property
    def center_radius(self):
        return self._center_ball[1]

    @property
    def deep_point(self):
        """Center of the largest ball inside the body."""
        return self._center_ball[0]

    def contains(self, P, slack=MEMBER_SLACK):
        P = np.atleast_2d(P)
        q = kernels.chord_max(self.space.code, P, self.centers)
        return q <= distance_to_chord(self.space, self.radius + slack)

    def exits(self, z, U):
        return kernels.ball_exit(self.space.code, z, U, self.centers, self.radius)

    @cached_property
    def _rays(self):
        z = self.deep_point
        U = grid_directions(self.space, z, BOUNDARY_DIRECTIONS)
        t, act = self.exits(z, U)
        return z, U, t, act

    @cached_property
    def vertices(self):
        """Corner points of a planar ball polytope (empty otherwise)."""
        sp = self.space
        if sp.dim != 2 or self.centers.shape[0] < 2:
            return np.zeros((0, sp.ambient))
        z, U, t, act = self._rays
        Q = geodesic_point(sp, z, U, t)
        found = []
        k = U.shape[0]
        th = 2 * math.pi * np.arange(k) / k
        basis = tangent_basis(sp, z)
        for i in np.nonzero(act != np.roll(act, -1))[0]:
            found.extend(self._corner_search(z, basis, th[i], th[i] + 2 * math.pi / k,
                                             act[i], act[(i + 1) % k], Q[i], 0))
        if not found:
            return np.zeros((0, sp.ambient))
        V = np.array(found)
        keep = [0]
        for j in range(1, len(V)):
            if chord2(sp, V[keep], V[j]).min() > 1e-20:
                keep.append(j)
        return V[keep]

    def _corner_search(self, z, basis, a0, a1, ia, ib, near, depth):
        sp = self.space
        for v in sorted(circle_intersections(sp, self.centers[ia], self.centers[ib], self.radius),
                        key=lambda v: float(chord2(sp, v, near))):
            if self.contains(v[None], slack=1e-9)[0]:
                return [v]
        if depth > 30:
            return []
        # an arc was skipped between the two rays; subdivide
        th = np.linspace(a0, a1, 9)
        U = np.cos(th)[:, None] * basis[0] + np.sin(th)[:, None] * basis[1]
        t, act = self.exits(z, U)
        Q = geodesic_point(sp, z, U, t)
        out = []
        for i in np.nonzero(act[:-1] != act[1:])[0]:
            out.extend(self._corner_search(z, basis, th[i], th[i + 1], act[i], act[i + 1], Q[i], depth + 1))
        return out

    def boundary_sample(self, count=BOUNDARY_DIRECTIONS):
        if count == BOUNDARY_DIRECTIONS:
            z, U, t, _ = self._rays
        else:
            z = self.deep_point
            U = grid_directions(self.space, z, count)
            t, _ = self.exits(z, U)
        pts = geodesic_point(self.space, z, U, t)
        return np.concatenate([pts, self.vertices]) if len(self.vertices) else pts

    @cached_property
    def bounding(self):
        z = self.deep_point
        if self._bounding_radius is not None:
            return z, float(self._bounding_radius)
        if self.centers.shape[0] == 1:
            return z, self.radius
        B = self.boundary_sample()
        r = float(distance(self.space, z, B).max())
        cap = float(distance(self.space, z, self.centers).min()) + self.radius
        return z, min(cap, r * (1 + 1e-3) + 1e-12)

    def _arc_centers(self):
        if self.space.dim == 2:
            return np.unique(self._rays[3])
        return np.arange(self.centers.shape[0])

    def distance(self, P):
        """Distance to the body; exact for planar polytopes.

        The nearest point of the body to an outside point is either a corner
        or the foot of the ray from some center through the point.
        """
        sp = self.space
        P = np.atleast_2d(P)
        out = np.zeros(P.shape[0])
        outside = ~self.contains(P)
        if not outside.any():
            return out
        X = P[outside]
        best = np.full(X.shape[0], np.inf)
        for i in self._arc_centers():
            c = self.centers[i]
            far = distance(sp, X, c) > self.radius
            if not far.any():
                continue
            feet = geodesic_point(sp, c, direction(sp, np.broadcast_to(c, X[far].shape), X[far]), self.radius)
            ok = self.contains(feet, slack=1e-9)
            d = chord2(sp, X[far], feet)
            d[~ok] = np.inf
            idx = np.nonzero(far)[0]
            best[idx] = np.minimum(best[idx], d)
        V = self.vertices
        if sp.dim != 2:
            V = self.boundary_sample()
        if len(V):
            best = np.minimum(best, kernels.chord_min(sp.code, X, V))
        out[outside] = chord_to_distance(sp, best)
        return out

    def offset_boundary(self, rho, count=BOUNDARY_DIRECTIONS):
        """Boundary sample of the ``rho``-neighbourhood (planar).

        Each sampled boundary point is pushed a distance ``rho`` along its
        outer normal; at every corner the normal cone is filled with a fan at
        the same angular spacing.
        """
        sp = self.space
        if sp.dim != 2:
            raise DomainError("offset boundaries are planar")
        if count == BOUNDARY_DIRECTIONS:
            z, U, t, act = self._rays
        else:
            z = self.deep_point
            U = grid_directions(sp, z, count)
            t, act = self.exits(z, U)
        Q = geodesic_point(sp, z, U, t)
        parts = [geodesic_point(sp, Q, ball_outer_normal(sp, self.centers[act], Q), rho)]
        step = 2 * math.pi / U.shape[0]
        for v in self.vertices:
            on = np.nonzero(np.abs(distance(sp, v, self.centers) - self.radius) < 1e-9)[0]
            if on.size < 2:
                continue
            b = tangent_basis(sp, v)
            N = ball_outer_normal(sp, self.centers[on], np.broadcast_to(v, (on.size, sp.ambient)))
            ang = np.sort(np.arctan2(tangent_inner(sp, N, b[1]), tangent_inner(sp, N, b[0])))
            gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * math.pi]))
            g = int(np.argmax(gaps))
            a0 = ang[(g + 1) % ang.size]
            span = 2 * math.pi - gaps[g]
            th = a0 + np.linspace(0.0, span, max(2, math.ceil(span / step) + 1))
            W = np.cos(th)[:, None] * b[0] + np.sin(th)[:, None] * b[1]
            parts.append(geodesic_point(sp, v, W, rho))
        return np.concatenate(parts)

    def farthest(self, p):
        """``max`` over the body of the distance to ``p`` (exact in the plane)."""
        sp = self.space
        p = np.asarray(p, dtype=float)
        best = 0.0
        for i in self._arc_centers():
            c = self.centers[i]
            if chord2(sp, p, c) < 1e-28:
                q = geodesic_point(sp, c, tangent_basis(sp, c)[0], self.radius)
            else:
                q = geodesic_point(sp, c, -direction(sp, c, p), self.radius)
            if self.contains(q[None], slack=1e-9)[0]:
                best = max(best, float(distance(sp, p, q)))
        V = self.vertices if sp.dim == 2 else self.boundary_sample()
        if len(V):
            best = max(best, float(distance(sp, p, V).max()))
        return best


class OracleBody(Body):
    """Body given by a membership predicate on arrays of points.

    ``membership`` maps an ``(m, ambient)`` array to ``m`` booleans.  The body
    must lie in ``B(center, radius)``.  Optional ``distance_fn`` gives exact
    distances to the body; otherwise distances use a boundary sample, which
    assumes the body is star-shaped about ``center``.
    """

    def __init__(self, sp: Space, membership, center, radius, label="oracle", params=None,
                 distance_fn=None, star_center=None, depth=0, boundary_fn=None):
        self.space = sp
        self.membership = membership
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.label = label
        self.params = dict(params or {})
        self.distance_fn = distance_fn
        self.star_center = self.center if star_center is None else np.asarray(star_center, dtype=float)
        self.depth = depth
        self.boundary_fn = boundary_fn

    def contains(self, P, slack=0.0):
        return np.asarray(self.membership(np.atleast_2d(P)), dtype=bool)

    @property
    def bounding(self):
        return self.center, self.radius

    def exits(self, z, U, iters=64):
        return ray_exits(self, z, U, iters=iters)

    def boundary_sample(self, count=BOUNDARY_DIRECTIONS):
        if self.boundary_fn is not None:
            return self.boundary_fn(count)
        z = self.star_center
        U = grid_directions(self.space, z, count)
        return geodesic_point(self.space, z, U, self.exits(z, U))

    @cached_property
    def _boundary(self):
        return self.boundary_sample()

    def distance(self, P):
        if self.distance_fn is not None:
            return self.distance_fn(np.atleast_2d(P))
        P = np.atleast_2d(P)
        out = np.zeros(P.shape[0])
        outside = ~self.contains(P)
        if outside.any():
            q = kernels.chord_min(self.space.code, P[outside], self._boundary)
            out[outside] = chord_to_distance(self.space, q)
        return out


def ray_exits(body, z, U, t_max=None, iters=64):
    """First exit distance along rays from ``z`` by bisection on membership."""
    sp = body.space
    U = np.atleast_2d(U)
    if t_max is None:
        c, R = body.bounding
        t_max = float(distance(sp, z, c)) + R
        if sp.kind is Kind.SPHERICAL:
            t_max = min(t_max, math.pi)
    lo = np.zeros(U.shape[0])
    hi = np.full(U.shape[0], float(t_max))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = body.contains(geodesic_point(sp, z, U, mid))
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


def circle_intersections(sp: Space, c1, c2, r):
    """Common points of two circles of radius ``r`` in a planar model."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if sp.dim != 2:
        raise DomainError("circle intersections are planar only")
    if sp.kind is Kind.EUCLIDEAN:
        d = float(np.linalg.norm(c2 - c1))
        if d == 0 or d > 2 * r:
            return []
        m = 0.5 * (c1 + c2)
        h = math.sqrt(max(r * r - d * d / 4, 0.0))
        e = (c2 - c1) / d
        nrm = np.array([-e[1], e[0]])
        return [m + h * nrm, m - h * nrm]
    g = float(bilinear_form(sp, c1, c2))
    if 1.0 + g <= 0:
        return []
    kap = math.cos(r) if sp.kind is Kind.SPHERICAL else math.cosh(r)
    alpha = kap / (1.0 + g)
    w = np.cross(c1, c2)
    if sp.kind is Kind.HYPERBOLIC:
        w = w * np.array([1.0, -1.0, -1.0])
        g2 = alpha * alpha * (2 + 2 * g) - 1.0
        w = w / math.sqrt(-float(bilinear_form(sp, w, w)))
    else:
        g2 = 1.0 - alpha * alpha * (2 + 2 * g)
        nw = np.linalg.norm(w)
        if nw == 0:
            return []
        w = w / nw
    if g2 < 0:
        return []
    base = alpha * (c1 + c2)
    gam = math.sqrt(g2)
    return [normalize_point(sp, base + gam * w), normalize_point(sp, base - gam * w)]


# ------------------------------------------------------------- operations


def sample_of(body, count=BOUNDARY_DIRECTIONS):
    return body.points if isinstance(body, PointCloud) else body.boundary_sample(count)


def diameter(body):
    """Largest pairwise distance; returns ``(value, x, y)``."""
    P = np.ascontiguousarray(sample_of(body))
    if P.shape[0] < 2:
        return 0.0, P[0], P[0]
    vals, args = kernels.chord_pair_max(body.space.code, P)
    i = int(np.argmax(vals))
    j = int(args[i])
    return float(chord_to_distance(body.space, vals[i])), P[i], P[j]


def hausdorff(X, Y):
    sp = X.space
    A = np.ascontiguousarray(sample_of(X))
    B = np.ascontiguousarray(sample_of(Y))
    q = max(kernels.chord_min(sp.code, A, B).max(), kernels.chord_min(sp.code, B, A).max())
    return float(chord_to_distance(sp, q))


def distance_to_set(body, p):
    return body.distance(np.atleast_2d(p))


def parallel_body(body, rho: float) -> OracleBody:
    """Closed ``rho``-neighbourhood of a body."""
    sp = body.space
    c, R = body.bounding
    rho = float(rho)
    star = body.deep_point if isinstance(body, BallPolytope) else (
        body.star_center if isinstance(body, OracleBody) else c)
    offset = None
    if isinstance(body, BallPolytope) and sp.dim == 2:
        offset = lambda count: body.offset_boundary(rho, count)  # noqa: E731
    return OracleBody(
        sp,
        lambda P: body.distance(P) <= rho + MEMBER_SLACK,
        c,
        R + rho,
        label="parallel",
        params={"rho": rho},
        distance_fn=lambda P: np.maximum(body.distance(P) - rho, 0.0),
        star_center=star,
        depth=getattr(body, "depth", 0),
        boundary_fn=offset,
    )


def _chart_frame(sp: Space, P):
    """Chart images of ``P`` centered at a point whose open hemisphere holds ``P``."""
    from .projections import chart_forward_array

    if sp.kind is Kind.EUCLIDEAN:
        return P
    if sp.kind is Kind.HYPERBOLIC:
        return chart_forward_array(sp, P)
    # largest margin w with <w, x> >= s for all x, |w_i| <= 1
    m, a = P.shape
    cost = np.zeros(a + 1)
    cost[-1] = -1.0
    A = np.hstack([-P, np.ones((m, 1))])
    res = optimize.linprog(cost, A_ub=A, b_ub=np.zeros(m), bounds=[(-1, 1)] * a + [(None, 1)],
                           method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise DomainError("points are not in an open hemisphere")
    w = res.x[:a] / np.linalg.norm(res.x[:a])
    from .geometry_core import isometry_from_origin

    iso = isometry_from_origin(sp, w)
    local = P @ iso.matrix  # inverse of an orthogonal map
    return chart_forward_array(sp, local)


def convex_hull_membership(X: PointCloud, p, tol=1e-10) -> bool:
    """Whether ``p`` lies in the geodesic convex hull of a finite set.

    Geodesics are straight lines in the central chart, so this reduces to a
    linear feasibility problem there.
    """
    sp = X.space
    p = check_points(sp, np.asarray(p, dtype=float))
    Y = _chart_frame(sp, np.vstack([X.points, p[None]]))
    pts, q = Y[:-1], Y[-1]
    m = pts.shape[0]
    A_eq = np.vstack([pts.T, np.ones((1, m))])
    b_eq = np.concatenate([q, [1.0]])
    res = optimize.linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs",
                           options={"primal_feasibility_tolerance": tol})
    return res.status == 0


def d_hull_membership(X: PointCloud, D: float, p):
    """Membership in the intersection of all radius-``D`` balls containing ``X``.

    ``p`` belongs iff every point of ``C``, the intersection of the balls of
    radius ``D`` about the points of ``X``, is within ``D`` of ``p``.  Returns
    ``(inside, sup_distance, gap)``; ``gap`` is zero for planar input, where
    the supremum is attained at a corner of ``C`` or at the far end of a
    diameter through one of its centers.
    """
    sp = X.space
    C = BallPolytope(sp, X.points, D)
    sup = C.farthest(p)
    gap = 0.0 if sp.dim == 2 else _sample_gap(C)
    return sup <= D + 1e-12, sup, gap


def _sample_gap(body, count=BOUNDARY_DIRECTIONS):
    """Half the largest spacing of the boundary sample: how far a sup can be missed."""
    B = body.boundary_sample(count)[:count]
    return 0.5 * float(distance(body.space, B, np.roll(B, -1, axis=0)).max())


def complete(X: PointCloud, D: float, tol=1e-3, max_points=20000, directions=None):
    """Greedy completion of a set of diameter at most ``D`` to constant width ``D``.

    Each round inserts the boundary point of ``C = intersection of B(x, D)``
    over the current cloud that is farthest from the cloud (ties go to the
    lowest direction index).  Stops once that distance drops below ``tol``.
    Returns ``(BallPolytope(cloud, D), info)``.
    """
    sp = X.space
    D = float(D)
    if len(X) > 1 and diameter(X)[0] > D + 1e-9:
        raise DomainError("input diameter exceeds D")
    if directions is None:
        directions = 1 << max(11, math.ceil(math.log2(4 * math.pi * D / tol)))
    cloud = [row for row in X.points]
    code = sp.code

    def rebuild():
        P = np.asarray(cloud)
        z = enclosing_ball(sp, P)[0]
        U = grid_directions(sp, z, directions)
        t, _ = kernels.ball_exit(code, z, U, P, D)
        Q = geodesic_point(sp, z, U, t)
        return z, U, t, Q, kernels.chord_min(code, Q, P)

    z, U, t, Q, dist = rebuild()
    while True:
        top = dist.max()
        j = int(np.argmax(dist >= top - distance_to_chord(sp, 1e-12)))
        gap = float(chord_to_distance(sp, top))
        if gap < tol or len(cloud) >= max_points:
            break
        p = Q[j].copy()
        cloud.append(p)
        m = len(cloud)
        if m & (m - 1) == 0:
            z, U, t, Q, dist = rebuild()
            continue
        tp, _ = kernels.ball_exit(code, z, U, p[None], D)
        ch = np.nonzero(tp < t)[0]
        dist = np.minimum(dist, chord2(sp, Q, p))
        if ch.size:
            t[ch] = tp[ch]
            Q[ch] = geodesic_point(sp, z, U[ch], t[ch])
            dist[ch] = kernels.chord_min(code, Q[ch], np.asarray(cloud))
    body = BallPolytope(sp, np.asarray(cloud), D)
    return body, {"points": len(cloud), "max_gap": gap, "directions": int(directions)}


def circumradius(body):
    """Smallest enclosing radius: ``(radius, center)``.

    Exact for finite sets; for other bodies it is computed on the boundary
    sample, which lies inside the body, so it never overestimates.
    """
    c, r = enclosing_ball(body.space, sample_of(body))
    return r, c


def depth_at(body, z, directions=720, zoom=2):
    """Distance from ``z`` to the complement of ``body``, by ray exits.

    The smallest exit time over a direction grid is refined by ``zoom`` rounds
    of denser local grids around the best few directions (planar case).
    """
    sp = body.space
    z = np.asarray(z, dtype=float)
    if not body.contains(z[None])[0]:
        return -float(body.distance(z[None])[0])
    basis = tangent_basis(sp, z)
    U = grid_directions(sp, z, directions)
    t = ray_exits(body, z, U)
    best = float(t.min())
    if sp.dim != 2:
        return best
    th = 2 * math.pi * np.arange(directions) / directions
    step = 2 * math.pi / directions
    centers = th[np.argsort(t)[:3]]
    for _ in range(zoom):
        local = (centers[:, None] + np.linspace(-step, step, 33)[None, :]).ravel()
        Ul = np.cos(local)[:, None] * basis[0] + np.sin(local)[:, None] * basis[1]
        tl = ray_exits(body, z, Ul)
        best = min(best, float(tl.min()))
        centers = local[np.argsort(tl)[:3]]
        step /= 16
    return best


def inradius(body, extra_starts=0, rng=None, sample=16384):
    """Largest inscribed radius: ``(radius, center, info)``.

    For a ball polytope the value is exact: ``radius - R(centers)``.  For an
    oracle body the distance to a dense boundary sample is maximized by
    Nelder-Mead from ``2n + 2`` deterministic starts plus ``extra_starts``
    random ones; the best optimum is then re-evaluated with refined ray
    exits.  ``info["spread"]`` is the largest distance between restart
    optima whose values agree with the best to 1e-9.
    """
    sp = body.space
    if isinstance(body, PointCloud):
        return 0.0, body.bounding[0], {"spread": 0.0}
    if isinstance(body, BallPolytope):
        return body.radius - body.center_radius, body.deep_point, {"spread": 0.0}
    c0 = body.star_center
    c, R = body.bounding
    basis = tangent_basis(sp, c0)
    bnd = np.ascontiguousarray(body.boundary_sample(sample))

    def point(v):
        return exp_map(sp, c0, v @ basis)

    def obj(v):
        z = point(v)
        d = float(chord_to_distance(sp, kernels.chord_min(sp.code, z[None], bnd)[0]))
        return -d if body.contains(z[None])[0] else d

    scale = 0.25 * R
    starts = [np.zeros(sp.dim)]
    for k in range(sp.dim):
        e = np.zeros(sp.dim)
        e[k] = scale
        starts += [e, -e]
    starts.append(np.full(sp.dim, 0.5 * scale / math.sqrt(sp.dim)))
    if extra_starts:
        rng = rng or np.random.default_rng(0)
        starts += [rng.uniform(-scale, scale, sp.dim) for _ in range(extra_starts)]
    results = []
    for v0 in starts:
        simplex = v0 + np.vstack([np.zeros(sp.dim), 0.1 * scale * np.eye(sp.dim)])
        res = optimize.minimize(obj, v0, method="Nelder-Mead",
                                options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000,
                                         "initial_simplex": simplex})
        results.append((-float(res.fun), res.x))
    results.sort(key=lambda r: -r[0])
    best_r, best_v = results[0]
    center = point(best_v)
    close = [point(v) for r, v in results if r >= best_r - 1e-9]
    spread = max(float(distance(sp, center, q)) for q in close)
    refined = depth_at(body, center)
    return min(best_r, refined), center, {"spread": spread, "restarts": len(results),
                                            "sampled": best_r, "refined": refined}


# ------------------------------------------------------------ constructors


def ball_body(sp: Space, center, r, bounding_radius=None) -> BallPolytope:
    return BallPolytope(sp, np.asarray(center, dtype=float)[None], r, bounding_radius=bounding_radius)


def reuleaux_radius(sp: Space, D: float) -> float:
    """Distance from the center of an equilateral triangle of side ``D`` to its corners."""
    if sp.kind is Kind.EUCLIDEAN:
        return D / math.sqrt(3)
    if sp.kind is Kind.SPHERICAL:
        return math.asin(math.sqrt(2.0 / 3.0 * (1 - math.cos(D))))
    return math.asinh(math.sqrt(2.0 / 3.0 * (math.cosh(D) - 1)))


def reuleaux_triangle(sp: Space, D: float) -> BallPolytope:
    """Reuleaux triangle of width ``D`` about the reference point."""
    if sp.dim != 2:
        raise DomainError("Reuleaux triangles are planar")
    if sp.kind is Kind.SPHERICAL and D >= math.pi / 2:
        raise DomainError("spherical width must be below pi/2")
    o = sp.origin()
    b = tangent_basis(sp, o)
    rho = reuleaux_radius(sp, D)
    th = math.pi / 2 + 2 * math.pi * np.arange(3) / 3
    U = np.cos(th)[:, None] * b[0] + np.sin(th)[:, None] * b[1]
    V = geodesic_point(sp, o, U, rho)
    return BallPolytope(sp, V, D)


def cap_cut_ball(sp: Space, D: float, eps: float):
    """Ball of radius ``D/2`` minus a cap holding ``eps`` of its volume.

    Returns ``(body, depth)``.
    """
    from .measures import cap_depth_for_fraction

    t = 0.5 * float(D)
    depth = cap_depth_for_fraction(sp, t, eps)
    o = sp.origin()
    u = tangent_basis(sp, o)[0]
    base = geodesic_point(sp, o, u, t - depth)
    H = Hyperplane(sp, base, geodesic_velocity(sp, o, u, t - depth))
    lim = distance_to_chord(sp, t)

    def member(P):
        return (chord2(sp, P, o) <= lim * (1 + 1e-15)) & (side(H, P) <= 0)

    body = OracleBody(sp, member, o, t, label="cap_cut_ball",
                      params={"D": float(D), "eps": float(eps), "depth": depth})
    body.cut = H
    return body, depth


# ---------------------------------------------------------------- files


def body_to_json(body) -> str:
    sp = body.space
    c, R = body.bounding
    doc = {"space": sp.kind.value, "dim": sp.dim}
    if isinstance(body, PointCloud):
        doc["variant"] = "cloud"
        doc["points"] = body.points.tolist()
    elif isinstance(body, BallPolytope):
        doc["variant"] = "ball_polytope"
        doc["centers"] = body.centers.tolist()
        doc["radius"] = body.radius
    else:
        doc["variant"] = body.label
        doc["params"] = body.params
    doc["bounding"] = {"center": np.asarray(c).tolist(), "radius": float(R)}
    return json.dumps(doc)


def body_from_json(text: str):
    doc = json.loads(text)
    sp = make_space(doc["space"], doc["dim"])
    v = doc["variant"]
    if v == "cloud":
        return PointCloud(sp, doc["points"])
    if v == "ball_polytope":
        return BallPolytope(sp, doc["centers"], doc["radius"])
    if v == "cap_cut_ball":
        return cap_cut_ball(sp, doc["params"]["D"], doc["params"]["eps"])[0]
    raise DomainError(f"cannot rebuild body variant {v!r}")
