"""Metric primitives for the three constant-curvature model spaces.

A point is a 1-D float array in its model:

* Euclidean ``R^n``: an ``n``-vector.
* Spherical ``S^n``: a unit vector in ``R^(n+1)``.
* Hyperbolic ``H^n``: a vector of ``R^(n+1)`` on the upper sheet
  ``B(x, x) = 1, x[0] > 0`` with ``B(x, y) = x0*y0 - <x', y'>``.

Tangent vectors at ``z`` live in the same ambient space, orthogonal to ``z``
for the form of the model.  Coordinate 0 is the distinguished reference
point ``e`` of the curved models.  Most functions accept stacked inputs
along leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateError, DomainError

CLAMP_TOL = 1e-9  # inner products this far past the domain edge are clamped
MODEL_TOL = 1e-8


class Kind(str, Enum):
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"
    HYPERBOLIC = "hyperbolic"


_CODES = {Kind.EUCLIDEAN: 0, Kind.SPHERICAL: 1, Kind.HYPERBOLIC: 2}


@dataclass(frozen=True)
class Space:
    kind: Kind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dim) < 2:
            raise DomainError(f"dimension must be at least 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def ambient(self) -> int:
        return self.dim if self.kind is Kind.EUCLIDEAN else self.dim + 1

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def curvature(self) -> int:
        return {Kind.EUCLIDEAN: 0, Kind.SPHERICAL: 1, Kind.HYPERBOLIC: -1}[self.kind]

    def origin(self) -> np.ndarray:
        """Reference point: zero vector, or ``e = e_0`` in the curved models."""
        x = np.zeros(self.ambient)
        if self.kind is not Kind.EUCLIDEAN:
            x[0] = 1.0
        return x

    def __str__(self):
        return f"{self.kind.value}{self.dim}"


def space(kind, dim) -> Space:
    return Space(Kind(kind), dim)


# ---------------------------------------------------------------- forms


def bilinear_form(sp: Space, x, y):
    """Ambient form of the model: dot product, or ``B`` on the hyperboloid."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sp.kind is Kind.HYPERBOLIC:
        return x[..., 0] * y[..., 0] - np.einsum("...i,...i->...", x[..., 1:], y[..., 1:])
    return np.einsum("...i,...i->...", x, y)


def tangent_inner(sp: Space, u, v):
    """Riemannian inner product of tangent vectors (``-B`` on the hyperboloid)."""
    if sp.kind is Kind.HYPERBOLIC:
        return -bilinear_form(sp, u, v)
    return bilinear_form(sp, u, v)


def tangent_norm(sp: Space, v):
    return np.sqrt(np.maximum(tangent_inner(sp, v, v), 0.0))


def chord2(sp: Space, x, y):
    """Squared chord, a monotone surrogate of distance that is accurate at small scales."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if sp.kind is Kind.HYPERBOLIC:
        return np.einsum("...i,...i->...", d[..., 1:], d[..., 1:]) - d[..., 0] ** 2
    return np.einsum("...i,...i->...", d, d)


def chord_to_distance(sp: Space, q):
    q = np.maximum(np.asarray(q, dtype=float), 0.0)
    if sp.kind is Kind.EUCLIDEAN:
        return np.sqrt(q)
    if sp.kind is Kind.SPHERICAL:
        return 2.0 * np.arcsin(np.minimum(np.sqrt(q) / 2.0, 1.0))
    return 2.0 * np.arcsinh(np.sqrt(q) / 2.0)


def distance_to_chord(sp: Space, d):
    d = np.asarray(d, dtype=float)
    if sp.kind is Kind.EUCLIDEAN:
        return d * d
    if sp.kind is Kind.SPHERICAL:
        return (2.0 * np.sin(d / 2.0)) ** 2
    return (2.0 * np.sinh(d / 2.0)) ** 2


def distance(sp: Space, x, y):
    """Geodesic distance.

    Raises
    ------
    DomainError
        If the inner product of the inputs falls more than ``CLAMP_TOL``
        outside the domain of ``arccos`` / ``arccosh``.
    """
    if sp.kind is not Kind.EUCLIDEAN:
        c = bilinear_form(sp, x, y)
        if sp.kind is Kind.SPHERICAL:
            bad = np.abs(c) > 1.0 + CLAMP_TOL
        else:
            bad = c < 1.0 - CLAMP_TOL
        if np.any(bad):
            raise DomainError("inner product outside the distance domain")
    return chord_to_distance(sp, chord2(sp, x, y))


# ------------------------------------------------------------- validation


def on_model_error(sp: Space, x):
    x = np.asarray(x, dtype=float)
    if sp.kind is Kind.EUCLIDEAN:
        return np.zeros(x.shape[:-1])
    return np.abs(bilinear_form(sp, x, x) - 1.0)


def check_points(sp: Space, x, tol=MODEL_TOL):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != sp.ambient:
        raise DomainError(f"expected {sp.ambient} coordinates, got {x.shape[-1]}")
    if np.any(on_model_error(sp, x) > tol):
        raise DomainError(f"point is not on the {sp.kind.value} model")
    if sp.kind is Kind.HYPERBOLIC and np.any(x[..., 0] <= 0):
        raise DomainError("point lies on the lower sheet")
    return x


def normalize_point(sp: Space, x):
    """Radially project an ambient vector back onto the model."""
    x = np.asarray(x, dtype=float)
    if sp.kind is Kind.EUCLIDEAN:
        return x
    s = bilinear_form(sp, x, x)
    if np.any(s <= 0):
        raise DomainError("cannot normalize a null or spacelike vector")
    return x / np.sqrt(s)[..., None]


def project_tangent(sp: Space, z, v):
    """Orthogonal projection of ``v`` onto ``T_z``."""
    if sp.kind is Kind.EUCLIDEAN:
        return np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    return v - bilinear_form(sp, v, z)[..., None] * z


def unit_tangent(sp: Space, z, v):
    v = project_tangent(sp, z, v)
    nv = tangent_norm(sp, v)
    if np.any(nv == 0):
        raise DegenerateError("zero tangent vector")
    return v / nv[..., None]


# ------------------------------------------------------------- geodesics


def geodesic_point(sp: Space, z, u, t):
    """Point at arc length ``t`` along the unit-speed geodesic ``z + t u``."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    if sp.kind is Kind.EUCLIDEAN:
        return z + t * u
    if sp.kind is Kind.SPHERICAL:
        return z * np.cos(t) + u * np.sin(t)
    return z * np.cosh(t) + u * np.sinh(t)


def geodesic_velocity(sp: Space, z, u, t):
    """Unit tangent of the same geodesic at arc length ``t``."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    if sp.kind is Kind.EUCLIDEAN:
        return np.broadcast_to(u, np.broadcast_shapes(z.shape, u.shape, t.shape)).copy()
    if sp.kind is Kind.SPHERICAL:
        return -z * np.sin(t) + u * np.cos(t)
    return z * np.sinh(t) + u * np.cosh(t)


def direction(sp: Space, x, y):
    """Unit tangent at ``x`` of the geodesic from ``x`` to ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = y - x
    if sp.kind is Kind.SPHERICAL:
        if np.any(bilinear_form(sp, x, y) < -1.0 + 1e-14):
            raise DegenerateError("antipodal points have no unique geodesic")
        w = w + 0.5 * chord2(sp, x, y)[..., None] * x
    elif sp.kind is Kind.HYPERBOLIC:
        w = w - 0.5 * chord2(sp, x, y)[..., None] * x
    nw = tangent_norm(sp, w)
    if np.any(nw == 0):
        raise DegenerateError("direction between coincident points")
    return w / nw[..., None]


def log_map(sp: Space, z, x):
    """Tangent vector at ``z`` pointing at ``x`` with length ``d(z, x)``."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    d = distance(sp, z, x)
    out = np.zeros(np.broadcast_shapes(z.shape, x.shape))
    nz = np.asarray(d > 0)
    if np.ndim(d) == 0:
        return direction(sp, z, x) * d if d > 0 else out
    zz = np.broadcast_to(z, out.shape)[nz]
    xx = np.broadcast_to(x, out.shape)[nz]
    out[nz] = direction(sp, zz, xx) * d[nz][..., None]
    return out


def exp_map(sp: Space, z, v):
    v = np.asarray(v, dtype=float)
    n = tangent_norm(sp, v)
    safe = np.where(n > 0, n, 1.0)
    return geodesic_point(sp, z, v / safe[..., None], n)


def tangent_angle(sp: Space, a, b):
    """Angle between two tangent vectors at the same point."""
    a = a / tangent_norm(sp, a)[..., None]
    b = b / tangent_norm(sp, b)[..., None]
    return 2.0 * np.arctan2(tangent_norm(sp, a - b), tangent_norm(sp, a + b))


def angle(sp: Space, x, y, z):
    """Angle at vertex ``y`` between the geodesics to ``x`` and to ``z``."""
    return tangent_angle(sp, direction(sp, y, x), direction(sp, y, z))


# ------------------------------------------------------------- isometries


@dataclass(frozen=True)
class Isometry:
    """Affine map ``x -> M x + b`` preserving the model."""

    matrix: np.ndarray
    offset: np.ndarray

    def point(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T + self.offset

    def vector(self, v):
        return np.asarray(v, dtype=float) @ self.matrix.T


def isometry_from_origin(sp: Space, z) -> Isometry:
    """An isometry carrying ``sp.origin()`` to ``z``."""
    z = np.asarray(z, dtype=float)
    m = sp.ambient
    if sp.kind is Kind.EUCLIDEAN:
        return Isometry(np.eye(m), z.copy())
    if sp.kind is Kind.SPHERICAL:
        v = -z.copy()
        s = z[1:] @ z[1:]
        # 1 - z0 cancels near e; on the unit sphere it equals |z'|^2 / (1 + z0)
        v[0] = s / (1.0 + z[0]) if z[0] > 0 else 1.0 - z[0]
        vv = v @ v
        if vv < 1e-30:
            M = np.eye(m)
        else:
            M = np.eye(m) - 2.0 * np.outer(v, v) / vv
        return Isometry(M, np.zeros(m))
    # Lorentz boost
    z0, zv = z[0], z[1:]
    M = np.empty((m, m))
    M[0, 0] = z0
    M[0, 1:] = zv
    M[1:, 0] = zv
    M[1:, 1:] = np.eye(m - 1) + np.outer(zv, zv) / (1.0 + z0)
    return Isometry(M, np.zeros(m))


def tangent_basis(sp: Space, z):
    """Orthonormal basis of ``T_z`` as the rows of an ``(n, ambient)`` array."""
    iso = isometry_from_origin(sp, z)
    E = np.eye(sp.ambient)
    rows = E if sp.kind is Kind.EUCLIDEAN else E[1:]
    return iso.vector(rows)


def sample_directions(sp: Space, z, count, rng):
    """Uniform random unit tangent vectors at ``z``."""
    g = rng.standard_normal((count, sp.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g @ tangent_basis(sp, z)


def grid_directions(sp: Space, z, count):
    """Evenly spaced unit tangent vectors at ``z`` (planar case) or a spiral set."""
    basis = tangent_basis(sp, z)
    if sp.dim == 2:
        th = 2.0 * np.pi * np.arange(count) / count
        return np.cos(th)[:, None] * basis[0] + np.sin(th)[:, None] * basis[1]
    if sp.dim == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / count)
        th = np.pi * (1.0 + 5.0**0.5) * i
        g = np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)
        return g @ basis
    return sample_directions(sp, z, count, np.random.default_rng(count))


# ------------------------------------------------------------- hyperplanes


@dataclass(frozen=True)
class Hyperplane:
    """Totally geodesic hyperplane through ``base`` with unit normal ``normal``.

    The positive side is the one the normal points into.  ``base`` and
    ``normal`` may carry a leading batch axis, one hyperplane per row; points
    passed to the functions below then broadcast against it.
    """

    space: Space
    base: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.base, dtype=float)
        u = np.asarray(self.normal, dtype=float)
        if self.space.kind is not Kind.EUCLIDEAN:
            if np.any(np.abs(bilinear_form(self.space, z, u)) > 1e-8):
                raise DomainError("normal is not tangent at the base point")
        if np.any(np.abs(tangent_inner(self.space, u, u) - 1.0) > 1e-8):
            raise DomainError("normal is not a unit vector")
        object.__setattr__(self, "base", z)
        object.__setattr__(self, "normal", u)

    def flipped(self) -> "Hyperplane":
        return Hyperplane(self.space, self.base, -self.normal)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def side(H: Hyperplane, x):
    """Signed side value; positive on the side the normal points into.

    The value is ``f(s)`` for the signed distance ``s`` to the hyperplane,
    with ``f`` the identity, ``sin`` or ``sinh``.
    """
    x = np.asarray(x, dtype=float)
    sp = H.space
    if sp.kind is Kind.EUCLIDEAN:
        return _dot(x - H.base, H.normal)
    if sp.kind is Kind.SPHERICAL:
        return _dot(x, H.normal)
    return -bilinear_form(sp, x, H.normal)


def signed_distance(H: Hyperplane, x):
    s = side(H, x)
    if H.space.kind is Kind.SPHERICAL:
        return np.arcsin(np.clip(s, -1.0, 1.0))
    if H.space.kind is Kind.HYPERBOLIC:
        return np.arcsinh(s)
    return s


def reflect(H: Hyperplane, x):
    """Mirror image of points in the hyperplane."""
    x = np.asarray(x, dtype=float)
    u = H.normal
    if H.space.kind is Kind.HYPERBOLIC:
        # B(u, u) = -1, so x - 2 B(x, u)/B(u, u) u = x + 2 B(x, u) u
        return x + 2.0 * bilinear_form(H.space, x, u)[..., None] * u
    return x - 2.0 * side(H, x)[..., None] * u


def reflect_vector(H: Hyperplane, v):
    """Differential of the reflection applied to tangent vectors."""
    v = np.asarray(v, dtype=float)
    u = H.normal
    if H.space.kind is Kind.HYPERBOLIC:
        return v + 2.0 * bilinear_form(H.space, v, u)[..., None] * u
    return v - 2.0 * _dot(v, u)[..., None] * u


def perpendicular_bisector(sp: Space, x, y) -> Hyperplane:
    """Hyperplane of points equidistant from ``x`` and ``y``; normal points toward ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = y - x
    nw = tangent_norm(sp, w) if sp.kind is Kind.HYPERBOLIC else np.linalg.norm(w, axis=-1)
    if np.any(nw == 0):
        raise DegenerateError("bisector of coincident points")
    w = w / np.asarray(nw)[..., None]
    if sp.kind is Kind.EUCLIDEAN:
        return Hyperplane(sp, 0.5 * (x + y), w)
    if sp.kind is Kind.SPHERICAL and np.any(bilinear_form(sp, x, y) < -1.0 + 1e-14):
        raise DegenerateError("bisector of antipodal points")
    # y - x is orthogonal to x + y for the form, so it is tangent at the midpoint
    return Hyperplane(sp, normalize_point(sp, x + y), w)


def ball_outer_normal(sp: Space, center, y):
    """Outward unit normal of the ball about ``center`` at its boundary point ``y``."""
    return -direction(sp, y, center)


def hyperplane_through(sp: Space, z, u) -> Hyperplane:
    return Hyperplane(sp, np.asarray(z, dtype=float), unit_tangent(sp, z, u))
