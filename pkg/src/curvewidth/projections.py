"""Central projection of the curved models onto the tangent hyperplane at ``e``.

``phi(x) = x / <x, e>`` sends geodesics to straight lines: it is the Klein
model on the hyperboloid and the gnomonic chart on the open hemisphere
``x[0] > 0``.  Chart coordinates are the ``n`` components orthogonal to ``e``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry_core import (
    Kind,
    Space,
    check_points,
    geodesic_point,
    grid_directions,
    tangent_basis,
)


@dataclass(frozen=True)
class ChartPoint:
    """Point of ``e + e_perp``; ``coords`` are the components along ``e_perp``."""

    coords: np.ndarray

    @property
    def ambient(self):
        return np.concatenate([[1.0], self.coords])


def chart_forward_array(sp: Space, X):
    X = np.asarray(X, dtype=float)
    if sp.kind is Kind.EUCLIDEAN:
        return X
    x0 = X[..., 0]
    if np.any(x0 <= 0):
        raise DomainError("point outside the chart domain")
    return X[..., 1:] / x0[..., None]


def chart_inverse_array(sp: Space, Y):
    Y = np.asarray(Y, dtype=float)
    if sp.kind is Kind.EUCLIDEAN:
        return Y
    s = np.einsum("...i,...i->...", Y, Y)
    if sp.kind is Kind.HYPERBOLIC:
        if np.any(s >= 1.0):
            raise DomainError("chart point outside the unit ball")
        w = 1.0 / np.sqrt(1.0 - s)
    else:
        w = 1.0 / np.sqrt(1.0 + s)
    return np.concatenate([w[..., None], Y * w[..., None]], axis=-1)


def chart_forward(sp: Space, x) -> ChartPoint:
    check_points(sp, np.asarray(x, dtype=float))
    return ChartPoint(chart_forward_array(sp, x))


def chart_inverse(sp: Space, y) -> np.ndarray:
    if isinstance(y, ChartPoint):
        y = y.coords
    return chart_inverse_array(sp, y)


@dataclass(frozen=True)
class EllipsoidAxes:
    """Chart image of a ball touching ``e``: full axis lengths and the touch data.

    ``a`` is the length along ``axis_dir`` (through ``e``), ``b`` the common
    length of the transverse axes.
    """

    a: float
    b: float
    touch_point: np.ndarray
    axis_dir: np.ndarray


def ball_image_axes(sp: Space, r: float) -> EllipsoidAxes:
    """Axes of the image of the radius-``r`` ball whose boundary passes through ``e``."""
    r = float(r)
    if r <= 0:
        raise DomainError("radius must be positive")
    if sp.kind is Kind.EUCLIDEAN:
        raise DomainError("the chart is the identity on Euclidean space")
    u = np.zeros(sp.ambient)
    u[1] = 1.0
    if sp.kind is Kind.HYPERBOLIC:
        a = math.tanh(2 * r)
        b = 2 * math.sinh(r) / math.sqrt(math.cosh(2 * r))
    else:
        if r >= math.pi / 4:
            raise DomainError("spherical radius must be below pi/4")
        a = math.tan(2 * r)
        b = 2 * math.sin(r) / math.sqrt(math.cos(2 * r))
    return EllipsoidAxes(a, b, sp.origin(), u)


def ball_touching_origin(sp: Space, r: float):
    """Center of the ball of radius ``r`` whose boundary passes through ``e`` along coordinate 1."""
    u = np.zeros(sp.ambient)
    u[1] = 1.0
    return geodesic_point(sp, sp.origin(), u, r)


def fit_conic(P):
    """Least-squares conic through planar points; returns the 6 coefficients.

    The coefficient vector minimizes the algebraic residual
    ``A x^2 + B x y + C y^2 + D x + E y + F`` under unit norm, after
    centering and scaling the data for conditioning.
    """
    P = np.asarray(P, dtype=float)
    mu = P.mean(axis=0)
    s = np.abs(P - mu).max()
    x, y = ((P - mu) / s).T
    M = np.stack([x * x, x * y, y * y, x, y, np.ones_like(x)], axis=1)
    _, _, vt = np.linalg.svd(M, full_matrices=False)
    A, B, C, D, E, F = vt[-1]
    # undo the normalization: substitute x -> (x - mu0)/s, y -> (y - mu1)/s
    m0, m1 = mu
    A2, B2, C2 = A / s**2, B / s**2, C / s**2
    D2 = D / s - 2 * A2 * m0 - B2 * m1
    E2 = E / s - 2 * C2 * m1 - B2 * m0
    F2 = F + A2 * m0**2 + B2 * m0 * m1 + C2 * m1**2 - D / s * m0 - E / s * m1
    return np.array([A2, B2, C2, D2, E2, F2])


def conic_axes(coef):
    """Center, full axis lengths (major first) and major-axis direction of an ellipse."""
    A, B, C, D, E, F = coef
    M = np.array([[A, B / 2], [B / 2, C]])
    center = np.linalg.solve(2 * M, [-D, -E])
    k = -(F + 0.5 * (D * center[0] + E * center[1]))
    w, v = np.linalg.eigh(M / k)
    if np.any(w <= 0):
        raise DomainError("conic is not an ellipse")
    semi = 1.0 / np.sqrt(w)
    order = np.argsort(semi)[::-1]
    return center, 2 * semi[order], v[:, order[0]]


def ellipse_fit_axes(sp: Space, r: float, count=1000):
    """Fit the chart image of the boundary of the ball touching ``e``.

    Returns ``(len_along_axis, len_transverse, residual)`` where residual is
    the largest algebraic residual of the fitted conic on the data.
    """
    if sp.dim != 2:
        raise DomainError("the conic fit is planar")
    z = ball_touching_origin(sp, r)
    U = grid_directions(sp, z, count)
    P = chart_forward_array(sp, geodesic_point(sp, z, U, r))
    coef = fit_conic(P)
    center, lengths, major = conic_axes(coef)
    x, y = P.T
    res = np.abs(coef @ np.stack([x * x, x * y, y * y, x, y, np.ones_like(x)])) / np.linalg.norm(coef)
    # sort lengths into along-axis (coordinate 1 of the chart) and transverse
    if abs(major[0]) >= abs(major[1]):
        along, trans = lengths
    else:
        trans, along = lengths
    return along, trans, float(res.max())


def jacobian(sp: Space, z, h=1e-6):
    """Matrix of ``D phi`` at ``z`` in an orthonormal tangent frame, by central differences."""
    basis = tangent_basis(sp, z)
    cols = []
    for w in basis:
        fp = chart_forward_array(sp, geodesic_point(sp, z, w, h))
        fm = chart_forward_array(sp, geodesic_point(sp, z, w, -h))
        cols.append((fp - fm) / (2 * h))
    return np.array(cols).T


def differential_bounds_check(sp: Space, z, h=1e-6):
    """Compare the chart differential at ``z`` with its closed-form bounds.

    Returns a dict with the determinant and its closed form, the singular
    values and the sandwich ``[lo, hi]`` they must lie in, and the margins.
    """
    if sp.kind is Kind.EUCLIDEAN:
        raise DomainError("the chart is the identity on Euclidean space")
    z = check_points(sp, np.asarray(z, dtype=float))
    n = sp.dim
    if sp.kind is Kind.HYPERBOLIC:
        c = float(z[0])  # cosh of the distance to e
        det_exact = c ** (-(n + 1))
        lo, hi = 1.0 / c**2, 1.0 / c
    else:
        c = float(z[0])  # cos of the distance to e
        if c <= 0:
            raise DomainError("point outside the open hemisphere")
        det_exact = c ** (-(n + 1))
        lo, hi = 1.0 / c, 1.0 / c**2
    J = jacobian(sp, z, h)
    sv = np.linalg.svd(J, compute_uv=False)
    det = abs(float(np.linalg.det(J)))
    return {
        "det": det,
        "det_exact": det_exact,
        "det_rel_err": abs(det - det_exact) / det_exact,
        "singular_values": sv.tolist(),
        "lo": lo,
        "hi": hi,
        "margin": float(min(sv.min() - lo, hi - sv.max())),
    }


def radial_point(sp: Space, r: float, theta: float = 0.0):
    """Point at distance ``r`` from ``e`` in the direction at angle ``theta`` in the first plane."""
    b = tangent_basis(sp, sp.origin())
    u = math.cos(theta) * b[0] + math.sin(theta) * b[1]
    return geodesic_point(sp, sp.origin(), u, r)

