"""Volumes of balls and caps, comparison bounds, and Monte Carlo estimation."""
from __future__ import annotations

import csv
import io
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from .errors import BudgetExceeded, DomainError
from .geometry_core import Kind, Space, isometry_from_origin
from .kernels import thread_count

QUAD_RTOL = 1e-10
MC_CHUNK = 1 << 16


class Method(str, Enum):
    EXACT = "exact"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    samples: int
    method: Method

    def as_dict(self):
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples,
                "method": self.method.value}


def kappa(n: int) -> float:
    """Volume of the Euclidean unit ``n``-ball."""
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


def profile(kind: Kind, t):
    """Radius function of geodesic spheres: ``t``, ``sin t`` or ``sinh t``."""
    kind = Kind(kind)
    if kind is Kind.EUCLIDEAN:
        return np.asarray(t, dtype=float)
    if kind is Kind.SPHERICAL:
        return np.sin(t)
    return np.sinh(t)


def _check_radius(sp: Space, r):
    if r < 0:
        raise DomainError("negative radius")
    if sp.kind is Kind.SPHERICAL and r > math.pi:
        raise DomainError("spherical radius beyond pi")


def ball_volume_exact(sp: Space, r: float):
    """Closed form for dimensions 2 and 3, else ``None``."""
    k, n = sp.kind, sp.dim
    if n == 2:
        if k is Kind.EUCLIDEAN:
            return math.pi * r * r
        if k is Kind.SPHERICAL:
            return 4.0 * math.pi * math.sin(r / 2.0) ** 2
        return 4.0 * math.pi * math.sinh(r / 2.0) ** 2
    if n == 3:
        if k is Kind.EUCLIDEAN:
            return 4.0 * math.pi * r**3 / 3.0
        if k is Kind.SPHERICAL:
            return math.pi * (2.0 * r - math.sin(2.0 * r))
        return math.pi * (math.sinh(2.0 * r) - 2.0 * r)
    return None


def ball_volume_quadrature(sp: Space, r: float) -> float:
    n = sp.dim
    val, _ = integrate.quad(lambda t: float(profile(sp.kind, t)) ** (n - 1), 0.0, r,
                            epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    return n * kappa(n) * val


def ball_volume(sp: Space, r: float, method: str | None = None) -> VolumeEstimate:
    """Volume of a geodesic ball of radius ``r``.

    Closed forms are used in dimensions 2 and 3 unless ``method`` is
    ``"quadrature"``.
    """
    r = float(r)
    _check_radius(sp, r)
    if method != "quadrature":
        v = ball_volume_exact(sp, r)
        if v is not None:
            return VolumeEstimate(v, 0.0, 0, Method.EXACT)
    return VolumeEstimate(ball_volume_quadrature(sp, r), 0.0, 0, Method.QUADRATURE)


def _slice_term(kind: Kind, t, s_gap, s):
    """``f(a)^2`` for the slice radius ``a`` at axial distance ``s`` from the ball center.

    ``s_gap = t - s`` is passed separately so the factorized form stays accurate
    near the rim.
    """
    if kind is Kind.EUCLIDEAN:
        return s_gap * (t + s)
    if kind is Kind.SPHERICAL:
        return math.sin(s_gap) * math.sin(t + s) / math.cos(s) ** 2
    return math.sinh(s_gap) * math.sinh(t + s) / math.cosh(s) ** 2


def cap_volume(sp: Space, t: float, depth: float) -> float:
    """Volume of the cap of depth ``depth`` cut from a ball of radius ``t``.

    The cap is the part of the ball beyond a hyperplane orthogonal to a
    diameter at distance ``t - depth`` from the center.  Integrating in Fermi
    coordinates about the diameter reduces it to one dimension:
    ``kappa(n-1) * integral of f(a_s)^(n-1) ds`` over the axial coordinate.
    """
    t, depth = float(t), float(depth)
    n = sp.dim
    if not 0.0 <= depth <= 2.0 * t:
        raise DomainError("cap depth must lie in [0, 2t]")
    if sp.kind is Kind.SPHERICAL and t >= math.pi / 2:
        raise DomainError("spherical caps need t < pi/2")
    if depth == 0.0:
        return 0.0
    if depth > t:
        return ball_volume(sp, t).value - cap_volume(sp, t, 2.0 * t - depth)

    def g(u):
        # axial coordinate s = t - u^2 removes the square-root endpoint behaviour
        s_gap = u * u
        val = _slice_term(sp.kind, t, s_gap, t - s_gap)
        return 2.0 * u * max(val, 0.0) ** ((n - 1) / 2.0)

    val, _ = integrate.quad(g, 0.0, math.sqrt(depth), epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    return kappa(n - 1) * val


def cap_lower_bound(sp: Space, t: float, depth: float) -> float:
    """Lower bound for the cap volume, valid on each model's admissible range."""
    n, t, d = sp.dim, float(t), float(depth)
    if sp.kind is Kind.EUCLIDEAN:
        if not 0.0 < d <= t:
            raise DomainError("need 0 < depth <= t")
        return 2.0 * kappa(n - 1) / (n + 1) * t ** ((n - 1) / 2) * d ** ((n + 1) / 2)
    if sp.kind is Kind.HYPERBOLIC:
        if not 0.0 < d <= min(t / 2.0, 1.0):
            raise DomainError("need 0 < depth <= min(t/2, 1)")
        return n ** (-(n - 1) / 2) * math.tanh(t - d) ** ((n - 1) / 2) * d ** ((n + 1) / 2)
    if not (0.0 < t < math.pi / 2 and 0.0 < d <= t / 2.0):
        raise DomainError("need 0 < t < pi/2 and 0 < depth <= t/2")
    return t ** ((n - 1) / 2) * d ** ((n + 1) / 2) / (2.0**n * n ** (n / 2))


def cap_depth_for_fraction(sp: Space, t: float, fraction: float, rtol=1e-8):
    """Depth whose cap has volume ``fraction * V(B(t))``."""
    if not 0.0 < fraction < 0.5:
        raise DomainError("fraction must lie in (0, 1/2)")
    target = fraction * ball_volume(sp, t).value

    def resid(d):
        return cap_volume(sp, t, d) - target

    depth = optimize.brentq(resid, 0.0, t, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(resid(depth)) > rtol * target:
        raise DomainError("cap depth bisection did not meet tolerance")
    return depth


def ball_volume_bounds(sp: Space, r: float, s: float):
    """Shrink/grow comparison bounds for ball volumes.

    Returns a dict with ``shrink_lower`` (a lower bound for ``V(B(r-s))``),
    ``shrink_upper`` (an upper bound for the same) and ``grow_upper`` (an upper
    bound for ``V(B(r+s))``), each ``None`` when ``(r, s)`` is outside its range.
    """
    n = sp.dim
    ck = n * kappa(n)
    V = ball_volume(sp, r).value
    f = lambda x: float(profile(sp.kind, x))  # noqa: E731
    sph = sp.kind is Kind.SPHERICAL
    out = {"shrink_lower": None, "shrink_upper": None, "grow_upper": None}
    if 0 < s < r and (not sph or r <= math.pi / 2):
        out["shrink_lower"] = V - s * f(r) ** (n - 1) * ck
    if 0 < s < r / 2:
        if not sph or r <= math.pi / 2:
            out["shrink_upper"] = V - s * f(r / 2) ** (n - 1) * ck
        if not sph or r <= math.pi / 3:
            out["grow_upper"] = V + s * f(1.5 * r) ** (n - 1) * ck
    return out


def ball_volume_global_upper(sp: Space, r: float) -> float:
    n = sp.dim
    if sp.kind is Kind.HYPERBOLIC and r > 1.0:
        return 2.0 ** ((3 * n + 2) / 2) * math.exp((n - 1) * r) / n ** ((n + 1) / 2)
    return 2.0 ** (3 * n) / n ** ((n + 1) / 2) * r**n


def parallel_deficit_bound(sp: Space, eps: float, D: float, variant: str = "power_n"):
    """Allowed volume growth factor bound for the parallel body step.

    ``variant="power_n_minus_1"`` uses exponent ``n-1``; ``"power_n"``
    uses the exponent ``n`` form.
    """
    n = sp.dim
    hyp = sp.kind is Kind.HYPERBOLIC
    if variant == "power_n_minus_1":
        base = 4.0 * math.cosh(0.75 * D) if hyp else 4.0
        return eps * base ** (n - 1)
    if variant == "power_n":
        return eps * 4.0**n * (math.cosh(D) ** n if hyp else 1.0)
    raise DomainError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class StabilityConstants:
    gamma: float
    eps_threshold: float
    gamma1_tilde: float
    eta0: float
    gamma0_tilde: float
    gamma_tilde: float
    rho: float

    def as_dict(self):
        return dict(self.__dict__)


def stability_constants(sp: Space, D: float) -> StabilityConstants:
    """Explicit constants of the stability theorem and its improvement step.

    For hyperbolic ``1 <= D <= 2`` both admissible expressions for the
    stability constant hold and the smaller is returned.
    """
    n, D = sp.dim, float(D)
    if D <= 0:
        raise DomainError("diameter must be positive")
    k = sp.kind
    if k is Kind.SPHERICAL and D >= math.pi / 2:
        raise DomainError("spherical diameter must be below pi/2")
    small_eps = math.exp(-28 * n) * n ** (-n / 2)
    if k is Kind.HYPERBOLIC:
        cands = []
        if D <= 2:
            cands.append(math.exp(21) * n * D)
        if D >= 1:
            cands.append(n * math.exp(7 * D + 8))
        gamma = min(cands)
        eps_t = small_eps if D <= 2 else math.exp(-18 * D) * n ** (-n / 2)
        g1 = 1.0 / (2.0 ** (8 * n) * n**n * math.sinh(10 * D) ** ((n + 2) / 2))
        eta0 = min(1.0, D / 2)
        g0 = math.sqrt(math.tanh(D)) / 4
        gt = 1.0 / math.sinh(5 * D)
        rho = D / 2
    else:
        gamma = math.exp(21) * n * D
        g1 = 1.0 / (2.0 ** (12 * n) * n**n * D ** ((n + 2) / 2))
        gt = 1.0 / (4 * D)
        if k is Kind.EUCLIDEAN or D <= math.pi / 6:
            eps_t = small_eps
            eta0 = D / 2
        else:
            eps_t = math.exp(-30 * n) * n ** (-n / 2) * (math.pi / 2 - D) ** (3 * n + 2)
            eta0 = 3 / (4 * math.pi) * (math.pi / 2 - D) ** 2
        if k is Kind.EUCLIDEAN:
            g0 = math.sqrt(D) / 4
            rho = D / 2
        else:
            g0 = math.sqrt(math.tan(D / 2)) / 4
            rho = min(D / 2, math.pi / 8 - D / 4)
    return StabilityConstants(gamma, eps_t, g1, eta0, g0, gt, rho)


# ------------------------------------------------------------ sampling


def _radii(sp: Space, R: float, count: int, rng) -> np.ndarray:
    """Radial coordinates with density proportional to ``f(t)^(n-1)`` on ``[0, R]``."""
    n = sp.dim
    if sp.kind is Kind.EUCLIDEAN:
        return R * rng.random(count) ** (1.0 / n)
    if n == 2:
        u = rng.random(count)
        if sp.kind is Kind.SPHERICAL:
            return 2.0 * np.arcsin(np.sqrt(u) * math.sin(R / 2))
        return 2.0 * np.arcsinh(np.sqrt(u) * math.sinh(R / 2))
    # rejection from the Euclidean radial law
    out = np.empty(0)
    top = 1.0 if sp.kind is Kind.SPHERICAL else (math.sinh(R) / R) ** (n - 1)
    while out.size < count:
        t = R * rng.random(2 * count) ** (1.0 / n)
        ratio = np.where(t > 0, profile(sp.kind, t) / np.where(t > 0, t, 1.0), 1.0)
        keep = rng.random(t.size) * top <= ratio ** (n - 1)
        out = np.concatenate([out, t[keep]])
    return out[:count]


def sample_ball(sp: Space, center, R: float, count: int, rng) -> np.ndarray:
    """Points distributed uniformly (Riemannian volume) in ``B(center, R)``."""
    t = _radii(sp, R, count, rng)
    g = rng.standard_normal((count, sp.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    if sp.kind is Kind.EUCLIDEAN:
        local = g * t[:, None]
    else:
        f = np.sin(t) if sp.kind is Kind.SPHERICAL else np.sinh(t)
        c = np.cos(t) if sp.kind is Kind.SPHERICAL else np.cosh(t)
        local = np.concatenate([c[:, None], g * f[:, None]], axis=1)
    return isometry_from_origin(sp, center).point(local)


def seed_sequence(seed, *keys) -> np.random.SeedSequence:
    """Named substream: one independent stream per key path.

    Keys are non-negative integers or strings; strings are hashed.
    """
    keys = tuple(_key(k) if isinstance(k, str) else int(k) for k in keys)
    if isinstance(seed, np.random.SeedSequence):
        base = seed
        return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(keys))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(keys))


def make_rng(seed, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *keys)))


def _key(name: str) -> int:
    return int.from_bytes(hashlib.blake2b(name.encode(), digest_size=8).digest(), "little")


def mc_count(sp: Space, membership, center, R: float, samples: int, seed, tag="mc"):
    """Hit count of ``membership`` on uniform samples of ``B(center, R)``.

    Samples are drawn in fixed-size chunks, each from its own substream, so
    the result does not depend on how chunks are spread over workers.
    """
    chunks = [(i, min(MC_CHUNK, samples - i * MC_CHUNK)) for i in range((samples + MC_CHUNK - 1) // MC_CHUNK)]

    def run(job):
        i, m = job
        rng = make_rng(seed, _key(tag), i)
        pts = sample_ball(sp, center, R, m, rng)
        return int(np.count_nonzero(membership(pts)))

    workers = thread_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            hits = list(ex.map(run, chunks))
    else:
        hits = [run(c) for c in chunks]
    return sum(hits)


def binomial_estimate(hits: int, samples: int, box_volume: float) -> VolumeEstimate:
    p = hits / samples
    return VolumeEstimate(box_volume * p, box_volume * math.sqrt(p * (1 - p) / samples),
                          samples, Method.MONTE_CARLO)


def mc_volume(body, samples: int, seed, tag="mc") -> VolumeEstimate:
    """Rejection estimate of the volume of ``body`` inside its bounding ball."""
    if samples <= 0:
        raise BudgetExceeded("no samples requested")
    c, R = body.bounding
    hits = mc_count(body.space, body.contains, c, R, samples, seed, tag)
    return binomial_estimate(hits, samples, ball_volume(body.space, R).value)


def mc_volume_paired(body, H, samples: int, seed, tag="paired"):
    """Antithetic estimate pairing each sample with its mirror image in ``H``.

    Samples come from a ball around the base of ``H`` that contains ``body``
    and its mirror image, so the sampling region is invariant under the
    reflection.  Returns ``(estimate, hits)`` with ``hits`` the summed
    membership count over both members of every pair.
    """
    from .geometry_core import distance, reflect

    sp = body.space
    c, R = body.bounding
    z = H.base
    Rz = float(distance(sp, z, c)) + R
    if sp.kind is Kind.SPHERICAL and Rz > math.pi:
        Rz = math.pi
    hits = 0
    n_chunks = (samples + MC_CHUNK - 1) // MC_CHUNK
    for i in range(n_chunks):
        m = min(MC_CHUNK, samples - i * MC_CHUNK)
        pts = sample_ball(sp, z, Rz, m, make_rng(seed, _key(tag), i))
        hits += int(np.count_nonzero(body.contains(pts)))
        hits += int(np.count_nonzero(body.contains(reflect(H, pts))))
    V = ball_volume(sp, Rz).value
    p = hits / (2 * samples)
    # pairs are dependent, so the stderr uses the per-pair variance bound
    est = VolumeEstimate(V * p, V * math.sqrt(p * (1 - p) / samples), samples, Method.MONTE_CARLO)
    return est, hits


def minkowski_surface_area(body, steps, samples: int, seed, parallel=None):
    """Outer Minkowski content from difference quotients at several step sizes.

    All quotients reuse the same sample stream, so each difference
    ``V(X^s) - V(X)`` is estimated from one count of points in the shell.
    Returns ``(extrapolated, quotients, stderrs)``; the extrapolation is the
    intercept of a linear fit of quotient against step.
    """
    from .bodies import parallel_body

    steps = np.asarray(sorted(steps), dtype=float)
    outer = parallel_body(body, float(steps[-1])) if parallel is None else parallel(float(steps[-1]))
    c, R = outer.bounding
    sp = body.space
    V = ball_volume(sp, R).value
    counts = np.zeros(steps.size)
    n_chunks = (samples + MC_CHUNK - 1) // MC_CHUNK
    for i in range(n_chunks):
        m = min(MC_CHUNK, samples - i * MC_CHUNK)
        pts = sample_ball(sp, c, R, m, make_rng(seed, _key("minkowski"), i))
        d = body.distance(pts)
        counts += ((d[None, :] > 0) & (d[None, :] <= steps[:, None])).sum(axis=1)
    p = counts / samples
    q = V * p / steps
    se = V * np.sqrt(p * (1 - p) / samples) / steps
    if steps.size >= 2:
        slope, intercept = np.polyfit(steps, q, 1)
    else:
        intercept = q[0]
    return float(intercept), q, se


# ------------------------------------------------------------- emitters


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(header, rows) -> str:
    """RFC 4180 CSV text (CRLF line ends, shortest round-trip floats)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def volume_table(sp: Space, radii, mc_samples: int = 0, seed=0):
    """Rows ``(r, exact, quadrature, mc, mc_stderr)`` for each radius."""
    from .bodies import ball_body

    rows = []
    for i, r in enumerate(radii):
        ex = ball_volume_exact(sp, r)
        qd = ball_volume_quadrature(sp, r)
        mc = se = None
        if mc_samples:
            # the ball is sampled inside a ball of twice the radius so the estimate is not trivial
            outer = min(2 * r, math.pi) if sp.kind is Kind.SPHERICAL else 2 * r
            body = ball_body(sp, sp.origin(), r, bounding_radius=outer)
            est = mc_volume(body, mc_samples, seed, tag=f"vol{i}")
            mc, se = est.value, est.stderr
        rows.append((float(r), ex, qd, mc, se))
    return rows


def cap_table(sp: Space, t_values, depth_fracs):
    """Rows ``(t, depth, exact, lower_bound)`` over a grid of admissible pairs."""
    rows = []
    for t in t_values:
        for f in depth_fracs:
            d = float(f * _max_depth(sp, t))
            rows.append((float(t), d, cap_volume(sp, t, d), cap_lower_bound(sp, t, d)))
    return rows


def _max_depth(sp: Space, t):
    if sp.kind is Kind.EUCLIDEAN:
        return t
    if sp.kind is Kind.HYPERBOLIC:
        return min(t / 2, 1.0)
    return t / 2
