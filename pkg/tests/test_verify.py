import json
import math

import numpy as np
import pytest

from curvewidth import verify as V
from curvewidth.bodies import BallPolytope, ball_body
from curvewidth.errors import DomainError, NotApplicable
from curvewidth.geometry_core import (
    angle,
    distance,
    geodesic_point,
    perpendicular_bisector,
    reflect,
    space,
    tangent_basis,
)
from curvewidth.measures import make_rng, stability_constants

from conftest import KINDS, random_points

ALL2 = [space(k, 2) for k in KINDS]


# ------------------------------------------------------------ oracles


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_reflected_normal_angle_is_the_angle_at_p(sp):
    # the mirror image of the ball about y0 has outer normal at p pointing away from s(y0)
    rng = make_rng(0, "oracle", sp.code)
    y0, y1, p = V.ballboundary_configs(sp, 0.9, 0.1, 500, rng)
    got = V.reflected_normal_angle(sp, y0, y1, p)
    H = perpendicular_bisector(sp, p, y1)
    want = angle(sp, reflect(H, y0), p, y0)
    assert np.allclose(got, want, atol=1e-9)


def test_reflected_normal_angle_planar_vectors():
    sp = space("euclidean", 2)
    rng = np.random.default_rng(50)
    for _ in range(100):
        y0 = np.zeros(2)
        y1 = rng.standard_normal(2)
        y1 /= np.linalg.norm(y1)
        p = 2.5 * rng.standard_normal(2)
        n = y1 - p
        n /= np.linalg.norm(n)
        N = y1 - 2 * np.dot(y1, n) * n          # mirror the normal y1 - y0 in the line
        u = p / np.linalg.norm(p)
        ref = math.acos(np.clip(np.dot(N, u), -1, 1))
        assert V.reflected_normal_angle(sp, y0, y1, p) == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_ballboundary_configs_are_admissible(sp):
    R, eta = (1.0, 0.1)
    y0, y1, p = V.ballboundary_configs(sp, R, eta, 2000, make_rng(1, "cfg"))
    assert np.allclose(distance(sp, y0, y1), R)
    assert np.all(distance(sp, y0, p) >= R + eta - 1e-12)
    a = angle(sp, y1, y0, p)
    assert np.all((a > 0) & (a <= math.pi / 2 + 1e-12))


def test_ballboundary_limit():
    sp = space("euclidean", 2)
    rep = V.check_ballboundary(sp, 1.0, 1e-4, trials=2000)
    assert rep.passed
    assert rep.measured["min"] < 1e-3 and rep.bound < 1e-3


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_ballboundary_domain(sp):
    with pytest.raises(DomainError):
        V.check_ballboundary(sp, 1.0, 0.6)


def test_ballboundary_hyperbolic_example():
    rep = V.check_ballboundary(space("hyperbolic", 2), 1.0, 0.2)
    assert rep.passed and rep.margin >= 0


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_ballboundary0(sp):
    rep = V.check_ballboundary0(sp, 0.8, trials=2000)
    assert rep.passed
    assert rep.measured["on_sphere_max"] <= 1e-9
    assert rep.measured["off_sphere_min"] >= 1e-4


def test_pythagorean_right_angle_identity():
    R, eta = 1.0, 0.1
    sp = space("euclidean", 2)
    u, w = tangent_basis(sp, sp.origin())
    y1 = geodesic_point(sp, sp.origin(), u, R)
    p = y1 + math.sqrt((R + eta) ** 2 - R**2) * w
    assert distance(sp, sp.origin(), p) == pytest.approx(R + eta)
    assert distance(sp, y1, p) >= math.sqrt(2 * R * eta)


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_pythagorean_configs_are_admissible(sp):
    R = 0.7 if sp.kind.value == "spherical" else 1.0
    y0, y1, p = V.pythagorean_configs(sp, R, 0.1, 2000, make_rng(2, "cfg"))
    assert np.all(distance(sp, y0, p) >= R + 0.1 - 1e-12)
    assert np.all(angle(sp, y0, y1, p) <= math.pi / 2 + 1e-9)
    assert V.check_pythagorean(sp, R, 0.1, trials=2000).passed


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_triangle_checks(sp):
    assert V.check_sumtwoangles(sp, trials=2000).passed
    assert V.check_angle_monotone(sp, trials=2000).passed


def square_hull_area(r, alpha, grid=1200, dirs=720):
    """Grid quadrature with hull membership from the support function.

    The region lies in ``0 <= x <= r (1 - cos(alpha/2))``, the hull's extent
    along the bisector of the two centers.
    """
    h = alpha / 2
    w1 = r * np.array([-math.cos(h), math.sin(h)])
    w2 = r * np.array([-math.cos(h), -math.sin(h)])
    th = 2 * math.pi * np.arange(dirs) / dirs
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    supp = np.maximum(U @ w1, U @ w2) + r
    xm, ym = r * (1 - math.cos(h)), r * (1 + math.sin(h))
    xs = (np.arange(grid) + 0.5) / grid * xm
    ys = ((np.arange(grid) + 0.5) / grid * 2 - 1) * ym
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    Q = P[(P @ -w1 >= 0) & (P @ -w2 >= 0)]
    ok = np.ones(len(Q), dtype=bool)
    for k in range(0, dirs, 60):
        ok &= np.all(Q @ U[k:k + 60].T <= supp[k:k + 60] + 1e-12, axis=1)
    return ok.sum() * (xm / grid) * (2 * ym / grid)


def test_ballconvexhull_volume_against_support_function_quadrature():
    for alpha in (math.pi / 4, math.pi / 2, 2.5):
        val, se = V.ballconvexhull_volume(2, 1.0, alpha, 400_000, make_rng(3, "bch"))
        ref = square_hull_area(1.0, alpha)
        assert abs(val[0] - ref) <= 3 * se[0] + 1e-3 * ref


def test_ballconvexhull_example_and_limit():
    val, se = V.ballconvexhull_volume(2, 1.0, math.pi / 2, 200_000, make_rng(4, "bch"))
    c2 = 1 / (2**8 * 4)
    assert val[0] >= c2 * (math.pi / 2) ** 3 * math.cos(math.pi / 4) - 3 * se[0]
    small, _ = V.ballconvexhull_volume(2, 1.0, 1e-3, 20_000, make_rng(5, "bch"))
    assert small[0] < 1e-6 and V.ballconvexhull_bound(2, 1.0, 1e-3, 1e-3) < 1e-9
    assert V.check_ballconvexhull(3, trials=200, samples=4096).passed


def test_ballconvexhull_only_in_euclidean():
    with pytest.raises(NotApplicable):
        V.suite("ballconvexhull", space("spherical", 2), {})


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_two_point_parallel(sp):
    for kind in ("cloud", "balls"):
        rep = V.check_two_point_parallel(sp, 0.3, trials=20, points=20_000, body_kind=kind)
        assert rep.measured["containment_violations"] == 0
        assert rep.passed


def test_improve_not_applicable_for_balls():
    sp = space("euclidean", 2)
    B = ball_body(sp, sp.origin(), 0.5)
    x1 = geodesic_point(sp, sp.origin(), tangent_basis(sp, sp.origin())[0], 0.5)
    x2 = -x1
    with pytest.raises(NotApplicable):
        V.check_improve(sp, 1.0, body=B, witness=(x1, x2), samples=10_000)


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_improve_reuleaux(sp):
    rep = V.check_improve(sp, 1.0, samples=100_000)
    assert rep.passed
    assert "bisectors" in rep.notes


def test_improve_gap_grows_with_eta():
    sp = space("euclidean", 2)
    gaps = []
    for eta in (0.1, 0.2, 0.3):
        body, wit = V.improve_family_body(sp, 1.0, eta, tol=1e-2)
        rep = V.check_improve(sp, 1.0, body=body, eta=eta, witness=wit, samples=200_000)
        gaps.append((rep.measured["min"], rep.measured["sigma_at_worst"]))
    for (g0, s0), (g1, s1) in zip(gaps, gaps[1:]):
        assert g1 >= g0 - 3 * math.hypot(s0, s1)


def test_rr_ball_and_non_complete_body():
    sp = space("hyperbolic", 2)
    assert V.check_rr(sp, 1.0, bodies=[("ball", ball_body(sp, sp.origin(), 0.5))]).passed
    # an intersection of three D-balls about a small triangle is not of constant width
    C = random_points(sp, 3, np.random.default_rng(51), 0.1)
    rep = V.check_rr(sp, 1.0, bodies=[("lens", BallPolytope(sp, C, 1.0))])
    assert not rep.passed


def test_parallel_radii_spherical_domain():
    with pytest.raises(DomainError):
        V.check_parallel_radii(space("spherical", 2), 1.2, 0.3)


def test_isodiametric_small():
    rep = V.run_isodiametric_mc(space("euclidean", 2), trials=5, samples=5000)
    assert rep.passed
    assert rep.measured["ball_estimate"] == rep.measured["ball_exact"]


def test_scaling_fit_grid_validation():
    with pytest.raises(DomainError):
        V.ScalingFit(eps=[1e-3, 1e-2], values=[1, 2], slope=0, slope_stderr=0, intercept=0,
                     expected=0, low_confidence=False, passed=False)


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_endtoend_ball_is_tight(sp):
    rep = V.run_stability_endtoend(sp, 1.0, 0.0, samples=10_000)
    m = rep.measured
    assert m["hull_excess"] == 0.0
    assert m["circumradius"] == pytest.approx(0.5, abs=1e-9)
    assert m["depth_at_center"] == pytest.approx(0.5, abs=1e-9)
    assert rep.passed


def test_endtoend_reports_constants_and_mode():
    sp = space("euclidean", 2)
    rep = V.run_stability_endtoend(sp, 1.0, 1e-3, samples=50_000, mode="strict")
    assert rep.parameters["mode"] == "illustrative"
    assert "illustrative" in rep.notes and "non-positive" in rep.notes
    assert rep.measured["constants"] == stability_constants(sp, 1.0).as_dict()
    assert rep.measured["hull_excess"] <= 1e-3 * math.pi / 4 + 3 * rep.measured["hull_excess_se"]


def test_reports_are_reproducible():
    sp = space("hyperbolic", 2)
    a = V.check_ballboundary(sp, trials=500, seed=7)
    b = V.check_ballboundary(sp, trials=500, seed=7)
    assert a.to_json() == b.to_json()
    assert "duration" not in json.loads(a.to_json())
    assert list(json.loads(a.to_json())) == ["check_name", "space", "dim", "parameters", "trials",
                                             "measured", "bound", "margin", "passed", "seed",
                                             "sigma_slack", "notes"]
    c = V.check_ballboundary(sp, trials=500, seed=8)
    assert c.to_json() != a.to_json()


def test_unknown_check():
    with pytest.raises(KeyError):
        V.suite("nope", space("euclidean", 2), {})


# ------------------------------------------------------------- teeth

TIGHT = 1.2


def test_teeth_pythagorean_euclidean():
    # the right-angle corner config is within sqrt(1 + eta/2R) of the bound
    rep = V.check_pythagorean(space("euclidean", 2), 1.0, 0.1, trials=2000, tighten=TIGHT)
    assert not rep.passed


@pytest.mark.parametrize("sp", ALL2, ids=KINDS)
def test_teeth_sumtwoangles(sp):
    assert not V.check_sumtwoangles(sp, trials=2000, tighten=TIGHT).passed


def test_teeth_isodiametric():
    assert not V.run_isodiametric_mc(space("euclidean", 2), trials=5, samples=5000, tighten=TIGHT).passed


def test_teeth_angle_monotone_reversed():
    # swapping the roles of z and w flips the sign of every margin
    sp = space("spherical", 2)
    rng = make_rng(0, "rev")
    y0, y1, z = (random_points(sp, 500, rng, 0.7) for _ in range(3))
    w = geodesic_point(sp, z, V.direction(sp, z, y0), 0.5 * distance(sp, z, y0))
    assert np.all(V.angle_excess(sp, y0, y1, w) - V.angle_excess(sp, y0, y1, z) < 0)


# loose bounds: x1.2 cannot bite; the observed slack is recorded and the
# checker is shown to fail just past it


def _ratio(rep):
    worst = rep.measured["min"] + rep.sigma_slack * rep.measured.get("sigma_at_worst", 0.0)
    return worst / rep.bound


LOOSE = [
    ("ballboundary", "euclidean", 2.43, lambda sp, t: V.check_ballboundary(sp, 1.0, 0.1, 2000, tighten=t)),
    ("ballboundary", "spherical", 4.34, lambda sp, t: V.check_ballboundary(sp, 1.0, 0.1, 2000, tighten=t)),
    ("ballboundary", "hyperbolic", 10.5, lambda sp, t: V.check_ballboundary(sp, 1.0, 0.1, 2000, tighten=t)),
    ("pythagorean", "spherical", 1.47, lambda sp, t: V.check_pythagorean(sp, 0.7, 0.1, 2000, tighten=t)),
    ("pythagorean", "hyperbolic", 1.45, lambda sp, t: V.check_pythagorean(sp, 1.0, 0.1, 2000, tighten=t)),
    ("ballconvexhull", "euclidean", 116.0,
     lambda sp, t: V.check_ballconvexhull(2, trials=500, tighten=t)),
    ("improve", "euclidean", 6.5e7, lambda sp, t: V.check_improve(sp, 1.0, samples=100_000, tighten=t)),
]


def _loose_params():
    for name, kind, ratio, run in LOOSE:
        mark = pytest.mark.xfail(strict=True, reason=f"bound is loose: worst case sits {ratio:g}x above it")
        yield pytest.param(kind, run, id=f"{name}-{kind}", marks=mark)


@pytest.mark.parametrize("kind,run", list(_loose_params()))
def test_teeth_loose_bound_at_1_2(kind, run):
    assert not run(space(kind, 2), TIGHT).passed


@pytest.mark.parametrize("name,kind,ratio,run", LOOSE, ids=[f"{a}-{b}" for a, b, _, _ in LOOSE])
def test_teeth_loose_bound_past_observed_slack(name, kind, ratio, run):
    sp = space(kind, 2)
    base = run(sp, 1.0)
    assert base.passed
    r = _ratio(base)
    assert 0.8 * ratio <= r <= 1.25 * ratio
    assert not run(sp, 1.05 * r).passed
