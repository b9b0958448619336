"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""
import math
import subprocess
import sys
import time

import numpy as np

from curvewidth import verify as V
from curvewidth.bodies import PointCloud, ball_body, diameter, reuleaux_triangle
from curvewidth.geometry_core import (
    distance,
    exp_map,
    geodesic_point,
    log_map,
    perpendicular_bisector,
    reflect,
    space,
    tangent_basis,
)
from curvewidth.measures import cap_table, make_rng, sample_ball, stability_constants, volume_table
from curvewidth.projections import ball_image_axes, differential_bounds_check, ellipse_fit_axes
from curvewidth.symmetrize import paired_counts, two_point_cloud, two_point_membership

from conftest import ACCEPTANCE, KINDS, random_points

DIMS = (2, 3)
CURVED = ("spherical", "hyperbolic")


def record(num, ok, detail, t0):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  ({time.perf_counter() - t0:.1f}s) {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def _spaces(dims=DIMS, kinds=KINDS):
    return [space(k, n) for k in kinds for n in dims]


def _unit_dirs(sp, count, rng):
    g = rng.standard_normal((count, sp.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g @ tangent_basis(sp, sp.origin())


def _failed(reports):
    return [f"{r.check_name}/{r.space}{r.dim} margin={r.margin:.3g}" for r in reports if not r.passed]


# ------------------------------------------------------------------ 1


def test_criterion_01_metric_core():
    t0 = time.perf_counter()
    N, tol = 10_000, 1e-9
    bad = []
    for sp in _spaces():
        rng = make_rng(1, "acc1", sp.code, sp.dim)
        X, Y, Z = (random_points(sp, N, rng) for _ in range(3))
        dxy, dyz, dxz = distance(sp, X, Y), distance(sp, Y, Z), distance(sp, X, Z)
        counts = {"triangle": np.count_nonzero(dxz > dxy + dyz + tol)}
        A, B = random_points(sp, N, rng), random_points(sp, N, rng)
        H = perpendicular_bisector(sp, A, B)
        sX, sY = reflect(H, X), reflect(H, Y)
        counts["isometry"] = np.count_nonzero(np.abs(distance(sp, sX, sY) - dxy) > tol)
        counts["involution"] = np.count_nonzero(np.abs(reflect(H, sX) - X).max(axis=1) > tol)
        counts["swap"] = np.count_nonzero(distance(sp, reflect(H, A), B) > tol)
        back = exp_map(sp, X, log_map(sp, X, Y))
        counts["exp_log"] = np.count_nonzero(np.abs(back - Y).max(axis=1) > tol)
        t = 1.2 * rng.random(N)
        P = geodesic_point(sp, sp.origin(), _unit_dirs(sp, N, rng), t)
        counts["unit_speed"] = np.count_nonzero(np.abs(distance(sp, sp.origin(), P) - t) > tol)
        if any(counts.values()):
            bad.append(f"{sp.kind.value}{sp.dim}: {counts}")
    record(1, not bad, "; ".join(bad) or f"{N} cases x 6 properties x 6 spaces, zero failures at {tol:g}", t0)


# ------------------------------------------------------------------ 2

RADII = {"euclidean": (0.5, 1.0, 2.0), "spherical": (0.5, 1.0, 2.5), "hyperbolic": (0.5, 1.0, 2.0)}
CAP_T = {"euclidean": (0.05, 3.0), "spherical": (0.05, 1.5), "hyperbolic": (0.05, 3.0)}


def test_criterion_02_volumes_and_caps():
    t0 = time.perf_counter()
    bad = []
    worst_z = 0.0
    for sp in _spaces():
        k = sp.kind.value
        for r, ex, qd, mc, se in volume_table(sp, RADII[k], mc_samples=1_000_000, seed=2):
            z = abs(mc - ex) / se
            worst_z = max(worst_z, z)
            if abs(qd - ex) > 1e-10 * ex or z > 3.0:
                bad.append(f"{k}{sp.dim} r={r}: exact={ex!r} quad={qd!r} mc={mc!r}+-{se:.2g}")
        t = np.linspace(*CAP_T[k], 20)
        rows = cap_table(sp, t, np.linspace(0.05, 1.0, 20))
        viol = [row for row in rows if not row[3] <= row[2]]
        if len(rows) != 400 or viol:
            bad.append(f"{k}{sp.dim}: {len(viol)} cap bound violations of {len(rows)}")
    record(2, not bad, "; ".join(bad) or
           f"closed form = quadrature at 1e-10, MC worst {worst_z:.2f} sigma at 1e6 samples, "
           "0 of 400 cap bounds violated per space and dim", t0)


# ------------------------------------------------------------------ 3


def test_criterion_03_ellipsoid_axes():
    t0 = time.perf_counter()
    bad = []
    worst = 0.0
    grids = {"hyperbolic": (0.1, 0.25, 0.5, 0.75, 1.0), "spherical": (0.1, 0.2, 0.4, 0.6, 0.75)}
    for k in CURVED:
        sp = space(k, 2)
        for r in grids[k]:
            ax = ball_image_axes(sp, r)
            along, trans, res = ellipse_fit_axes(sp, r, count=1000)
            err = max(abs(along - ax.a), abs(trans - ax.b))
            worst = max(worst, err)
            ordered = along < trans if k == "hyperbolic" else along > trans
            if err > 1e-9 or not ordered:
                bad.append(f"{k} r={r}: fit ({along!r}, {trans!r}) vs ({ax.a!r}, {ax.b!r})")
        hi = 3.0 if k == "hyperbolic" else math.pi / 4 - 1e-3
        for n in DIMS:
            for r in np.linspace(1e-3, hi, 60):
                ax = ball_image_axes(space(k, n), r)
                if not (ax.a < ax.b if k == "hyperbolic" else ax.a > ax.b):
                    bad.append(f"{k}{n} r={r}: a={ax.a!r} b={ax.b!r} out of order")
    record(3, not bad, "; ".join(bad) or
           f"fitted axes within {worst:.1e} of the closed forms; a<b (H), a>b (S) on 60-point r-grids", t0)


# ------------------------------------------------------------------ 4


def test_criterion_04_chart_differential():
    t0 = time.perf_counter()
    bad = []
    worst_det, worst_margin = 0.0, math.inf
    grids = {"hyperbolic": (0.0, 0.3, 0.7, 1.0, 1.5), "spherical": (0.0, 0.3, 0.7, 1.0, 1.4)}
    for sp in _spaces(kinds=CURVED):
        rng = make_rng(4, "acc4", sp.code, sp.dim)
        for r in grids[sp.kind.value]:
            for u in _unit_dirs(sp, 20, rng):
                z = geodesic_point(sp, sp.origin(), u, r)
                out = differential_bounds_check(sp, z)
                c = math.cos(r) if sp.kind.value == "spherical" else math.cosh(r)
                closed = c ** (-(sp.dim + 1))
                rel = abs(out["det"] - closed) / closed
                worst_det = max(worst_det, rel)
                worst_margin = min(worst_margin, out["margin"])
                # the exact values sit on the bounds; central differences reach them to about 1e-9
                if rel > 1e-6 or out["margin"] < -1e-8:
                    bad.append(f"{sp.kind.value}{sp.dim} r={r}: det err {rel:.2g} margin {out['margin']:.2g}")
    record(4, not bad, "; ".join(bad) or
           f"determinant rel err <= {worst_det:.1e}; sandwich margin >= {worst_margin:.1e}", t0)


# ------------------------------------------------------------------ 5


def test_criterion_05_symmetrization():
    t0 = time.perf_counter()
    bad = []
    for sp in _spaces():
        k = sp.kind.value
        rng = make_rng(5, "acc5", sp.code, sp.dim)
        bodies = [ball_body(sp, sample_ball(sp, sp.origin(), 0.2, 1, rng)[0], 0.5)]
        if sp.dim == 2:
            bodies.append(reuleaux_triangle(sp, 1.0))
        a, b = sample_ball(sp, sp.origin(), 0.4, 2, rng)
        bodies.append(two_point_membership(bodies[0], perpendicular_bisector(sp, a, b)))
        for body in bodies:
            for _ in range(3):
                a, b = sample_ball(sp, sp.origin(), 0.6, 2, rng)
                H = perpendicular_bisector(sp, a, b)
                x, t = paired_counts(body, H, sample_ball(sp, sp.origin(), 1.0, 100_000, rng))
                if x != t or x == 0:
                    bad.append(f"{k}{sp.dim} {body.label}: paired counts {x} != {t}")
        grew = 0
        for _ in range(1000):
            X = PointCloud(sp, sample_ball(sp, sample_ball(sp, sp.origin(), 0.3, 1, rng)[0], 0.5,
                                           int(rng.integers(2, 30)), rng))
            a, b = sample_ball(sp, sp.origin(), 0.6, 2, rng)
            T = two_point_cloud(X, perpendicular_bisector(sp, a, b))
            grew += diameter(T)[0] > diameter(X)[0] + 1e-9
        if grew:
            bad.append(f"{k}{sp.dim}: diameter grew on {grew} of 1000 clouds")
        for kind in ("cloud", "balls"):
            rep = V.check_two_point_parallel(sp, points=100_000, seed=5, body_kind=kind)
            v = rep.measured["containment_violations"]
            if v or not rep.passed:
                bad.append(f"{k}{sp.dim} {kind}: {v} containment violations, margin {rep.margin:.3g}")
    record(5, not bad, "; ".join(bad) or
           "paired hit counts equal; 0 diameter increases on 1000 clouds; "
           "0 parallel-domain containment violations at 1e5 points", t0)


# ------------------------------------------------------------------ 6


def test_criterion_06_inequality_checkers():
    t0 = time.perf_counter()
    N = 10_000
    reps = []
    for sp in _spaces():
        reps.extend(V.suite(name, sp, {"trials": N})[0] for name in
                    ("ballboundary", "pythagorean", "anglemonotone", "sumtwoangles", "ballboundary0"))
    for n in DIMS:
        reps.append(V.check_ballconvexhull(n, trials=N, seed=6))
    bad = _failed(reps) + [f"{r.check_name}/{r.space}{r.dim} ran {r.trials}" for r in reps if r.trials != N]
    record(6, not bad, "; ".join(bad) or
           f"{len(reps)} checker runs x {N} configurations, every margin >= 0 (or >= -3 sigma)", t0)


# ------------------------------------------------------------------ 7


def test_criterion_07_radii_identities():
    t0 = time.perf_counter()
    reps = []
    worst_rr = worst_par = 0.0
    for k in KINDS:
        sp = space(k, 2)
        rr = V.check_rr(sp, 1.0, seed=7)
        par = V.check_parallel_radii(sp, 1.0, 0.2, seed=7)
        worst_rr = max(worst_rr, rr.measured["max"])
        worst_par = max(worst_par, par.measured["max"])
        reps += [rr, par]
        assert rr.parameters["bodies"][:2] == ["ball", "reuleaux"] and rr.trials == 7
    bad = _failed(reps)
    record(7, not bad, "; ".join(bad) or
           f"|R + r - D| <= {worst_rr:.1e} over ball, Reuleaux and 5 completions; "
           f"parallel radii err <= {worst_par:.1e}", t0)


# ------------------------------------------------------------------ 8


def test_criterion_08_isodiametric():
    t0 = time.perf_counter()
    reps = [V.run_isodiametric_mc(space(k, 2), 1.0, trials=100, seed=8) for k in KINDS]
    bad = _failed(reps)
    ratio = max(r.measured["max"] for r in reps)
    eq = max(abs(r.measured["ball_estimate"] - r.measured["ball_exact"]) for r in reps)
    record(8, not bad, "; ".join(bad) or
           f"300 bodies, largest volume ratio {ratio:.3f}, ball equality error {eq:.1e}", t0)


# ------------------------------------------------------------------ 9


def test_criterion_09_stability_scaling():
    t0 = time.perf_counter()
    fits = [V.run_stability_scaling(space(k, 2), 1.0, (1e-2, 1e-3, 1e-4, 1e-5)) for k in KINDS]
    bad = [f"{f.space}: slope {f.slope:.4f} low_confidence={f.low_confidence}"
           for f in fits if not f.passed or f.low_confidence]
    slopes = ", ".join(f"{f.space[0].upper()} {f.slope:.4f}" for f in fits)
    record(9, not bad, "; ".join(bad) or f"slopes {slopes} against 2/3 +- 0.05", t0)


# ------------------------------------------------------------------ 10


def constants_oracle(kind, n, D):
    """Stability constants evaluated branch by branch, independently of measures."""
    E = math.exp
    if kind == "hyperbolic":
        forms = ([E(21) * n * D] if D <= 2 else []) + ([n * E(7 * D + 8)] if D >= 1 else [])
        gamma = min(forms)
        eps = E(-28 * n) * n ** (-n / 2) if D <= 2 else E(-18 * D) * n ** (-n / 2)
        g1 = 1 / (2 ** (8 * n) * n**n) / math.sinh(10 * D) ** ((n + 2) / 2)
        eta0 = min(1.0, D / 2)
        return dict(gamma=gamma, eps_threshold=eps, gamma1_tilde=g1, eta0=eta0,
                    gamma0_tilde=math.sqrt(math.tanh(D)) / 4, gamma_tilde=1 / math.sinh(5 * D), rho=D / 2)
    g1 = 1 / (2 ** (12 * n) * n**n) / D ** ((n + 2) / 2)
    if kind == "euclidean" or D <= math.pi / 6:
        eps, eta0 = E(-28 * n) * n ** (-n / 2), D / 2
    else:
        eps = E(-30 * n) * n ** (-n / 2) * (math.pi / 2 - D) ** (3 * n + 2)
        eta0 = 3 / (4 * math.pi) * (math.pi / 2 - D) ** 2
    g0 = math.sqrt(D) / 4 if kind == "euclidean" else math.sqrt(math.tan(D / 2)) / 4
    rho = D / 2 if kind == "euclidean" else min(D / 2, math.pi / 8 - D / 4)
    return dict(gamma=E(21) * n * D, eps_threshold=eps, gamma1_tilde=g1, eta0=eta0,
                gamma0_tilde=g0, gamma_tilde=1 / (4 * D), rho=rho)


D_GRID = {"euclidean": (0.1, 1.0, 3.0, 10.0), "spherical": (0.1, 0.5, math.pi / 6, 0.6, 1.2, 1.5),
          "hyperbolic": (0.3, 1.0, 1.5, 2.0, 2.5, 4.0)}


def test_criterion_10_constants_and_endtoend():
    t0 = time.perf_counter()
    bad = []
    entries = 0
    for k in KINDS:
        for n in (2, 3, 4):
            for D in D_GRID[k]:
                got = stability_constants(space(k, n), D).as_dict()
                for name, want in constants_oracle(k, n, D).items():
                    entries += 1
                    if abs(got[name] - want) > 1e-14 * abs(want):
                        bad.append(f"{k}{n} D={D} {name}: {got[name]!r} vs {want!r}")
    eps = 1e-3
    for k in KINDS:
        sp = space(k, 2)
        const = stability_constants(sp, 1.0)
        rep = V.run_stability_endtoend(sp, 1.0, eps, seed=10, mode="strict")
        m = rep.measured
        sandwich = {"r_in", "r_out", "circumradius", "depth_at_center"} <= set(m)
        excess_ok = m["hull_excess"] - m["eps_volume"] <= 3 * m["hull_excess_se"]
        if not (rep.passed and sandwich and excess_ok and rep.parameters["mode"] == "illustrative"
                and m["constants"] == const.as_dict() and eps >= const.eps_threshold):
            bad.append(f"{k}: endtoend passed={rep.passed} mode={rep.parameters['mode']} "
                       f"excess {m['hull_excess']:.3g} vs {m['eps_volume']:.3g}")
    record(10, not bad, "; ".join(bad) or
           f"{entries} table entries match; illustrative end-to-end sandwich and hull excess "
           f"<= eps V + 3 sigma in all spaces", t0)


# ------------------------------------------------------------------ 11

CLI_RUNS = [
    ["volumes", "--samples", "50000"],
    ["volumes", "--space", "hyperbolic", "--dim", "3", "--format", "csv", "--samples", "20000"],
    ["verify", "ballboundary", "--trials", "3000"],
    ["verify", "ballconvexhull", "--space", "euclidean", "--trials", "300", "--format", "csv"],
    ["verify", "twopointparallel", "--samples", "20000"],
    ["verify", "isodiametric", "--space", "spherical", "--trials", "5", "--samples", "5000"],
    ["stability", "--samples", "50000"],
]


def _cli(args, threads):
    proc = subprocess.run([sys.executable, "-m", "curvewidth.cli", *args, "--seed", "11",
                           "--threads", str(threads)], capture_output=True, check=False)
    return proc.returncode, proc.stdout


def test_criterion_11_cli_reproducibility():
    t0 = time.perf_counter()
    bad = []
    for args in CLI_RUNS:
        code, ref = _cli(args, 1)
        if code != 0 or not ref:
            bad.append(f"{' '.join(args[:2])}: exit {code}")
            continue
        for threads in (1, 2, 4):
            code, out = _cli(args, threads)
            if out != ref:
                bad.append(f"{' '.join(args)} differs at {threads} threads")
    record(11, not bad, "; ".join(bad) or
           f"{len(CLI_RUNS)} configurations byte-identical across repeat runs and 1/2/4 threads", t0)
