import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from curvewidth.geometry_core import Kind, geodesic_point, space, tangent_basis

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

KINDS = [k.value for k in Kind]
# radius of the region random points are drawn from, per model
REACH = {"euclidean": 3.0, "spherical": 1.4, "hyperbolic": 2.5}


@pytest.fixture(params=KINDS)
def sp2(request):
    return space(request.param, 2)


@pytest.fixture(params=[(k, n) for k in KINDS for n in (2, 3)], ids=lambda p: f"{p[0]}{p[1]}")
def sp(request):
    return space(*request.param)


@st.composite
def unit_vectors(draw, n):
    v = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n))
    v = np.asarray(v)
    nv = np.linalg.norm(v)
    if nv < 1e-3:
        v = np.eye(n)[0]
        nv = 1.0
    return v / nv


@st.composite
def model_points(draw, sp, reach=None):
    """A point within ``reach`` of the reference point."""
    reach = REACH[sp.kind.value] if reach is None else reach
    u = draw(unit_vectors(sp.dim)) @ tangent_basis(sp, sp.origin())
    r = draw(st.floats(0, reach, allow_nan=False))
    return geodesic_point(sp, sp.origin(), u, r)


def random_points(sp, count, rng, reach=None):
    reach = REACH[sp.kind.value] if reach is None else reach
    g = rng.standard_normal((count, sp.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = reach * rng.random(count) ** (1.0 / sp.dim)
    return geodesic_point(sp, sp.origin(), g @ tangent_basis(sp, sp.origin()), r)


def law_of_cosines_side(kind, a, b, gamma):
    """Third side of a triangle from two sides and the included angle."""
    if kind == "euclidean":
        return math.sqrt(max(a * a + b * b - 2 * a * b * math.cos(gamma), 0.0))
    if kind == "spherical":
        c = math.cos(a) * math.cos(b) + math.sin(a) * math.sin(b) * math.cos(gamma)
        return math.acos(max(-1.0, min(1.0, c)))
    c = math.cosh(a) * math.cosh(b) - math.sinh(a) * math.sinh(b) * math.cos(gamma)
    return math.acosh(max(1.0, c))


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
