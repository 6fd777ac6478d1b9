from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from pucci_eigen import (Ball, BarrierFailureError, Box, Domain, DomainError, InvalidInputError, Interval,
                         OperatorSpec, Star, boundary_barrier, build_grid, distance_probe, global_barrier,
                         global_barrier_k)
from pucci_eigen.geometry import barrier_values, global_barrier_derivatives, power_barrier_derivatives

STAR = Star([1.0, 0.0, 0.0, 0.2])


def fd_distance_hessian(domain, x, e=1e-4):
    H = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            ei, ej = np.eye(2)[i] * e, np.eye(2)[j] * e
            pts = np.array([x + ei + ej, x + ei - ej, x - ei + ej, x - ei - ej])
            d = domain.distance(pts)
            H[i, j] = (d[0] - d[1] - d[2] + d[3]) / (4 * e * e)
    return H


# --- shapes ----------------------------------------------------------------------


@pytest.mark.parametrize("data", [
    {"type": "ball", "center": [0.5, -1.0], "R": 2.0},
    {"type": "box", "lo": [0.0, 0.0], "hi": [1.0, 2.0]},
    {"type": "interval", "lo": -1.0, "hi": 3.0},
    {"type": "star", "cos": [1.0, 0.1], "sin": [0.05], "center": [0.0, 0.0]},
])
def test_domain_dict_roundtrip(data):
    dom = Domain.from_dict(data)
    assert Domain.from_dict(dom.to_dict()).to_dict() == dom.to_dict()


def test_invalid_domains():
    with pytest.raises(InvalidInputError):
        Ball([0, 0], 0.0)
    with pytest.raises(InvalidInputError):
        Box([0, 1], [1, 0])
    with pytest.raises(InvalidInputError):
        Star([0.1, 0.5])
    with pytest.raises(InvalidInputError):
        Domain.from_dict({"type": "torus"})


def test_star_reference_quantities():
    # rho = 1 + 0.2 cos 3t: kappa(0) = (1.2^2 + 1.8 * 1.2) / 1.2^3, kappa(pi/3) = (0.64 - 1.44) / 0.8^3
    kmin, kmax = STAR.curvature_range()
    assert kmax == pytest.approx(3.6 / 1.728, rel=1e-10)
    assert kmin == pytest.approx(-0.8 / 0.512, rel=1e-10)
    assert STAR.inscribed_radius() == pytest.approx(0.8, abs=1e-8)
    t = np.linspace(0, 2 * np.pi, 3000, endpoint=False)
    B = STAR.boundary_point(t)
    brute = max(np.max(np.linalg.norm(B[i] - B, axis=1)) for i in range(0, 3000, 3))
    assert STAR.diameter() == pytest.approx(brute, rel=1e-5)
    assert STAR.diameter() >= brute


def test_circle_star_matches_ball():
    circle = Star([1.0])
    ball = Ball([0.0, 0.0], 1.0)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.7, 0.7, (200, 2))
    np.testing.assert_allclose(circle.distance(pts), ball.distance(pts), atol=1e-12)
    np.testing.assert_allclose(circle.curvature(np.linspace(0, 6, 7)), 1.0, atol=1e-14)


@pytest.mark.parametrize("domain", [Ball([0.0, 0.0], 1.0), Box([-1, -1], [1, 2]), STAR, Interval(-1, 1)])
def test_crossing_lands_on_boundary(domain):
    rng = np.random.default_rng(0)
    lo, hi = domain.bbox()
    pts = rng.uniform(lo, hi, (400, domain.dim))
    x = pts[domain.contains(pts)][:50]
    v = rng.standard_normal(x.shape)
    v *= (3 * np.max(hi - lo) / np.linalg.norm(v, axis=1))[:, None]
    s = domain.crossing(x, v)
    np.testing.assert_allclose(domain.distance(x + s[:, None] * v), 0.0, atol=1e-9)


# --- distance probes ---------------------------------------------------------------


@given(st.floats(0.01, 0.99), st.floats(0, 2 * np.pi))
def test_ball_probe_closed_form(r, t):
    ball = Ball([0.3, -0.2], 1.0)
    x = ball.center + r * np.array([np.cos(t), np.sin(t)])
    pr = distance_probe(ball, x)
    assert pr.d == pytest.approx(1 - r, abs=1e-14)
    np.testing.assert_allclose(pr.hess_eigs, [-1 / r, 0.0], rtol=1e-12)
    assert pr.curvature_margin == pytest.approx(r, abs=1e-14)


def test_probe_ridge_and_outside():
    assert not distance_probe(Ball([0, 0], 1), [0.0, 0.0]).unique
    assert not distance_probe(Box([-1, -1], [1, 1]), [0.0, 0.5]).unique is False
    assert not distance_probe(Box([-1, -1], [1, 1]), [0.0, 0.0]).unique
    assert not distance_probe(STAR, [0.0, 0.0]).unique
    with pytest.raises(DomainError):
        distance_probe(Ball([0, 0], 1), [2.0, 0.0])
    with pytest.raises(InvalidInputError):
        distance_probe(Ball([0, 0], 1), [0.0, 0.0, 0.0])


@given(st.lists(st.floats(-1.2, 1.2), min_size=4, max_size=4))
def test_star_distance_is_one_lipschitz(c):
    x, y = np.array(c[:2]), np.array(c[2:])
    if not (STAR.contains(x[None])[0] and STAR.contains(y[None])[0]):
        return
    dx, dy = STAR.distance(np.array([x, y]))
    assert abs(dx - dy) <= np.linalg.norm(x - y) + 1e-10


@pytest.mark.parametrize("x", [[0.2, 0.1], [0.5, 0.3], [-0.4, 0.2], [0.6, -0.1], [-0.1, -0.5]])
def test_star_hessian_matches_finite_differences(x):
    pr = distance_probe(STAR, x)
    assert pr.unique and pr.curvature_margin >= 0.5
    np.testing.assert_allclose(pr.hess, fd_distance_hessian(STAR, np.array(x)), atol=1e-5)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(pr.hess)), pr.hess_eigs, atol=1e-12)


def test_star_nearest_point_is_nearest():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.2, 1.2, (3000, 2))
    pts = pts[STAR.contains(pts)][:100]
    t = np.linspace(0, 2 * np.pi, 20_000, endpoint=False)
    B = STAR.boundary_point(t)
    dt = t[1]
    oracle = []
    for p in pts:
        i = np.argmin(np.linalg.norm(B - p, axis=1))
        res = optimize.minimize_scalar(lambda s: np.linalg.norm(STAR.boundary_point(s) - p),
                                       bounds=(t[i] - dt, t[i] + dt), method="bounded",
                                       options=dict(xatol=1e-12))
        oracle.append(res.fun)
    np.testing.assert_allclose(STAR.distance(pts), oracle, atol=1e-10)


# --- barriers ------------------------------------------------------------------------


@given(st.floats(0.05, 0.95), st.floats(0.01, 0.9), st.integers(1, 30))
def test_barrier_derivatives_match_finite_differences(gamma, d0, k):
    # one-dimensional check along the normal: d(x) = x, grad d = 1, D^2 d = 0
    e = 1e-5 * d0
    # same derivatives as 1 - (1 + s^gamma)^(-k), without the cancellation against 1
    f = lambda s: -(1 + s ** gamma) ** (-k)
    grad, hess = global_barrier_derivatives(np.array([d0]), np.array([[1.0]]), np.zeros((1, 1, 1)), gamma, k)
    assert grad[0, 0] == pytest.approx((f(d0 + e) - f(d0 - e)) / (2 * e), rel=1e-5)
    assert hess[0, 0, 0] == pytest.approx((f(d0 + e) - 2 * f(d0) + f(d0 - e)) / e ** 2, rel=1e-3, abs=1e-3)
    g1, g2 = power_barrier_derivatives(np.array([d0]), np.array([[1.0]]), np.zeros((1, 1, 1)), gamma)
    assert g1[0, 0] == pytest.approx(gamma * d0 ** (gamma - 1), rel=1e-12)
    assert g2[0, 0, 0] == pytest.approx(gamma * (gamma - 1) * d0 ** (gamma - 2), rel=1e-12)


@pytest.mark.parametrize("op", [OperatorSpec(1, 1, 0), OperatorSpec(1, 2, 1), OperatorSpec(0.5, 3, 2, "minus")])
def test_disc_barriers_certify(op):
    ball = Ball([0.0, 0.0], 1.0)
    grid = build_grid(ball, 1 / 16, 2)
    b = boundary_barrier(ball, op, 0.5, 0.1, grid)
    assert b.certified_margin > 0 and b.ridge_fraction < 0.05
    g = global_barrier(ball, op, -1.0, 0.5, grid)
    assert np.max(g.sample_F) <= -1.0 + 1e-12
    assert g.params["k"] == global_barrier_k(ball, op, 0.5)
    np.testing.assert_allclose(g.field.flat[grid.interior],
                               barrier_values(ball, grid.points[grid.interior], 0.5, g.params["k"],
                                              g.params["scale"]), rtol=1e-12)


def test_convex_domain_needs_small_k():
    # no tangential term on convex domains, so the smallest admissible k works
    assert global_barrier_k(Ball([0, 0], 1), OperatorSpec(1, 5, 0), 0.5) == 1
    assert global_barrier_k(STAR, OperatorSpec(1, 2, 0), 0.5) > global_barrier_k(STAR, OperatorSpec(1, 1, 0), 0.5)


def test_boundary_barrier_failure_reports_worst_point():
    grid = build_grid(STAR, 1 / 16, 2)
    with pytest.raises(BarrierFailureError) as err:
        boundary_barrier(STAR, OperatorSpec(1, 2, 0), 0.95, 0.5, grid)
    assert err.value.worst_value > 0
    assert STAR.contains(np.asarray(err.value.worst_point)[None])[0]


def test_too_small_k_fails():
    grid = build_grid(STAR, 1 / 16, 2)
    with pytest.raises(BarrierFailureError):
        global_barrier(STAR, OperatorSpec(1, 2, 0), -1.0, 0.5, grid, k=1)


@pytest.mark.parametrize("kwargs", [dict(gamma=1.0), dict(gamma=0.0), dict(beta=0.5)])
def test_barrier_rejects_bad_parameters(kwargs):
    ball = Ball([0, 0], 1)
    grid = build_grid(ball, 1 / 8, 1)
    args = dict(beta=-1.0, gamma=0.5) | kwargs
    with pytest.raises(InvalidInputError):
        global_barrier(ball, OperatorSpec(), args["beta"], args["gamma"], grid)
