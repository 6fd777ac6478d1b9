from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pucci_eigen import (Ball, InvalidInputError, Interval, NonConvergenceError, OperatorSpec, ScalarField,
                         Star, apply_F_discrete, build_grid, collatz_bounds, monotone_iterate, pucci_extremal,
                         solve_dirichlet)
from pucci_eigen.solver import discrete_residual


def exact_power_solution_center(alpha: float) -> float:
    """u(0) for |u'|^alpha u'' = -1 on (-1, 1), u(+-1) = 0.

    Integrating (|u'|^alpha u')' = -(1 + alpha) gives u'(x) = ((1 + alpha)|x|)^(1/(1+alpha)) sign(-x),
    so u(0) = (1 + alpha)^(1/(1+alpha)) (1 + alpha) / (2 + alpha).
    """
    return (1 + alpha) ** (1 / (1 + alpha)) * (1 + alpha) / (2 + alpha)


# --- consistency of the discrete operator ------------------------------------------


@pytest.mark.parametrize("domain", [Ball([0.0, 0.0], 1.0), Star([1.0, 0.0, 0.0, 0.2]), Interval(-1, 1)])
@pytest.mark.parametrize("width", [1, 2])
def test_quadratics_are_differentiated_exactly(domain, width):
    # second differences (including shortened cut-cell arms) are exact on quadratics
    g = build_grid(domain, 1 / 16, width)
    u = ScalarField.from_function(g, lambda p: 1.0 - np.sum(p * p, axis=1) / 2)
    F = apply_F_discrete(OperatorSpec(1, 1, 0), g, u)
    np.testing.assert_allclose(F, -g.dim, atol=1e-10)


@settings(max_examples=25)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.sampled_from(["plus", "minus"]))
def test_frame_scheme_is_one_sided(hxx, hxy, hyy, sign):
    # a maximum (minimum) over frames never exceeds (undercuts) the exact Pucci value
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 8, 2)
    u = ScalarField.from_function(g, lambda p: 0.5 * (hxx * p[:, 0] ** 2 + 2 * hxy * p[:, 0] * p[:, 1]
                                                      + hyy * p[:, 1] ** 2))
    op = OperatorSpec(1, 3, 0, sign)
    exact = pucci_extremal(np.array([[hxx, hxy], [hxy, hyy]]), 1, 3, sign)
    F = apply_F_discrete(op, g, u)
    if sign == "plus":
        assert np.all(F <= exact + 1e-9)
    else:
        assert np.all(F >= exact - 1e-9)


@pytest.mark.parametrize("H", [np.diag([1.0, -2.0]), np.array([[0.5, 1.5], [1.5, 0.5]])])
def test_frame_scheme_exact_on_stencil_eigenframes(H):
    # eigenframes along the axes or the diagonals belong to the width-2 stencil
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 8, 2)
    u = ScalarField.from_function(g, lambda p: 0.5 * np.einsum("mi,ij,mj->m", p, H, p))
    for sign in ("plus", "minus"):
        F = apply_F_discrete(OperatorSpec(0.5, 3, 0, sign), g, u)
        np.testing.assert_allclose(F, pucci_extremal(H, 0.5, 3, sign), atol=1e-10)


# --- Dirichlet solves ------------------------------------------------------------------


def test_poisson_1d_exact():
    g = build_grid(Interval(-1, 1), 1 / 64)
    u = solve_dirichlet(OperatorSpec(), g, -1.0)
    x = g.points[g.interior][:, 0]
    np.testing.assert_allclose(u.interior_values, (1 - x ** 2) / 2, atol=1e-12)


def test_poisson_disc_exact_with_cut_cells():
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 16, 2)
    exact = lambda p: (1 - np.sum(p * p, axis=1)) / 4
    # M^+(-I/2) = -a, so (1 - r^2)/4 solves M^+ = -1 with a = 1; snapped nodes carry its exact values
    u, info = solve_dirichlet(OperatorSpec(1, 2, 0), g, -1.0, boundary=exact, return_info=True)
    np.testing.assert_allclose(u.interior_values, exact(g.points[g.interior]), atol=1e-11)
    assert info.converged and info.residual < 1e-9


def test_nonzero_boundary_data():
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 16, 1)
    u = solve_dirichlet(OperatorSpec(), g, 0.0, boundary=lambda p: p[:, 0] + 2 * p[:, 1])
    p = g.points[g.interior]
    np.testing.assert_allclose(u.interior_values, p[:, 0] + 2 * p[:, 1], atol=1e-11)


@pytest.mark.parametrize("alpha, eps", [(1.0, 0.0), (2.0, 0.0), (-0.5, 1e-6)])
def test_power_law_1d_converges_first_order(alpha, eps):
    exact = exact_power_solution_center(alpha)
    op = OperatorSpec(1, 1, alpha, "plus", eps)
    errs = []
    for h in (1 / 64, 1 / 128, 1 / 256):
        u = solve_dirichlet(op, build_grid(Interval(-1, 1), h), -1.0)
        errs.append(abs(u.sample([[0.0]])[0] - exact) / exact)
    assert errs[-1] < 0.01
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 0.8)


def test_regularization_error_dominates_for_large_eps():
    # the regularized problem itself is O(eps^(1 + alpha)) away from the exact one
    op = OperatorSpec(1, 1, -0.5, "plus", 1e-3)
    u = solve_dirichlet(op, build_grid(Interval(-1, 1), 1 / 256), -1.0)
    assert u.sample([[0.0]])[0] - 1 / 12 == pytest.approx(0.0098, abs=5e-4)


def test_explicit_agrees_with_newton():
    g = build_grid(Interval(-1, 1), 1 / 16)
    op = OperatorSpec(1, 1, 1)
    u1 = solve_dirichlet(op, g, -1.0, tol=1e-12)
    u2, info = solve_dirichlet(op, g, -1.0, method="explicit", tol=1e-9, max_steps=50_000, return_info=True)
    assert info.converged
    np.testing.assert_allclose(u1.interior_values, u2.interior_values, atol=1e-7)


@settings(max_examples=15)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.sampled_from([0.0, 1.0]))
def test_discrete_comparison(c1, c2, alpha):
    # more negative data gives a larger solution (monotone scheme)
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 8, 2)
    op = OperatorSpec(1, 2, alpha)
    lo, hi = sorted((c1, c2))
    u_small = solve_dirichlet(op, g, lambda p: -lo * (1 + p[:, 0] ** 2))
    u_large = solve_dirichlet(op, g, lambda p: -hi * (1 + p[:, 0] ** 2))
    assert np.all(u_large.interior_values >= u_small.interior_values - 1e-10)


@settings(max_examples=10)
@given(st.floats(0.1, 10.0))
def test_solution_scaling_under_homogeneity(t):
    # F(t^(1/(1+alpha)) u) = t F(u)
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 8, 2)
    op = OperatorSpec(1, 2, 1.0, "minus")
    u1 = solve_dirichlet(op, g, -1.0, tol=1e-12)
    ut = solve_dirichlet(op, g, -t, tol=1e-12)
    np.testing.assert_allclose(ut.interior_values, t ** 0.5 * u1.interior_values, rtol=1e-8)


def test_solve_residual_is_small_with_lambda():
    g = build_grid(Interval(-1, 1), 1 / 32)
    op = OperatorSpec()
    u, info = solve_dirichlet(op, g, -1.0, lam=1.0, tol=1e-12, max_steps=500, return_info=True)
    assert np.max(np.abs(discrete_residual(op, g, u, -1.0, 1.0))) < 1e-9
    assert info.residual < 1e-9
    # closed form of u'' + u = -1: cos(x)/cos(1) - 1
    x = g.points[g.interior][:, 0]
    np.testing.assert_allclose(u.interior_values, np.cos(x) / np.cos(1) - 1, atol=5e-4)


@pytest.mark.parametrize("params", [(1, 2, 1.0, "plus"), (1, 2, 0.0, "minus")])
def test_direct_and_monotone_routes_agree(params):
    # passing u0 forces the monotone iteration; without it Newton runs on the full equation
    g = build_grid(Ball([0.0, 0.0], 1.0), 1 / 16, 2)
    op = OperatorSpec(*params)
    f = lambda p: -0.5 - np.exp(-4 * np.sum((p - 0.3) ** 2, axis=1))
    direct = solve_dirichlet(op, g, f, lam=3.0, tol=1e-12)
    monotone = solve_dirichlet(op, g, f, lam=3.0, tol=1e-12, max_steps=2000, u0=ScalarField.zeros(g))
    np.testing.assert_allclose(direct.interior_values, monotone.interior_values, rtol=1e-8)


def test_solve_above_eigenvalue_does_not_converge():
    g = build_grid(Interval(-1, 1), 1 / 32)
    with pytest.raises(NonConvergenceError):
        solve_dirichlet(OperatorSpec(), g, -1.0, lam=3.0)


def test_bad_inputs():
    g = build_grid(Interval(-1, 1), 1 / 8)
    with pytest.raises(InvalidInputError):
        solve_dirichlet(OperatorSpec(), g, np.ones(3))
    with pytest.raises(InvalidInputError):
        solve_dirichlet(OperatorSpec(), g, np.nan)
    with pytest.raises(InvalidInputError):
        monotone_iterate(OperatorSpec(), g, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        monotone_iterate(OperatorSpec(), g, -1.0, -1.0)
    with pytest.raises(InvalidInputError):
        monotone_iterate(OperatorSpec(), g, -1.0, 1.0, boundary=1.0, certify=True)


# --- monotone iteration and certificates ----------------------------------------------------


def discrete_laplace_eigenvalue(h: float) -> float:
    """Smallest eigenvalue of -D^2 on (-1, 1) with 2/h cells."""
    return 4 / h ** 2 * np.sin(np.pi * h / 4) ** 2


@pytest.mark.parametrize("factor, status", [(0.8, "converged"), (1.2, "blew_up")])
def test_dichotomy_1d(factor, status):
    h = 1 / 32
    lam = factor * discrete_laplace_eigenvalue(h)
    res = monotone_iterate(OperatorSpec(), build_grid(Interval(-1, 1), h), -1.0, lam, max_steps=2000)
    assert res.status == status
    assert res.trace.nondecreasing()


def test_collatz_bounds_bracket_discrete_eigenvalue():
    h = 1 / 32
    g = build_grid(Interval(-1, 1), h)
    lam_h = discrete_laplace_eigenvalue(h)
    rng = np.random.default_rng(0)
    for lam in (1.0, 2.5, 4.0):
        w = ScalarField.zeros(g).with_interior(rng.uniform(0.1, 1.0, g.n_interior))
        cmin, cmax, _ = collatz_bounds(OperatorSpec(), g, lam, w)
        assert lam / cmax <= lam_h <= lam / cmin


def test_certified_iteration_stops_early():
    h = 1 / 32
    g = build_grid(Interval(-1, 1), h)
    lam_h = discrete_laplace_eigenvalue(h)
    above = monotone_iterate(OperatorSpec(), g, -1.0, 1.05 * lam_h, certify=True, max_steps=2000)
    below = monotone_iterate(OperatorSpec(), g, -1.0, 0.95 * lam_h, certify=True, stop_when_certified=True,
                             max_steps=2000)
    assert above.status == "blew_up" and below.status == "feasible"
    lo, hi = above.eigen_bracket(0.0)
    assert lo <= lam_h <= hi
    lo, hi = below.eigen_bracket(0.0)
    assert lo <= lam_h <= hi


def test_certificates_need_positive_shape():
    g = build_grid(Interval(-1, 1), 1 / 16)
    w = ScalarField.zeros(g).with_interior(np.linspace(-1, 1, g.n_interior))
    _, cmax, _ = collatz_bounds(OperatorSpec(), g, 1.0, w)
    assert cmax == np.inf
