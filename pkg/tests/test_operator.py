from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pucci_eigen import (InvalidInputError, OperatorSpec, SingularityError, SymmetricMatrix, eval_F,
                         eval_F_batch, pucci_extremal, reflect_operator, verify_operator_axioms)
from pucci_eigen.operator import gradient_weight, jacobi_eigenvalues, pucci_from_eigenvalues

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
positive = st.floats(0.1, 5.0)


def sym(dim):
    return arrays(float, (dim, dim), elements=finite).map(lambda m: 0.5 * (m + m.T))


def ops():
    return st.builds(lambda a, ratio, alpha, sign: OperatorSpec(a, a * ratio, alpha, sign),
                     positive, st.floats(1.0, 4.0), st.floats(0.0, 3.0), st.sampled_from(["plus", "minus"]))


# --- construction and validation -------------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(a=0.0), dict(a=2.0, A=1.0), dict(alpha=-1.0), dict(alpha=-2.5), dict(sign="both"),
    dict(eps_reg=-1e-3), dict(alpha=-0.5), dict(alpha=float("nan")), dict(A=float("inf")),
])
def test_operator_spec_rejects_invalid(kwargs):
    with pytest.raises(InvalidInputError):
        OperatorSpec(**kwargs)


def test_operator_spec_roundtrip():
    op = OperatorSpec(0.5, 3.0, -0.5, "minus", 1e-3)
    assert OperatorSpec.from_dict(json.loads(json.dumps(op.to_dict()))) == op
    assert op.weight_neg == 3.0 and op.weight_pos == 0.5
    assert op.with_eps(0.1).eps_reg == 0.1


def test_symmetric_matrix_reads_upper_triangle():
    X = SymmetricMatrix([[1.0, 2.0], [99.0, 3.0]])
    np.testing.assert_array_equal(X.to_array(), [[1.0, 2.0], [2.0, 3.0]])
    with pytest.raises(InvalidInputError):
        SymmetricMatrix(np.ones((2, 3)))
    with pytest.raises(InvalidInputError):
        SymmetricMatrix([[np.nan]])


# --- eigenvalues ---------------------------------------------------------------


@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_jacobi_matches_lapack(dim):
    rng = np.random.default_rng(dim)
    X = rng.standard_normal((200, dim, dim))
    X = X + np.swapaxes(X, 1, 2)
    np.testing.assert_allclose(jacobi_eigenvalues(X), np.linalg.eigvalsh(X), atol=1e-11)


@given(sym(3))
def test_jacobi_trace_and_order(X):
    e = jacobi_eigenvalues(X)
    assert np.all(np.diff(e) >= 0)
    assert np.isclose(e.sum(), np.trace(X), atol=1e-9)


# --- Pucci values --------------------------------------------------------------


@pytest.mark.parametrize("eigs, a, A, plus, minus", [
    ([1.0, -2.0], 1.0, 2.0, 2.0 - 2.0, 1.0 - 4.0),
    ([3.0, 4.0], 0.5, 3.0, 21.0, 3.5),
    ([-1.0, -1.0, -1.0], 0.5, 3.0, -1.5, -9.0),
    ([0.0, 0.0], 1.0, 5.0, 0.0, 0.0),
])
def test_pucci_hand_values(eigs, a, A, plus, minus):
    X = SymmetricMatrix.diag(eigs)
    assert pucci_extremal(X, a, A, "plus") == pytest.approx(plus)
    assert pucci_extremal(X, a, A, "minus") == pytest.approx(minus)


def test_pucci_rotation_invariant():
    theta = 0.3
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    X = Q @ np.diag([2.0, -1.0]) @ Q.T
    assert pucci_extremal(X, 1, 2) == pytest.approx(2 * 2.0 - 1.0, abs=1e-12)


@given(sym(3), positive, st.floats(1.0, 4.0))
def test_reflection_identity(X, a, ratio):
    # M^+(-X) = -M^-(X)
    A = a * ratio
    assert pucci_extremal(-X, a, A, "plus") == pytest.approx(-pucci_extremal(X, a, A, "minus"), abs=1e-8)


@given(sym(2), positive, st.floats(1.0, 4.0))
def test_minus_below_plus_and_trace_sandwich(X, a, ratio):
    A = a * ratio
    lo, hi = pucci_extremal(X, a, A, "minus"), pucci_extremal(X, a, A, "plus")
    assert lo <= hi + 1e-9
    # linear operators with eigenvalues in [a, A] lie in between; a tr X and A tr X are two of them
    tr = np.trace(X)
    assert lo - 1e-9 <= a * tr <= hi + 1e-9
    assert lo - 1e-9 <= A * tr <= hi + 1e-9


@given(ops(), arrays(float, 2, elements=st.floats(-3, 3)), sym(2),
       st.floats(-3, 3).filter(lambda t: abs(t) > 0.05), st.floats(0.05, 3))
def test_homogeneity(op, p, X, t, mu):
    lhs = eval_F(op, t * p, mu * X)
    rhs = abs(t) ** op.alpha * mu * eval_F(op, p, X)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8 * (1 + abs(rhs)))


@given(ops(), arrays(float, 2, elements=st.floats(-3, 3)), sym(2), arrays(float, (2, 2), elements=st.floats(-2, 2)))
def test_degenerate_ellipticity(op, p, X, G):
    N = G @ G.T
    w = float(p @ p) ** (op.alpha / 2) if op.alpha else 1.0
    diff = eval_F(op, p, X + N) - eval_F(op, p, X)
    tr = np.trace(N)
    scale = 1e-8 * (1 + w * (np.abs(X).sum() + tr) * op.A)
    assert op.a * w * tr - scale <= diff <= op.A * w * tr + scale


def test_reflect_operator_swaps_sign():
    op = OperatorSpec(1, 2, 1, "plus")
    assert reflect_operator(op).sign == "minus"
    assert reflect_operator(reflect_operator(op)) == op


def test_gradient_weight_singular():
    with pytest.raises(SingularityError):
        gradient_weight(0.0, -0.5, 0.0)
    assert gradient_weight(0.0, -0.5, 0.1) == pytest.approx(0.1 ** -0.5)
    assert gradient_weight(0.0, 2.0, 0.0) == 0.0


def test_eval_F_batch_matches_single():
    rng = np.random.default_rng(0)
    op = OperatorSpec(0.5, 3, 1, "minus")
    P = rng.standard_normal((50, 2))
    X = rng.standard_normal((50, 2, 2))
    X = X + np.swapaxes(X, 1, 2)
    single = [eval_F(op, P[i], X[i]) for i in range(50)]
    np.testing.assert_allclose(eval_F_batch(op, P, X), single, rtol=1e-12)


def test_pucci_from_eigenvalues_rejects_bad_sign():
    with pytest.raises(InvalidInputError):
        pucci_from_eigenvalues([1.0], 1, 1, "sideways")


# --- axiom report ----------------------------------------------------------------


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.0])
@pytest.mark.parametrize("a, A", [(1, 1), (1, 2), (0.5, 3)])
def test_axioms_hold(alpha, a, A):
    op = OperatorSpec(a, A, alpha, "plus", 1e-3 if alpha < 0 else 0.0)
    rep = verify_operator_axioms(op, 2000, rng_seed=1)
    assert rep.passed(1e-10), rep


def test_axioms_flag_non_elliptic_evaluator():
    op = OperatorSpec(1, 2, 0)
    # F(X) = -tr X is decreasing in X
    rep = verify_operator_axioms(op, 500, evaluator=lambda P, X: -np.trace(X, axis1=1, axis2=2))
    assert not rep.passed()
    assert rep.ellipticity > 0.1


def test_axioms_deterministic_in_seed():
    op = OperatorSpec(1, 2, 1)
    assert verify_operator_axioms(op, 300, 5).to_dict() == verify_operator_axioms(op, 300, 5).to_dict()
