"""Operator family F(p, X) = |p|^alpha M_{a,A}^{+/-}(X) and its structural checks.

The Pucci extremal operators are computed from Hessian eigenvalues,

    M+(X) = a * sum_{e_i < 0} e_i + A * sum_{e_i > 0} e_i
    M-(X) = A * sum_{e_i < 0} e_i + a * sum_{e_i > 0} e_i

and the gradient factor |p|^alpha is optionally regularized to
(|p|^2 + eps_reg^2)^(alpha/2) so that singular exponents (alpha < 0) can be
evaluated at p = 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .exceptions import InvalidInputError, SingularityError

SIGNS = ("plus", "minus")


@dataclass(frozen=True)
class OperatorSpec:
    """Parameters of F(p, X) = (|p|^2 + eps_reg^2)^(alpha/2) M^{sign}_{a,A}(X)."""

    a: float = 1.0
    A: float = 1.0
    alpha: float = 0.0
    sign: str = "plus"
    eps_reg: float = 0.0

    def __post_init__(self):
        for name in ("a", "A", "alpha", "eps_reg"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise InvalidInputError(f"{name} must be finite, got {val!r}")
        if not 0 < self.a <= self.A:
            raise InvalidInputError(f"ellipticity constants need 0 < a <= A, got a={self.a}, A={self.A}")
        if self.alpha <= -1:
            raise InvalidInputError(f"homogeneity exponent must satisfy alpha > -1, got {self.alpha}")
        if self.sign not in SIGNS:
            raise InvalidInputError(f"sign must be one of {SIGNS}, got {self.sign!r}")
        if self.eps_reg < 0:
            raise InvalidInputError(f"eps_reg must be >= 0, got {self.eps_reg}")
        if self.alpha < 0 and self.eps_reg == 0:
            raise InvalidInputError("alpha < 0 requires eps_reg > 0 (the gradient factor is singular at p = 0)")

    @property
    def weight_neg(self) -> float:
        """Coefficient applied to negative Hessian eigenvalues."""
        return self.a if self.sign == "plus" else self.A

    @property
    def weight_pos(self) -> float:
        """Coefficient applied to positive Hessian eigenvalues."""
        return self.A if self.sign == "plus" else self.a

    def with_eps(self, eps_reg: float) -> "OperatorSpec":
        return replace(self, eps_reg=float(eps_reg))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorSpec":
        return cls(**data)


class SymmetricMatrix:
    """Real symmetric N x N matrix, symmetric by construction.

    Only the upper triangle of the input is read; it is mirrored on write.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("matrix entries must be finite")
        upper = np.triu(arr)
        self._data = upper + np.triu(arr, 1).T

    @classmethod
    def diag(cls, values) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def N(self) -> int:
        return self._data.shape[0]

    def to_array(self) -> np.ndarray:
        return self._data.copy()

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in nondecreasing order."""
        return jacobi_eigenvalues(self._data)

    def __neg__(self) -> "SymmetricMatrix":
        return SymmetricMatrix(-self._data)

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._data + _as_array(other))

    def __mul__(self, mu: float) -> "SymmetricMatrix":
        return SymmetricMatrix(mu * self._data)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SymmetricMatrix({self._data.tolist()})"


def _as_array(X) -> np.ndarray:
    if isinstance(X, SymmetricMatrix):
        return X.to_array()
    arr = np.asarray(X, dtype=float)
    return arr


def jacobi_eigenvalues(mats, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of symmetric matrices by cyclic Jacobi rotations.

    Works on a single (N, N) matrix or a stack (..., N, N); each rotation is
    applied to the whole stack at once. Sweeps stop once every off-diagonal
    Frobenius norm is below ``tol`` times the matrix norm. Returns eigenvalues
    sorted ascending along the last axis.
    """
    arr = np.array(mats, dtype=float)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    batch_shape = arr.shape[:-2]
    n = arr.shape[-1]
    M = arr.reshape(-1, n, n)
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    if n == 1:
        out = M[:, 0, :1].copy()
        return out[0] if single else out.reshape(*batch_shape, 1)

    scale = np.sqrt(np.sum(M * M, axis=(1, 2)))
    scale = np.where(scale > 0, scale, 1.0)
    iu, ju = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(M[:, iu, ju] ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for p, q in zip(iu, ju):
            apq = M[:, p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            app = M[:, p, p]
            aqq = M[:, q, q]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
                t = np.where(active, np.sign(theta) / (np.abs(theta) + np.sqrt(1.0 + theta * theta)), 0.0)
            t = np.where(active & (theta == 0), 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # rows p, q
            Mp = M[:, p, :].copy()
            Mq = M[:, q, :].copy()
            M[:, p, :] = c[:, None] * Mp - s[:, None] * Mq
            M[:, q, :] = s[:, None] * Mp + c[:, None] * Mq
            # columns p, q
            Mp = M[:, :, p].copy()
            Mq = M[:, :, q].copy()
            M[:, :, p] = c[:, None] * Mp - s[:, None] * Mq
            M[:, :, q] = s[:, None] * Mp + c[:, None] * Mq
            M[:, p, q] = 0.0
            M[:, q, p] = 0.0
    eig = np.sort(np.diagonal(M, axis1=1, axis2=2), axis=1)
    if single:
        return eig[0]
    return eig.reshape(*batch_shape, n)


def pucci_from_eigenvalues(eigs, a: float, A: float, sign: str = "plus") -> np.ndarray:
    """Pucci extremal value from eigenvalues along the last axis."""
    e = np.asarray(eigs, dtype=float)
    pos = np.sum(np.where(e > 0, e, 0.0), axis=-1)
    neg = np.sum(np.where(e < 0, e, 0.0), axis=-1)
    if sign == "plus":
        return a * neg + A * pos
    if sign == "minus":
        return A * neg + a * pos
    raise InvalidInputError(f"sign must be one of {SIGNS}, got {sign!r}")


def pucci_extremal(X, a: float, A: float, sign: str = "plus") -> float:
    """M^{sign}_{a,A}(X) for a symmetric matrix X."""
    if not 0 < a <= A:
        raise InvalidInputError(f"need 0 < a <= A, got a={a}, A={A}")
    arr = _as_array(X)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix entries must be finite")
    eigs = X.eigenvalues() if isinstance(X, SymmetricMatrix) else SymmetricMatrix(arr).eigenvalues()
    return float(pucci_from_eigenvalues(eigs, a, A, sign))


def gradient_weight(p_norm2, alpha: float, eps_reg: float):
    """(|p|^2 + eps^2)^(alpha/2); raises on an unregularized singular point."""
    p2 = np.asarray(p_norm2, dtype=float)
    if alpha == 0:
        return np.ones_like(p2)
    r2 = p2 + eps_reg * eps_reg
    if alpha < 0 and np.any(r2 == 0):
        raise SingularityError("|p|^alpha with alpha < 0 evaluated at p = 0 and eps_reg = 0")
    return r2 ** (0.5 * alpha)


def eval_F(op: OperatorSpec, p, X) -> float:
    """F(p, X) for a single gradient vector and symmetric matrix."""
    pv = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.all(np.isfinite(pv)):
        raise InvalidInputError("gradient must be finite")
    w = gradient_weight(float(pv @ pv), op.alpha, op.eps_reg)
    return float(w) * pucci_extremal(X, op.a, op.A, op.sign)


def eval_F_batch(op: OperatorSpec, P, X) -> np.ndarray:
    """Vectorized F over stacks: P has shape (B, N), X shape (B, N, N)."""
    P = np.asarray(P, dtype=float)
    w = gradient_weight(np.sum(P * P, axis=-1), op.alpha, op.eps_reg)
    eigs = jacobi_eigenvalues(X)
    return w * pucci_from_eigenvalues(eigs, op.a, op.A, op.sign)


def reflect_operator(op: OperatorSpec) -> OperatorSpec:
    """Operator G(p, X) = -F(-p, -X); for the Pucci family this swaps the sign."""
    return replace(op, sign="minus" if op.sign == "plus" else "plus")


@dataclass
class AxiomReport:
    """Worst relative residuals of the structural axioms over random draws."""

    homogeneity: float
    sandwich: float
    ellipticity: float
    n_samples: int
    dim: int

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.homogeneity, self.sandwich, self.ellipticity) <= tol

    def to_dict(self) -> dict:
        return asdict(self)


def _random_symmetric(rng, n_samples, dim):
    X = rng.uniform(-1.0, 1.0, size=(n_samples, dim, dim))
    return np.triu(X) + np.swapaxes(np.triu(X, 1), 1, 2)


def _random_psd(rng, n_samples, dim):
    G = rng.standard_normal(size=(n_samples, dim, dim))
    Q, _ = np.linalg.qr(G)
    D = rng.uniform(0.0, 1.0, size=(n_samples, dim))
    N = np.einsum("bji,bj,bjk->bik", Q, D, Q)
    return 0.5 * (N + np.swapaxes(N, 1, 2)), D.sum(axis=1)


def verify_operator_axioms(
    op: OperatorSpec,
    n_samples: int,
    rng_seed: int = 0,
    dim: int = 2,
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> AxiomReport:
    """Check homogeneity, the (a, A) sandwich and degenerate ellipticity.

    Draws t, mu, p, X and N >= 0 at random (p on the annulus 0.1 <= |p| <= 2,
    X entries uniform in [-1, 1], N = Q^T D Q with D >= 0) and reports the
    worst relative residual of each property. Evaluation uses eps_reg = 0.
    ``evaluator(P, X)`` replaces the Pucci evaluator, e.g. to confirm that a
    non-elliptic operator is flagged.
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    if evaluator is None:
        def evaluator(P, X):
            w = np.sum(P * P, axis=-1) ** (0.5 * op.alpha)
            return w * pucci_from_eigenvalues(jacobi_eigenvalues(X), op.a, op.A, op.sign)

    rng = np.random.default_rng(rng_seed)
    radius = rng.uniform(0.1, 2.0, size=n_samples)
    direction = rng.standard_normal(size=(n_samples, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    P = radius[:, None] * direction
    t = rng.uniform(0.1, 2.0, size=n_samples) * rng.choice([-1.0, 1.0], size=n_samples)
    mu = rng.uniform(0.1, 2.0, size=n_samples)
    X = _random_symmetric(rng, n_samples, dim)
    N, trN = _random_psd(rng, n_samples, dim)

    pa = radius ** op.alpha
    xnorm = np.sum(np.abs(jacobi_eigenvalues(X)), axis=1)
    tiny = 1e-300

    FX = evaluator(P, X)
    F_scaled = evaluator(t[:, None] * P, mu[:, None, None] * X)
    expected = np.abs(t) ** op.alpha * mu * FX
    scale_h = np.abs(t) ** op.alpha * mu * pa * op.A * xnorm + tiny
    homogeneity = float(np.max(np.abs(F_scaled - expected) / scale_h))

    FY = evaluator(P, X + N)
    diff = FY - FX
    scale_s = pa * op.A * (xnorm + trN) + tiny
    low = op.a * pa * trN - diff
    high = diff - op.A * pa * trN
    sandwich = float(np.max(np.maximum(np.maximum(low, high), 0.0) / scale_s))
    ellipticity = float(np.max(np.maximum(FX - FY, 0.0) / scale_s))
    return AxiomReport(homogeneity, sandwich, ellipticity, n_samples, dim)
