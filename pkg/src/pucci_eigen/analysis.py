"""Discrete checks of the maximum principle, comparison, uniqueness and regularity.

The checks act on computed grid fields. Every hypothesis that the continuum
statements impose exactly is tested up to a tolerance with the same discrete
operator the solvers use. A failed hypothesis yields a *rejected* report,
which is different from a report whose conclusion fails.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InvalidInputError
from .grid import Grid, ScalarField
from .operator import OperatorSpec, reflect_operator
from .solver import apply_F_discrete, monotone_iterate

EXACT_PAIR_LIMIT = 10_000
SAMPLED_PAIRS = 1_000_000


@dataclass
class PrincipleReport:
    """Outcome of a principle check.

    ``holds`` is true exactly when ``worst_violation <= tolerance_used``.
    ``rejected`` names the failed hypothesis when the inputs were not valid;
    such reports have ``holds = False`` and a NaN violation.
    """

    holds: bool
    worst_node: list | None
    worst_violation: float
    tolerance_used: float
    rejected: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModulusReport:
    gamma: float
    constant: float
    lip_constant: float
    interior_margin: float
    n_pairs: int
    exact: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _rejected(reason: str, tol: float) -> PrincipleReport:
    return PrincipleReport(False, None, float("nan"), float(tol), reason)


def _conclusion(grid: Grid, excess: np.ndarray, tol: float) -> PrincipleReport:
    """Report for the nodal excess ``excess`` on interior nodes."""
    if excess.size == 0:
        return PrincipleReport(True, None, -np.inf, float(tol))
    k = int(np.argmax(excess))
    worst = float(excess[k])
    node = grid.points[grid.interior_idx[k]].tolist()
    return PrincipleReport(bool(worst <= tol), node, worst, float(tol))


def _power(vals: np.ndarray, alpha: float) -> np.ndarray:
    return np.abs(vals) ** alpha * vals


def check_max_principle(op: OperatorSpec, tau: float, sigma: ScalarField, grid: Grid | None = None,
                        tol: float = 1e-8) -> PrincipleReport:
    """Check that a discrete subsolution of ``F + tau |.|^alpha .`` is nonpositive.

    Hypotheses: ``sigma <= tol`` on boundary nodes and cut points, and
    ``F_h(sigma) + tau |sigma|^alpha sigma >= -tol`` at every interior node.
    The conclusion tested is ``max sigma <= tol`` over interior nodes.
    """
    grid = sigma.grid if grid is None else grid
    if grid is not sigma.grid:
        raise InvalidInputError("sigma lives on a different grid")
    bvals = np.concatenate([sigma.flat[grid.boundary], sigma.cut_values])
    if bvals.size and np.max(bvals) > tol:
        return _rejected("sigma > 0 on the boundary", tol)
    si = sigma.interior_values
    res = apply_F_discrete(op, grid, sigma) + tau * _power(si, op.alpha)
    if res.size and np.min(res) < -tol:
        return _rejected(f"not a subsolution (residual {np.min(res):.3e})", tol)
    return _conclusion(grid, si, tol)


def check_comparison(op: OperatorSpec, lam: float, sub: ScalarField, sup: ScalarField, f, g,
                     tol: float = 1e-8) -> PrincipleReport:
    """Comparison between a subsolution and a supersolution.

    Hypotheses (all up to ``tol``): ``sub, sup >= 0``; ``sub <= sup`` on the
    boundary; ``F_h(sup) + lam sup^(1+alpha) <= f`` and
    ``F_h(sub) + lam sub^(1+alpha) >= g`` on interior nodes; ``f <= g``;
    ``max f < 0``. The conclusion tested is ``sub <= sup + tol`` nodewise.

    ``f`` and ``g`` accept scalars, callables of the node coordinates, or
    arrays over interior or all nodes.
    """
    grid = sub.grid
    if sup.grid is not grid:
        raise InvalidInputError("sub and sup must share a grid")
    if lam < 0:
        raise InvalidInputError("lam must be nonnegative")
    fi = _interior_data(grid, f)
    gi = _interior_data(grid, g)
    sub_i, sup_i = sub.interior_values, sup.interior_values
    if min(np.min(sub_i), np.min(sup_i)) < -tol:
        return _rejected("fields must be nonnegative", tol)
    bsub = np.concatenate([sub.flat[grid.boundary], sub.cut_values])
    bsup = np.concatenate([sup.flat[grid.boundary], sup.cut_values])
    if bsub.size and np.max(bsub - bsup) > tol:
        return _rejected("sub > sup on the boundary", tol)
    if np.max(fi) >= 0:
        return _rejected("f <= -c < 0 fails", tol)
    if np.max(fi - gi) > tol:
        return _rejected("f <= g fails", tol)
    r_sup = apply_F_discrete(op, grid, sup) + lam * _power(sup_i, op.alpha) - fi
    if np.max(r_sup) > tol:
        return _rejected(f"sup is not a supersolution (residual {np.max(r_sup):.3e})", tol)
    r_sub = apply_F_discrete(op, grid, sub) + lam * _power(sub_i, op.alpha) - gi
    if np.min(r_sub) < -tol:
        return _rejected(f"sub is not a subsolution (residual {np.min(r_sub):.3e})", tol)
    return _conclusion(grid, sub_i - sup_i, tol)


def _interior_data(grid: Grid, data) -> np.ndarray:
    pts = grid.points[grid.interior]
    if callable(data):
        return np.broadcast_to(np.asarray(data(pts), dtype=float), (pts.shape[0],)).astype(float)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(pts.shape[0], float(arr))
    if arr.size == grid.n_interior:
        return arr.reshape(-1)
    if arr.size == grid.n_nodes:
        return arr.reshape(-1)[grid.interior]
    raise InvalidInputError("data has the wrong size for this grid")


def random_subsolution(op: OperatorSpec, grid: Grid, tau: float, rng: np.random.Generator,
                       n_bumps: int = 3, tol: float = 1e-10) -> ScalarField:
    """A random discrete subsolution of ``F + tau |.|^alpha .`` with nonpositive boundary values.

    ``v`` solves the reflected problem ``G(v) + tau |v|^alpha v = f`` with
    ``G(p, X) = -F(-p, -X)``, random ``f <= 0`` built from Gaussian bumps and
    random nonnegative boundary data. Then ``sigma = -v`` satisfies
    ``F(sigma) + tau |sigma|^alpha sigma = -f >= 0``. The monotone iteration
    converges only when ``tau`` is below the principal eigenvalue of ``G``.
    """
    lo, hi = grid.domain.bbox()
    centers = rng.uniform(lo, hi, size=(n_bumps, grid.dim))
    widths = rng.uniform(0.1, 0.4, size=n_bumps) * float(np.min(hi - lo))
    amps = rng.uniform(0.1, 2.0, size=n_bumps)
    base = rng.uniform(0.05, 0.5)
    b_amp = rng.uniform(0.0, 0.2)
    b_freq = rng.integers(1, 4)

    def f(pts):
        out = np.full(pts.shape[0], -base)
        for c, w, a in zip(centers, widths, amps):
            out -= a * np.exp(-np.sum((pts - c) ** 2, axis=1) / (2 * w * w))
        return out

    def boundary(pts):
        return b_amp * (1.0 + np.cos(b_freq * pts[:, 0]))

    res = monotone_iterate(reflect_operator(op), grid, f, tau, boundary=boundary, tol=tol,
                           max_steps=500)
    if res.status != "converged":
        raise InvalidInputError(f"reflected problem did not converge at tau={tau} ({res.status})")
    return -res.u


def check_uniqueness(op: OperatorSpec, grid: Grid, lam: float, f=-1.0, tol: float = 1e-9,
                     seed: int = 0) -> PrincipleReport:
    """Solve ``F_h(u) + lam u^(1+alpha) = f`` (zero boundary data) from two starts.

    The first run starts from ``S(f)``; the second from a random positive
    field. The report holds when the two limits agree within ``10 * tol``
    (relative to their sup-norm).
    """
    fi = _interior_data(grid, f)
    if np.max(fi) >= 0:
        raise InvalidInputError("uniqueness check needs f < 0")
    first = monotone_iterate(op, grid, fi, lam, tol=tol, max_steps=2000)
    rng = np.random.default_rng(seed)
    start = ScalarField.zeros(grid)
    start.flat[grid.interior] = rng.uniform(0.0, 2.0, grid.n_interior) * max(first.u.sup_norm(), 1.0)
    second = monotone_iterate(op, grid, fi, lam, tol=tol, max_steps=2000, u0=start)
    if first.status != "converged" or second.status != "converged":
        return _rejected(f"iteration did not converge ({first.status}, {second.status})", 10 * tol)
    scale = max(first.u.sup_norm(), 1e-300)
    return _conclusion(grid, np.abs(first.u.interior_values - second.u.interior_values) / scale, 10 * tol)


def _node_samples(u: ScalarField):
    """Coordinates, values and boundary distances of domain nodes and cut points."""
    grid = u.grid
    mask = grid.domain_nodes
    pts = np.concatenate([grid.points[mask], grid.cut_points]) if grid.n_cut else grid.points[mask]
    vals = np.concatenate([u.flat[mask], u.cut_values]) if grid.n_cut else u.flat[mask]
    d = np.zeros(pts.shape[0])
    inner = np.zeros(pts.shape[0], dtype=bool)
    inner[: int(mask.sum())] = grid.interior[mask]
    if inner.any():
        d[inner] = grid.domain.distance(pts[inner])
    return pts, vals, d


def _exact_max(pts, vals, gamma, chunk=1024):
    best = 0.0
    n = pts.shape[0]
    for s in range(0, n, chunk):
        p = pts[s:s + chunk]
        dist = np.sqrt(np.sum((p[:, None, :] - pts[None, :, :]) ** 2, axis=2))
        du = np.abs(vals[s:s + chunk, None] - vals[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dist > 0, du / dist ** gamma, 0.0)
        best = max(best, float(np.max(q)))
    return best, n * (n - 1) // 2


def _sampled_max(pts, vals, gamma, n_pairs, rng):
    n = pts.shape[0]
    i = rng.integers(0, n, n_pairs)
    j = rng.integers(0, n, n_pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    dist = np.sqrt(np.sum((pts[i] - pts[j]) ** 2, axis=1))
    ok = dist > 0
    q = np.abs(vals[i[ok]] - vals[j[ok]]) / dist[ok] ** gamma
    return (float(np.max(q)) if q.size else 0.0), int(ok.sum())


def measure_modulus(u: ScalarField, gamma: float, interior_margin: float, max_exact: int = EXACT_PAIR_LIMIT,
                    n_samples: int = SAMPLED_PAIRS, seed: int = 0) -> ModulusReport:
    """Hoelder constant over all node pairs and Lipschitz constant away from the boundary.

    Nodes are the domain nodes together with the boundary cut points. Up to
    ``max_exact`` nodes every pair is scanned; above that ``n_samples``
    random pairs are used, which can only underestimate the exact constant.
    The Lipschitz constant uses pairs with both nodes at distance at least
    ``interior_margin`` from the boundary.
    """
    if not 0 < gamma <= 1:
        raise InvalidInputError("gamma must lie in (0, 1]")
    pts, vals, d = _node_samples(u)
    rng = np.random.default_rng(seed)
    exact = pts.shape[0] <= max_exact
    if exact:
        c, n_pairs = _exact_max(pts, vals, gamma)
    else:
        c, n_pairs = _sampled_max(pts, vals, gamma, n_samples, rng)
    inner = d >= interior_margin
    ip, iv = pts[inner], vals[inner]
    if ip.shape[0] < 2:
        lip = 0.0
    elif ip.shape[0] <= max_exact:
        lip, _ = _exact_max(ip, iv, 1.0)
    else:
        lip, _ = _sampled_max(ip, iv, 1.0, n_samples, rng)
    return ModulusReport(float(gamma), c, lip, float(interior_margin), n_pairs, exact)
