"""Monotone finite-difference scheme for the Pucci-type operator and its solvers.

Discrete operator at an interior node::

    F_h(u) = (|p_h|^2 + eps^2)^(alpha/2) * M_h(u)
    M_h^+(u) = max over frames of sum_{e in frame} max(a D_e u, A D_e u)
    M_h^-(u) = min over frames of sum_{e in frame} min(a D_e u, A D_e u)

where ``D_e`` is the (possibly cut-cell) second difference along lattice
direction ``e`` and ``|p_h|^2`` averages squared one-sided differences along
the coordinate axes. ``M_h^+(-u) = -M_h^-(u)`` holds exactly.

The nonlinear Dirichlet problem ``F_h(u) + lam |u|^alpha u = g`` (``lam <= 0``)
is solved by semismooth Newton: with frozen policy the Jacobian is assembled
exactly, including the derivative of the gradient weight. For ``alpha = 0`` this
reduces to Howard's policy iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import InvalidInputError, NonConvergenceError, SingularityError
from .grid import Grid, ScalarField, _boundary_array
from .operator import OperatorSpec


class Stencil:
    """Precomputed coefficient arrays of a grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.int_idx = grid.interior_idx
        ni = self.int_idx.size
        self.ni = ni
        n_ext = grid.n_nodes + grid.n_cut
        col = np.full(n_ext, -1, dtype=np.int64)
        col[self.int_idx] = np.arange(ni)
        self.col = col
        hp, hm = grid.len_plus, grid.len_minus
        self.cp = 2.0 / (hp * (hp + hm))
        self.cm = 2.0 / (hm * (hp + hm))
        self.nbp = grid.nbr_plus
        self.nbm = grid.nbr_minus
        self.colp = col[self.nbp]
        self.colm = col[self.nbm]
        ax = grid.axis_dirs
        self.ax = ax
        self.hp_ax = hp[ax]
        self.hm_ax = hm[ax]
        self.frames = grid.frames
        nd = grid.dirs.shape[0]
        member = np.zeros((self.frames.shape[0], nd), dtype=bool)
        for j, fr in enumerate(self.frames):
            member[j, fr] = True
        self.member = member
        self.rows = np.arange(ni)

    def parts(self, uext: np.ndarray):
        ui = uext[self.int_idx]
        up = uext[self.nbp]
        um = uext[self.nbm]
        D2 = self.cp * (up - ui) + self.cm * (um - ui)
        Dp = (up[self.ax] - ui) / self.hp_ax
        Dm = (ui - um[self.ax]) / self.hm_ax
        p2 = 0.5 * np.sum(Dp * Dp + Dm * Dm, axis=0)
        return ui, D2, Dp, Dm, p2

    def pucci(self, op: OperatorSpec, D2: np.ndarray):
        """Discrete Pucci value and the active coefficient array theta (n_dirs, ni)."""
        a, A = op.a, op.A
        if op.sign == "plus":
            coef = np.where(D2 > 0, A, a)
        else:
            coef = np.where(D2 > 0, a, A)
        phi = coef * D2
        if a == A:
            # M = a * trace: the axis frame alone is exact, and a fixed policy
            # keeps the linear system (and its factorization) unchanged
            M = phi[self.frames[0]].sum(axis=0)
            theta = coef * self.member[0][:, None]
            return M, theta
        sums = np.stack([phi[fr].sum(axis=0) for fr in self.frames])
        j = np.argmax(sums, axis=0) if op.sign == "plus" else np.argmin(sums, axis=0)
        M = sums[j, self.rows]
        theta = coef * self.member[j].T
        return M, theta

    def fixed_values(self, uext):
        return uext


def _weight(p2, alpha, eps):
    if alpha == 0:
        return np.ones_like(p2), np.zeros_like(p2)
    base = p2 + eps * eps
    if alpha < 0 and np.any(base <= 0):
        raise SingularityError("zero discrete gradient with alpha < 0 and no regularization")
    safe = np.where(base > 0, base, 1.0)
    w = np.where(base > 0, safe ** (alpha / 2), 0.0)
    dw = np.where(base > 0, (alpha / 2) * safe ** (alpha / 2 - 1), 0.0)
    return w, dw


def _stencil(grid: Grid) -> Stencil:
    st = getattr(grid, "_stencil_cache", None)
    if st is None:
        st = Stencil(grid)
        grid._stencil_cache = st
    return st


def apply_F_discrete(op: OperatorSpec, grid: Grid, u: ScalarField) -> np.ndarray:
    """Evaluate ``F_h(u)`` at every interior node (returned in interior order)."""
    st = _stencil(grid)
    _, D2, _, _, p2 = st.parts(u.extended())
    M, _ = st.pucci(op, D2)
    w, _ = _weight(p2, op.alpha, op.eps_reg)
    return w * M


def discrete_residual(op, grid, u: ScalarField, g, lam: float = 0.0) -> np.ndarray:
    """``F_h(u) + lam |u|^alpha u - g`` on interior nodes."""
    ui = u.interior_values
    return apply_F_discrete(op, grid, u) + lam * np.abs(ui) ** op.alpha * ui - g


@dataclass
class SolveInfo:
    converged: bool
    steps: int
    residual: float
    method: str
    history: list = field(default_factory=list)


def _rhs_array(grid: Grid, f) -> np.ndarray:
    pts = grid.points[grid.interior]
    if callable(f):
        return np.broadcast_to(np.asarray(f(pts), dtype=float), (pts.shape[0],)).astype(float)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.full(pts.shape[0], float(arr))
    if arr.size == grid.n_interior:
        return arr.reshape(-1).astype(float)
    if arr.size == grid.n_nodes:
        return arr.reshape(-1)[grid.interior].astype(float)
    raise InvalidInputError("right-hand side has the wrong size for this grid")


def _jacobian(op, st: Stencil, uext, lam, need_weight_derivative=True):
    ui, D2, Dp, Dm, p2 = st.parts(uext)
    M, theta = st.pucci(op, D2)
    w, dw = _weight(p2, op.alpha, op.eps_reg)
    ni = st.ni
    rows, cols, vals = [], [], []
    # policy part: w * L_theta
    wt = w * theta
    diag = -np.sum(wt * (st.cp + st.cm), axis=0)
    for colx, cx in ((st.colp, st.cp), (st.colm, st.cm)):
        v = wt * cx
        mask = (colx >= 0) & (v != 0)
        rows.append(np.broadcast_to(st.rows, colx.shape)[mask])
        cols.append(colx[mask])
        vals.append(v[mask])
    if op.alpha != 0 and need_weight_derivative:
        g = M * dw
        diag = diag + g * np.sum(-Dp / st.hp_ax + Dm / st.hm_ax, axis=0)
        for colx, v in ((st.colp[st.ax], g * Dp / st.hp_ax), (st.colm[st.ax], -g * Dm / st.hm_ax)):
            mask = colx >= 0
            rows.append(np.broadcast_to(st.rows, colx.shape)[mask])
            cols.append(colx[mask])
            vals.append(v[mask])
    if lam != 0:
        diag = diag + lam * (1 + op.alpha) * np.abs(ui) ** op.alpha
    rows.append(st.rows)
    cols.append(st.rows)
    vals.append(diag)
    J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ni, ni))
    G = w * M + lam * np.abs(ui) ** op.alpha * ui
    return J, G


def _residual(op, st, uext, g, lam):
    ui, D2, _, _, p2 = st.parts(uext)
    M, _ = st.pucci(op, D2)
    w, _ = _weight(p2, op.alpha, op.eps_reg)
    return w * M + lam * np.abs(ui) ** op.alpha * ui - g


def _res_norm(r, g, uext, ni_idx):
    return float(np.max(np.abs(r))) if r.size else 0.0


def _linear_solve(st: Stencil, op, J, rhs):
    """Sparse LU solve; for alpha = 0 the factorization is reused while J is unchanged."""
    J = J.tocsc()
    J.sort_indices()
    if op.alpha == 0:
        cache = getattr(st, "_lu_cache", None)
        if (cache is not None and cache[0].shape == J.shape and cache[0].nnz == J.nnz
                and np.array_equal(cache[0].indices, J.indices) and np.array_equal(cache[0].data, J.data)):
            return cache[1].solve(rhs)
    try:
        lu = spla.splu(J)
    except RuntimeError:
        return np.full(J.shape[0], np.nan)
    if op.alpha == 0:
        st._lu_cache = (J, lu)
    return lu.solve(rhs)


def _newton(op, grid, g, lam, uext, tol, max_steps, history):
    st = _stencil(grid)
    gscale = max(float(np.max(np.abs(g))) if g.size else 0.0, 1e-300)
    r = _residual(op, st, uext, g, lam)
    rn = float(np.max(np.abs(r)))
    history.append(rn)
    full_steps = 0
    for step in range(1, max_steps + 1):
        if rn <= max(tol * gscale, _roundoff(op, st, uext, gscale)):
            return uext, True, step - 1, rn
        J, G = _jacobian(op, st, uext, lam)
        r = G - g
        du = _linear_solve(st, op, J, -r)
        if not np.all(np.isfinite(du)):
            # fall back to the frozen-weight policy matrix (an M-matrix)
            J, _ = _jacobian(op, st, uext, lam, need_weight_derivative=False)
            du = spla.spsolve(J.tocsc(), -r)
        # alpha = 0: policy iteration, monotone in u, so full steps are safe
        t = 1.0
        accepted = op.alpha == 0
        if accepted:
            trial = uext.copy()
            trial[st.int_idx] += du
            rtn = float(np.max(np.abs(_residual(op, st, trial, g, lam))))
        else:
            for _ in range(30):
                trial = uext.copy()
                trial[st.int_idx] += t * du
                rtn = float(np.max(np.abs(_residual(op, st, trial, g, lam))))
                if np.isfinite(rtn) and rtn < (1 - 1e-4 * t) * rn or rtn <= tol * gscale:
                    accepted = True
                    break
                t *= 0.5
        if not accepted:
            full_steps += 1
            trial = uext.copy()
            trial[st.int_idx] += du
            rtn = float(np.max(np.abs(_residual(op, st, trial, g, lam))))
            if full_steps > 5 or not np.isfinite(rtn):
                return uext, False, step, rn
        uext = trial
        rn = rtn
        history.append(rn)
    return uext, rn <= max(tol * gscale, _roundoff(op, st, uext, gscale)), max_steps, rn


def _roundoff(op, st: Stencil, uext, gscale):
    """Attainable residual floor from cancellation in the second differences."""
    ui, _, _, _, p2 = st.parts(uext)
    w, _ = _weight(p2, op.alpha, op.eps_reg)
    umax = float(np.max(np.abs(uext[np.isfinite(uext)]))) if uext.size else 0.0
    cmax = float(np.max(st.cp + st.cm)) * st.frames.shape[1]
    return 64 * np.finfo(float).eps * (umax * cmax * op.A * float(np.max(w)) + gscale)


def _picard_start(op, grid, g, lam, uext, n_steps):
    """Frozen-weight steps with exact rescaling; gives Newton a sensible start."""
    st = _stencil(grid)
    for _ in range(n_steps):
        ui, D2, _, _, p2 = st.parts(uext)
        w, _ = _weight(p2, op.alpha, op.eps_reg)
        w = np.maximum(w, 1e-300)
        lam_i = lam * np.abs(ui) ** op.alpha
        v = uext.copy()
        # Howard solve of w M(v) + lam_i v = g with frozen w, lam_i
        for _h in range(50):
            _, D2v, _, _, _ = st.parts(v)
            M, theta = st.pucci(op, D2v)
            wt = w * theta
            diag = -np.sum(wt * (st.cp + st.cm), axis=0) + lam_i
            rhs = g.copy()
            rows, cols, vals = [st.rows], [st.rows], [diag]
            for colx, nb, cx in ((st.colp, st.nbp, st.cp), (st.colm, st.nbm, st.cm)):
                c = wt * cx
                fixed = colx < 0
                rhs -= np.sum(np.where(fixed, c * v[nb], 0.0), axis=0)
                mask = ~fixed & (c != 0)
                rows.append(np.broadcast_to(st.rows, colx.shape)[mask])
                cols.append(colx[mask])
                vals.append(c[mask])
            A_ = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(st.ni, st.ni))
            new = spla.spsolve(A_.tocsc(), rhs)
            change = np.max(np.abs(new - v[st.int_idx]))
            v[st.int_idx] = new
            if change <= 1e-14 * max(np.max(np.abs(new)), 1e-300):
                break
        vi = v[st.int_idx]
        if op.alpha != 0:
            nu = np.max(np.abs(ui))
            nv = np.max(np.abs(vi))
            if nu > 0 and nv > 0:
                vi = vi * (nu / nv) ** (op.alpha / (1 + op.alpha))
            theta_r = 1.0 / (1.0 + abs(op.alpha))
            if nu > 0:
                vi = (1 - theta_r) * ui + theta_r * vi
        uext = uext.copy()
        uext[st.int_idx] = vi
    return uext


def _homogeneous_seed(op, grid, g, uext):
    """Solution for alpha = 0, rescaled so that F(t v) matches g in sup norm."""
    st = _stencil(grid)
    op0 = OperatorSpec(op.a, op.A, 0.0, op.sign)
    v, ok, _, _ = _newton(op0, grid, g, 0.0, uext.copy(), 1e-10, 50, [])
    vi = v[st.int_idx]
    if not np.any(vi != 0):
        return v
    Fv = _residual(op, st, v, np.zeros_like(g), 0.0)
    nf = float(np.max(np.abs(Fv)))
    ng = float(np.max(np.abs(g)))
    if nf > 0 and ng > 0:
        t = (ng / nf) ** (1.0 / (1.0 + op.alpha))
        v = v.copy()
        v[st.int_idx] = t * vi
    return v


def _explicit(op, grid, g, lam, uext, tol, max_steps, history):
    """Pseudo-time marching with one step 0.9 / max(diag) per sweep.

    A global step keeps the update monotone; local steps stall where the
    gradient weight vanishes.
    """
    st = _stencil(grid)
    gscale = max(float(np.max(np.abs(g))) if g.size else 0.0, 1e-300)
    rn = np.inf
    for step in range(1, max_steps + 1):
        ui, D2, _, _, p2 = st.parts(uext)
        M, theta = st.pucci(op, D2)
        w, _ = _weight(p2, op.alpha, op.eps_reg)
        r = w * M + lam * np.abs(ui) ** op.alpha * ui - g
        rn = float(np.max(np.abs(r)))
        if step % 100 == 1:
            history.append(rn)
        if rn <= tol * gscale:
            return uext, True, step, rn
        diag = np.sum(w * theta * (st.cp + st.cm), axis=0) - lam * np.abs(ui) ** op.alpha
        uext[st.int_idx] = ui + 0.9 * r / max(float(np.max(diag)), 1e-300)
    return uext, False, max_steps, rn


def _solve_core(op, grid, g, lam, u0: ScalarField, tol, max_steps, method, strict=True):
    st = _stencil(grid)
    uext = u0.extended().copy()
    history = []
    if method not in ("explicit", "newton"):
        raise InvalidInputError(f"unknown method {method!r}")
    if op.alpha != 0 and not np.any(uext[st.int_idx] != 0):
        # the gradient weight vanishes on a flat start
        uext = _homogeneous_seed(op, grid, g, uext)
    if method == "explicit":
        uext, ok, steps, rn = _explicit(op, grid, g, lam, uext, tol, max_steps, history)
    else:
        uext, ok, steps, rn = _newton(op, grid, g, lam, uext, tol, max_steps, history)
        if not ok:
            uext = _picard_start(op, grid, g, lam, uext, 12)
            uext, ok, s2, rn = _newton(op, grid, g, lam, uext, tol, max_steps, history)
            steps += s2
    u = ScalarField(grid, uext[: grid.n_nodes], uext[grid.n_nodes:])
    info = SolveInfo(ok, steps, rn, method, history)
    if strict and not ok:
        raise NonConvergenceError(f"{method} solver stopped at residual {rn:.3e} after {steps} steps", rn, steps)
    return u, info


def solve_dirichlet(op: OperatorSpec, grid: Grid, f, boundary=0.0, lam: float = 0.0, tol: float = 1e-10,
                    max_steps: int = 200, method: str = "newton", u0: ScalarField | None = None,
                    return_info: bool = False):
    """Solve ``F_h(u) + lam |u|^alpha u = f`` with ``u = boundary`` on the boundary.

    For ``lam > 0`` the equation ``F(u) = f - lam |u|^alpha u`` is not monotone.
    With ``f <= 0``, nonnegative boundary data and no ``u0``, Newton on the
    full equation is tried first from the ``lam = 0`` solution and kept when
    it reaches a nonnegative solution. Otherwise the monotone iteration
    started at ``u0`` (or at the ``lam = 0`` solution) is used; it converges
    for ``lam`` below the principal eigenvalue and ``f <= 0``.

    Parameters
    ----------
    f : float, callable or array
        Right-hand side on interior nodes.
    boundary : float or callable
        Dirichlet data evaluated at boundary nodes and cut points.
    tol : float
        Stop when the sup-norm residual is below ``tol * max|f|``.
    method : {"newton", "explicit"}
    """
    g = _rhs_array(grid, f)
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("right-hand side contains non-finite values")
    if u0 is None:
        start = ScalarField.zeros(grid, boundary)
    else:
        start = u0.copy()
        start.flat[grid.boundary] = _boundary_array(grid, boundary, grid.points[grid.boundary])
        start.cut_values = _boundary_array(grid, boundary, grid.cut_points)
    if lam <= 0:
        u, info = _solve_core(op, grid, g, lam, start, tol, max_steps, method)
        return (u, info) if return_info else u
    direct = _direct_positive(op, grid, g, lam, start, tol, max_steps, method) if u0 is None else None
    if direct is not None:
        u, info = direct
    else:
        res = monotone_iterate(op, grid, g, lam, boundary=boundary, tol=tol, method=method,
                               max_steps=max_steps, u0=u0)
        if res.status != "converged":
            raise NonConvergenceError(f"monotone iteration {res.status} at lam={lam}", float("nan"),
                                      len(res.trace.norms))
        u = res.u
        info = SolveInfo(True, len(res.trace.norms), float(np.max(np.abs(
            discrete_residual(op, grid, u, g, lam)))), method)
    if return_info:
        return u, info
    return u


def _direct_positive(op, grid, g, lam, start, tol, max_steps, method):
    """Newton on the full equation from S(f); None unless it finds a nonnegative solution.

    With f <= 0 and nonnegative boundary data a nonnegative solution exists
    only below the principal eigenvalue, where it is unique and equals the
    limit of the monotone iteration.
    """
    bvals = np.concatenate([start.flat[grid.boundary], start.cut_values])
    if method != "newton" or np.any(g > 0) or (bvals.size and np.min(bvals) < 0):
        return None
    s0, _ = _solve_core(op, grid, g, 0.0, start, tol, max_steps, method, strict=False)
    u, info = _solve_core(op, grid, g, lam, s0, tol, max_steps, method, strict=False)
    if not info.converged or np.min(u.interior_values) < 0:
        return None
    return u, info


@dataclass
class IterationTrace:
    norms: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    min_increment: list = field(default_factory=list)

    def nondecreasing(self, rtol: float = 1e-9) -> bool:
        """Pointwise monotone sequence (the smallest increment is >= -rtol * norm)."""
        return all(mi >= -rtol * max(n, 1.0) for mi, n in zip(self.min_increment, self.norms[1:]))

    def to_dict(self) -> dict:
        return dict(norms=self.norms, increments=self.increments, certificates=self.certificates)


@dataclass
class IterationResult:
    status: str  # "converged", "feasible", "blew_up" or "exhausted"
    u: ScalarField
    trace: IterationTrace
    lam: float

    @property
    def feasible(self) -> bool:
        return self.status in ("converged", "feasible")

    def eigen_bracket(self, alpha: float) -> tuple[float, float]:
        """Bracket on the principal eigenvalue implied by the recorded certificates."""
        lo, hi = 0.0, np.inf
        for _, cmin, cmax in self.trace.certificates:
            if cmax > 0:
                lo = max(lo, self.lam / cmax ** (1 + alpha))
            if cmin > 0:
                hi = min(hi, self.lam / cmin ** (1 + alpha))
        return lo, hi

    @property
    def steps(self) -> int:
        """Number of applications of the solution map."""
        return max(len(self.trace.norms) - 1, 0)

    @property
    def normalized(self) -> ScalarField:
        n = self.u.sup_norm()
        return self.u * (1.0 / n) if n > 0 else self.u


def collatz_bounds(op, grid, lam, w: ScalarField, method="newton", tol=1e-12, guess: ScalarField | None = None):
    """(c_min, c_max, H(w)) for the homogeneous map H(w) = S(-lam |w|^alpha w).

    H is monotone and positively one-homogeneous; c_min > 1 proves the
    principal eigenvalue lies below ``lam``, c_max < 1 that it lies above.
    ``guess`` warm-starts the inner solve (zero Dirichlet data is imposed).
    """
    wi = w.interior_values
    g = -lam * np.abs(wi) ** op.alpha * wi
    start = ScalarField.zeros(grid)
    if guess is not None:
        start.flat[grid.interior] = guess.interior_values
    elif op.alpha != 0:
        start.flat[grid.interior] = wi
    Hw, _ = _solve_core(op, grid, g, 0.0, start, tol, 200, method)
    hi = Hw.interior_values
    pos = wi > 0
    ratio = hi[pos] / wi[pos]
    cmin = float(np.min(ratio)) if ratio.size else 0.0
    # where w vanishes only H(w) <= c w with c finite fails, so no upper bound
    cmax = float(np.max(ratio)) if pos.all() else np.inf
    return cmin, cmax, Hw


def monotone_iterate(op: OperatorSpec, grid: Grid, f, lam: float, boundary=0.0, tol: float = 1e-8,
                     max_steps: int = 500, blowup: float = 1e8, certify: bool = False,
                     certify_every: int = 3, method: str = "newton", u0: ScalarField | None = None,
                     solve_tol: float = 1e-11, stop_when_certified: bool = False,
                     cert_margin: float = 1e-9) -> IterationResult:
    """Iterate ``F(u_{n+1}) = f - lam |u_n|^alpha u_n`` from ``u_0 = S(f)``.

    Status is ``"converged"`` when ``|u_{n+1} - u_n| <= tol |u_{n+1}|`` and
    ``"blew_up"`` when the norm exceeds ``blowup * |u_0|`` (``|u_1|`` for a zero start).

    With ``certify`` (zero boundary data only) the normalized iterate is
    tested every ``certify_every`` steps with Collatz-Wielandt bounds of the
    homogeneous map: ``c_min > 1`` ends the run as ``"blew_up"``; with
    ``stop_when_certified``, ``c_max < 1`` ends it as ``"feasible"`` (the
    limit exists but was not iterated to ``tol``). Otherwise the status is
    ``"exhausted"``.
    """
    if lam < 0:
        raise InvalidInputError("lam must be nonnegative")
    if certify and (callable(boundary) or float(boundary) != 0.0):
        raise InvalidInputError("certificates need zero boundary data")
    g0 = _rhs_array(grid, f)
    if np.any(g0 > 0):
        raise InvalidInputError("monotone iteration requires f <= 0")
    if u0 is None:
        u, _ = _solve_core(op, grid, g0, 0.0, ScalarField.zeros(grid, boundary), solve_tol, 200, method)
    else:
        u = u0.copy()
    trace = IterationTrace()
    n0 = u.sup_norm()
    trace.norms.append(n0)
    ref = n0  # growth reference; a zero start uses the first iterate instead
    status = "exhausted"
    for n in range(1, max_steps + 1):
        ui = u.interior_values
        g = g0 - lam * np.abs(ui) ** op.alpha * ui
        unew, _ = _solve_core(op, grid, g, 0.0, u, solve_tol, 200, method)
        diff = unew.interior_values - ui
        nn = unew.sup_norm()
        trace.norms.append(nn)
        trace.increments.append(float(np.max(np.abs(diff))))
        trace.min_increment.append(float(np.min(diff)) if diff.size else 0.0)
        u = unew
        if trace.increments[-1] <= tol * nn:
            status = "converged"
            break
        if ref == 0:
            ref = nn
        if nn > blowup * max(ref, 1e-300):
            status = "blew_up"
            break
        if certify and lam > 0 and n % certify_every == 0:
            # the increment aligns with the eigenfunction much faster than u_n
            # itself, since the forcing term cancels out of it
            cands = [u * (1.0 / nn)]
            if np.all(diff > 0):
                cands.append(u.with_interior(diff / np.max(diff)) * 1.0)
                cands[-1].flat[grid.boundary] = 0.0
                cands[-1].cut_values[:] = 0.0
            cmin, cmax = 0.0, np.inf
            for w in cands:
                c1, c2, Hw = collatz_bounds(op, grid, lam, w, method, guess=None if op.alpha == 0 else w)
                cmin, cmax = max(cmin, c1), min(cmax, c2)
            trace.certificates.append((n, cmin, cmax))
            if cmin > 1 + cert_margin:
                status = "blew_up"
                break
            if stop_when_certified and cmax < 1 - cert_margin:
                status = "feasible"
                break
    return IterationResult(status, u, trace, lam)
