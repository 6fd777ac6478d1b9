"""Radial calculus on balls: the explicit supersolution bound and a shooting eigen-solver.

For a radial function u(x) = g(|x|) the Hessian has eigenvalue g'' once and
g'/r with multiplicity N - 1, so F reduces to a scalar expression in
(r, g', g''). The shooting solver integrates

    |g'|^alpha [phi(g'') + (N - 1) phi(g'/r)] + lam |g|^alpha g = 0,
    g(0) = 1, g'(0) = 0,

where phi(s) = max(a s, A s) (plus) or min(a s, A s) (minus), and bisects
lam on whether g reaches zero before r = R.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, optimize

from .exceptions import BracketError, InvalidInputError, PoleError
from .operator import OperatorSpec


def _phi(op: OperatorSpec, s):
    s = np.asarray(s, dtype=float)
    if op.sign == "plus":
        return np.where(s > 0, op.A * s, op.a * s)
    return np.where(s > 0, op.a * s, op.A * s)


def _phi_inverse(op: OperatorSpec, Q):
    Q = np.asarray(Q, dtype=float)
    if op.sign == "plus":
        return np.where(Q > 0, Q / op.A, Q / op.a)
    return np.where(Q > 0, Q / op.a, Q / op.A)


def radial_F(op: OperatorSpec, N: int, r, gp, gpp):
    """F evaluated on u(x) = g(|x|), from g'(r) and g''(r).

    Raises
    ------
    PoleError
        If any ``r`` is zero (use the limit g'/r -> g''(0) instead).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise PoleError("radial_F is singular at r = 0")
    if N < 1:
        raise InvalidInputError("dimension must be at least 1")
    return _radial_F(op, N, r, gp, gpp, op.eps_reg)


def _radial_F(op, N, r, gp, gpp, eps):
    gp = np.asarray(gp, dtype=float)
    gpp = np.asarray(gpp, dtype=float)
    M = _phi(op, gpp) + (N - 1) * _phi(op, gp / r)
    if op.alpha == 0:
        w = 1.0
    else:
        w = (gp * gp + eps ** 2) ** (op.alpha / 2)
    out = w * M
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# explicit supersolution


def supersolution_profile(alpha: float, R: float):
    """Exponent q and callables (sigma, sigma', sigma'') of the radial supersolution."""
    q = (alpha + 2.0) / (alpha + 1.0)
    Rq = R ** q

    def g(r):
        return (r ** q - Rq) ** 2 / (2 * q)

    def gp(r):
        return r ** (2 * q - 1) - r ** (q - 1) * Rq

    def gpp(r):
        return (2 * q - 1) * r ** (2 * q - 2) - (q - 1) * r ** (q - 2) * Rq

    return q, g, gp, gpp


def supersolution_constants(op: OperatorSpec, N: int):
    """The two (B1, B2) pairs bounding F(sigma) by |g'|^a r^(q-2) (B1 r^q - B2 R^q)."""
    q = (op.alpha + 2) / (op.alpha + 1)
    a, A = op.a, op.A
    return [(a * (N + 2 * q - 2), a * (N + q - 2)),
            (A * (2 * q - 1) + a * (N - 1), A * (q - 1) + a * (N - 1))]


def lemma1_bound(op: OperatorSpec, N: int, R: float, n_samples: int = 2048) -> float:
    """Supremum over (0, R) of -F(sigma) / sigma^(1+alpha).

    Any admissible eigenvalue on a ball of radius R lies below this value.
    The supremum is taken over a uniform sample, the r -> 0 limit and a
    golden-section refinement around the best sample.
    """
    if not R > 0:
        raise InvalidInputError("R must be positive")
    opx = OperatorSpec(op.a, op.A, op.alpha, op.sign, 0.0) if op.alpha >= 0 else op
    q, g, gp, gpp = supersolution_profile(op.alpha, R)

    def ratio(r):
        return -radial_F(opx, N, r, gp(r), gpp(r)) / g(r) ** (1 + op.alpha)

    r = R * (np.arange(1, n_samples + 1) / (n_samples + 1))
    vals = ratio(r)
    i = int(np.argmax(vals))
    best = float(vals[i])
    if 0 < i < n_samples - 1:
        lo, hi = r[i - 1], r[i + 1]
        res = optimize.minimize_scalar(lambda s: -ratio(s), bracket=(lo, r[i], hi), method="golden",
                                       options=dict(xtol=1e-10))
        if lo < res.x < hi:
            best = max(best, float(-res.fun))
    # the r -> 0 limit: both Hessian eigenvalues are negative there
    w_neg = op.a if op.sign == "plus" else op.A
    if op.alpha >= 0:
        limit = w_neg * ((q - 1) + (N - 1)) * R ** (q * (1 + op.alpha)) / g(0.0) ** (1 + op.alpha)
        best = max(best, limit)
    return best


# ---------------------------------------------------------------------------
# shooting


@dataclass
class RadialProfile:
    """Radial profile g on [0, R] in dimension N with consistent derivatives."""

    R: float
    N: int
    segments: list = field(repr=False)
    r0: float = 0.0
    series: tuple | None = field(default=None, repr=False)
    scale: float = 1.0
    switch_radii: list = field(default_factory=list)

    def _eval(self, r, k):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inner = r < self.r0
        if np.any(inner):
            c, q, m = self.series
            rr = r[inner]
            if k == 0:
                out[inner] = 1 - c / q * rr ** q
            elif k == 1:
                out[inner] = -c * rr ** m
            else:
                with np.errstate(divide="ignore"):
                    out[inner] = -c * m * rr ** (m - 1)
        for seg, a, b in self.segments:
            sel = (r >= a) & (r <= b) & ~inner
            if np.any(sel):
                y = seg(r[sel])
                if k < 2:
                    out[sel] = y[k]
                else:
                    out[sel] = self._gpp_from_state(r[sel], y)
        last_b = self.segments[-1][2] if self.segments else self.r0
        beyond = r > last_b
        if np.any(beyond):
            y = self.segments[-1][0](np.full(beyond.sum(), last_b))
            out[beyond] = y[k] if k < 2 else self._gpp_from_state(np.full(beyond.sum(), last_b), y)
        return out * self.scale

    def _gpp_from_state(self, r, y):
        return self._rhs(r, y)

    def g(self, r):
        return self._eval(r, 0)

    def gp(self, r):
        return self._eval(r, 1)

    def gpp(self, r):
        return self._eval(r, 2)

    def on_grid(self, grid):
        """Evaluate g(|x - c|) on the nodes of a grid over a ball domain."""
        from .grid import ScalarField

        center = getattr(grid.domain, "center", np.zeros(grid.dim))
        r = np.linalg.norm(grid.points - center, axis=1)
        vals = np.where(r < self.R, self.g(np.minimum(r, self.R)), 0.0)
        return ScalarField(grid, vals)


@dataclass
class EigenResult:
    """Bracket, estimate and normalized eigenfunction of a principal eigenvalue."""

    lambda_lo: float
    lambda_hi: float
    lambda_hat: float
    eigenfunction: Any
    residual: float
    info: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.lambda_hi - self.lambda_lo

    def to_dict(self) -> dict:
        out = dict(lambda_lo=self.lambda_lo, lambda_hi=self.lambda_hi, lambda_hat=self.lambda_hat,
                   residual=self.residual)
        out.update({k: v for k, v in self.info.items() if _jsonable(v)})
        return out


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, type(None), list, dict))


class _Shooter:
    def __init__(self, op: OperatorSpec, N: int, R: float, rtol: float = 1e-12, r0_frac: float = 1e-6):
        self.op = op
        self.N = N
        self.R = R
        self.rtol = rtol
        self.r0 = r0_frac * R
        self.q = (op.alpha + 2) / (op.alpha + 1)
        self.m = 1.0 / (1 + op.alpha)

    def Q(self, r, y, lam):
        g, gp = y[0], y[1]
        op = self.op
        src = lam * np.abs(g) ** op.alpha * g
        if op.alpha != 0:
            wgt = np.abs(gp) ** op.alpha
            src = src / np.where(wgt > 0, wgt, np.inf)
        bend = (self.N - 1) * _phi(op, gp / r) if self.N > 1 else 0.0
        return -src - bend

    def rhs(self, r, y, lam):
        return np.array([y[1], _phi_inverse(self.op, self.Q(r, y, lam))])

    def start(self, lam):
        w_neg = self.op.a if self.op.sign == "plus" else self.op.A
        c = (lam / (w_neg * (self.m + self.N - 1))) ** self.m
        r0 = self.r0
        return c, np.array([1 - c / self.q * r0 ** self.q, -c * r0 ** self.m])

    def shoot(self, lam, dense=False):
        """Integrate to R; return (status, g at stop, stop radius, segments, switch radii)."""
        c, y = self.start(lam)
        r = self.r0
        segments = []
        switches = []

        def ev_zero(rr, yy):
            return yy[0]
        ev_zero.terminal = True
        ev_zero.direction = -1

        def ev_flat(rr, yy):
            return yy[1]
        ev_flat.terminal = True
        ev_flat.direction = 1

        def ev_switch(rr, yy):
            return self.Q(rr, yy, lam)
        ev_switch.terminal = True
        # only a crossing away from the current sign of Q counts, so a restart
        # sitting on Q = 0 does not retrigger
        qsign = -1.0 if self.Q(r, y, lam) <= 0 else 1.0
        ev_switch.direction = -qsign

        # in 1D, Q < 0 while g > 0, so g'' never changes sign before g hits zero
        events = [ev_zero, ev_flat, ev_switch] if self.N > 1 else [ev_zero, ev_flat]
        for _restart in range(50):
            if r >= self.R:
                break
            sol = integrate.solve_ivp(lambda rr, yy: self.rhs(rr, yy, lam), (r, self.R), y, method="DOP853",
                                      rtol=self.rtol, atol=1e-14, dense_output=dense,
                                      events=events)
            if dense:
                segments.append((sol.sol, r, sol.t[-1]))
            y = sol.y[:, -1]
            r_end = sol.t[-1]
            if sol.status == 1:
                if sol.t_events[0].size:
                    return "hit_zero", 0.0, sol.t_events[0][0], segments, switches, c
                if sol.t_events[1].size:
                    return "flat", y[0], sol.t_events[1][0], segments, switches, c
                if len(sol.t_events) < 3 or not sol.t_events[2].size:
                    break
                switches.append(float(sol.t_events[2][0]))
                r = float(sol.t_events[2][0])
                y = sol.y_events[2][0]
                qsign = -qsign
                ev_switch.direction = -qsign
                continue
            r = r_end
            if sol.status < 0:
                raise RuntimeError(f"radial integration failed: {sol.message}")
        else:
            raise RuntimeError("too many sign switches along the radial profile")
        return "reached", y[0], self.R, segments, switches, c


def shoot_eigen(op: OperatorSpec, N: int, R: float = 1.0, tol: float = 1e-8,
                rtol: float = 1e-12) -> EigenResult:
    """Principal radial eigenvalue on the ball of radius R by shooting and bisection.

    Returns a bracket [lambda_lo, lambda_hi] of width at most ``tol * max(1, lambda)``
    and the profile at lambda_lo normalized so g(0) = 1. The radial equation is
    integrated without regularization (g' vanishes only at r = 0, where the
    series start takes over), so ``op.eps_reg`` is ignored and reported as 0.

    Raises
    ------
    BracketError
        If g stays positive on [0, R] at the initial upper end.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    if not R > 0:
        raise InvalidInputError("R must be positive")
    sh = _Shooter(op, N, R, rtol)
    bound = lemma1_bound(op, N, R)
    lo, hi = 0.0, 2.0 * bound
    if sh.shoot(hi)[0] != "hit_zero":
        raise BracketError(f"g stays positive at lam = {hi}; the bound does not bracket the eigenvalue")
    n_eval = 1
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        status = sh.shoot(mid)[0]
        n_eval += 1
        if status == "hit_zero":
            hi = mid
        else:
            lo = mid
    lam_hat = 0.5 * (lo + hi)
    status, gR, r_end, segments, switches, c = sh.shoot(lo, dense=True)
    prof = RadialProfile(R, N, segments, sh.r0, (c, sh.q, sh.m), 1.0, switches)
    prof._rhs = lambda r, y, _lam=lo: _phi_inverse(op, sh.Q(r, y, _lam))
    res = radial_residual(op, prof, lam_hat, switches)
    return EigenResult(lo, hi, lam_hat, prof, res, dict(n_shots=n_eval, bound=bound, N=N, R=R, eps_reg=0.0))


def radial_residual(op: OperatorSpec, prof: RadialProfile, lam: float, switches=(), n: int = 1000,
                    fd_step: float = 1e-6) -> float:
    """max |radial_F + lam g^(1+alpha)| on n interior radii, g'' from centered differences of g'."""
    R = prof.R
    r = R * np.arange(1, n + 1) / (n + 1)
    keep = r > max(prof.r0, 1e-3 * R) + fd_step * R
    for s in switches:
        keep &= np.abs(r - s) > 1e-3 * R
    r = r[keep]
    hstep = fd_step * R
    gpp = (prof.gp(r + hstep) - prof.gp(r - hstep)) / (2 * hstep)
    g = prof.g(r)
    # same unregularized equation the shooting integrates
    val = _radial_F(op, prof.N, r, prof.gp(r), gpp, 0.0) + lam * np.abs(g) ** op.alpha * g
    return float(np.max(np.abs(val))) if val.size else 0.0
