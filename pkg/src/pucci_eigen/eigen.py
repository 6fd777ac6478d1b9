"""Grid estimate of the principal eigenvalue by bisection on feasibility.

A value lam is feasible when the monotone iteration with f = -1 converges.
Each probe also yields Collatz-Wielandt bounds for the homogeneous map
H(w) = S(-lam |w|^alpha w); since H scales like lam^(1/(1+alpha)), a bound
c_min <= rho(H) <= c_max brackets the discrete eigenvalue in
[lam / c_max^(1+alpha), lam / c_min^(1+alpha)], and bisection intersects its
bracket with these.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import BracketError, IndeterminateLambdaError, InvalidInputError
from .geometry import Domain
from .grid import Grid, ScalarField, build_grid
from .operator import OperatorSpec
from .radial import EigenResult, lemma1_bound
from .solver import apply_F_discrete, collatz_bounds, monotone_iterate


def verify_eigenpair(op: OperatorSpec, grid: Grid, phi: ScalarField, lam: float,
                     margin: float = 2.0) -> float:
    """Sup-norm of F_h(phi) + lam phi^(1+alpha) over nodes at distance >= margin * h.

    Raises
    ------
    InvalidInputError
        If phi is not normalized to sup-norm one.
    """
    if abs(phi.sup_norm() - 1.0) > 1e-12:
        raise InvalidInputError(f"eigenfunction must have sup-norm 1, got {phi.sup_norm()!r}")
    vals = phi.interior_values
    res = apply_F_discrete(op, grid, phi) + lam * np.abs(vals) ** op.alpha * vals
    d = grid.domain.distance(grid.points[grid.interior])
    keep = d >= margin * grid.h
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(res[keep])))


def _normalize(u: ScalarField) -> ScalarField:
    n = u.sup_norm()
    out = u * (1.0 / n)
    out.flat[np.isfinite(out.flat)] = np.maximum(out.flat[np.isfinite(out.flat)], 0.0)
    return out


def power_polish(op: OperatorSpec, grid: Grid, w: ScalarField, lam: float, max_iter: int = 100,
                 rtol: float = 1e-9):
    """Normalized power iteration w <- H(w) / |H(w)| with Collatz bounds.

    Returns (w, lam_lo, lam_hi) where [lam_lo, lam_hi] brackets the discrete
    eigenvalue.
    """
    guess = None
    lo, hi = 0.0, np.inf
    w = _normalize(w)
    for _ in range(max_iter):
        cmin, cmax, Hw = collatz_bounds(op, grid, lam, w, guess=guess)
        lo = max(lo, lam / cmax ** (1 + op.alpha))
        if cmin > 0:
            hi = min(hi, lam / cmin ** (1 + op.alpha))
        w = _normalize(Hw)
        guess = w * cmax
        if cmax - cmin <= rtol * cmax:
            break
    return w, lo, hi


def estimate_lambda_bar(op: OperatorSpec, domain: Domain | Grid, h: float | None = None,
                        bracket_tol: float = 1e-3, f: float = -1.0, stencil_width: int = 2,
                        max_steps: int = 1000, certify: bool = True, polish: bool = True,
                        upper: float | None = None, power_steps: int = 60) -> EigenResult:
    """Principal eigenvalue on a grid by bisection over feasibility.

    Parameters
    ----------
    domain : Domain or Grid
        Domain to discretize with spacing ``h``, or a prebuilt grid.
    bracket_tol : float
        Final bracket width (absolute).
    upper : float, optional
        Initial upper end; defaults to the radial supersolution bound of the
        largest inscribed ball.
    power_steps : int
        Budget of the power iteration run after the first probe; its
        certificates usually close the bracket before any bisection step.

    Returns
    -------
    EigenResult
        ``lambda_hat`` is the bracket midpoint; the eigenfunction is the
        normalized iterate of the last infeasible probe (refined by power
        iteration when ``polish``), and ``residual`` comes from
        :func:`verify_eigenpair`.

    Raises
    ------
    BracketError
        If the upper end is feasible.
    IndeterminateLambdaError
        If a probe exhausts its step budget.
    """
    if not bracket_tol > 0:
        raise InvalidInputError("bracket_tol must be positive")
    if isinstance(domain, Grid):
        grid = domain
    else:
        if h is None:
            raise InvalidInputError("grid spacing h is required")
        grid = build_grid(domain, h, stencil_width)
    if f >= 0:
        raise InvalidInputError("f must be negative")
    dom = grid.domain
    R_in = dom.inscribed_radius()
    bound = lemma1_bound(op, grid.dim, R_in)
    hi = bound if upper is None else float(upper)
    lo = 0.0
    probes = []

    def probe(lam):
        res = monotone_iterate(op, grid, f, lam, max_steps=max_steps, certify=certify,
                               stop_when_certified=certify)
        probes.append((lam, res.status))
        return res

    top = probe(hi)
    if top.feasible:
        raise BracketError(f"upper end {hi} is feasible; it does not bound the eigenvalue")
    last_bad = top
    c_lo, c_hi = top.eigen_bracket(op.alpha)
    lo, hi = max(lo, c_lo), min(hi, c_hi)
    if power_steps:
        # f-free power iteration on H from the diverging shape; its
        # Collatz-Wielandt bounds bracket the same threshold
        w0, p_lo, p_hi = power_polish(op, grid, _normalize(top.u), 0.5 * (lo + hi), max_iter=power_steps,
                                      rtol=0.1 * bracket_tol / max(hi, 1e-300))
        lo, hi = max(lo, p_lo), min(hi, p_hi)
        info_power = [p_lo, p_hi]
    else:
        w0, info_power = None, None
    while hi - lo > bracket_tol:
        mid = 0.5 * (lo + hi)
        res = probe(mid)
        if res.feasible:
            lo = mid
        elif res.status == "blew_up":
            hi = mid
            last_bad = res
        c_lo, c_hi = res.eigen_bracket(op.alpha)
        lo, hi = max(lo, c_lo), min(hi, c_hi)
        if res.status == "exhausted":
            # an undecided probe may still have narrowed the bracket enough
            if hi - lo > bracket_tol:
                raise IndeterminateLambdaError(f"monotone iteration undecided at lam={mid}", mid)
            last_bad = res
    lam_hat = 0.5 * (lo + hi)
    phi = _normalize(last_bad.u) if w0 is None or last_bad is not top else w0
    info = dict(bound=bound, inscribed_radius=R_in, probes=[list(p) for p in probes],
                h=grid.h, n_interior=grid.n_interior, power_bracket=info_power)
    if polish:
        phi, plo, phi_hi = power_polish(op, grid, phi, lam_hat, max_iter=20)
        info["polish_bracket"] = [plo, phi_hi]
    residual = verify_eigenpair(op, grid, phi, lam_hat)
    return EigenResult(lo, hi, lam_hat, phi, residual, info)


def eigen_record(result: EigenResult, op: OperatorSpec, grid: Grid, eigenfunction_path=None) -> dict:
    """JSON-ready record of an eigenvalue computation."""
    return dict(lambda_lo=result.lambda_lo, lambda_hi=result.lambda_hi, lambda_hat=result.lambda_hat,
                residual=result.residual, grid=dict(h=grid.h, domain=grid.domain.to_dict()),
                operator=op.to_dict(),
                eigenfunction_path=str(eigenfunction_path) if eigenfunction_path is not None else None)


def write_record(record: dict, path) -> None:
    Path(path).write_text(json.dumps(record, indent=2, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
