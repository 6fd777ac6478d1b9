"""Domains, the distance-to-boundary calculus, and barrier constructions.

Three domain shapes are supported: balls (any dimension), axis-aligned boxes
and star-shaped planar domains whose boundary radius is a trigonometric
polynomial rho(theta). Distance probes return the nearest boundary point and,
when that point is unique, the gradient and Hessian spectrum of d(x):

    D^2 d(x) has eigenvalue 0 along grad d and -kappa_i / (1 - d kappa_i)
    along the principal directions, kappa_i > 0 for convex boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .exceptions import BarrierFailureError, DomainError, InvalidInputError
from .operator import OperatorSpec, eval_F_batch

UNIQUE_TOL = 1e-8


# ---------------------------------------------------------------------------
# domains


class Domain:
    """Common interface; concrete shapes implement the abstract pieces."""

    dim: int

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def crossing(self, x, v) -> np.ndarray:
        """Fraction s in (0, 1] with x + s v on the boundary (x inside, x + v not)."""
        raise NotImplementedError

    def probe_batch(self, pts) -> dict:
        raise NotImplementedError

    def distance(self, pts) -> np.ndarray:
        return self.probe_batch(pts)["d"]

    def inscribed_radius(self) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def curvature_range(self) -> tuple[float, float]:
        """(min, max) principal curvature over the boundary."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(data: dict) -> "Domain":
        kind = data.get("type")
        if kind == "ball":
            return Ball(data["center"], data["R"])
        if kind == "box":
            return Box(data["lo"], data["hi"])
        if kind == "interval":
            return Box([data["lo"]], [data["hi"]])
        if kind == "star":
            return Star(data.get("cos", [1.0]), data.get("sin", []), data.get("center", (0.0, 0.0)))
        raise InvalidInputError(f"unknown domain type {kind!r}")


def _as_points(pts, dim):
    arr = np.asarray(pts, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim > 1 or arr.size != 1 else arr.reshape(1, 1)
    if arr.ndim == 1 or arr.shape[-1] != dim:
        arr = arr.reshape(-1, dim)
    return arr


class Ball(Domain):
    def __init__(self, center, R: float):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.R = float(R)
        if self.R <= 0:
            raise InvalidInputError("ball radius must be positive")
        self.dim = self.center.size

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, R={self.R})"

    def contains(self, pts):
        x = _as_points(pts, self.dim)
        return np.linalg.norm(x - self.center, axis=1) < self.R

    def bbox(self):
        return self.center - self.R, self.center + self.R

    def crossing(self, x, v):
        x = _as_points(x, self.dim) - self.center
        v = _as_points(v, self.dim)
        aa = np.sum(v * v, axis=1)
        bb = 2 * np.sum(x * v, axis=1)
        cc = np.sum(x * x, axis=1) - self.R ** 2
        disc = np.sqrt(np.maximum(bb * bb - 4 * aa * cc, 0.0))
        # cc < 0 inside, so the positive root is the exit point
        return np.clip(2 * (-cc) / (bb + disc), 0.0, 1.0)

    def probe_batch(self, pts):
        x = _as_points(pts, self.dim)
        rel = x - self.center
        r = np.linalg.norm(rel, axis=1)
        d = self.R - r
        unique = r > UNIQUE_TOL
        safe_r = np.where(unique, r, 1.0)
        n_out = np.where(unique[:, None], rel / safe_r[:, None], 0.0)
        nearest = self.center + self.R * np.where(unique[:, None], n_out, np.eye(self.dim)[0])
        grad = -n_out
        tang = np.where(unique, -1.0 / safe_r, np.nan)
        eigs = np.zeros((x.shape[0], self.dim))
        if self.dim > 1:
            eigs[:, : self.dim - 1] = tang[:, None]
        eigs = np.sort(eigs, axis=1)
        eigs[~unique] = np.nan
        hess = np.einsum("m,mij->mij", tang, np.eye(self.dim)[None] - np.einsum("mi,mj->mij", n_out, n_out)) \
            if self.dim > 1 else np.zeros((x.shape[0], 1, 1))
        hess[~unique] = np.nan
        kappa = np.full(x.shape[0], 1.0 / self.R)
        return dict(x=x, d=d, nearest=nearest, unique=unique, grad=grad, hess_eigs=eigs, hess=hess,
                    kappa=kappa)

    def inscribed_radius(self):
        return self.R

    def diameter(self):
        return 2 * self.R

    def curvature_range(self):
        k = 1.0 / self.R if self.dim > 1 else 0.0
        return k, k

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "R": self.R}


class Box(Domain):
    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise InvalidInputError("box needs lo < hi componentwise")
        self.dim = self.lo.size

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"

    def contains(self, pts):
        x = _as_points(pts, self.dim)
        return np.all((x > self.lo) & (x < self.hi), axis=1)

    def bbox(self):
        return self.lo.copy(), self.hi.copy()

    def crossing(self, x, v):
        x = _as_points(x, self.dim)
        v = _as_points(v, self.dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_hi = np.where(v > 0, (self.hi - x) / v, np.inf)
            s_lo = np.where(v < 0, (self.lo - x) / v, np.inf)
        return np.clip(np.minimum(s_hi.min(axis=1), s_lo.min(axis=1)), 0.0, 1.0)

    def probe_batch(self, pts):
        x = _as_points(pts, self.dim)
        m = x.shape[0]
        faces = np.concatenate([x - self.lo, self.hi - x], axis=1)  # (m, 2N)
        order = np.argsort(faces, axis=1)
        best = order[:, 0]
        d = faces[np.arange(m), best]
        if faces.shape[1] > 1:
            second = faces[np.arange(m), order[:, 1]]
            unique = second - d > UNIQUE_TOL
        else:
            unique = np.ones(m, dtype=bool)
        axis = best % self.dim
        upper = best >= self.dim
        nearest = x.copy()
        nearest[np.arange(m), axis] = np.where(upper, self.hi[axis], self.lo[axis])
        grad = np.zeros_like(x)
        grad[np.arange(m), axis] = np.where(upper, -1.0, 1.0)
        eigs = np.zeros((m, self.dim))
        eigs[~unique] = np.nan
        hess = np.zeros((m, self.dim, self.dim))
        hess[~unique] = np.nan
        return dict(x=x, d=d, nearest=nearest, unique=unique, grad=grad, hess_eigs=eigs, hess=hess,
                    kappa=np.zeros(m))

    def inscribed_radius(self):
        return float(np.min(self.hi - self.lo) / 2)

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def curvature_range(self):
        return 0.0, 0.0

    def to_dict(self):
        if self.dim == 1:
            return {"type": "interval", "lo": float(self.lo[0]), "hi": float(self.hi[0])}
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


def Interval(lo: float, hi: float) -> Box:
    return Box([lo], [hi])


class Star(Domain):
    """Planar domain {c + r (cos t, sin t) : r < rho(t)}.

    rho(t) = cos_coeffs[0] + sum_k cos_coeffs[k] cos(k t) + sin_coeffs[k-1] sin(k t).
    """

    n_samples = 4096
    n_search = 1024

    def __init__(self, cos_coeffs, sin_coeffs=(), center=(0.0, 0.0)):
        self.cos_coeffs = np.atleast_1d(np.asarray(cos_coeffs, dtype=float))
        self.sin_coeffs = np.atleast_1d(np.asarray(sin_coeffs, dtype=float)) if len(sin_coeffs) else np.zeros(0)
        self.center = np.asarray(center, dtype=float)
        self.dim = 2
        ncos = self.cos_coeffs.size
        nsin = self.sin_coeffs.size
        self._k = np.arange(max(ncos, nsin + 1))
        self._ca = np.zeros(self._k.size)
        self._ca[:ncos] = self.cos_coeffs
        self._sb = np.zeros(self._k.size)
        self._sb[1:nsin + 1] = self.sin_coeffs
        theta = np.linspace(0, 2 * np.pi, self.n_samples, endpoint=False)
        self._theta = theta
        if np.min(self.rho(theta)) <= 0:
            raise InvalidInputError("star boundary radius must stay positive")
        self._bpts = self.boundary_point(theta)
        stride = self.n_samples // self.n_search
        self._theta_s = theta[::stride]
        self._bpts_s = self._bpts[::stride]

    def __repr__(self):
        return f"Star(cos={self.cos_coeffs.tolist()}, sin={self.sin_coeffs.tolist()}, center={self.center.tolist()})"

    def _rho_all(self, t):
        kt = np.multiply.outer(t, self._k)
        c, s = np.cos(kt), np.sin(kt)
        k = self._k
        r = c @ self._ca + s @ self._sb
        r1 = -s @ (k * self._ca) + c @ (k * self._sb)
        r2 = -c @ (k ** 2 * self._ca) - s @ (k ** 2 * self._sb)
        return r, r1, r2

    def rho(self, t, deriv: int = 0):
        if deriv not in (0, 1, 2):
            raise ValueError("deriv must be 0, 1 or 2")
        return self._rho_all(np.asarray(t, dtype=float))[deriv]

    def boundary_point(self, t, deriv: int = 0):
        t = np.asarray(t, dtype=float)
        r, r1, r2 = self._rho_all(t)
        e = np.stack([np.cos(t), np.sin(t)], axis=-1)
        ep = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        if deriv == 0:
            return self.center + r[..., None] * e
        if deriv == 1:
            return r1[..., None] * e + r[..., None] * ep
        if deriv == 2:
            return (r2 - r)[..., None] * e + 2 * r1[..., None] * ep
        raise ValueError("deriv must be 0, 1 or 2")

    def curvature(self, t):
        r, r1, r2 = self._rho_all(np.asarray(t, dtype=float))
        return (r * r + 2 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5

    def contains(self, pts):
        x = _as_points(pts, 2) - self.center
        t = np.arctan2(x[:, 1], x[:, 0])
        return np.hypot(x[:, 0], x[:, 1]) < self.rho(t)

    def bbox(self):
        b = self._bpts
        pad = 1e-9
        return b.min(axis=0) - pad, b.max(axis=0) + pad

    def crossing(self, x, v):
        x = _as_points(x, 2)
        v = _as_points(v, 2)

        def phi(s):
            y = x + s[:, None] * v - self.center
            return np.hypot(y[:, 0], y[:, 1]) - self.rho(np.arctan2(y[:, 1], y[:, 0]))

        lo = np.zeros(x.shape[0])
        hi = np.ones(x.shape[0])
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            inside = phi(mid) < 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def _refine(self, x, t):
        """Newton on f(t) = |x - b(t)|^2 / 2, safeguarded to the search cell."""
        step_max = 2 * np.pi / self.n_search
        for _ in range(40):
            r, r1, r2 = self._rho_all(t)
            e = np.stack([np.cos(t), np.sin(t)], axis=-1)
            ep = np.stack([-e[:, 1], e[:, 0]], axis=-1)
            b = self.center + r[:, None] * e
            b1 = r1[:, None] * e + r[:, None] * ep
            b2 = (r2 - r)[:, None] * e + 2 * r1[:, None] * ep
            diff = x - b
            f1 = -np.sum(diff * b1, axis=-1)
            f2 = np.sum(b1 * b1, axis=-1) - np.sum(diff * b2, axis=-1)
            step = np.where(f2 > 0, -f1 / np.where(f2 > 0, f2, 1.0), -np.sign(f1) * step_max)
            step = np.clip(step, -step_max, step_max)
            t = t + step
            if np.all(np.abs(step) < 1e-14):
                break
        return t

    def probe_batch(self, pts, chunk: int = 512):
        x = _as_points(pts, 2)
        m = x.shape[0]
        t1 = np.empty(m)
        t2 = np.empty(m)
        has2 = np.zeros(m, dtype=bool)
        B = self._bpts_s
        ns = B.shape[0]
        for start in range(0, m, chunk):
            xs = x[start:start + chunk]
            D2 = (xs[:, 0, None] - B[None, :, 0]) ** 2 + (xs[:, 1, None] - B[None, :, 1]) ** 2
            i1 = np.argmin(D2, axis=1)
            # best discrete local minimum well separated from the global one
            left = np.roll(D2, 1, axis=1)
            right = np.roll(D2, -1, axis=1)
            locmin = (D2 <= left) & (D2 <= right)
            idx = np.arange(ns)[None, :]
            sep = np.abs(((idx - i1[:, None]) + ns // 2) % ns - ns // 2) > 2
            cand = np.where(locmin & sep, D2, np.inf)
            i2 = np.argmin(cand, axis=1)
            rows = np.arange(xs.shape[0])
            t1[start:start + chunk] = self._theta_s[i1]
            t2[start:start + chunk] = self._theta_s[i2]
            has2[start:start + chunk] = np.isfinite(cand[rows, i2])
        t1 = self._refine(x, t1)
        t2_seed = t2
        t2 = t1.copy()
        if np.any(has2):
            t2[has2] = self._refine(x[has2], t2_seed[has2])
        d1 = np.linalg.norm(x - self.boundary_point(t1), axis=1)
        d2 = np.linalg.norm(x - self.boundary_point(t2), axis=1)
        swap = d2 < d1
        t1, t2 = np.where(swap, t2, t1), np.where(swap, t1, t2)
        d1, d2 = np.minimum(d1, d2), np.maximum(d1, d2)
        dist_t = np.abs(np.angle(np.exp(1j * (t1 - t2))))
        unique = ~(has2 & (d2 - d1 <= UNIQUE_TOL) & (dist_t > 1e-6))
        nearest = self.boundary_point(t1)
        inside = self.contains(x)
        d = np.where(inside, d1, -d1)
        safe_d = np.where(np.abs(d1) > 0, d1, 1.0)
        grad = (x - nearest) / safe_d[:, None] * np.where(inside, 1.0, -1.0)[:, None]
        kappa = self.curvature(t1)
        tau = self.boundary_point(t1, 1)
        tau /= np.linalg.norm(tau, axis=1, keepdims=True)
        lam = -kappa / (1.0 - d * kappa)
        eigs = np.sort(np.stack([lam, np.zeros(m)], axis=1), axis=1)
        hess = lam[:, None, None] * np.einsum("mi,mj->mij", tau, tau)
        eigs[~unique] = np.nan
        hess[~unique] = np.nan
        return dict(x=x, d=d, nearest=nearest, unique=unique, grad=grad, hess_eigs=eigs, hess=hess,
                    kappa=kappa, theta=t1)

    def inscribed_radius(self):
        lo, hi = self.bbox()
        g = np.linspace(0, 1, 48)
        X, Y = np.meshgrid(lo[0] + g * (hi[0] - lo[0]), lo[1] + g * (hi[1] - lo[1]), indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        pts = pts[self.contains(pts)]
        d = self.distance(pts)
        x0 = pts[np.argmax(d)]
        res = optimize.minimize(lambda z: -self.distance(z[None])[0], x0, method="Nelder-Mead",
                                options=dict(xatol=1e-10, fatol=1e-12))
        return float(max(-res.fun, d.max()))

    def diameter(self):
        B = self._bpts
        best = 0.0
        arg = (0, 0)
        for start in range(0, B.shape[0], 512):
            D = np.linalg.norm(B[start:start + 512, None, :] - B[None, :, :], axis=2)
            k = np.unravel_index(np.argmax(D), D.shape)
            if D[k] > best:
                best = D[k]
                arg = (start + k[0], k[1])
        t0 = self._theta[list(arg)]
        res = optimize.minimize(
            lambda z: -np.linalg.norm(self.boundary_point(z[0]) - self.boundary_point(z[1])),
            t0, method="Nelder-Mead", options=dict(xatol=1e-12, fatol=1e-14))
        return float(max(best, -res.fun))

    def curvature_range(self):
        k = self.curvature(self._theta)
        i_min, i_max = np.argmin(k), np.argmax(k)
        h = 2 * np.pi / self.n_samples
        rmin = optimize.minimize_scalar(self.curvature, bounds=(self._theta[i_min] - h, self._theta[i_min] + h),
                                        method="bounded", options=dict(xatol=1e-12))
        rmax = optimize.minimize_scalar(lambda t: -self.curvature(t),
                                        bounds=(self._theta[i_max] - h, self._theta[i_max] + h),
                                        method="bounded", options=dict(xatol=1e-12))
        return float(min(rmin.fun, k.min())), float(max(-rmax.fun, k.max()))

    def to_dict(self):
        return {"type": "star", "cos": self.cos_coeffs.tolist(), "sin": self.sin_coeffs.tolist(),
                "center": self.center.tolist()}


# ---------------------------------------------------------------------------
# distance probes


@dataclass
class DistanceProbe:
    x: np.ndarray
    d: float
    nearest: np.ndarray
    unique: bool
    grad: np.ndarray | None
    hess_eigs: np.ndarray | None
    hess: np.ndarray | None = None
    kappa: float = float("nan")

    @property
    def curvature_margin(self) -> float:
        """1 - d * kappa at the nearest point; positive on unique probes."""
        return 1.0 - self.d * self.kappa


def distance_probe(domain: Domain, x) -> DistanceProbe:
    """Distance to the boundary, nearest point and Hessian spectrum of d at x."""
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.size != domain.dim:
        raise InvalidInputError(f"point has dimension {pt.size}, domain has {domain.dim}")
    res = domain.probe_batch(pt[None])
    d = float(res["d"][0])
    if d < -1e-12:
        raise DomainError(f"point {pt.tolist()} lies outside the domain")
    d = max(d, 0.0)
    unique = bool(res["unique"][0])
    return DistanceProbe(
        x=pt,
        d=d,
        nearest=res["nearest"][0],
        unique=unique,
        grad=res["grad"][0] if unique else None,
        hess_eigs=res["hess_eigs"][0] if unique else None,
        hess=res["hess"][0] if unique else None,
        kappa=float(res["kappa"][0]),
    )


# ---------------------------------------------------------------------------
# barriers


@dataclass
class BarrierField:
    """Barrier values on grid nodes plus its certification record."""

    field: object  # ScalarField
    params: dict
    certified_margin: float
    n_certified: int
    n_ridge: int
    worst_point: np.ndarray | None = None
    sample_points: np.ndarray | None = field(default=None, repr=False)
    sample_F: np.ndarray | None = field(default=None, repr=False)

    @property
    def ridge_fraction(self) -> float:
        total = self.n_certified + self.n_ridge
        return self.n_ridge / total if total else 0.0


def certification_points(domain: Domain, grid, oversample: int = 10, seed: int = 0) -> np.ndarray:
    """Interior grid nodes plus ``oversample`` times as many random interior points."""
    nodes = grid.points[grid.interior]
    rng = np.random.default_rng(seed)
    lo, hi = domain.bbox()
    want = oversample * nodes.shape[0]
    out = []
    got = 0
    while got < want:
        cand = rng.uniform(lo, hi, size=(2 * want + 16, domain.dim))
        cand = cand[domain.contains(cand)]
        out.append(cand)
        got += cand.shape[0]
    rnd = np.concatenate(out)[:want]
    return np.concatenate([nodes, rnd])


def _evaluate_F(op: OperatorSpec, grad, hess):
    return eval_F_batch(op, grad, hess)


def power_barrier_derivatives(d, grad_d, hess_d, gamma):
    """Gradient and Hessian of g = d^gamma by the chain rule."""
    g1 = gamma * d ** (gamma - 1)
    g2 = gamma * (gamma - 1) * d ** (gamma - 2)
    grad = g1[:, None] * grad_d
    hess = g1[:, None, None] * hess_d + g2[:, None, None] * np.einsum("mi,mj->mij", grad_d, grad_d)
    return grad, hess


def boundary_barrier(domain: Domain, op: OperatorSpec, gamma: float, delta: float, grid,
                     oversample: int = 10, seed: int = 0) -> BarrierField:
    """g = d^gamma on the band {d < delta}, constant delta^gamma beyond it.

    The certified margin is the smallest value of -F(grad g, D^2 g) over the
    band's sample points, with grad d and D^2 d taken from exact probes.
    """
    from .grid import ScalarField

    if not 0 < gamma < 1:
        raise InvalidInputError("gamma must lie in (0, 1)")
    if delta <= 0:
        raise InvalidInputError("delta must be positive")
    pts = certification_points(domain, grid, oversample, seed)
    probe = domain.probe_batch(pts)
    d = probe["d"]
    band = (d > 0) & (d < delta)
    ridge = band & ~probe["unique"]
    use = band & probe["unique"]
    grad, hess = power_barrier_derivatives(d[use], probe["grad"][use], probe["hess"][use], gamma)
    Fv = _evaluate_F(op, grad, hess)
    if Fv.size == 0:
        raise BarrierFailureError("no certification points inside the band")
    worst = int(np.argmax(Fv))
    margin = float(-Fv[worst])
    worst_pt = pts[use][worst]

    node_d = np.zeros(grid.n_nodes)
    node_d[grid.domain_nodes] = np.maximum(domain.distance(grid.points[grid.domain_nodes]), 0.0)
    vals = np.where(node_d < delta, node_d ** gamma, delta ** gamma)
    vals[grid.boundary] = 0.0
    sf = ScalarField(grid, vals)
    result = BarrierField(sf, dict(gamma=gamma, delta=delta), margin, int(use.sum()), int(ridge.sum()),
                          worst_pt, pts[use], Fv)
    if margin <= 0:
        raise BarrierFailureError(
            f"d^gamma is not a strict supersolution on the band: F = {-margin:.3e} at {worst_pt.tolist()}",
            worst_pt, -margin)
    return result


def global_barrier_k(domain: Domain, op: OperatorSpec, gamma: float, K: float | None = None) -> int:
    """Smallest integer k >= 1 with a (1 + k gamma) >= 2 A (N - 1) mu (1 + K^gamma) K^(1 - gamma).

    Along grad d the barrier's second derivative is
    c [(gamma - 1) - (1 + k gamma) d^gamma]; the condition makes the normal
    term dominate the tangential one by a factor of two. mu bounds the
    positive part of the tangential eigenvalues of D^2 d, which is
    max(0, -kappa_min) since -kappa / (1 - d kappa) <= |kappa| for kappa < 0
    and is negative for kappa > 0.
    """
    if K is None:
        K = 1.01 * domain.diameter()
    kmin, _ = domain.curvature_range()
    mu = max(0.0, -kmin)
    rhs = 2.0 * op.A * (domain.dim - 1) * mu * (1 + K ** gamma) * K ** (1 - gamma)
    k = int(np.ceil((rhs / op.a - 1.0) / gamma - 1e-12))
    return max(k, 1)


def global_barrier_derivatives(d, grad_d, hess_d, gamma, k):
    """grad and Hessian of u = 1 - (1 + d^gamma)^(-k)."""
    dg = d ** gamma
    c = k * gamma * d ** (gamma - 2) / (1 + dg) ** (k + 2)
    grad = (k * gamma * d ** (gamma - 1) / (1 + dg) ** (k + 1))[:, None] * grad_d
    nn = np.einsum("mi,mj->mij", grad_d, grad_d)
    hess = c[:, None, None] * ((gamma - 1 - (1 + k * gamma) * dg)[:, None, None] * nn
                               + (d * (1 + dg))[:, None, None] * hess_d)
    return grad, hess


def global_barrier(domain: Domain, op: OperatorSpec, beta: float, gamma: float, grid,
                   k: int | None = None, oversample: int = 10, seed: int = 0) -> BarrierField:
    """Scaled s (1 - (1 + d^gamma)^(-k)) with F <= beta at every certified point.

    Points with a non-unique nearest boundary point are skipped and counted.
    """
    from .grid import ScalarField

    if beta >= 0:
        raise InvalidInputError("beta must be negative")
    if not 0 < gamma < 1:
        raise InvalidInputError("gamma must lie in (0, 1)")
    K = 1.01 * domain.diameter()
    if k is None:
        k = global_barrier_k(domain, op, gamma, K)
    pts = certification_points(domain, grid, oversample, seed)
    probe = domain.probe_batch(pts)
    d = probe["d"]
    valid = d > 0
    ridge = valid & ~probe["unique"]
    use = valid & probe["unique"]
    grad, hess = global_barrier_derivatives(d[use], probe["grad"][use], probe["hess"][use], gamma, k)
    F_unit = _evaluate_F(op, grad, hess)
    worst = int(np.argmax(F_unit))
    Fmax = float(F_unit[worst])
    worst_pt = pts[use][worst]
    if not Fmax < 0:
        raise BarrierFailureError(f"global barrier with k={k} has F = {Fmax:.3e} >= 0 at {worst_pt.tolist()}",
                                  worst_pt, Fmax)
    s = (beta / Fmax) ** (1.0 / (1.0 + op.alpha))
    F_scaled = s ** (1 + op.alpha) * F_unit
    margin = float(-np.max(F_scaled))

    node_d = np.zeros(grid.n_nodes)
    node_d[grid.domain_nodes] = np.maximum(domain.distance(grid.points[grid.domain_nodes]), 0.0)
    vals = s * (1 - (1 + node_d ** gamma) ** (-k))
    vals[grid.boundary] = 0.0
    sf = ScalarField(grid, vals)
    return BarrierField(sf, dict(gamma=gamma, k=k, beta=beta, K=K, scale=s), margin, int(use.sum()),
                        int(ridge.sum()), worst_pt, pts[use], F_scaled)


def barrier_values(domain: Domain, pts, gamma: float, k: int, scale: float = 1.0) -> np.ndarray:
    d = np.maximum(domain.distance(pts), 0.0)
    return scale * (1 - (1 + d ** gamma) ** (-k))
