"""Lattice grids with cut-cell boundary handling and grid functions.

Nodes sit on the origin-anchored lattice ``h * Z^N`` restricted to the
domain's bounding box. Each node is classified as interior, boundary (within
``snap * h`` of the boundary, on either side) or exterior. Interior nodes
whose stencil arm leaves the domain get a cut point at the exact boundary
crossing; cut points are stored after the lattice nodes in an extended value
vector so a second difference is always a plain gather.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import InvalidInputError, ResolutionError
from .geometry import Domain

_MAGIC = b"PEGF0001"


def stencil_directions(dim: int, width: int) -> np.ndarray:
    """Canonical coprime lattice directions with sup-norm at most ``width``."""
    if dim == 1:
        return np.array([[1]])
    if dim != 2:
        raise InvalidInputError("grids support dimensions 1 and 2")
    if width < 1:
        raise InvalidInputError("stencil width must be at least 1")
    out = []
    for p in range(0, width + 1):
        for q in range(-width, width + 1):
            if (p, q) == (0, 0) or math.gcd(p, abs(q)) != 1:
                continue
            if p == 0 and q < 0:
                continue
            out.append((p, q))
    out.sort(key=lambda e: (e[0] ** 2 + e[1] ** 2, e))
    return np.array(out)


def stencil_frames(dirs: np.ndarray) -> np.ndarray:
    """Orthogonal pairs of direction indices; in 1D each direction is its own frame."""
    if dirs.shape[1] == 1:
        return np.arange(dirs.shape[0])[:, None]
    index = {tuple(e): i for i, e in enumerate(dirs)}
    frames = []
    for i, (p, q) in enumerate(dirs):
        perp = (-q, p)
        if perp[0] < 0 or (perp[0] == 0 and perp[1] < 0):
            perp = (q, -p)
        j = index[perp]
        if i < j:
            frames.append((i, j))
    return np.array(frames)


@dataclass
class Grid:
    """Lattice discretization of a domain.

    Attributes
    ----------
    shape : tuple of int
        Lattice shape; node ``k`` in flat (row-major) order has coordinates
        ``points[k]``.
    interior, boundary : ndarray of bool
        Node masks over the flat lattice.
    dirs, frames : ndarray
        Stencil directions (integer vectors) and orthogonal frames of them.
    nbr_plus, nbr_minus : ndarray, shape (n_dirs, n_interior)
        Indices into the extended vector (lattice nodes then cut points).
    len_plus, len_minus : ndarray, shape (n_dirs, n_interior)
        Physical arm lengths.
    cut_points : ndarray, shape (n_cut, N)
        Boundary crossings used by truncated arms.
    """

    domain: Domain
    h: float
    shape: tuple
    origin_index: np.ndarray
    points: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    dirs: np.ndarray
    frames: np.ndarray
    nbr_plus: np.ndarray
    nbr_minus: np.ndarray
    len_plus: np.ndarray
    len_minus: np.ndarray
    cut_points: np.ndarray
    snap: float = 0.05
    stencil_width: int = 1
    _axis_dirs: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    @property
    def n_cut(self) -> int:
        return self.cut_points.shape[0]

    @property
    def interior_idx(self) -> np.ndarray:
        return np.flatnonzero(self.interior)

    @property
    def domain_nodes(self) -> np.ndarray:
        return self.interior | self.boundary

    @property
    def axis_dirs(self) -> np.ndarray:
        """Indices of the coordinate axis directions within ``dirs``."""
        return self._axis_dirs

    @property
    def fixed_points(self) -> np.ndarray:
        """Coordinates of every extended-vector entry that carries boundary data."""
        return np.concatenate([self.points[self.boundary], self.cut_points])

    def node_coords(self, values: np.ndarray) -> np.ndarray:
        return values.reshape(self.shape)

    def summary(self) -> dict:
        return dict(h=self.h, shape=list(self.shape), n_interior=self.n_interior,
                    n_boundary=int(self.boundary.sum()), n_cut=self.n_cut,
                    n_dirs=int(self.dirs.shape[0]), stencil_width=self.stencil_width)


def build_grid(domain: Domain, h: float, stencil_width: int = 1, snap: float = 0.05) -> Grid:
    """Discretize ``domain`` with spacing ``h``.

    Raises
    ------
    ResolutionError
        If fewer than one interior node (1D) or nine (2D) result.
    """
    if not h > 0:
        raise InvalidInputError("grid spacing must be positive")
    if not 0 <= snap < 0.5:
        raise InvalidInputError("snap must lie in [0, 0.5)")
    dim = domain.dim
    dirs = stencil_directions(dim, stencil_width)
    frames = stencil_frames(dirs)
    lo, hi = domain.bbox()
    i_lo = np.floor(lo / h - 1e-9).astype(int)
    i_hi = np.ceil(hi / h + 1e-9).astype(int)
    shape = tuple(int(n) for n in (i_hi - i_lo + 1))
    axes = [h * np.arange(i_lo[k], i_hi[k] + 1) for k in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)

    inside = domain.contains(points)
    # unsigned distance only matters near the boundary
    near = np.zeros(points.shape[0], dtype=bool)
    cand = np.flatnonzero(np.any(np.abs(points - np.clip(points, lo, hi)) <= h, axis=1))
    dist = np.full(points.shape[0], np.inf)
    if cand.size:
        dist[cand] = np.abs(domain.distance(points[cand]))
    near = dist <= snap * h
    boundary = near
    interior = inside & ~near
    min_int = 1 if dim == 1 else 9
    if interior.sum() < min_int:
        raise ResolutionError(f"h={h} leaves {int(interior.sum())} interior nodes")

    strides = np.array([int(np.prod(shape[k + 1:])) for k in range(dim)])
    idx = np.flatnonzero(interior)
    multi = np.stack(np.unravel_index(idx, shape), axis=1)
    nd = dirs.shape[0]
    nbr_p = np.empty((nd, idx.size), dtype=np.int64)
    nbr_m = np.empty((nd, idx.size), dtype=np.int64)
    len_p = np.empty((nd, idx.size))
    len_m = np.empty((nd, idx.size))
    cut_list = []
    n_cut = 0
    usable = interior | boundary
    shape_arr = np.array(shape)
    for k, e in enumerate(dirs):
        step = h * np.linalg.norm(e)
        for sgn, nbr, lens in ((1, nbr_p, len_p), (-1, nbr_m, len_m)):
            tgt = multi + sgn * e
            in_lat = np.all((tgt >= 0) & (tgt < shape_arr), axis=1)
            flat = np.where(in_lat, (np.where(in_lat[:, None], tgt, 0) * strides).sum(axis=1), 0)
            ok = in_lat & usable[flat]
            nbr[k] = flat
            lens[k] = step
            bad = np.flatnonzero(~ok)
            if bad.size:
                x = points[idx[bad]]
                v = np.broadcast_to(sgn * h * e.astype(float), x.shape)
                s = domain.crossing(x, v)
                cut_list.append(x + s[:, None] * v)
                nbr[k, bad] = points.shape[0] + n_cut + np.arange(bad.size)
                lens[k, bad] = s * step
                n_cut += bad.size
    cut_points = np.concatenate(cut_list) if cut_list else np.zeros((0, dim))
    if np.any(len_p <= 0) or np.any(len_m <= 0):
        raise ResolutionError("degenerate cut cell: a stencil arm has zero length")
    axis_dirs = np.array([int(np.flatnonzero(np.all(dirs == np.eye(dim, dtype=int)[a], axis=1))[0])
                          for a in range(dim)])
    return Grid(domain, float(h), shape, i_lo, points, interior, boundary, dirs, frames,
                nbr_p, nbr_m, len_p, len_m, cut_points, snap, stencil_width, axis_dirs)


def _boundary_array(grid: Grid, data, pts: np.ndarray) -> np.ndarray:
    if data is None:
        return np.zeros(pts.shape[0])
    if callable(data):
        vals = np.asarray(data(pts), dtype=float)
        return np.broadcast_to(vals, (pts.shape[0],)).astype(float)
    return np.full(pts.shape[0], float(data))


class ScalarField:
    """Values on grid nodes, NaN on exterior nodes, plus values at cut points.

    Parameters
    ----------
    grid : Grid
    values : array_like
        Flat node values (length ``grid.n_nodes``) or lattice-shaped array.
    cut_values : array_like, optional
        Values at the grid's cut points; zeros when omitted.
    """

    def __init__(self, grid: Grid, values, cut_values=None):
        self.grid = grid
        v = np.array(values, dtype=float).reshape(-1)
        if v.size != grid.n_nodes:
            raise InvalidInputError(f"expected {grid.n_nodes} values, got {v.size}")
        v[~grid.domain_nodes] = np.nan
        self.flat = v
        if cut_values is None:
            cut_values = np.zeros(grid.n_cut)
        self.cut_values = np.asarray(cut_values, dtype=float).reshape(-1)
        if self.cut_values.size != grid.n_cut:
            raise InvalidInputError("cut value count does not match the grid")

    @classmethod
    def from_function(cls, grid: Grid, func: Callable, boundary=None) -> "ScalarField":
        vals = np.asarray(func(grid.points), dtype=float)
        vals = np.broadcast_to(vals, (grid.n_nodes,)).copy()
        if boundary is not None:
            vals[grid.boundary] = _boundary_array(grid, boundary, grid.points[grid.boundary])
            cut = _boundary_array(grid, boundary, grid.cut_points)
        else:
            cut = np.asarray(func(grid.cut_points), dtype=float) if grid.n_cut else np.zeros(0)
        return cls(grid, vals, cut)

    @classmethod
    def zeros(cls, grid: Grid, boundary=None) -> "ScalarField":
        vals = np.zeros(grid.n_nodes)
        vals[grid.boundary] = _boundary_array(grid, boundary, grid.points[grid.boundary])
        return cls(grid, vals, _boundary_array(grid, boundary, grid.cut_points))

    @property
    def values(self) -> np.ndarray:
        return self.flat.reshape(self.grid.shape)

    @property
    def interior_values(self) -> np.ndarray:
        return self.flat[self.grid.interior]

    def extended(self) -> np.ndarray:
        return np.concatenate([self.flat, self.cut_values])

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.flat.copy(), self.cut_values.copy())

    def with_interior(self, vals) -> "ScalarField":
        out = self.copy()
        out.flat[self.grid.interior] = vals
        return out

    def sup_norm(self) -> float:
        return float(np.nanmax(np.abs(self.flat)))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.flat, -self.cut_values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.flat, c * self.cut_values)

    __rmul__ = __mul__

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.flat - other.flat, self.cut_values - other.cut_values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.flat + other.flat, self.cut_values + other.cut_values)

    def sample(self, pts) -> np.ndarray:
        """Values at lattice points ``pts`` (must be nodes of the grid)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ij = np.rint(pts / self.grid.h).astype(int) - self.grid.origin_index
        if np.any(ij < 0) or np.any(ij >= np.array(self.grid.shape)):
            raise InvalidInputError("sample point lies off the lattice")
        return self.values[tuple(ij.T)]

    def to_csv(self, path) -> None:
        """One row per domain node: coordinates then value, 17 significant digits."""
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(g.dim)] + ["value"])
            for k in np.flatnonzero(g.domain_nodes):
                w.writerow([repr(float(c)) for c in g.points[k]] + [repr(float(self.flat[k]))])

    def to_binary(self, path) -> None:
        """Header (magic, dim, h, shape, origin) then float64 node and cut values."""
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            head = np.array([g.dim, g.n_nodes, g.n_cut], dtype="<i8")
            fh.write(head.tobytes())
            fh.write(np.array([g.h], dtype="<f8").tobytes())
            fh.write(np.array(g.shape, dtype="<i8").tobytes())
            fh.write(np.asarray(g.origin_index, dtype="<i8").tobytes())
            fh.write(self.flat.astype("<f8").tobytes())
            fh.write(self.cut_values.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path, grid: Grid) -> "ScalarField":
        raw = Path(path).read_bytes()
        if raw[:8] != _MAGIC:
            raise InvalidInputError("not a grid-field file")
        off = 8
        dim, n_nodes, n_cut = np.frombuffer(raw, "<i8", 3, off)
        off += 24
        h = float(np.frombuffer(raw, "<f8", 1, off)[0])
        off += 8
        shape = tuple(np.frombuffer(raw, "<i8", dim, off))
        off += 8 * dim
        origin = np.frombuffer(raw, "<i8", dim, off)
        off += 8 * dim
        if (dim != grid.dim or n_nodes != grid.n_nodes or n_cut != grid.n_cut or h != grid.h
                or shape != tuple(grid.shape) or np.any(origin != grid.origin_index)):
            raise InvalidInputError("stored field does not match the grid")
        flat = np.frombuffer(raw, "<f8", n_nodes, off).copy()
        off += 8 * n_nodes
        cut = np.frombuffer(raw, "<f8", n_cut, off).copy()
        return cls(grid, flat, cut)
