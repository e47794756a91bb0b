"""Uniform tensor grids on rectangles, plus boundary bookkeeping helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on [a, b] x [c, d] with nx-by-ny uniform cells.

    Node (i, j) sits at (a + i*hx, c + j*hy) for 0 <= i <= nx, 0 <= j <= ny.
    Arrays over the grid are indexed [i, j] (axis 0 is x).
    """

    a: float
    b: float
    c: float
    d: float
    nx: int
    ny: int

    @property
    def hx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def hy(self) -> float:
        return (self.d - self.c) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.b - self.a, self.d - self.c))

    @cached_property
    def x(self) -> np.ndarray:
        return self.a + self.hx * np.arange(self.nx + 1)

    @cached_property
    def y(self) -> np.ndarray:
        return self.c + self.hy * np.arange(self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def node(self, i: int, j: int) -> tuple[float, float]:
        return (self.a + i * self.hx, self.c + j * self.hy)

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """True for points strictly inside the rectangle (by ``margin``)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = (
            (p[:, 0] > self.a + margin)
            & (p[:, 0] < self.b - margin)
            & (p[:, 1] > self.c + margin)
            & (p[:, 1] < self.d - margin)
        )
        return ok if np.ndim(pts) > 1 else bool(ok[0])

    def distance_to_boundary(self, pts: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        dist = np.minimum.reduce(
            [p[:, 0] - self.a, self.b - p[:, 0], p[:, 1] - self.c, self.d - p[:, 1]]
        )
        return dist if np.ndim(pts) > 1 else float(dist[0])


def make_grid(a: float, b: float, c: float, d: float, nx: int, ny: int) -> Grid2D:
    """Build a grid, rejecting degenerate bounds and odd/tiny cell counts."""
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c) and np.isfinite(d)):
        raise ValueError("grid bounds must be finite")
    if not (b > a and d > c):
        raise ValueError(f"degenerate bounds: [{a}, {b}] x [{c}, {d}]")
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n:
            raise ValueError(f"{name} must be an integer, got {n!r}")
        if n < MIN_CELLS:
            raise ValueError(f"{name} = {n} is below the minimum of {MIN_CELLS}")
        if n % 2 != 0:
            raise ValueError(f"{name} = {n} must be even")
    return Grid2D(float(a), float(b), float(c), float(d), int(nx), int(ny))


@dataclass(frozen=True)
class BoundarySide:
    """One side of the rectangle, oriented counter-clockwise."""

    name: str
    ii: np.ndarray = field(repr=False)
    jj: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    normal: np.ndarray
    tangent: np.ndarray
    ds: float


def boundary_sides(grid: Grid2D) -> list[BoundarySide]:
    """The four sides in counter-clockwise order, corners included on each.

    Tangents follow the counter-clockwise traversal; normals point outward.
    """
    xs, ys = grid.x, grid.y
    nx, ny = grid.nx, grid.ny

    def side(name, ii, jj, normal, tangent, ds):
        ii = np.asarray(ii, dtype=int)
        jj = np.asarray(jj, dtype=int)
        pts = np.column_stack([xs[ii], ys[jj]])
        return BoundarySide(name, ii, jj, pts, np.array(normal, float), np.array(tangent, float), ds)

    i_all = np.arange(nx + 1)
    j_all = np.arange(ny + 1)
    return [
        side("bottom", i_all, np.zeros(nx + 1, int), (0.0, -1.0), (1.0, 0.0), grid.hx),
        side("right", np.full(ny + 1, nx), j_all, (1.0, 0.0), (0.0, 1.0), grid.hy),
        side("top", i_all[::-1], np.full(nx + 1, ny), (0.0, 1.0), (-1.0, 0.0), grid.hx),
        side("left", np.zeros(ny + 1, int), j_all[::-1], (-1.0, 0.0), (0.0, -1.0), grid.hy),
    ]


def boundary_path(grid: Grid2D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counter-clockwise cycle of boundary nodes starting at (a, c).

    Returns (ii, jj, points) with each of the 2*(nx+ny) boundary nodes
    visited exactly once; corners are not repeated.
    """
    nx, ny = grid.nx, grid.ny
    ii = np.concatenate(
        [
            np.arange(nx + 1),              # bottom, (a,c) .. (b,c)
            np.full(ny - 1, nx),            # right, excluding both corners
            np.arange(nx, -1, -1),          # top, (b,d) .. (a,d)
            np.zeros(ny - 1, dtype=int),    # left, excluding both corners
        ]
    )
    jj = np.concatenate(
        [
            np.zeros(nx + 1, dtype=int),
            np.arange(1, ny),
            np.full(nx + 1, ny),
            np.arange(ny - 1, 0, -1),
        ]
    )
    pts = np.column_stack([grid.x[ii], grid.y[jj]])
    return ii, jj, pts


def path_segment_lengths(grid: Grid2D) -> np.ndarray:
    """Length of each segment of the closed boundary path (last closes the loop)."""
    nx, ny = grid.nx, grid.ny
    return np.concatenate(
        [
            np.full(nx, grid.hx),
            np.full(ny, grid.hy),
            np.full(nx, grid.hx),
            np.full(ny, grid.hy),
        ]
    )


def closed_path_integral(grid: Grid2D, path_values: np.ndarray) -> float:
    """Trapezoid integral of nodal values around the closed boundary path."""
    v = np.asarray(path_values, dtype=float)
    ds = path_segment_lengths(grid)
    nxt = np.roll(v, -1)
    return float(np.sum(0.5 * (v + nxt) * ds))


def ring_mask(grid: Grid2D) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[0, :] = m[-1, :] = True
    m[:, 0] = m[:, -1] = True
    return m


def path_to_ring(grid: Grid2D, path_values: np.ndarray, fill: complex = 0.0) -> np.ndarray:
    """Scatter path-ordered nodal values onto a full grid array."""
    ii, jj, _ = boundary_path(grid)
    out = np.full(grid.shape, fill, dtype=np.asarray(path_values).dtype)
    out[ii, jj] = path_values
    return out


def ring_to_path(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    ii, jj, _ = boundary_path(grid)
    return values[ii, jj]


def bilinear(grid: Grid2D, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a nodal array at arbitrary in-domain points."""
    p = np.atleast_2d(np.asarray(pts, dtype=float))
    sx = (p[:, 0] - grid.a) / grid.hx
    sy = (p[:, 1] - grid.c) / grid.hy
    i0 = np.clip(np.floor(sx).astype(int), 0, grid.nx - 1)
    j0 = np.clip(np.floor(sy).astype(int), 0, grid.ny - 1)
    tx = sx - i0
    ty = sy - j0
    v = (
        values[i0, j0] * (1 - tx) * (1 - ty)
        + values[i0 + 1, j0] * tx * (1 - ty)
        + values[i0, j0 + 1] * (1 - tx) * ty
        + values[i0 + 1, j0 + 1] * tx * ty
    )
    return v if np.ndim(pts) > 1 else v[0]
