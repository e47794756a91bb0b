"""Discrete Laplace solvers on the rectangle and the vortex potentials.

Two low-level solvers (five-point stencil, direct sparse factorization,
factorizations cached per grid) and, on top of them, the harmonic fields that
drive the reduced vortex dynamics:

* ``phase_mismatch_*``   -- the harmonic part of the phase left over after the
  vortex angles are peeled off (wall-trace data for wall-value runs, wall-flux
  data for zero-flux runs);
* ``stream_function_*``  -- its harmonic conjugate, whose gradient is the
  mobility force on a vortex center;
* ``from_tangential_*``  -- cross-check builders that integrate prescribed
  tangential wall data into a trace before solving.

Orientation convention: with the symplectic rotation J = [[0, -1], [1, 0]]
(counter-clockwise quarter turn), gradients satisfy

    grad(stream) = J^T grad(phase_mismatch),

i.e. ``rotate_cw`` maps phase-mismatch gradients onto stream gradients.  The
orientation is fixed by the finite-difference oracle on the renormalized
energy (see the rdl module tests) and by closed-form disk solutions.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .grid import (
    Grid2D,
    bilinear,
    boundary_path,
    boundary_sides,
    path_to_ring,
    ring_mask,
)
from .initial import BoundaryPhase, unwrapped_angles

RESIDUAL_TOL = 1e-10
COMPAT_TOL = 1e-8


class IncompatibleFluxError(ValueError):
    """Raised when wall-flux data has a non-vanishing closed integral."""


class TraceWindingError(ValueError):
    """Raised when an assembled wall trace fails to close up."""


@dataclass(frozen=True)
class HarmonicField:
    """Nodal solution of the discrete Laplace equation on a grid."""

    grid: Grid2D
    values: np.ndarray
    gauge: str  # "boundary" (trace pinned) or "zero-mean"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError("values shape does not match grid")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @cached_property
    def grad_fields(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        gx = np.gradient(self.values, g.hx, axis=0, edge_order=2)
        gy = np.gradient(self.values, g.hy, axis=1, edge_order=2)
        return gx, gy


def rotate_cw(vecs: np.ndarray) -> np.ndarray:
    """Clockwise quarter turn (v1, v2) -> (v2, -v1); maps phase gradients to
    stream gradients."""
    v = np.asarray(vecs, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def grad_at(hf: HarmonicField, pts: np.ndarray) -> np.ndarray:
    """Central-difference gradient interpolated bilinearly at interior points."""
    g = hf.grid
    p = np.atleast_2d(np.asarray(pts, dtype=float))
    margin = 2.0 * max(g.hx, g.hy)
    if np.any(g.distance_to_boundary(p) < margin):
        raise ValueError("gradient probe closer than two cells to the wall")
    gx, gy = hf.grad_fields
    out = np.column_stack([bilinear(g, gx, p), bilinear(g, gy, p)])
    return out if np.ndim(pts) > 1 else out[0]


def value_at(hf: HarmonicField, pts: np.ndarray) -> np.ndarray:
    return bilinear(hf.grid, hf.values, pts)


# ----------------------------------------------------------------------------
# sparse operators and cached factorizations

def _tridiag(n: int, h: float) -> sparse.csr_matrix:
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


def _tridiag_neumann(n: int, h: float) -> sparse.csr_matrix:
    m = _tridiag(n, h).tolil()
    m[0, 1] = 2.0 / h**2
    m[-1, -2] = 2.0 / h**2
    return m.tocsr()


_LOCK = threading.Lock()
_DIRICHLET_CACHE: dict[Grid2D, tuple] = {}
_NEUMANN_CACHE: dict[Grid2D, tuple] = {}


def _dirichlet_system(grid: Grid2D):
    with _LOCK:
        hit = _DIRICHLET_CACHE.get(grid)
    if hit is not None:
        return hit
    nx, ny = grid.nx, grid.ny
    lap = sparse.kron(_tridiag(nx + 1, grid.hx), sparse.eye(ny + 1)) + sparse.kron(
        sparse.eye(nx + 1), _tridiag(ny + 1, grid.hy)
    )
    lap = lap.tocsr()
    bnd = ring_mask(grid).ravel()
    interior = ~bnd
    rows = lap[interior]
    lu = splu(rows[:, interior].tocsc())
    to_bnd = rows[:, bnd].tocsr()
    hit = (lu, to_bnd, interior, bnd)
    with _LOCK:
        _DIRICHLET_CACHE[grid] = hit
    return hit


def _neumann_system(grid: Grid2D):
    with _LOCK:
        hit = _NEUMANN_CACHE.get(grid)
    if hit is not None:
        return hit
    nx, ny = grid.nx, grid.ny
    lap = sparse.kron(_tridiag_neumann(nx + 1, grid.hx), sparse.eye(ny + 1)) + sparse.kron(
        sparse.eye(nx + 1), _tridiag_neumann(ny + 1, grid.hy)
    )
    wx = np.ones(nx + 1)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(ny + 1)
    wy[0] = wy[-1] = 0.5
    w = np.outer(wx, wy).ravel()  # exact left null vector of lap
    n = lap.shape[0]
    bordered = sparse.bmat(
        [[lap, w[:, None]], [sparse.csr_matrix(w[None, :]), None]], format="csc"
    )
    lu = splu(bordered)
    hit = (lu, w)
    with _LOCK:
        _NEUMANN_CACHE[grid] = hit
    return hit


# ----------------------------------------------------------------------------
# low-level solves

def solve_laplace_dirichlet(grid: Grid2D, boundary_values: np.ndarray) -> HarmonicField:
    """Five-point solve of Laplace's equation with a prescribed wall trace.

    ``boundary_values`` is a full nodal array whose boundary ring carries the
    trace; interior entries are ignored.
    """
    bv = np.asarray(boundary_values, dtype=float)
    if bv.shape != grid.shape:
        raise ValueError("boundary_values shape does not match grid")
    if not np.isfinite(bv[ring_mask(grid)]).all():
        raise ValueError("boundary trace must be finite")
    lu, to_bnd, interior, bnd = _dirichlet_system(grid)
    rhs = -to_bnd @ bv.ravel()[bnd]
    u_int = lu.solve(rhs)
    full = np.zeros(grid.shape).ravel()
    full[interior] = u_int
    full[bnd] = bv.ravel()[bnd]
    return HarmonicField(grid, full.reshape(grid.shape), gauge="boundary")


@dataclass(frozen=True)
class BoundaryFlux:
    """Outward normal derivative on each wall, nodal, corners on both sides."""

    bottom: np.ndarray
    right: np.ndarray
    top: np.ndarray
    left: np.ndarray

    def __post_init__(self):
        for name in ("bottom", "right", "top", "left"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def closed_integral(self, grid: Grid2D) -> float:
        """Trapezoid integral of the flux around the whole wall."""
        def trap(v, h):
            return h * (v.sum() - 0.5 * (v[0] + v[-1]))

        return float(
            trap(self.bottom, grid.hx)
            + trap(self.top, grid.hx)
            + trap(self.left, grid.hy)
            + trap(self.right, grid.hy)
        )

    def scale(self, grid: Grid2D) -> float:
        amp = max(np.abs(v).max() if v.size else 0.0 for v in (self.bottom, self.right, self.top, self.left))
        perimeter = 2.0 * ((grid.b - grid.a) + (grid.d - grid.c))
        return max(1.0, amp * perimeter)

    def shifted(self, const: float) -> "BoundaryFlux":
        return BoundaryFlux(
            self.bottom - const, self.right - const, self.top - const, self.left - const
        )


def solve_laplace_neumann(
    grid: Grid2D, flux: BoundaryFlux, compat_tol: float = COMPAT_TOL
) -> HarmonicField:
    """Zero-mean five-point solve with prescribed wall flux.

    The flux enters through second-order ghost elimination.  The singular
    system is solved in bordered form after projecting out the incompatible
    component; incompatibility beyond ``compat_tol`` (relative to the data
    scale) is an error.
    """
    nx, ny = grid.nx, grid.ny
    for name, arr, n in (
        ("bottom", flux.bottom, nx + 1),
        ("top", flux.top, nx + 1),
        ("left", flux.left, ny + 1),
        ("right", flux.right, ny + 1),
    ):
        if arr.shape != (n,):
            raise ValueError(f"flux.{name} must have shape ({n},)")
        if not np.isfinite(arr).all():
            raise ValueError(f"flux.{name} must be finite")

    defect = flux.closed_integral(grid)
    if abs(defect) > compat_tol * flux.scale(grid):
        raise IncompatibleFluxError(
            f"wall flux integrates to {defect:.3e} (tolerance "
            f"{compat_tol * flux.scale(grid):.3e})"
        )

    b = np.zeros(grid.shape)
    b[:, 0] -= 2.0 * flux.bottom / grid.hy
    b[:, -1] -= 2.0 * flux.top / grid.hy
    b[0, :] -= 2.0 * flux.left / grid.hx
    b[-1, :] -= 2.0 * flux.right / grid.hx

    lu, w = _neumann_system(grid)
    bvec = b.ravel()
    bvec = bvec - w * (w @ bvec) / (w @ w)
    sol = lu.solve(np.concatenate([bvec, [0.0]]))
    u = sol[:-1].reshape(grid.shape)
    u = u - u.mean()
    return HarmonicField(grid, u, gauge="zero-mean")


def interior_residual(hf: HarmonicField) -> float:
    """Max-norm of the five-point Laplacian over interior nodes."""
    g = hf.grid
    v = hf.values
    res = (v[:-2, 1:-1] - 2 * v[1:-1, 1:-1] + v[2:, 1:-1]) / g.hx**2 + (
        v[1:-1, :-2] - 2 * v[1:-1, 1:-1] + v[1:-1, 2:]
    ) / g.hy**2
    return float(np.abs(res).max())


# ----------------------------------------------------------------------------
# vortex potentials

def _center_arrays(centers, windings):
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    n = np.asarray(windings, dtype=int).reshape(-1)
    if len(c) != len(n):
        raise ValueError("centers and windings must have equal length")
    return c, n


def _angle_flux(grid: Grid2D, centers: np.ndarray, windings: np.ndarray) -> BoundaryFlux:
    """Outward normal derivative of sum_l n_l * angle(x - x_l) on each wall."""
    data = {}
    for side in boundary_sides(grid):
        pts = side.points
        out = np.zeros(len(pts))
        for cen, n in zip(centers, windings):
            dx = pts[:, 0] - cen[0]
            dy = pts[:, 1] - cen[1]
            r2 = dx**2 + dy**2
            out += n * (-dy * side.normal[0] + dx * side.normal[1]) / r2
        data[side.name] = out
    # sides are stored in ascending node order
    return BoundaryFlux(
        bottom=data["bottom"], right=data["right"], top=data["top"][::-1], left=data["left"][::-1]
    )


def _log_flux(grid: Grid2D, centers: np.ndarray, windings: np.ndarray) -> BoundaryFlux:
    """Outward normal derivative of sum_l n_l * ln|x - x_l| on each wall."""
    data = {}
    for side in boundary_sides(grid):
        pts = side.points
        out = np.zeros(len(pts))
        for cen, n in zip(centers, windings):
            dx = pts[:, 0] - cen[0]
            dy = pts[:, 1] - cen[1]
            r2 = dx**2 + dy**2
            out += n * (dx * side.normal[0] + dy * side.normal[1]) / r2
        data[side.name] = out
    return BoundaryFlux(
        bottom=data["bottom"], right=data["right"], top=data["top"][::-1], left=data["left"][::-1]
    )


def _precompensate(grid: Grid2D, flux: BoundaryFlux) -> BoundaryFlux:
    """Remove the O(h^2) quadrature defect of analytically compatible data.

    The continuum flux integrates to zero exactly; its nodal trapezoid sum
    does not.  Subtracting the uniform mean restores exact discrete
    compatibility.  A defect beyond O(h^2) indicates genuinely incompatible
    data and is left for the solver to reject.
    """
    defect = flux.closed_integral(grid)
    perimeter = 2.0 * ((grid.b - grid.a) + (grid.d - grid.c))
    h2 = max(grid.hx, grid.hy) ** 2
    if abs(defect) > 50.0 * h2 * flux.scale(grid):
        return flux
    return flux.shifted(defect / perimeter)


def _closed_path(grid: Grid2D) -> np.ndarray:
    _, _, pts = boundary_path(grid)
    return np.vstack([pts, pts[:1]])


def phase_mismatch_dirichlet(
    grid: Grid2D, centers, windings, wall_phase: BoundaryPhase
) -> HarmonicField:
    """Harmonic field with wall trace omega(x) - sum_l n_l angle(x - x_l).

    Vortex angles are unwrapped continuously along the wall; the windings of
    the wall phase and of the current centers must cancel for the trace to be
    single-valued.
    """
    c, n = _center_arrays(centers, windings)
    pts = _closed_path(grid)
    trace = wall_phase.values_along(pts)
    for cen, nj in zip(c, n):
        trace = trace - nj * unwrapped_angles(pts, cen)
    defect = trace[-1] - trace[0]
    if abs(defect) > np.pi:
        raise TraceWindingError(
            f"wall trace fails to close (jump {defect:.3e}); "
            "wall-phase and center windings do not cancel"
        )
    ring = path_to_ring(grid, trace[:-1])
    return solve_laplace_dirichlet(grid, ring)


def phase_mismatch_neumann(grid: Grid2D, centers, windings) -> HarmonicField:
    """Harmonic field whose wall flux cancels the vortex-angle flux."""
    c, n = _center_arrays(centers, windings)
    flux = _angle_flux(grid, c, n)
    neg = BoundaryFlux(-flux.bottom, -flux.right, -flux.top, -flux.left)
    return solve_laplace_neumann(grid, _precompensate(grid, neg))


def stream_function_dirichlet(
    grid: Grid2D, centers, windings, wall_phase: BoundaryPhase
) -> HarmonicField:
    """Harmonic conjugate of the wall-value phase mismatch (zero-mean gauge).

    Solved as a wall-flux problem with data d(omega)/ds minus the normal
    derivative of sum_l n_l ln|x - x_l|.
    """
    c, n = _center_arrays(centers, windings)
    log_flux = _log_flux(grid, c, n)
    data = {}
    for side in boundary_sides(grid):
        data[side.name] = wall_phase.tangential_derivative(side.points, side.tangent)
    flux = BoundaryFlux(
        bottom=data["bottom"] - log_flux.bottom,
        right=data["right"] - log_flux.right,
        top=data["top"][::-1] - log_flux.top,
        left=data["left"][::-1] - log_flux.left,
    )
    return solve_laplace_neumann(grid, _precompensate(grid, flux))


def stream_function_neumann(grid: Grid2D, centers, windings) -> HarmonicField:
    """Harmonic conjugate of the zero-flux phase mismatch.

    Dirichlet problem with wall trace -sum_l n_l ln|x - x_l|; single-valued,
    so no unwrapping is involved.
    """
    c, n = _center_arrays(centers, windings)
    ii, jj, pts = boundary_path(grid)
    trace = np.zeros(len(pts))
    for cen, nj in zip(c, n):
        trace -= nj * 0.5 * np.log((pts[:, 0] - cen[0]) ** 2 + (pts[:, 1] - cen[1]) ** 2)
    ring = path_to_ring(grid, trace)
    return solve_laplace_dirichlet(grid, ring)


def _integrate_tangential(
    grid: Grid2D, side_data: dict[str, np.ndarray]
) -> tuple[np.ndarray, float]:
    """Integrate per-side tangential data along the wall into a path trace.

    Corner nodes carry one data value per adjoining side; each side is
    integrated with its own endpoint values.  The closure defect (an O(h^2)
    quadrature leftover for compatible data) is distributed linearly so the
    seam at the starting corner is clean.
    """
    pieces = []
    start = 0.0
    sides = {s.name: s for s in boundary_sides(grid)}
    for name in ("bottom", "right", "top", "left"):
        side = sides[name]
        d = side_data[name]
        incr = 0.5 * (d[:-1] + d[1:]) * side.ds
        vals = start + np.concatenate([[0.0], np.cumsum(incr)])
        pieces.append(vals[:-1])
        start = vals[-1]
    trace = np.concatenate(pieces)
    defect = start  # value carried back to the first node
    arclen = np.concatenate([[0.0], np.cumsum(np.ones(len(trace) - 1))])
    trace = trace - defect * arclen / len(trace)
    return trace, defect


def from_tangential_dirichlet(
    grid: Grid2D, centers, windings, wall_phase: BoundaryPhase
) -> HarmonicField:
    """Cross-check builder: integrates the prescribed tangential wall data
    into a trace and solves.  Reproduces ``phase_mismatch_dirichlet`` up to an
    additive constant."""
    c, n = _center_arrays(centers, windings)
    log_flux = _log_flux(grid, c, n)
    per_side = {"bottom": log_flux.bottom, "right": log_flux.right,
                "top": log_flux.top[::-1], "left": log_flux.left[::-1]}
    data = {}
    for side in boundary_sides(grid):
        data[side.name] = (
            wall_phase.tangential_derivative(side.points, side.tangent) - per_side[side.name]
        )
    trace, defect = _integrate_tangential(grid, data)
    if abs(defect) > np.pi:
        raise TraceWindingError(f"integrated wall trace fails to close (jump {defect:.3e})")
    return solve_laplace_dirichlet(grid, path_to_ring(grid, trace))


def from_tangential_neumann(grid: Grid2D, centers, windings) -> HarmonicField:
    """Cross-check builder for the zero-flux case.

    Integrates the tangential data -d/dnu sum_l n_l angle(x - x_l) into a
    trace and solves; reproduces the *negated* zero-flux stream function up
    to an additive constant.
    """
    c, n = _center_arrays(centers, windings)
    angle_flux = _angle_flux(grid, c, n)
    data = {
        "bottom": -angle_flux.bottom,
        "right": -angle_flux.right,
        "top": -angle_flux.top[::-1],
        "left": -angle_flux.left[::-1],
    }
    trace, defect = _integrate_tangential(grid, data)
    if abs(defect) > np.pi:
        raise TraceWindingError(f"integrated wall trace fails to close (jump {defect:.3e})")
    return solve_laplace_dirichlet(grid, path_to_ring(grid, trace))
