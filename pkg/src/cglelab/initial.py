"""Initial-data construction: vortex seeds, phase shifts, and wall data.

The seed field is a product of unit-winding vortex factors

    psi_0(x) = exp(i h(x)) * prod_j f(|x - x_j|) exp(i n_j angle(x - x_j)),

where f is the radial core profile, n_j = +/-1 is the winding, and h is a
harmonic phase shift — one of the closed-form modes for wall-value runs, or a
solved zero-flux-compatible shift for zero-flux runs.  A winding of -1 is
realized as the complex conjugate of the +1 factor at the same offset.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .field import DIRICHLET, NEUMANN, ComplexField
from .grid import Grid2D, boundary_path
from .radial import RadialProfile, get_profile

TWO_PI = 2.0 * np.pi


class PhaseMode(str, enum.Enum):
    """Closed-form harmonic phase shifts, plus the solved zero-flux variant."""

    MODE0 = "mode0"              # h = 0
    MODE1 = "mode1"              # h = x + y
    MODE2 = "mode2"              # h = x - y
    MODE3 = "mode3"              # h = x^2 - y^2
    MODE4 = "mode4"              # h = x^2 - y^2 + 2xy
    MODE5 = "mode5"              # h = x^2 - y^2 - 2xy
    NEUMANN_COMPATIBLE = "neumann-compatible"

    @property
    def closed_form(self) -> bool:
        return self is not PhaseMode.NEUMANN_COMPATIBLE

    def values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self is PhaseMode.MODE0:
            return np.zeros_like(np.asarray(x, dtype=float))
        if self is PhaseMode.MODE1:
            return x + y
        if self is PhaseMode.MODE2:
            return x - y
        if self is PhaseMode.MODE3:
            return x**2 - y**2
        if self is PhaseMode.MODE4:
            return x**2 - y**2 + 2.0 * x * y
        if self is PhaseMode.MODE5:
            return x**2 - y**2 - 2.0 * x * y
        raise ValueError("the solved zero-flux shift has no closed form")

    def gradient(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        zero = np.zeros_like(np.asarray(x, dtype=float))
        if self is PhaseMode.MODE0:
            return zero, zero.copy()
        if self is PhaseMode.MODE1:
            return zero + 1.0, zero + 1.0
        if self is PhaseMode.MODE2:
            return zero + 1.0, zero - 1.0
        if self is PhaseMode.MODE3:
            return 2.0 * x + zero, -2.0 * y + zero
        if self is PhaseMode.MODE4:
            return 2.0 * x + 2.0 * y, -2.0 * y + 2.0 * x
        if self is PhaseMode.MODE5:
            return 2.0 * x - 2.0 * y, -2.0 * y - 2.0 * x
        raise ValueError("the solved zero-flux shift has no closed form")


@dataclass(frozen=True)
class VortexSpec:
    """One seed vortex: center coordinates and winding +/-1."""

    x: float
    y: float
    winding: int

    def __post_init__(self):
        if self.winding not in (-1, 1):
            raise ValueError(f"winding must be +1 or -1, got {self.winding}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)


def specs_to_arrays(specs: list[VortexSpec]) -> tuple[np.ndarray, np.ndarray]:
    centers = np.array([[s.x, s.y] for s in specs], dtype=float).reshape(-1, 2)
    windings = np.array([s.winding for s in specs], dtype=int)
    return centers, windings


def validate_specs(grid: Grid2D, specs: list[VortexSpec]) -> None:
    if not specs:
        return
    centers, _ = specs_to_arrays(specs)
    inside = grid.contains(centers)
    if not np.all(inside):
        bad = centers[~inside]
        raise ValueError(f"vortex centers must be strictly interior, got {bad.tolist()}")
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            if np.allclose(centers[i], centers[j], atol=0.0, rtol=0.0):
                raise ValueError(f"vortex centers {i} and {j} coincide at {centers[i].tolist()}")


def polar_angle(x: float, y: float) -> float:
    """Angle of (x, y) measured from the positive x-axis, in [0, 2*pi)."""
    if x == 0.0 and y == 0.0:
        raise ValueError("polar angle undefined at the origin")
    ang = np.arctan2(y, x)
    if ang < 0.0:
        ang += TWO_PI
    return float(ang)


def _angle_grid(dx: np.ndarray, dy: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Vectorized vortex angle; a node landing on the center is nudged off it."""
    on_center = (dx == 0.0) & (dy == 0.0)
    if np.any(on_center):
        dx = np.where(on_center, 1e-14 * hx, dx)
        dy = np.where(on_center, 1e-14 * hy, dy)
    return np.arctan2(dy, dx)


def unwrapped_angles(path_pts: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Vortex angle sampled along a polyline, unwrapped to a continuous branch.

    The first sample carries the principal value in [0, 2*pi); consecutive
    increments are folded into (-pi, pi], so walking once around a closed loop
    that encloses ``center`` accumulates exactly one turn.
    """
    raw = np.arctan2(path_pts[:, 1] - center[1], path_pts[:, 0] - center[0])
    unwrapped = np.unwrap(raw)
    return unwrapped + (raw[0] % TWO_PI) - unwrapped[0]


@dataclass(frozen=True)
class BoundaryPhase:
    """Phase of the wall data: shift mode plus anchored vortex angles.

    Describes omega with g = exp(i*omega) on the wall: omega(x) = h(x) +
    sum_j n_j * angle(x - anchor_j).  Anchors stay at the seed positions while
    the dynamic centers move.
    """

    mode: PhaseMode
    anchors: np.ndarray
    windings: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "anchors", np.asarray(self.anchors, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "windings", np.asarray(self.windings, dtype=int))
        if not self.mode.closed_form:
            raise ValueError("wall phase requires a closed-form shift mode")
        if len(self.anchors) != len(self.windings):
            raise ValueError("anchors and windings must have equal length")

    @property
    def total_winding(self) -> int:
        return int(self.windings.sum())

    def values_along(self, path_pts: np.ndarray) -> np.ndarray:
        """omega on a polyline, with every vortex angle unwrapped along it."""
        vals = self.mode.values(path_pts[:, 0], path_pts[:, 1]).astype(float)
        for center, n in zip(self.anchors, self.windings):
            vals = vals + n * unwrapped_angles(path_pts, center)
        return vals

    def tangential_derivative(self, pts: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        """d(omega)/ds along a given unit tangent, evaluated analytically."""
        gx, gy = self.mode.gradient(pts[:, 0], pts[:, 1])
        out = gx * tangent[0] + gy * tangent[1]
        for center, n in zip(self.anchors, self.windings):
            dx = pts[:, 0] - center[0]
            dy = pts[:, 1] - center[1]
            r2 = dx**2 + dy**2
            # grad angle = (-dy, dx) / r^2
            out = out + n * (-dy * tangent[0] + dx * tangent[1]) / r2
        return out


def compose_initial_data(
    grid: Grid2D,
    specs: list[VortexSpec],
    mode: PhaseMode,
    epsilon: float,
    profile: RadialProfile | None = None,
    shift_field: np.ndarray | None = None,
) -> ComplexField:
    """Evaluate the seed field at every node.

    ``shift_field`` overrides the phase shift with nodal values (used for the
    solved zero-flux shift); otherwise closed-form modes are evaluated
    directly and NEUMANN_COMPATIBLE triggers a harmonic solve on this grid.
    """
    validate_specs(grid, specs)
    if profile is None:
        profile = get_profile(epsilon, grid.diameter)
    X, Y = grid.mesh()

    if shift_field is not None:
        h_vals = np.asarray(shift_field, dtype=float)
        if h_vals.shape != grid.shape:
            raise ValueError("shift_field shape does not match the grid")
        bc = NEUMANN if mode is PhaseMode.NEUMANN_COMPATIBLE else DIRICHLET
    elif mode is PhaseMode.NEUMANN_COMPATIBLE:
        h_vals = neumann_phase_shift(grid, specs).values
        bc = NEUMANN
    else:
        h_vals = mode.values(X, Y)
        bc = DIRICHLET

    values = np.exp(1j * h_vals).astype(complex)
    for spec in specs:
        dx = X - spec.x
        dy = Y - spec.y
        ang = _angle_grid(dx, dy, grid.hx, grid.hy)
        factor = profile(np.hypot(dx, dy)) * np.exp(1j * ang)
        if spec.winding < 0:
            factor = np.conj(factor)
        values = values * factor
    return ComplexField(grid, values, bc)


def dirichlet_boundary_values(
    grid: Grid2D, specs: list[VortexSpec], mode: PhaseMode
) -> np.ndarray:
    """Unit-modulus wall data g = exp(i*omega) as a full nodal array.

    Only the boundary ring is consumed by the steppers; interior nodes carry
    the same formula for convenience.
    """
    if not mode.closed_form:
        raise ValueError("wall values require a closed-form shift mode")
    validate_specs(grid, specs)
    X, Y = grid.mesh()
    phase = mode.values(X, Y).astype(float)
    for spec in specs:
        dx = X - spec.x
        dy = Y - spec.y
        phase = phase + spec.winding * _angle_grid(dx, dy, grid.hx, grid.hy)
    return np.exp(1j * phase)


def neumann_phase_shift(grid: Grid2D, specs: list[VortexSpec]):
    """Harmonic shift h_n cancelling the vortex-angle flux through the walls.

    Solves the zero-flux-compatible phase correction at the seed positions;
    the returned HarmonicField is zero-mean.
    """
    from .harmonic import phase_mismatch_neumann  # local import breaks the cycle

    validate_specs(grid, specs)
    centers, windings = specs_to_arrays(specs)
    return phase_mismatch_neumann(grid, centers, windings)


def wall_phase_for(specs: list[VortexSpec], mode: PhaseMode) -> BoundaryPhase:
    centers, windings = specs_to_arrays(specs)
    return BoundaryPhase(mode=mode, anchors=centers, windings=windings)
