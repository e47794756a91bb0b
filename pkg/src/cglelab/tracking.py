"""Vortex detection, trajectory association, and trajectory comparison.

Detection sums the four wrapped phase differences around every grid cell; a
cell whose plaquette sum is +/-2*pi holds a vortex.  The center is refined
inside the cell by intersecting the bilinear zero level sets of the real and
imaginary parts, falling back to the cell center when that system degenerates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .field import ComplexField
from .grid import Grid2D

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
WINDING_TOL = 1e-6


class MultiChargeCellError(RuntimeError):
    """A cell carries |winding| >= 2 (vortices mid-merge); retry next frame."""

    def __init__(self, cells):
        super().__init__(f"plaquette winding of magnitude >= 2 in cells {cells}")
        self.cells = cells


@dataclass(frozen=True)
class DetectedVortex:
    x: float
    y: float
    winding: int
    cell: tuple[int, int]

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _wrap(delta: np.ndarray) -> np.ndarray:
    return delta - TWO_PI * np.round(delta / TWO_PI)


def _refine(grid: Grid2D, values: np.ndarray, i: int, j: int) -> tuple[float, float]:
    """Sub-cell zero of the bilinear interpolants of Re and Im.

    Newton on the 2x2 bilinear system from the cell midpoint; the result is
    clamped to the cell, and the midpoint is returned if the iteration leaves
    the cell or the Jacobian degenerates.
    """
    corners = values[i : i + 2, j : j + 2]
    re, im = corners.real, corners.imag

    def f(s, t, u):
        return (
            u[0, 0] * (1 - s) * (1 - t)
            + u[1, 0] * s * (1 - t)
            + u[0, 1] * (1 - s) * t
            + u[1, 1] * s * t
        )

    def fs(s, t, u):
        return (u[1, 0] - u[0, 0]) * (1 - t) + (u[1, 1] - u[0, 1]) * t

    def ft(s, t, u):
        return (u[0, 1] - u[0, 0]) * (1 - s) + (u[1, 1] - u[1, 0]) * s

    s, t = 0.5, 0.5
    for _ in range(25):
        r1, r2 = f(s, t, re), f(s, t, im)
        if abs(r1) + abs(r2) < 1e-14 * (np.abs(corners).max() + 1e-300):
            break
        a11, a12 = fs(s, t, re), ft(s, t, re)
        a21, a22 = fs(s, t, im), ft(s, t, im)
        det = a11 * a22 - a12 * a21
        if abs(det) < 1e-30:
            s, t = 0.5, 0.5
            break
        s -= (r1 * a22 - r2 * a12) / det
        t -= (a11 * r2 - a21 * r1) / det
        if not (-0.5 <= s <= 1.5 and -0.5 <= t <= 1.5):
            s, t = 0.5, 0.5
            break
    s = min(max(s, 0.0), 1.0)
    t = min(max(t, 0.0), 1.0)
    return grid.a + (i + s) * grid.hx, grid.c + (j + t) * grid.hy


def detect_vortices(fld: ComplexField, tol: float = WINDING_TOL) -> list[DetectedVortex]:
    """All plaquette-winding detections, ordered by cell index."""
    grid = fld.grid
    phase = np.angle(fld.values)
    d1 = _wrap(phase[1:, :-1] - phase[:-1, :-1])   # bottom edge, +x
    d2 = _wrap(phase[1:, 1:] - phase[1:, :-1])     # right edge, +y
    d3 = _wrap(phase[:-1, 1:] - phase[1:, 1:])     # top edge, -x
    d4 = _wrap(phase[:-1, :-1] - phase[:-1, 1:])   # left edge, -y
    total = d1 + d2 + d3 + d4
    charge = np.round(total / TWO_PI).astype(int)
    charge[np.abs(total - TWO_PI * charge) > tol] = 0

    multi = np.argwhere(np.abs(charge) >= 2)
    if len(multi):
        raise MultiChargeCellError([tuple(ij) for ij in multi])

    found = []
    for i, j in np.argwhere(charge != 0):
        x, y = _refine(grid, fld.values, i, j)
        found.append(DetectedVortex(x, y, int(charge[i, j]), (int(i), int(j))))
    return found


# ----------------------------------------------------------------------------
# association across frames

@dataclass
class Trajectory:
    ident: int
    winding: int
    times: list[float] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    born_at_start: bool = True
    end_kind: str | None = None  # "annihilated" | "exited" | "lost"
    end_time: float | None = None
    partner: int | None = None

    @property
    def alive(self) -> bool:
        return self.end_kind is None

    @property
    def last_point(self) -> np.ndarray:
        return self.points[-1]

    def series(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times), np.asarray(self.points)


@dataclass
class TrajectorySet:
    trajectories: list[Trajectory] = field(default_factory=list)

    def alive(self) -> list[Trajectory]:
        return [tr for tr in self.trajectories if tr.alive]

    def events(self) -> list[tuple[str, float]]:
        return [
            (tr.end_kind, tr.end_time)
            for tr in self.trajectories
            if tr.end_kind is not None
        ]


def track(
    frames: list[tuple[float, list[DetectedVortex]]],
    grid: Grid2D,
    gate_cells: float = 5.0,
    event_cells: float = 3.0,
) -> TrajectorySet:
    """Greedy nearest-neighbor association of detections into trajectories.

    Matching requires equal windings within a gate of ``gate_cells`` cells.
    A disappearing opposite-winding pair within ``event_cells`` cells is
    marked annihilated; a disappearing vortex that close to the wall is
    marked exited.  Near-ties are broken deterministically toward the
    lower-numbered trajectory and logged.
    """
    h = max(grid.hx, grid.hy)
    gate = gate_cells * h
    event_r = event_cells * h
    out = TrajectorySet()
    if not frames:
        return out

    times = [t for t, _ in frames]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("frames must be strictly increasing in time")

    for t, dets in frames:
        active = out.alive()
        pairs = []
        for a_idx, tr in enumerate(active):
            for d_idx, det in enumerate(dets):
                if det.winding != tr.winding:
                    continue
                dist = float(np.linalg.norm(det.center - tr.last_point))
                if dist <= gate:
                    pairs.append((dist, a_idx, d_idx))
        pairs.sort(key=lambda p: (p[0], p[1], p[2]))
        taken_tr: set[int] = set()
        taken_det: set[int] = set()
        for dist, a_idx, d_idx in pairs:
            if a_idx in taken_tr or d_idx in taken_det:
                continue
            rivals = [
                p for p in pairs
                if p[2] == d_idx and p[1] != a_idx and p[1] not in taken_tr
                and p[0] <= dist * 1.1
            ]
            if rivals:
                log.info(
                    "ambiguous association at t=%.6g for detection %d; "
                    "keeping trajectory %d", t, d_idx, active[a_idx].ident,
                )
            tr = active[a_idx]
            tr.times.append(t)
            tr.points.append(dets[d_idx].center)
            taken_tr.add(a_idx)
            taken_det.add(d_idx)

        # unmatched detections found mid-run start new trajectories
        for d_idx, det in enumerate(dets):
            if d_idx in taken_det:
                continue
            tr = Trajectory(
                ident=len(out.trajectories),
                winding=det.winding,
                born_at_start=(t == frames[0][0]),
            )
            tr.times.append(t)
            tr.points.append(det.center)
            out.trajectories.append(tr)

        # unmatched trajectories terminate: annihilation beats exit beats lost
        lost = [active[a] for a in range(len(active)) if a not in taken_tr]
        resolved: set[int] = set()
        for i, tr in enumerate(lost):
            if tr.ident in resolved:
                continue
            partner = None
            for other in lost[i + 1 :]:
                if other.ident in resolved or other.winding != -tr.winding:
                    continue
                if np.linalg.norm(other.last_point - tr.last_point) <= event_r:
                    partner = other
                    break
            if partner is not None:
                for one, two in ((tr, partner), (partner, tr)):
                    one.end_kind = "annihilated"
                    one.end_time = t
                    one.partner = two.ident
                resolved.update((tr.ident, partner.ident))
                continue
            if grid.distance_to_boundary(tr.last_point) <= event_r:
                tr.end_kind = "exited"
            else:
                tr.end_kind = "lost"
            tr.end_time = t
            resolved.add(tr.ident)
    return out


def center_discrepancy(
    traj_a: Trajectory, traj_b,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise center distance on the common time window.

    ``traj_b`` may be a Trajectory or any (times, points) pair; its samples
    are interpolated linearly to the sample times of ``traj_a``.  The series
    is truncated at the earlier termination.
    """
    ta, pa = traj_a.series() if isinstance(traj_a, Trajectory) else traj_a
    tb, pb = traj_b.series() if isinstance(traj_b, Trajectory) else traj_b
    ta, pa = np.asarray(ta, float), np.asarray(pa, float)
    tb, pb = np.asarray(tb, float), np.asarray(pb, float)
    lo = max(ta[0], tb[0])
    hi = min(ta[-1], tb[-1])
    keep = (ta >= lo) & (ta <= hi)
    if not np.any(keep):
        raise ValueError("trajectories share no time window")
    t_common = ta[keep]
    bx = np.interp(t_common, tb, pb[:, 0])
    by = np.interp(t_common, tb, pb[:, 1])
    d = np.hypot(pa[keep, 0] - bx, pa[keep, 1] - by)
    return t_common, d
