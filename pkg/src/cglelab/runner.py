"""Batch execution of catalog scenarios and emission of data files.

Every run owns one output directory containing:

* ``run.cfg``          -- the configuration (scenario identity; no paths)
* ``trajectory.csv``   -- columns t, vortex_id, x, y, winding
* ``energy.csv``       -- columns t, E_total, E_kin, E_int (field runs only)
* ``status.txt``       -- stop reason / event record
* ``snapshot_*.txt``   -- plain-text |psi| matrices, with gnuplot companions

All floats are written with 17 significant digits; rows carry no wall-clock
content, so re-running a scenario reproduces the files byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import DIRICHLET, NEUMANN, ComplexField
from .grid import Grid2D, make_grid
from .initial import (
    PhaseMode,
    compose_initial_data,
    dirichlet_boundary_values,
    wall_phase_for,
)
from .radial import get_profile
from .rdl import RDLState, RDLTrajectory, StopEvent, integrate_rdl
from .scenarios import (
    PAPER_TAU,
    ScenarioConfig,
    grid_cells,
    serialize_config,
    validate_config,
)
from .solver import EvolutionRecord, SolverParams, evolve
from .tracking import Trajectory, TrajectorySet, center_discrepancy, track

OUT_ENV = "CGLE_LAB_OUT"


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "cgle-lab-out"))


@dataclass
class SteadyStateCriterion:
    """Steady state means the max-norm change rate stays below ``threshold``
    for at least ``window`` time units."""

    threshold: float = 1e-6
    window: float = 0.01

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        self._prev_t: float | None = None
        self._prev_values: np.ndarray | None = None
        self._calm_since: float | None = None
        self.fired_at: float | None = None

    def __call__(self, step: int, t: float, fld: ComplexField) -> bool:
        if self._prev_values is not None and t > self._prev_t:
            rate = float(np.abs(fld.values - self._prev_values).max()) / (t - self._prev_t)
            if rate < self.threshold:
                if self._calm_since is None:
                    self._calm_since = self._prev_t
                if t - self._calm_since >= self.window:
                    self.fired_at = t
                    return True
            else:
                self._calm_since = None
        self._prev_t = t
        self._prev_values = fld.values
        return False


def build_grid(config: ScenarioConfig, paper_scale: bool = False) -> Grid2D:
    nx, ny = grid_cells(config, paper_scale)
    a, b, c, d = config.domain
    return make_grid(a, b, c, d, nx, ny)


def solver_params(config: ScenarioConfig, paper_scale: bool = False) -> SolverParams:
    tau = PAPER_TAU if paper_scale else config.tau
    return SolverParams(
        epsilon=config.epsilon,
        alpha=config.alpha,
        beta=config.beta,
        tau=tau,
        t_end=config.t_end,
        bc=config.bc,
    )


# ----------------------------------------------------------------------------
# file helpers

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_trajectories(path: Path, rows: list[tuple[float, int, float, float, int]]) -> None:
    rows = sorted(rows, key=lambda r: (r[0], r[1]))
    lines = ["t,vortex_id,x,y,winding"]
    for t, vid, x, y, n in rows:
        lines.append(f"{_fmt(t)},{vid},{_fmt(x)},{_fmt(y)},{n}")
    _write(path, "\n".join(lines) + "\n")


def read_trajectories(path: Path) -> dict[int, tuple[np.ndarray, np.ndarray, int]]:
    """Per-vortex (times, points, winding), keyed by vortex id."""
    series: dict[int, list[tuple[float, float, float, int]]] = {}
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("t,vortex_id"):
            raise ValueError(f"{path} is not a trajectory file")
        for line in fh:
            t, vid, x, y, n = line.strip().split(",")
            series.setdefault(int(vid), []).append((float(t), float(x), float(y), int(n)))
    out = {}
    for vid, rows in series.items():
        rows.sort(key=lambda r: r[0])
        arr = np.array([(t, x, y) for t, x, y, _ in rows])
        out[vid] = (arr[:, 0], arr[:, 1:3], rows[0][3])
    return out


def write_energies(path: Path, record: EvolutionRecord) -> None:
    lines = ["t,E_total,E_kin,E_int"]
    for t, en in zip(record.times, record.energies):
        lines.append(f"{_fmt(t)},{_fmt(en.total)},{_fmt(en.kinetic)},{_fmt(en.interaction)}")
    _write(path, "\n".join(lines) + "\n")


def write_snapshot(directory: Path, index: int, t: float, amplitude: np.ndarray, grid: Grid2D) -> None:
    mat = directory / f"snapshot_{index:04d}.txt"
    lines = [f"# t = {_fmt(t)}", f"# rows: j = 0..{grid.ny} (y), cols: i = 0..{grid.nx} (x)"]
    for j in range(grid.ny + 1):
        lines.append(" ".join(_fmt(amplitude[i, j]) for i in range(grid.nx + 1)))
    _write(mat, "\n".join(lines) + "\n")

    # gnuplot 'splot' companion: x y z triples in blocks of constant x
    gp = directory / f"snapshot_{index:04d}.gnuplot.dat"
    blocks = [f"# t = {_fmt(t)}"]
    for i in range(grid.nx + 1):
        for j in range(grid.ny + 1):
            blocks.append(f"{_fmt(grid.x[i])} {_fmt(grid.y[j])} {_fmt(amplitude[i, j])}")
        blocks.append("")
    _write(gp, "\n".join(blocks) + "\n")


# ----------------------------------------------------------------------------
# runs

@dataclass
class CgleRun:
    config: ScenarioConfig
    out_dir: Path
    record: EvolutionRecord
    trajectories: TrajectorySet


@dataclass
class RdlRun:
    config: ScenarioConfig
    out_dir: Path
    trajectory: RDLTrajectory


def run_cgle(
    config: ScenarioConfig,
    out_dir: Path | str,
    paper_scale: bool = False,
    snapshot_count: int = 4,
    steady: SteadyStateCriterion | None = None,
) -> CgleRun:
    """Evolve the field equation for one scenario and write its artifacts."""
    validate_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir / "run.cfg", serialize_config(config))

    grid = build_grid(config, paper_scale)
    params = solver_params(config, paper_scale)
    profile = get_profile(config.epsilon, grid.diameter)
    specs = config.specs()
    fld = compose_initial_data(grid, specs, config.phase_mode, config.epsilon, profile=profile)

    g = None
    if config.bc == DIRICHLET:
        g = dirichlet_boundary_values(grid, specs, config.phase_mode)
        vals = fld.values.copy()
        vals[0, :], vals[-1, :] = g[0, :], g[-1, :]
        vals[:, 0], vals[:, -1] = g[:, 0], g[:, -1]
        fld = fld.with_values(vals)

    n_steps = int(round(params.t_end / params.tau)) if params.t_end > 0 else 0
    n_samples = max(1, n_steps // config.cadence)
    snap_every = max(1, n_samples // max(1, snapshot_count))
    steady = steady if steady is not None else SteadyStateCriterion()

    record = evolve(
        fld,
        params,
        g=g,
        sample_every=config.cadence,
        detect=True,
        snapshot_every=snap_every,
        on_sample=steady,
    )
    if record.stop_reason == "early_stop":
        record.stop_reason = "steady"

    trajset = track(record.frames, grid)
    rows = []
    for tr in trajset.trajectories:
        for t, p in zip(tr.times, tr.points):
            rows.append((t, tr.ident, float(p[0]), float(p[1]), tr.winding))
    write_trajectories(out_dir / "trajectory.csv", rows)
    write_energies(out_dir / "energy.csv", record)
    for k, (t, amp) in enumerate(record.snapshots):
        write_snapshot(out_dir, k, t, amp, grid)

    status = [
        f"scenario = {config.name}",
        f"stop = {record.stop_reason}",
        f"steps = {record.steps_taken}",
        f"samples = {len(record.times)}",
    ]
    if steady.fired_at is not None:
        status.append(f"steady_at = {_fmt(steady.fired_at)}")
    events = [f"{kind}@{_fmt(t)}" for kind, t in trajset.events()]
    status.append("tracker_events = " + (";".join(events) if events else "none"))
    _write(out_dir / "status.txt", "\n".join(status) + "\n")
    return CgleRun(config, out_dir, record, trajset)


def run_rdl(config: ScenarioConfig, out_dir: Path | str, aux_cells: int = 256) -> RdlRun:
    """Integrate the reduced dynamics for one scenario and write its artifacts."""
    validate_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir / "run.cfg", serialize_config(config))

    state0 = RDLState(
        0.0, config.centers(), config.windings(), alpha=config.alpha, beta=config.beta
    )
    wall_phase = None
    if config.bc == DIRICHLET:
        wall_phase = wall_phase_for(config.specs(), config.phase_mode)
    traj = integrate_rdl(
        state0,
        config.bc,
        config.t_end,
        config.domain,
        wall_phase=wall_phase,
        aux_cells=aux_cells,
        sample_dt=config.tau * config.cadence,
    )

    rows = []
    for k, t in enumerate(traj.times):
        for j in range(len(traj.windings)):
            rows.append(
                (float(t), j, float(traj.centers[k, j, 0]), float(traj.centers[k, j, 1]),
                 int(traj.windings[j]))
            )
    write_trajectories(out_dir / "trajectory.csv", rows)
    ev = traj.event
    _write(
        out_dir / "event.txt",
        "\n".join(
            [
                f"scenario = {config.name}",
                f"kind = {ev.kind}",
                f"t_stop = {_fmt(ev.t_stop)}",
                "indices = " + " ".join(str(i) for i in ev.indices),
            ]
        )
        + "\n",
    )
    return RdlRun(config, out_dir, traj)


# ----------------------------------------------------------------------------
# comparison

def _scenario_name(run_dir: Path) -> str:
    for line in (run_dir / "run.cfg").read_text().splitlines():
        if line.startswith("name = "):
            return line.split(" = ", 1)[1]
    raise ValueError(f"{run_dir} has no scenario name")


def compare(
    cgle_dir: Path | str, rdl_dir: Path | str, out_path: Path | str | None = None
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per-vortex center discrepancy between a field run and a reduced run.

    Vortices are matched by winding and initial proximity.  Writes one
    structured file with per-vortex series plus max/terminal summaries and
    returns the series keyed by the reduced run's vortex ids.
    """
    cgle_dir, rdl_dir = Path(cgle_dir), Path(rdl_dir)
    name_a, name_b = _scenario_name(cgle_dir), _scenario_name(rdl_dir)
    if name_a != name_b:
        raise ValueError(f"scenario mismatch: {name_a!r} vs {name_b!r}")

    cgle = read_trajectories(cgle_dir / "trajectory.csv")
    rdl = read_trajectories(rdl_dir / "trajectory.csv")

    results: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    used: set[int] = set()
    for vid in sorted(rdl):
        t_r, p_r, n_r = rdl[vid]
        best, best_d = None, np.inf
        for cid in sorted(cgle):
            if cid in used:
                continue
            t_c, p_c, n_c = cgle[cid]
            if n_c != n_r:
                continue
            d0 = float(np.linalg.norm(p_c[0] - p_r[0]))
            if d0 < best_d:
                best, best_d = cid, d0
        if best is None:
            raise ValueError(f"no field-run match for reduced vortex {vid}")
        used.add(best)
        t_c, p_c, _ = cgle[best]
        results[vid] = center_discrepancy((t_c, p_c), (t_r, p_r))

    lines = [f"# scenario = {name_a}"]
    for vid, (ts, ds) in results.items():
        lines.append(
            f"# vortex {vid}: max = {_fmt(ds.max())}, terminal = {_fmt(ds[-1])}"
        )
    lines.append("t,vortex_id,d")
    flat = []
    for vid, (ts, ds) in results.items():
        for t, dd in zip(ts, ds):
            flat.append((float(t), vid, float(dd)))
    for t, vid, dd in sorted(flat, key=lambda r: (r[0], r[1])):
        lines.append(f"{_fmt(t)},{vid},{_fmt(dd)}")
    if out_path is None:
        out_path = cgle_dir / "discrepancy.csv"
    _write(Path(out_path), "\n".join(lines) + "\n")
    return results
