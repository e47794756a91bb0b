"""Named experiment catalog and flat-text config serialization.

Every entry is a fully parameterized, validated configuration on one of the
rectangular domains.  Desk-scale defaults (epsilon = 1/16, cells of size
epsilon/8, tau = 1e-5) keep runs tractable; production-scale settings are
available through the runner's ``paper_scale`` switch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .field import DIRICHLET, NEUMANN
from .grid import make_grid
from .initial import PhaseMode, VortexSpec, validate_specs

SQUARE = (-1.0, 1.0, -1.0, 1.0)          # domain type used by most cases
SHALLOW = (-1.0, 1.0, -0.65, 0.65)        # flattened variant
WIDE = (-1.6, 1.6, -0.8, 0.8)             # wide variant for ring seeds

DESK_EPSILON = 1.0 / 16.0
DESK_TAU = 1e-5
DESK_CELL_FRACTION = 8.0     # cell size = epsilon / 8
PAPER_CELL_FRACTION = 10.0   # production cell size = epsilon / 10
PAPER_TAU = 1e-6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    domain: tuple[float, float, float, float] = SQUARE
    bc: str = DIRICHLET
    epsilon: float = DESK_EPSILON
    alpha: float = 1.0
    beta: float = 1.0
    tau: float = DESK_TAU
    t_end: float = 0.5
    vortices: tuple[tuple[float, float, int], ...] = ()
    phase_mode: PhaseMode = PhaseMode.MODE0
    cadence: int = 200
    seed_name: str = "default"
    notes: str = ""

    def specs(self) -> list[VortexSpec]:
        return [VortexSpec(x, y, n) for x, y, n in self.vortices]

    def centers(self) -> np.ndarray:
        return np.array([[x, y] for x, y, _ in self.vortices], dtype=float).reshape(-1, 2)

    def windings(self) -> np.ndarray:
        return np.array([n for _, _, n in self.vortices], dtype=int)


def grid_cells(config: ScenarioConfig, paper_scale: bool = False) -> tuple[int, int]:
    """Even cell counts targeting a spacing of epsilon/8 (epsilon/10 at scale)."""
    a, b, c, d = config.domain
    frac = PAPER_CELL_FRACTION if paper_scale else DESK_CELL_FRACTION
    h = config.epsilon / frac

    def even(n):
        return max(8, 2 * int(round(n / 2.0)))

    return even((b - a) / h), even((d - c) / h)


def validate_config(config: ScenarioConfig) -> None:
    """Check a configuration against the preconditions of every module it feeds."""
    a, b, c, d = config.domain
    if not (b > a and d > c):
        raise ConfigError(f"{config.name}: degenerate domain {config.domain}")
    if not 0.0 < config.epsilon < 1.0:
        raise ConfigError(f"{config.name}: epsilon must lie in (0, 1)")
    if config.alpha <= 0 or config.beta <= 0:
        raise ConfigError(f"{config.name}: alpha and beta must be positive")
    if config.tau <= 0 or config.t_end < 0:
        raise ConfigError(f"{config.name}: bad time stepping {config.tau}, {config.t_end}")
    if config.cadence < 1:
        raise ConfigError(f"{config.name}: cadence must be >= 1")
    if config.bc not in (DIRICHLET, NEUMANN):
        raise ConfigError(f"{config.name}: unknown bc {config.bc!r}")
    if config.bc == NEUMANN and config.phase_mode is not PhaseMode.NEUMANN_COMPATIBLE:
        raise ConfigError(f"{config.name}: zero-flux runs need the solved phase shift")
    if config.bc == DIRICHLET and not config.phase_mode.closed_form:
        raise ConfigError(f"{config.name}: wall-value runs need a closed-form shift")
    nx, ny = grid_cells(config)
    grid = make_grid(a, b, c, d, nx, ny)
    try:
        validate_specs(grid, config.specs())
    except ValueError as exc:
        raise ConfigError(f"{config.name}: {exc}") from exc


# ----------------------------------------------------------------------------
# serialization: flat key = value lines with one [vortex] section per vortex

def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def serialize_config(config: ScenarioConfig) -> str:
    lines = [
        f"name = {config.name}",
        f"a = {_fmt(config.domain[0])}",
        f"b = {_fmt(config.domain[1])}",
        f"c = {_fmt(config.domain[2])}",
        f"d = {_fmt(config.domain[3])}",
        f"bc = {config.bc}",
        f"epsilon = {_fmt(config.epsilon)}",
        f"alpha = {_fmt(config.alpha)}",
        f"beta = {_fmt(config.beta)}",
        f"tau = {_fmt(config.tau)}",
        f"t_end = {_fmt(config.t_end)}",
        f"phase_mode = {config.phase_mode.value}",
        f"cadence = {config.cadence}",
        f"seed_name = {config.seed_name}",
        f"notes = {config.notes}",
    ]
    for x, y, n in config.vortices:
        lines += ["[vortex]", f"x = {_fmt(x)}", f"y = {_fmt(y)}", f"winding = {n}"]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ScenarioConfig:
    fields: dict[str, str] = {}
    vortices: list[dict[str, str]] = []
    bucket = fields
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[vortex]":
            vortices.append({})
            bucket = vortices[-1]
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        bucket[key.strip()] = value.strip()

    try:
        config = ScenarioConfig(
            name=fields["name"],
            domain=(
                float(fields["a"]),
                float(fields["b"]),
                float(fields["c"]),
                float(fields["d"]),
            ),
            bc=fields["bc"],
            epsilon=float(fields["epsilon"]),
            alpha=float(fields["alpha"]),
            beta=float(fields["beta"]),
            tau=float(fields["tau"]),
            t_end=float(fields["t_end"]),
            vortices=tuple(
                (float(v["x"]), float(v["y"]), int(v["winding"])) for v in vortices
            ),
            phase_mode=PhaseMode(fields["phase_mode"]),
            cadence=int(fields["cadence"]),
            seed_name=fields.get("seed_name", "default"),
            notes=fields.get("notes", ""),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


# ----------------------------------------------------------------------------
# catalog

_MODES = [PhaseMode.MODE0, PhaseMode.MODE1, PhaseMode.MODE2,
          PhaseMode.MODE3, PhaseMode.MODE4, PhaseMode.MODE5]

ROMAN = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x",
         "xi", "xii", "xiii", "xiv", "xv", "xvi"]

_SQRT3_4 = float(np.sqrt(3.0) / 4.0)
_SQRT3_5 = float(np.sqrt(3.0) / 5.0)


def _dir(name, vortices, mode, domain=SQUARE, t_end=0.5, notes=""):
    return ScenarioConfig(
        name=name, domain=domain, bc=DIRICHLET, vortices=tuple(vortices),
        phase_mode=mode, t_end=t_end, notes=notes,
    )


def _neu(name, vortices, t_end=1.5, notes=""):
    return ScenarioConfig(
        name=name, domain=SQUARE, bc=NEUMANN, vortices=tuple(vortices),
        phase_mode=PhaseMode.NEUMANN_COMPATIBLE, t_end=t_end, notes=notes,
    )


def _ring(m: int, radius: float = 0.5) -> list[tuple[float, float, int]]:
    return [
        (
            radius * float(np.cos(2.0 * np.pi * j / m)),
            radius * float(np.sin(2.0 * np.pi * j / m)),
            1,
        )
        for j in range(1, m + 1)
    ]


def _single_cases() -> list[ScenarioConfig]:
    out = [_dir("dir-single-origin-h0", [(0.0, 0.0, 1)], PhaseMode.MODE0)]
    table = [
        ("i", (0.0, 0.0), PhaseMode.MODE1, SQUARE),
        ("ii", (0.0, 0.0), PhaseMode.MODE2, SQUARE),
        ("iii", (0.0, 0.0), PhaseMode.MODE3, SQUARE),
        ("iv", (0.1, 0.0), PhaseMode.MODE1, SQUARE),
        ("v", (0.1, 0.0), PhaseMode.MODE2, SQUARE),
        ("vi", (0.1, 0.0), PhaseMode.MODE3, SQUARE),
        ("vii", (0.1, 0.0), PhaseMode.MODE4, SQUARE),
        ("viii", (0.1, 0.0), PhaseMode.MODE5, SQUARE),
        ("ix", (0.1, 0.2), PhaseMode.MODE2, SQUARE),
        ("x", (0.1, 0.2), PhaseMode.MODE3, SQUARE),
        ("xi", (0.1, 0.2), PhaseMode.MODE4, SQUARE),
        ("xii", (0.1, 0.2), PhaseMode.MODE5, SQUARE),
        ("xiii", (0.0, 0.0), PhaseMode.MODE1, SHALLOW),
        ("xv", (0.1, 0.2), PhaseMode.MODE3, SHALLOW),
    ]
    for tag, (x, y), mode, dom in table:
        out.append(_dir(f"dir-single-{tag}", [(x, y, 1)], mode, domain=dom))
    return out


def _lattice_cases_dirichlet() -> list[ScenarioConfig]:
    corrected = "first center mirrored to keep the four centers distinct"
    table = {
        "i": ([(0.5, 0.0, 1), (-0.25, _SQRT3_4, 1), (-0.25, -_SQRT3_4, 1)], ""),
        "ii": ([(-0.4, 0.0, 1), (0.0, 0.0, 1), (0.4, 0.0, 1)], ""),
        "iii": ([(0.0, 0.3, 1), (0.15, 0.15, 1), (0.3, 0.0, 1)], ""),
        "iv": ([(0.5, 0.0, -1), (-0.25, _SQRT3_4, 1), (-0.25, -_SQRT3_4, 1)], ""),
        "v": ([(-0.4, 0.0, 1), (0.0, 0.0, -1), (0.4, 0.0, 1)], ""),
        "vi": ([(0.2, 0.3, -1), (-0.3, 0.4, 1), (-0.4, -0.2, 1)], ""),
        "vii": ([(0.5, 0.0, 1), (0.0, 0.5, 1), (-0.5, 0.0, 1), (0.0, -0.5, 1)], ""),
        "viii": ([(0.5, 0.0, 1), (0.0, 0.5, -1), (-0.5, 0.0, 1), (0.0, -0.5, -1)], ""),
        "ix": ([(0.5, 0.0, 1), (0.0, 0.5, -1), (-0.5, 0.0, -1), (0.0, -0.5, 1)], ""),
        "x": ([(0.5, 0.5, 1), (-0.5, 0.5, -1), (-0.5, -0.5, 1), (0.5, -0.5, -1)], ""),
        "xi": ([(0.5, 0.5, 1), (-0.5, 0.5, -1), (-0.5, -0.5, -1), (0.5, -0.5, 1)], ""),
        "xii": ([(-0.4, 0.0, -1), (-0.4 / 3.0, 0.0, 1), (0.4 / 3.0, 0.0, -1), (0.4, 0.0, 1)], corrected),
        "xiii": ([(-0.4, 0.0, 1), (-0.4 / 3.0, 0.0, -1), (0.4 / 3.0, 0.0, -1), (0.4, 0.0, 1)], corrected),
        "xiv": ([(-0.4, 0.0, -1), (-0.4 / 3.0, 0.0, -1), (0.4 / 3.0, 0.0, 1), (0.4, 0.0, 1)], corrected),
        "xv": ([(0.2, 0.3, -1), (-0.3, 0.4, 1), (-0.4, -0.2, -1), (0.3, -0.3, 1)], ""),
    }
    return [
        _dir(f"dir-lattice-{tag}", vort, PhaseMode.MODE0, t_end=1.0, notes=notes)
        for tag, (vort, notes) in table.items()
    ]


def _lattice_cases_neumann() -> list[ScenarioConfig]:
    corrected = "first center mirrored to keep the four centers distinct"
    table = {
        "i": ([(0.4, 0.0, 1), (-0.2, _SQRT3_5, 1), (-0.2, -_SQRT3_5, 1)], ""),
        "ii": ([(-0.4, 0.2, 1), (0.0, 0.2, 1), (0.4, 0.2, 1)], ""),
        "iii": ([(-0.4, 0.0, 1), (0.0, 0.0, 1), (0.4, 0.0, 1)], ""),
        "iv": ([(0.4, 0.0, -1), (-0.2, _SQRT3_5, 1), (-0.2, -_SQRT3_5, 1)], ""),
        "v": ([(-0.4, 0.0, 1), (0.0, 0.0, -1), (0.4, 0.0, 1)], ""),
        "vi": ([(-0.7, 0.0, 1), (0.0, 0.0, -1), (0.7, 0.0, 1)], ""),
        "vii": ([(0.4, 0.0, 1), (0.0, 0.4, 1), (-0.4, 0.0, 1), (0.0, -0.4, 1)], ""),
        "viii": ([(0.4, 0.0, -1), (0.0, 0.4, 1), (-0.4, 0.0, -1), (0.0, -0.4, 1)], ""),
        "ix": ([(0.59, 0.0, -1), (0.0, 0.59, 1), (-0.59, 0.0, -1), (0.0, -0.59, 1)], ""),
        "x": ([(0.7, 0.0, -1), (0.0, 0.7, 1), (-0.7, 0.0, -1), (0.0, -0.7, 1)], ""),
        "xi": ([(0.4, 0.0, 1), (0.0, 0.4, -1), (-0.4, 0.0, -1), (0.0, -0.4, 1)], ""),
        "xii": ([(0.6, 0.0, 1), (0.0, 0.6, -1), (-0.6, 0.0, -1), (0.0, -0.6, 1)], ""),
        "xiii": ([(-0.4, 0.0, -1), (-0.4 / 3.0, 0.0, 1), (0.4 / 3.0, 0.0, -1), (0.4, 0.0, 1)], corrected),
        "xiv": ([(-0.4, 0.0, -1), (-0.4 / 3.0, 0.0, 1), (0.4 / 3.0, 0.0, -1), (0.4, 0.0, 1)], corrected + "; duplicate of xiii in the source table"),
        "xv": ([(-0.6, 0.0, -1), (-0.1, 0.0, 1), (0.1, 0.0, -1), (0.6, 0.0, 1)], ""),
    }
    return [
        _neu(f"neu-lattice-{tag}", vort, t_end=1.0, notes=notes)
        for tag, (vort, notes) in table.items()
    ]


def list_scenarios() -> dict[str, ScenarioConfig]:
    """The full named catalog, keyed by scenario name."""
    out: list[ScenarioConfig] = []
    out += _single_cases()
    for k, mode in enumerate(_MODES):
        out.append(_dir(f"dir-pair-h{k}", [(-0.3, 0.0, 1), (0.3, 0.0, 1)], mode, t_end=0.5))
    for k, mode in enumerate(_MODES):
        out.append(_dir(f"dir-dipole-h{k}", [(-0.3, 0.0, -1), (0.3, 0.0, 1)], mode, t_end=0.3))
    out += _lattice_cases_dirichlet()
    for m in (8, 12, 16, 20):
        out.append(_dir(f"dir-ring-M{m}", _ring(m), PhaseMode.MODE0, t_end=0.3))
        out.append(
            _dir(f"dir-ring-rect-M{m}", _ring(m), PhaseMode.MODE0, domain=WIDE, t_end=0.3)
        )
    out.append(_neu("neu-single-origin", [(0.0, 0.0, 1)], t_end=0.5))
    out.append(_neu("neu-single-(0.1,0)", [(0.1, 0.0, 1)], t_end=2.5))
    out.append(_neu("neu-single-(0.1,0.2)", [(0.1, 0.2, 1)], t_end=2.5))
    for d0 in (0.3, 0.7):
        tag = f"d{d0:.1f}".replace("0.", "0")
        out.append(_neu(f"neu-pair-{tag}", [(-d0, 0.0, 1), (d0, 0.0, 1)], t_end=1.5))
        out.append(_neu(f"neu-dipole-{tag}", [(-d0, 0.0, -1), (d0, 0.0, 1)],
                        t_end=0.3 if d0 == 0.3 else 1.5))
    out += _lattice_cases_neumann()
    catalog = {cfg.name: cfg for cfg in out}
    assert len(catalog) == len(out), "catalog names must be unique"
    return catalog


def get_scenario(name: str) -> ScenarioConfig:
    catalog = list_scenarios()
    if name not in catalog:
        raise ConfigError(f"unknown scenario {name!r}; see list-scenarios")
    return catalog[name]


def override(config: ScenarioConfig, **kwargs) -> ScenarioConfig:
    return replace(config, **kwargs)
