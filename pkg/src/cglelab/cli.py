"""Command-line interface: list scenarios, run them, compare runs.

Exit codes: 0 success, 1 numerical abort, 2 configuration error.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .radial import get_profile
from .runner import compare, default_out_root, run_cgle, run_rdl
from .scenarios import (
    ConfigError,
    get_scenario,
    list_scenarios,
    override,
    parse_config,
    validate_config,
)
from .solver import FieldBlowupError


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _load_config(args) -> "ScenarioConfig":
    if args.config:
        config = parse_config(Path(args.config).read_text())
    elif args.scenario:
        config = get_scenario(args.scenario)
    else:
        raise ConfigError("provide a scenario name or --config PATH")
    overrides = {}
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.cadence is not None:
        overrides["cadence"] = args.cadence
    if overrides:
        config = override(config, **overrides)
    validate_config(config)
    return config


def _out_dir(args, config, suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    return default_out_root() / f"{_sanitize(config.name)}-{suffix}"


def _add_run_flags(sub):
    sub.add_argument("scenario", nargs="?", help="catalog scenario name")
    sub.add_argument("--config", help="config file replacing a catalog name")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--t-end", dest="t_end", type=float)
    sub.add_argument("--cadence", type=int)
    sub.add_argument("--paper-scale", action="store_true",
                     help="production resolution (cells = eps/10, tau = 1e-6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgle-lab",
        description="Quantized-vortex dynamics lab on rectangular domains",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    subs.add_parser("list-scenarios", help="print the scenario catalog")

    _add_run_flags(subs.add_parser("run-cgle", help="run the field equation"))
    _add_run_flags(subs.add_parser("run-rdl", help="run the reduced dynamics"))

    cmp_p = subs.add_parser("compare", help="per-vortex discrepancy of two runs")
    cmp_p.add_argument("cgle_dir")
    cmp_p.add_argument("rdl_dir")
    cmp_p.add_argument("--out", help="output file (default: <cgle_dir>/discrepancy.csv)")

    prof_p = subs.add_parser("profile", help="dump the radial core profile")
    prof_p.add_argument("--epsilon", type=float, required=True)
    prof_p.add_argument("--r-max", dest="r_max", type=float, default=2.8284271247461903)
    prof_p.add_argument("--out", help="output CSV (default: stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            catalog = list_scenarios()
            for name, cfg in catalog.items():
                vort = " ".join(f"({x:g},{y:g})x{n:+d}" for x, y, n in cfg.vortices)
                print(f"{name}: bc={cfg.bc} eps={cfg.epsilon:g} "
                      f"mode={cfg.phase_mode.value} t_end={cfg.t_end:g} vortices: {vort}")
            return 0

        if args.command == "run-cgle":
            config = _load_config(args)
            out = _out_dir(args, config, "cgle")
            run = run_cgle(config, out, paper_scale=args.paper_scale)
            print(f"wrote {out} (stop: {run.record.stop_reason})")
            return 0

        if args.command == "run-rdl":
            config = _load_config(args)
            out = _out_dir(args, config, "rdl")
            run = run_rdl(config, out)
            ev = run.trajectory.event
            print(f"wrote {out} (event: {ev.kind} at t = {ev.t_stop:g})")
            return 0

        if args.command == "compare":
            results = compare(args.cgle_dir, args.rdl_dir, args.out)
            for vid, (_, ds) in results.items():
                print(f"vortex {vid}: max d = {ds.max():.6g}, terminal d = {ds[-1]:.6g}")
            return 0

        if args.command == "profile":
            prof = get_profile(args.epsilon, args.r_max)
            lines = ["r,f"] + [f"{_fmt(r)},{_fmt(f)}" for r, f in zip(prof.r, prof.f)]
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).parent.mkdir(parents=True, exist_ok=True)
                Path(args.out).write_text(text)
                print(f"wrote {args.out}")
            else:
                sys.stdout.write(text)
            return 0

        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FieldBlowupError, RuntimeError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
