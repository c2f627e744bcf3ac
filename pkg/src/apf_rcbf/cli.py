"""Command-line front end: simulate configured controllers or run the suites.

``apf-rcbf run <config>`` rolls out every controller named in the config,
writing one trajectory CSV per controller plus ``metrics.json`` and
``report.txt`` into the output directory.  ``apf-rcbf verify <config>
[--suite NAME]`` runs the numerical property suites and reports max observed
errors against their tolerances.

Exit codes: 0 success; 1 a simulation crashed into an obstacle (run) or a
suite failed (verify); 2 unreadable/invalid configuration; 3 the scenario
violates its invariants (each violation is listed).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .clf import SigmaSelector
from .errors import ConfigError, ScenarioValidationError
from .rcbf import GammaSelector
from .scenario import Scenario, load_scenario
from .simulate import (ControllerSpec, SimConfig, metrics, simulate,
                       write_trajectory_csv)
from .verify import SUITE_NAMES, run_suites

_RUN_KEYS = {"scenario_path", "controllers", "sim", "x0", "output_dir", "seed"}
_CONTROLLER_KEYS = {"name", "kind", "sigma", "gamma"}
_SIM_KEYS = {"dt", "t_max", "goal_tolerance", "integrator"}


@dataclass(frozen=True)
class RunConfig:
    scenario_path: Path
    controllers: tuple  # of (name, ControllerSpec)
    sim: SimConfig
    x0: np.ndarray
    output_dir: Path
    seed: int


def _data_path(name: str):
    candidate = resources.files("apf_rcbf").joinpath("data", name)
    return Path(str(candidate))


def resolve_config_path(arg: str) -> Path:
    """The given path, or the bundled config of that name."""
    path = Path(arg)
    if path.exists():
        return path
    if str(path) == path.name:  # bare name: try the bundled configs
        bundled = _data_path(path.name)
        if bundled.exists():
            return bundled
    raise ConfigError(f"config file not found: {arg}")


def _parse_table(data, what: str):
    if not isinstance(data, dict) or set(data) != {"x", "y"}:
        raise ConfigError(f"{what} table must be an object with 'x' and 'y' arrays")
    return data["x"], data["y"]


def parse_sigma(data) -> SigmaSelector:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("sigma selector must be an object with a 'kind'")
    kind = data["kind"]
    extra = set(data) - {"kind", "coef", "table"}
    if extra:
        raise ConfigError(f"unknown sigma selector key(s): {sorted(extra)}")
    try:
        if kind == "grad_norm_squared":
            return SigmaSelector.grad_norm_squared()
        if kind in ("scaled_value", "scaled_norm"):
            if "coef" not in data:
                raise ConfigError(f"sigma selector {kind!r} requires 'coef'")
            return SigmaSelector(kind, coefficient=data["coef"])
        if kind == "custom":
            if "table" not in data:
                raise ConfigError("custom sigma selector requires a table")
            xs, ys = _parse_table(data["table"], "sigma")
            return SigmaSelector.custom(xs, ys)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown sigma selector kind: {kind!r}")


def parse_gamma(data) -> GammaSelector:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("gamma selector must be an object with a 'kind'")
    kind = data["kind"]
    extra = set(data) - {"kind", "lambda", "table"}
    if extra:
        raise ConfigError(f"unknown gamma selector key(s): {sorted(extra)}")
    try:
        if kind == "zero":
            return GammaSelector.zero()
        if kind == "scaled_special":
            if "lambda" not in data:
                raise ConfigError("scaled_special gamma selector requires 'lambda'")
            return GammaSelector.scaled_special(data["lambda"])
        if kind == "custom":
            if "table" not in data:
                raise ConfigError("custom gamma selector requires a table")
            xs, ys = _parse_table(data["table"], "gamma")
            return GammaSelector.custom(xs, ys)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown gamma selector kind: {kind!r}")


def parse_controller(entry) -> tuple:
    if not isinstance(entry, dict):
        raise ConfigError("controller entries must be objects")
    unknown = set(entry) - _CONTROLLER_KEYS
    if unknown:
        raise ConfigError(f"unknown controller key(s): {sorted(unknown)}")
    if "name" not in entry or "kind" not in entry:
        raise ConfigError("controller entries require 'name' and 'kind'")
    sigma = parse_sigma(entry["sigma"]) if "sigma" in entry else None
    gamma = parse_gamma(entry["gamma"]) if "gamma" in entry else None
    try:
        spec = ControllerSpec(entry["kind"], sigma_sel=sigma, gamma_sel=gamma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return str(entry["name"]), spec


def load_run_config(path: Path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    for key in ("scenario_path", "controllers", "x0"):
        if key not in data:
            raise ConfigError(f"config key {key!r} is required")

    controllers = data["controllers"]
    if not isinstance(controllers, list) or not controllers:
        raise ConfigError("no controllers configured")
    parsed = tuple(parse_controller(entry) for entry in controllers)
    names = [name for name, _ in parsed]
    if len(set(names)) != len(names):
        raise ConfigError(f"controller names must be unique, got {names}")

    sim_data = data.get("sim", {})
    if not isinstance(sim_data, dict):
        raise ConfigError("'sim' must be an object")
    unknown = set(sim_data) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown sim key(s): {sorted(unknown)}")
    try:
        sim = SimConfig(**sim_data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sim config: {exc}") from exc

    x0 = np.asarray(data["x0"], dtype=np.float64)
    if x0.shape != (2,) or not np.all(np.isfinite(x0)):
        raise ConfigError(f"x0 must be a finite 2-vector, got {data['x0']!r}")

    scenario_path = Path(str(data["scenario_path"]))
    if not scenario_path.is_absolute():
        local = path.parent / scenario_path
        if local.exists():
            scenario_path = local
        else:
            bundled = _data_path(scenario_path.name)
            if bundled.exists():
                scenario_path = bundled
            else:
                raise ConfigError(f"scenario file not found: {data['scenario_path']}")
    elif not scenario_path.exists():
        raise ConfigError(f"scenario file not found: {data['scenario_path']}")

    return RunConfig(
        scenario_path=scenario_path,
        controllers=parsed,
        sim=sim,
        x0=x0,
        output_dir=Path(str(data.get("output_dir", "apf-rcbf-out"))),
        seed=int(data.get("seed", 0)),
    )


def _load_scenario_checked(path: Path) -> Scenario:
    try:
        return load_scenario(path)
    except ScenarioValidationError:
        raise
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load scenario: {exc}") from exc


def _jsonable_metrics(m) -> dict:
    def _num(v):
        if v is None or not math.isfinite(v):
            return None
        return v
    return {
        "path_length": _num(m.path_length),
        "min_clearance": _num(m.min_clearance),
        "time_to_goal": _num(m.time_to_goal),
        "oscillation": _num(m.oscillation),
    }


def cmd_run(args) -> int:
    config_path = resolve_config_path(args.config)
    cfg = load_run_config(config_path)
    scenario = _load_scenario_checked(cfg.scenario_path)
    out_dir = Path(args.output_dir) if args.output_dir else cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    for name, spec in cfg.controllers:
        try:
            tr = simulate(scenario, spec, cfg.sim, cfg.x0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        write_trajectory_csv(tr, out_dir / f"{name}.csv")
        results.append((name, tr, metrics(tr)))

    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump({name: _jsonable_metrics(m) for name, _, m in results}, fh, indent=2)
        fh.write("\n")

    lines = [f"scenario: {cfg.scenario_path}",
             f"x0: [{cfg.x0[0]:g}, {cfg.x0[1]:g}]   dt: {cfg.sim.dt:g}   "
             f"integrator: {cfg.sim.integrator}   t_max: {cfg.sim.t_max:g}",
             ""]
    lines.append(f"{'controller':<16} {'terminal':<14} {'t_goal':>8} {'path_len':>9} "
                 f"{'min_clear':>10} {'oscillation':>12}")
    for name, tr, m in results:
        t_goal = f"{m.time_to_goal:.3f}" if m.time_to_goal is not None else "-"
        min_clear = f"{m.min_clearance:.4f}" if math.isfinite(m.min_clearance) else "-"
        lines.append(f"{name:<16} {tr.terminal:<14} {t_goal:>8} {m.path_length:>9.4f} "
                     f"{min_clear:>10} {m.oscillation:>12.4f}")
    report = "\n".join(lines) + "\n"
    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(report)
    sys.stdout.write(report)
    sys.stdout.write(f"\nwrote {len(results)} trajectories to {out_dir}\n")

    if any(tr.terminal == "domain_error" for _, tr, _ in results):
        return 1
    return 0


def cmd_verify(args) -> int:
    config_path = resolve_config_path(args.config)
    cfg = load_run_config(config_path)
    scenario = _load_scenario_checked(cfg.scenario_path)
    seed = args.seed if args.seed is not None else cfg.seed
    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    results = run_suites(scenario, names, seed=seed)
    for res in results:
        for line in res.lines:
            sys.stdout.write(line + "\n")
        sys.stderr.write(f"[{res.name}] elapsed {res.elapsed:.2f} s\n")
    return 0 if all(res.passed for res in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apf-rcbf",
        description="Potential-field navigation with barrier-filtered controllers: "
                    "simulate configured controllers or verify the numerical properties.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate every configured controller")
    p_run.add_argument("config", help="run config JSON (or the name of a bundled one)")
    p_run.add_argument("--output-dir", default=None, help="override the config's output_dir")
    p_run.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the numerical property suites")
    p_ver.add_argument("config", help="run config JSON (or the name of a bundled one)")
    p_ver.add_argument("--suite", choices=SUITE_NAMES + ("all",), default="all")
    p_ver.add_argument("--output-dir", default=None, help=argparse.SUPPRESS)
    p_ver.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except ScenarioValidationError as exc:
        sys.stderr.write("invalid scenario:\n")
        for violation in exc.violations:
            sys.stderr.write(f"  - {violation}\n")
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
