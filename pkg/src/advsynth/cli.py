"""Command line front end: synth, sweep, trials, simulate.

Configs are flat ``key = value`` text files; '#' starts a comment and
unknown or inapplicable keys are rejected with the offending line.  All
randomness flows from one 64-bit seed through numpy's default generator
(PCG64).  Artifacts (stdout JSON, CSV and JSON files) are byte-identical
across repeated runs with the same inputs; timing goes to stderr only.

Exit codes: 0 success, 2 config/usage error, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .continuous import SearchConfig, difficulty, synthesize, synthesize_constrained
from .core import ScenarioError, as_vector
from .discrete import (
    one_step_difficulty,
    synthesize_discrete,
    synthesize_predictive,
)
from .scenarios import (
    build_gridworld,
    build_quadgrid,
    build_unicycle,
    greedy_safe_controller,
    simulate_adversarial,
)
from .core import monitor_trajectory

__all__ = ["main", "main_entry", "ConfigError", "parse_config"]

SCENARIO_NAMES = ("unicycle", "gridworld", "quadgrid")


class ConfigError(Exception):
    """Bad config file, flag value, or request; exits with code 2."""


def _parse_float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("not a number")
    return v


def _parse_int(s: str) -> int:
    return int(s, 10)


def _parse_floats(s: str) -> tuple:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError("expected true/false")


def _parse_scenario(s: str) -> str:
    if s not in SCENARIO_NAMES:
        raise ValueError(f"expected one of {', '.join(SCENARIO_NAMES)}")
    return s


_ALL = frozenset(SCENARIO_NAMES)
_CONT = frozenset(("unicycle", "quadgrid"))

# key -> (parser, scenarios the key applies to)
_KEYS = {
    "scenario": (_parse_scenario, _ALL),
    "goal": (_parse_floats, frozenset(("unicycle", "gridworld"))),
    "obstacle_count": (_parse_int, frozenset(("unicycle",))),
    "kappa": (_parse_float, _CONT),
    "m": (_parse_float, _ALL),
    "tau": (_parse_float, frozenset(("unicycle",))),
    "t_max": (_parse_float, _CONT),
    "horizon_n": (_parse_int, frozenset(("gridworld",))),
    "check_path": (_parse_bool, frozenset(("gridworld",))),
    "budget": (_parse_int, frozenset(("gridworld",))),
    "grid_points": (_parse_int, frozenset(("unicycle",))),
    "refine_iterations": (_parse_int, frozenset(("unicycle",))),
    "step_tolerance": (_parse_float, frozenset(("unicycle",))),
    "seed": (_parse_int, _ALL),
    "synth_period": (_parse_float, _CONT),
    "dt": (_parse_float, _CONT),
    "obstacle_speed": (_parse_float, _CONT),
    "x0": (_parse_floats, _CONT),
    "d_fixed": (_parse_floats, _CONT),
}


@dataclass
class RunConfig:
    scenario: str
    goal: Optional[tuple] = None
    obstacle_count: int = 1
    kappa: float = 10.0
    m: Optional[float] = None
    tau: float = 0.0
    t_max: float = math.inf
    horizon_n: int = 1
    check_path: bool = False
    budget: int = 10_000_000
    grid_points: int = 25
    refine_iterations: int = 40
    step_tolerance: float = 1e-4
    seed: int = 0
    synth_period: float = 0.5
    dt: float = 0.01
    obstacle_speed: float = 1.0
    x0: Optional[tuple] = None
    d_fixed: Optional[tuple] = None
    echo: dict = field(default_factory=dict)


def parse_config(path) -> RunConfig:
    """Parse and validate a flat key = value config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    values: dict = {}
    echo: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        parser, _ = _KEYS[key]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {exc}") from exc
        echo[key] = val

    if "scenario" not in values:
        raise ConfigError(f"{path}: missing required key 'scenario'")
    scenario = values["scenario"]
    for key in values:
        if scenario not in _KEYS[key][1]:
            raise ConfigError(
                f"{path}: key '{key}' does not apply to scenario '{scenario}'"
            )
    return RunConfig(**values, echo=echo)


def _grid_cells(values, what: str) -> tuple:
    cells = []
    for v in values:
        if abs(v - round(v)) > 1e-9:
            raise ConfigError(f"{what} must be integer grid cells, got {v}")
        cells.append(int(round(v)))
    if len(cells) != 2 or not all(0 <= c <= 9 for c in cells):
        raise ConfigError(f"{what} must be a pair of cells in 0..9")
    return tuple(cells)


def make_scenario(cfg: RunConfig):
    if cfg.scenario == "unicycle":
        return build_unicycle(
            goal=cfg.goal if cfg.goal is not None else (0.5, 0.5),
            n_obstacles=cfg.obstacle_count,
            kappa=cfg.kappa,
            floor=cfg.m if cfg.m is not None else -5.0,
            t_max=cfg.t_max,
            tau=cfg.tau,
        )
    if cfg.scenario == "gridworld":
        goal = _grid_cells(cfg.goal if cfg.goal is not None else (7, 9), "goal")
        return build_gridworld(
            goal,
            floor=cfg.m if cfg.m is not None else -15.0,
            horizon=cfg.horizon_n,
        )
    return build_quadgrid(kappa=cfg.kappa, floor=cfg.m if cfg.m is not None else -8.0)


def _search(cfg: RunConfig) -> SearchConfig:
    return SearchConfig(
        grid_points=cfg.grid_points,
        refine_iterations=cfg.refine_iterations,
        step_tolerance=cfg.step_tolerance,
    )


# ---------------------------------------------------------------------------
# deterministic serialization

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _write_csv(path: Path, rows) -> None:
    lines = [",".join(_fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _parse_state(cfg: RunConfig, text: str):
    try:
        values = _parse_floats(text)
    except ValueError as exc:
        raise ConfigError(f"bad --state: {exc}") from exc
    if cfg.scenario == "gridworld":
        return _grid_cells(values, "--state")
    return as_vector(values, "--state")


# ---------------------------------------------------------------------------
# commands

def _synthesis_payload(cfg: RunConfig, scn, x) -> dict:
    if cfg.scenario == "gridworld":
        if cfg.horizon_n > 1:
            res = synthesize_predictive(
                scn, x, n_steps=cfg.horizon_n, check_path=cfg.check_path, budget=cfg.budget
            )
        else:
            res = synthesize_discrete(scn, x)
    elif cfg.scenario == "quadgrid":
        res = synthesize_constrained(scn, x, 0.0, search=_search(cfg))
    else:
        res = synthesize(scn, x, search=_search(cfg))
    return {
        "scenario": cfg.scenario,
        "state": _jsonable(list(x)),
        "d_star": _jsonable(
            list(res.d_star) if not np.isscalar(res.d_star) else res.d_star
        ),
        "difficulty": res.difficulty,
        "in_gamma": res.in_gamma,
        "early_exit": res.early_exit,
        "evaluations": res.evaluations,
        "seed": cfg.seed,
        "config": dict(cfg.echo),
    }


def cmd_synth(cfg: RunConfig, state_text: str, out_dir: Optional[Path]) -> int:
    scn = make_scenario(cfg)
    x = _parse_state(cfg, state_text)
    payload = _synthesis_payload(cfg, scn, x)
    text = _dump_json(payload)
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "synth.json").write_text(text)
    return 0


def _parse_axes(spec_text: str) -> list:
    axes = []
    for chunk in spec_text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 4:
            raise ConfigError(
                f"bad axis '{chunk}': expected component:lo:hi:count"
            )
        try:
            comp = int(parts[0])
            lo, hi = float(parts[1]), float(parts[2])
            count = int(parts[3])
        except ValueError as exc:
            raise ConfigError(f"bad axis '{chunk}': {exc}") from exc
        if count < 1 or hi < lo:
            raise ConfigError(f"bad axis '{chunk}': need count >= 1 and hi >= lo")
        axes.append((comp, lo, hi, count))
    if len(axes) != 2:
        raise ConfigError(
            f"sweep needs exactly 2 axes (got {len(axes)}); "
            "pass --axes component:lo:hi:count,component:lo:hi:count"
        )
    return axes


def _axis_values(lo: float, hi: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([lo])
    return np.linspace(lo, hi, count)


def cmd_sweep(cfg: RunConfig, state_text: str, axes_text: str, out_dir: Path) -> int:
    scn = make_scenario(cfg)
    x = _parse_state(cfg, state_text)
    axes = _parse_axes(axes_text)
    (c1, lo1, hi1, n1), (c2, lo2, hi2, n2) = axes
    a1 = _axis_values(lo1, hi1, n1)
    a2 = _axis_values(lo2, hi2, n2)

    grid_like = cfg.scenario == "gridworld"
    if grid_like:
        if not {c1, c2} == {0, 1}:
            raise ConfigError("gridworld sweeps must cover components 0 and 1")
        cells1 = [_grid_cells((v, 0), "axis value")[0] for v in a1]
        cells2 = [_grid_cells((v, 0), "axis value")[0] for v in a2]
        floor_val = scn.floor
    else:
        p = scn.test_space.dim if hasattr(scn.test_space, "dim") else None
        base = np.array(cfg.d_fixed, dtype=float) if cfg.d_fixed is not None else None
        if base is None:
            if p is None:
                raise ConfigError("this scenario needs d_fixed to anchor unswept components")
            base = np.zeros(p)
        for c in (c1, c2):
            if not 0 <= c < base.size:
                raise ConfigError(f"axis component {c} out of range for test dim {base.size}")
        floor_val = scn.floor

    values = np.zeros((n1, n2))
    for i in range(n1):
        for j in range(n2):
            if grid_like:
                d = [0, 0]
                d[c1], d[c2] = cells1[i], cells2[j]
                values[i, j] = one_step_difficulty(scn, x, tuple(d), floor_val)[0]
            else:
                d = base.copy()
                d[c1], d[c2] = a1[i], a2[j]
                values[i, j] = difficulty(scn, x, d, floor_val)[0]

    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [[""] + [_fmt(v) for v in a2]]
    for i in range(n1):
        rows.append([_fmt(a1[i])] + [_fmt(values[i, j]) for j in range(n2)])
    _write_csv(out_dir / "sweep.csv", rows)

    imin, jmin = np.unravel_index(int(np.argmin(values)), values.shape)
    payload = _synthesis_payload(cfg, scn, x)
    d_star = payload["d_star"]
    overlay = {
        "scenario": cfg.scenario,
        "state": payload["state"],
        "axes": [list(a) for a in axes],
        "d_star": d_star,
        "swept_coordinates": [d_star[c1], d_star[c2]],
        "difficulty": payload["difficulty"],
        "in_gamma": payload["in_gamma"],
        "min_cell": {
            "value": float(values[imin, jmin]),
            "axis_values": [float(a1[imin]), float(a2[jmin])],
            "indices": [int(imin), int(jmin)],
        },
        "floor": floor_val,
        "note": (
            "cell values are exact difficulty evaluations on the axis grid; "
            "the synthesizer may refine between cells, so its difficulty can "
            "undercut the minimum cell by up to one grid step"
        ),
        "seed": cfg.seed,
        "config": dict(cfg.echo),
    }
    text = _dump_json(overlay)
    (out_dir / "sweep_overlay.json").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_trials(cfg: RunConfig, count: int, out_dir: Optional[Path]) -> int:
    if count < 1:
        raise ConfigError("--count must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    rows = []

    if cfg.scenario == "gridworld":
        optimum_rule = "d_star == goal"
        for k in range(count):
            while True:
                x = tuple(int(v) for v in rng.integers(0, 10, size=2))
                goal = tuple(int(v) for v in rng.integers(0, 10, size=2))
                if x != goal:
                    break
            scn = build_gridworld(goal, floor=cfg.m if cfg.m is not None else -15.0)
            res = synthesize_discrete(scn, x)
            rows.append(
                {
                    "trial": k,
                    "state": list(x),
                    "goal": list(goal),
                    "d_star": list(res.d_star),
                    "difficulty": res.difficulty,
                    "in_gamma": res.in_gamma,
                    "optimal": list(res.d_star) == list(goal),
                }
            )
    else:
        scn = make_scenario(cfg)
        floor_val = scn.floor
        optimum_rule = "difficulty == floor"
        with warnings.catch_warnings():
            # random starts occasionally sit inside the goal disc already;
            # that is expected in a batch sweep
            warnings.simplefilter("ignore")
            for k in range(count):
                x = rng.uniform(scn.state_lower, scn.state_upper)
                if cfg.scenario == "quadgrid":
                    res = synthesize_constrained(scn, x, 0.0, search=_search(cfg))
                else:
                    res = synthesize(scn, x, search=_search(cfg))
                rows.append(
                    {
                        "trial": k,
                        "state": [float(v) for v in x],
                        "d_star": [float(v) for v in np.asarray(res.d_star, dtype=float)],
                        "difficulty": res.difficulty,
                        "in_gamma": res.in_gamma,
                        "optimal": res.difficulty == floor_val,
                    }
                )

    elapsed = time.perf_counter() - t0
    # aggregates recomputed from the per-trial rows, never tracked separately
    difficulties = [r["difficulty"] for r in rows]
    summary = {
        "scenario": cfg.scenario,
        "count": len(rows),
        "optimum_rule": optimum_rule,
        "fraction_attaining_optimum": sum(1 for r in rows if r["optimal"]) / len(rows),
        "difficulty_min": min(difficulties),
        "difficulty_max": max(difficulties),
        "difficulty_mean": sum(difficulties) / len(difficulties),
        "per_trial": rows,
        "seed": cfg.seed,
        "config": dict(cfg.echo),
    }
    text = _dump_json(summary)
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "trials.json").write_text(text)
    print(f"trials wall time: {elapsed:.2f} s", file=sys.stderr)
    return 0


_DEFAULT_X0 = {"quadgrid": (0.0, 0.0), "unicycle": (-0.5, -0.5, 0.0)}


def cmd_simulate(cfg: RunConfig, state_text: Optional[str], horizon: float, out_dir: Path) -> int:
    if cfg.scenario == "gridworld":
        raise ConfigError("scenario 'gridworld' does not support simulation")
    scn = make_scenario(cfg)
    if state_text is not None:
        x0 = _parse_state(cfg, state_text)
    elif cfg.x0 is not None:
        x0 = as_vector(cfg.x0, "x0")
    else:
        x0 = np.array(_DEFAULT_X0[cfg.scenario])
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ConfigError("--horizon must be finite and nonnegative")

    t0 = time.perf_counter()
    log = simulate_adversarial(
        scn,
        x0,
        greedy_safe_controller,
        synth_period=cfg.synth_period,
        dt=cfg.dt,
        horizon=horizon,
        obstacle_speed=cfg.obstacle_speed,
    )
    elapsed = time.perf_counter() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    n = log.states.shape[1]
    p = log.obstacles.shape[1]
    header = (
        ["t"]
        + [f"x{i}" for i in range(n)]
        + [f"obs{i}" for i in range(p)]
        + [f"cmd{i}" for i in range(p)]
    )
    rows = [header]
    cmd_idx = 0
    for k, t in enumerate(log.times):
        while cmd_idx + 1 < len(log.commands) and log.commands[cmd_idx + 1][0] <= t:
            cmd_idx += 1
        cmd = log.commands[cmd_idx][2]
        rows.append(
            [_fmt(t)]
            + [_fmt(v) for v in log.states[k]]
            + [_fmt(v) for v in log.obstacles[k]]
            + [_fmt(v) for v in cmd]
        )
    _write_csv(out_dir / "trajectory.csv", rows)

    rows = [["t", "min_barrier"]]
    for k, t in enumerate(log.times):
        rows.append([_fmt(t), _fmt(log.min_barrier[k])])
    _write_csv(out_dir / "min_barrier.csv", rows)

    verdict = monitor_trajectory(
        scn.spec,
        [(float(t), log.states[k]) for k, t in enumerate(log.times)],
        [(float(t), log.obstacles[k]) for k, t in enumerate(log.times)],
    )
    payload = {
        "scenario": cfg.scenario,
        "satisfied": verdict.satisfied,
        "reach_time": verdict.reach_time,
        "min_avoid_value": verdict.min_avoid_value,
        "aborted": log.aborted,
        "samples": int(log.times.size),
        "commands": len(log.commands),
        "horizon": horizon,
        "dt": cfg.dt,
        "synth_period": cfg.synth_period,
        "seed": cfg.seed,
        "config": dict(cfg.echo),
    }
    text = _dump_json(payload)
    (out_dir / "monitor.json").write_text(text)
    sys.stdout.write(text)
    print(f"simulate wall time: {elapsed:.2f} s", file=sys.stderr)
    if log.aborted:
        print("integration aborted on non-finite state; logs are partial", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advsynth",
        description="Adversarial test synthesis for reach-avoid control tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, state_required=False, state=True, out_required=False):
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--out",
            default=None,
            required=out_required,
            help="directory for output artifacts",
        )
        if state:
            p.add_argument(
                "--state",
                required=state_required,
                default=None,
                help="comma-separated state vector",
            )

    p_synth = sub.add_parser("synth", help="synthesize the hardest test at one state")
    common(p_synth, state_required=True)

    p_sweep = sub.add_parser("sweep", help="difficulty landscape over two test components")
    common(p_sweep, state_required=True, out_required=True)
    p_sweep.add_argument(
        "--axes", required=True, help="two specs: component:lo:hi:count,component:lo:hi:count"
    )

    p_trials = sub.add_parser("trials", help="randomized synthesis trials")
    common(p_trials, state=False)
    p_trials.add_argument("--count", type=int, default=100, help="number of trials")

    p_sim = sub.add_parser("simulate", help="closed-loop adversarial simulation")
    common(p_sim, out_required=True)
    p_sim.add_argument("--horizon", type=float, default=20.0, help="run length in seconds")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out_dir = Path(args.out) if args.out is not None else None
        if args.command == "synth":
            return cmd_synth(cfg, args.state, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.state, args.axes, out_dir)
        if args.command == "trials":
            return cmd_trials(cfg, args.count, out_dir)
        return cmd_simulate(cfg, args.state, args.horizon, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:
    sys.exit(main())
