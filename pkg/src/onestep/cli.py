"""Command-line front end.

Subcommands: ``run``, ``verify``, ``reproduce`` and ``gap-scaling``. Exit codes
are 0 on success, 1 on a computation or invariant failure and 2 on a usage
or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from onestep import bounds, master, ssa, verify
from onestep.model import (
    ModelError,
    OneStepModel,
    build_sis_model,
    build_voter_model,
    flip_states,
    load_model,
    model_to_dict,
)
from onestep.ode import IntegrationError, IntegratorConfig
from onestep.output import write_csv, write_json, versions

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SOLVERS = ("master", "bounds", "ssa", "variants")
DEFAULT_Q = (0.5, 1.0, 1.5, 2.0)
DEFAULT_SEED = 20240501
DEFAULT_RUNS = 10_000
DEFAULT_GRID = 501


class UsageError(Exception):
    pass


def default_initial_state(N: int) -> int:
    return max(1, round(0.01 * N))


# --------------------------------------------------------------------------- config


@dataclass
class RunConfig:
    model: OneStepModel
    initial_state: int
    T: float
    grid_points: int
    solvers: tuple[str, ...]
    out: Path
    name: str = "run"
    q_values: tuple[float, ...] = DEFAULT_Q
    flip: bool = False
    seed: int = DEFAULT_SEED
    runs: int = DEFAULT_RUNS
    rtol: float = 1e-8
    atol: float = 1e-10
    defaults: dict = field(default_factory=dict)
    original_model: OneStepModel | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise UsageError("--T must be positive")
        if self.grid_points < 2:
            raise UsageError("--grid must be at least 2")
        if not 0 <= self.initial_state <= self.model.N:
            raise UsageError(f"--i must lie in 0..{self.model.N}")
        if not self.solvers:
            raise UsageError("no solvers requested")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise UsageError(f"unknown solver(s) {bad}; choose from {list(SOLVERS)}")
        if self.runs < 2:
            raise UsageError("--runs must be at least 2")

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.grid_points)

    @property
    def u(self) -> float:
        return self.initial_state / self.model.N

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self.rtol, atol=self.atol)

    def metadata(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "original_model": model_to_dict(self.original_model) if self.flip else None,
            "flipped": self.flip,
            "initial_state": self.initial_state,
            "u": self.u,
            "T": self.T,
            "grid_points": self.grid_points,
            "solvers": list(self.solvers),
            "q_values": list(self.q_values),
            "seed": self.seed,
            "runs": self.runs,
            "rtol": self.rtol,
            "atol": self.atol,
            "master_config": {"rtol": master.MASTER_CONFIG.rtol, "atol": master.MASTER_CONFIG.atol},
            "cs_floor": bounds.CS_FLOOR,
            "defaults_filled": self.defaults,
            "versions": versions(),
        }


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(v)) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _model_from_args(args, N_override: int | None = None) -> OneStepModel:
    try:
        if args.sis is not None:
            tau, gamma, d, beta, N = args.sis
            return build_sis_model(N_override or _as_int(N, "N"), tau, gamma, _as_int(d, "d"), beta)
        if args.voter is not None:
            tau, gamma, d, N = args.voter
            return build_voter_model(N_override or _as_int(N, "N"), tau, gamma, _as_int(d, "d"))
        if args.model is not None:
            model = load_model(args.model)
            if N_override:
                model = OneStepModel(N_override, model.rates, model.label)
            return model
    except (OSError, ModelError, TypeError) as exc:
        raise UsageError(f"invalid model: {exc}") from None
    raise UsageError("one of --model, --sis or --voter is required")


def _as_int(v: float, name: str) -> int:
    if v != int(v):
        raise UsageError(f"{name} must be an integer, got {v}")
    return int(v)


def _config_from_args(args) -> RunConfig:
    original = _model_from_args(args)
    defaults = {}
    i = args.i
    if i is None:
        i = default_initial_state(original.N)
        defaults["i"] = i
    for attr, key in (("T", "T"), ("grid", "grid_points"), ("seed", "seed"), ("runs", "runs")):
        if getattr(args, f"_{attr}_default", False):
            defaults[key] = getattr(args, attr)
    model = flip_states(original) if args.flip else original
    if not 0 <= i <= original.N:
        raise UsageError(f"--i must lie in 0..{original.N}")
    state = original.N - i if args.flip else i
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    q_values = args.q if args.q is not None else DEFAULT_Q
    if args.q is None and "variants" in solvers:
        defaults["q_values"] = list(DEFAULT_Q)
    if any(not 0 <= q <= 2 for q in q_values):
        raise UsageError("--q values must lie in [0, 2]")
    return RunConfig(
        model=model,
        initial_state=state,
        T=args.T,
        grid_points=args.grid,
        solvers=solvers,
        out=Path(args.out),
        name=args.name,
        q_values=tuple(q_values),
        flip=args.flip,
        seed=args.seed,
        runs=args.runs,
        rtol=args.rtol,
        atol=args.atol,
        defaults=defaults,
        original_model=original,
    )


# --------------------------------------------------------------------------- commands


def compute_channels(cfg: RunConfig) -> tuple[dict[str, np.ndarray], dict]:
    """Run the requested solvers; returns grid-aligned channels and extra metadata."""
    t = cfg.t_grid
    channels: dict[str, np.ndarray] = {"t": t}
    extra: dict = {}
    model = cfg.model
    if "bounds" in cfg.solvers or "variants" in cfg.solvers:
        variants = "variants" in cfg.solvers
        b = bounds.solve_bounds(
            model.drift,
            model.N,
            cfg.u,
            t,
            cfg.integrator,
            q_values=cfg.q_values if variants else (),
            cs=variants,
        )
        channels.update(b.as_timeseries().channels)
        extra["bounds"] = b.metadata
        extra["_bounds"] = b
    if "master" in cfg.solvers:
        sol = master.solve_master(model, cfg.initial_state, t)
        Y = master.moment_series(sol, max(model.degree, 1))
        channels.update(Y.as_timeseries().channels)
        extra["_master"] = sol
    if "ssa" in cfg.solvers:
        res = ssa.estimate_mean(model, cfg.initial_state, t, cfg.runs, cfg.seed)
        channels["ssa_mean"] = res.mean
        channels["ssa_stderr"] = res.stderr
        channels["n_runs"] = np.full(t.size, res.n_runs, dtype=np.int64)
        extra["ssa"] = {"n_runs": res.n_runs, "master_seed": res.master_seed, "backend": res.backend}
        extra["_ssa"] = res
    return channels, extra


def _public(extra: dict) -> dict:
    return {k: v for k, v in extra.items() if not k.startswith("_")}


def cmd_run(cfg: RunConfig) -> int:
    channels, extra = compute_channels(cfg)
    csv_path = write_csv(cfg.out / f"{cfg.name}.csv", channels)
    write_json(cfg.out / f"{cfg.name}.meta.json", {**cfg.metadata(), **_public(extra), "csv": csv_path.name})
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.model.drift.sign_ok:
        raise bounds.SignConditionError(
            f"sign condition violated for D={cfg.model.drift.D}; rerun with --flip to swap the state labels"
        )
    cfg.solvers = ("master", "bounds", "ssa")
    channels, extra = compute_channels(cfg)
    sol, b, res = extra["_master"], extra["_bounds"], extra["_ssa"]
    checks = verify.check_master(cfg.model, sol, cfg.initial_state)
    checks += verify.check_bounds(cfg.model, b)
    checks += verify.check_bracketing(b, sol)
    Y = master.moment_series(sol, 2)
    checks.append(verify.check_ssa(res, Y[1], Y[2]))
    passed = all(c.passed for c in checks)
    report = {
        "passed": passed,
        "checks": [c.to_dict() for c in checks],
        "config": cfg.metadata(),
        "channels_refer_to": "1 - X/N (flipped labels)" if cfg.flip else "X/N",
    }
    write_csv(cfg.out / f"{cfg.name}.csv", channels)
    write_json(cfg.out / f"{cfg.name}.meta.json", {**cfg.metadata(), **_public(extra)})
    path = write_json(cfg.out / f"{cfg.name}.verify.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  margin={c.worst_margin:.3g}")
    print(f"report: {path}")
    return EXIT_OK if passed else EXIT_FAIL


FIGURES = ("fig1", "fig2", "fig3-left", "fig3-right", "fig4")
FIG3_LEFT_N = (1000, 10**6)


def _curve(out: Path, stem: str, t: np.ndarray, name: str, values: np.ndarray, files: list):
    path = write_csv(out / f"{stem}_{name}.csv", {"t": t, name: values})
    files.append(path.name)


def cmd_reproduce(figure: str, out: Path, grid_points: int = DEFAULT_GRID) -> int:
    """Write one CSV per curve of a figure preset plus ``<figure>.meta.json``."""
    if figure not in FIGURES:
        raise UsageError(f"unknown figure {figure!r}; choose from {list(FIGURES)}")
    T = 15.0 if figure.startswith("fig3") else 10.0
    t = np.linspace(0.0, T, grid_points)
    stem = figure.replace("-", "_")
    files: list[str] = []
    notices: list[str] = []
    meta: dict = {"figure": figure, "T": T, "grid_points": grid_points, "defaults_filled": {"T": T}}

    def i_for(N):
        return default_initial_state(N)

    if figure == "fig1":
        Ns = (10**6, 10**7)
        params = {"tau": 0.1, "gamma": 1.0, "d": 30, "beta": 0.0}
        for k, N in enumerate(Ns):
            model = build_sis_model(N, **params)
            b = bounds.solve_bounds(model.drift, N, i_for(N) / N, t)
            if k == 0:
                _curve(out, stem, t, "y", b.y, files)
            _curve(out, stem, t, f"z1_N{N}", b.z1, files)
        meta.update(model="sis", params=params, N=list(Ns), i={str(N): i_for(N) for N in Ns})
        notices.append("master equation not solved: N exceeds the direct-solve limit")
    elif figure == "fig2":
        N, params = 100, {"tau": 0.05, "gamma": 1.0, "d": 20, "beta": 1.0}
        model = build_sis_model(N, **params)
        i = i_for(N)
        b = bounds.solve_bounds(model.drift, N, i / N, t)
        y1 = master.moment_series(master.solve_master(model, i, t), 1)[1]
        for name, v in (("y", b.y), ("z1", b.z1), ("y1", y1)):
            _curve(out, stem, t, name, v, files)
        meta.update(model="sis", params=params, N=N, i=i)
    elif figure == "fig3-left":
        params = {"tau": 0.2, "gamma": 0.1, "d": 10}
        for k, N in enumerate(FIG3_LEFT_N):
            model = build_voter_model(N, **params)
            b = bounds.solve_bounds(model.drift, N, i_for(N) / N, t)
            if k == 0:
                _curve(out, stem, t, "y", b.y, files)
            _curve(out, stem, t, f"z1_N{N}", b.z1, files)
            if N <= master.MASTER_N_LIMIT:
                y1 = master.moment_series(master.solve_master(model, i_for(N), t), 1)[1]
                _curve(out, stem, t, f"y1_N{N}", y1, files)
            else:
                notices.append(f"N={N}: master channel skipped, too large to solve the master equation")
        meta.update(model="voter", params=params, N=list(FIG3_LEFT_N), i={str(N): i_for(N) for N in FIG3_LEFT_N})
        meta["defaults_filled"]["N_list"] = list(FIG3_LEFT_N)
    elif figure == "fig3-right":
        N, params = 200, {"tau": 0.1, "gamma": 0.2, "d": 10}
        model = build_voter_model(N, **params)
        i = i_for(N)
        flipped = flip_states(model)
        b = bounds.solve_bounds(flipped.drift, N, (N - i) / N, t)
        y1 = master.moment_series(master.solve_master(model, i, t), 1)[1]
        # back to the original labels: y is now the lower and z1 the upper bound
        for name, v in (("y", 1.0 - b.y), ("z1", 1.0 - b.z1), ("y1", y1)):
            _curve(out, stem, t, name, v, files)
        meta.update(model="voter", params=params, N=N, i=i, solved_with="flip_states")
    else:
        N, params = 100, {"tau": 0.1, "gamma": 1.0, "d": 30, "beta": 0.0}
        model = build_sis_model(N, **params)
        i = i_for(N)
        b = bounds.solve_bounds(model.drift, N, i / N, t, q_values=DEFAULT_Q, cs=True)
        y1 = master.moment_series(master.solve_master(model, i, t), 1)[1]
        for name, v in (("y", b.y), ("z1", b.z1), *b.variants.items(), ("y1", y1)):
            _curve(out, stem, t, name, v, files)
        meta.update(model="sis", params=params, N=N, i=i, q_values=list(DEFAULT_Q), cs_floor=bounds.CS_FLOOR)
        meta["defaults_filled"]["q_values"] = list(DEFAULT_Q)
        notices.append("q and CS curves are heuristic lower-bound candidates without proof")
    meta["defaults_filled"]["i_rule"] = "max(1, round(0.01*N))"
    meta.update(files=files, notices=notices, versions=versions())
    write_json(out / f"{stem}.meta.json", meta)
    for n in notices:
        print(f"notice: {n}")
    print(f"wrote {len(files)} curve files to {out}")
    return EXIT_OK


def cmd_gap_scaling(args) -> int:
    """Sup over ``[0, T]`` of ``y - z_1`` for each N, with successive ratios."""
    Ns = args.Ns
    if len(Ns) < 2:
        raise UsageError("gap-scaling needs at least two values of N")
    if any(N < 1 for N in Ns):
        raise UsageError("N values must be positive")
    t = np.linspace(0.0, args.T, args.grid)
    cfg = IntegratorConfig(rtol=args.rtol, atol=args.atol)
    gaps = []
    for N in Ns:
        model = _model_from_args(args, N_override=N)
        if args.flip:
            model = flip_states(model)
        b = bounds.solve_bounds(model.drift, N, args.u, t, cfg)
        gaps.append(float(np.max(b.gap())))
    ratios = [None] + [_ratio(gaps[k - 1], gaps[k]) for k in range(1, len(gaps))]
    out = Path(args.out)
    write_csv(out / f"{args.name}.csv", {"N": list(Ns), "sup_gap": gaps, "ratio_to_prev": ratios})
    write_json(
        out / f"{args.name}.meta.json",
        {
            "model": model_to_dict(model),
            "flipped": args.flip,
            "N": list(Ns),
            "u": args.u,
            "T": args.T,
            "grid_points": args.grid,
            "rtol": args.rtol,
            "atol": args.atol,
            "defaults_filled": {k: getattr(args, k) for k in ("u", "T", "grid") if getattr(args, f"_{k}_default", False)},
            "versions": versions(),
        },
    )
    for N, g, r in zip(Ns, gaps, ratios):
        print(f"N={N:>10d}  sup_gap={g:.6g}  ratio={'' if r is None else f'{r:.4f}'}")
    return EXIT_OK


def _ratio(prev: float, cur: float) -> float:
    if cur == 0.0:
        return math.nan
    return prev / cur


# --------------------------------------------------------------------------- parser


class _TrackDefault(argparse.Action):
    """Store the value and remember that the user supplied it."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, f"_{self.dest}_default", False)


def _add_tracked(p, flag, default, **kw):
    dest = flag.lstrip("-")
    p.add_argument(flag, default=default, action=_TrackDefault, **kw)
    p.set_defaults(**{f"_{dest}_default": True})


def _add_model_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--model", metavar="FILE|JSON", help="model JSON file or inline JSON object")
    g.add_argument("--sis", nargs=5, type=float, metavar=("TAU", "GAMMA", "D", "BETA", "N"))
    g.add_argument("--voter", nargs=4, type=float, metavar=("TAU", "GAMMA", "D", "N"))
    p.add_argument("--flip", action="store_true", help="swap the state labels (x -> 1 - x)")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--out", default=".", help="output directory")


def _add_run_args(p, solvers_default: str | None):
    _add_model_args(p)
    p.add_argument("--i", type=int, default=None, help="initial count (default max(1, round(0.01 N)))")
    _add_tracked(p, "--T", 10.0, type=float, help="time horizon")
    _add_tracked(p, "--grid", DEFAULT_GRID, type=int, help="number of grid points")
    if solvers_default is None:
        p.add_argument("--solvers", required=True, help=f"comma list from {','.join(SOLVERS)}")
    else:
        p.add_argument("--solvers", default=solvers_default, help=argparse.SUPPRESS)
    p.add_argument("--q", type=_float_list, default=None, help="q values for the variants")
    _add_tracked(p, "--seed", DEFAULT_SEED, type=int)
    _add_tracked(p, "--runs", DEFAULT_RUNS, type=int, help="SSA runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onestep", description="Bounds on the expected value of density-dependent one-step processes."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve and write a CSV plus a metadata sidecar")
    _add_run_args(p, None)
    p.add_argument("--name", default="run")

    p = sub.add_parser("verify", help="run master, bounds and SSA and check every invariant")
    _add_run_args(p, "master,bounds,ssa")
    p.add_argument("--name", default="verify")

    p = sub.add_parser("reproduce", help="write the curves of a figure preset")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--out", default=".")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)

    p = sub.add_parser("gap-scaling", help="sup-gap between the bounds as N grows")
    _add_model_args(p)
    p.add_argument("--Ns", type=_int_list, required=True, help="comma list of N values")
    _add_tracked(p, "--u", 0.01, type=float, help="initial density, fixed across N")
    _add_tracked(p, "--T", 5.0, type=float)
    _add_tracked(p, "--grid", DEFAULT_GRID, type=int)
    p.add_argument("--name", default="gap_scaling")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.figure, Path(args.out), args.grid)
        if args.command == "gap-scaling":
            return cmd_gap_scaling(args)
        cfg = _config_from_args(args)
        return cmd_run(cfg) if args.command == "run" else cmd_verify(cfg)
    except (UsageError, ModelError, bounds.SignConditionError, bounds.UnsupportedDegreeError,
            master.MasterSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, RuntimeError, FloatingPointError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
