"""Configuration-driven command line front end.

One run equals one configuration file: a [run] section with the model
parameters and a command name, plus an optional section named after the
command for its options.  Each command writes CSV tables with
'#'-prefixed header comments carrying the resolved configuration, so a
regression baseline can be reproduced from any output file.  Floats are
written with 17 significant digits and rows in grid order, which makes
the bytes independent of the worker count.

Exit codes: 0 success, 2 iterative solver failure, 3 configuration or
validation error (including mathematically inadmissible parameters that
the solvers reject up front).
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .annulus_ode import AnnulusParams, asymptotic_ratio
from .blowdown import (
    DEFAULT_LADDER,
    BlowdownFamily,
    blowdown_density,
    blowdown_potential,
    slope_estimate,
    verify_identities,
)
from .calculus import inv_laplacian
from .errors import ParseError, UnknownKey
from .flow import FlowConfig, initial_state, run_flow, trace_rows
from .functionals import joint_free_energy, moser_trudinger
from .liouville import residual, solve_pair
from .model import Params, RadialField, make_grid, project_density, validate_params
from .phase import classify_conflict, classify_conflict_free, sweep

__all__ = ["RunConfig", "main", "parse_config", "run"]

logger = logging.getLogger(__name__)

_COMMAND_KEYS = {
    "classify": frozenset(),
    "steady": frozenset(),
    "sweep": frozenset({"m1_range", "m2_range", "resolution"}),
    "flow": frozenset({"case", "dt", "t_end", "adapt", "init"}),
    "blowdown": frozenset({"psis", "mode"}),
    "functional": frozenset({"psis", "mode"}),
    "oracle": frozenset({"scales"}),
}
_RUN_KEYS = frozenset(
    {"command", "alpha", "beta", "gamma", "theta", "m1", "m2", "grid_n"}
)
_FLOW_LIMITS = {
    "single": (1.0, 0.0, 0.0),
    "pair": (1.0, 1.0, 0.0),
    "potentials": (0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run: command, model parameters, and options."""

    command: str
    params: Params
    grid_n: int = 4096
    m1_range: tuple = (0.0, 40.0)
    m2_range: tuple = (0.0, 40.0)
    resolution: int = 200
    psis: tuple = DEFAULT_LADDER
    mode: str = "full"
    scales: tuple = (1e-4, 1e-6, 1e-8)
    case: str = "single"
    dt: float = 1e-3
    t_end: float = 0.5
    adapt: bool = True
    init: str = "bump"


def _float(section, key):
    raw = section[key]
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"{key} = {raw!r} is not a number") from None


def _int(section, key):
    raw = section[key]
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"{key} = {raw!r} is not an integer") from None


def _floats(section, key):
    raw = section[key]
    try:
        vals = tuple(float(tok) for tok in raw.split(","))
    except ValueError:
        raise ParseError(f"{key} = {raw!r} is not a comma-separated list") from None
    if not vals:
        raise ParseError(f"{key} must list at least one value")
    return vals

def _pair(section, key):
    vals = _floats(section, key)
    if len(vals) != 2:
        raise ParseError(f"{key} = {section[key]!r} must be two numbers")
    return vals


def _bool(section, key):
    raw = section[key].strip().lower()
    if raw in ("true", "yes", "on", "1"):
        return True
    if raw in ("false", "no", "off", "0"):
        return False
    raise ParseError(f"{key} = {section[key]!r} is not a boolean")


def _choice(section, key, allowed):
    raw = section[key].strip()
    if raw not in allowed:
        raise ParseError(f"{key} = {raw!r}; expected one of {sorted(allowed)}")
    return raw


def parse_config(text: str) -> RunConfig:
    """Strict parse of the sectioned key=value configuration format."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc
    if not cp.has_section("run"):
        raise ParseError("missing [run] section")
    run_sec = cp["run"]
    stray = set(run_sec) - _RUN_KEYS
    if stray:
        raise UnknownKey(f"unknown [run] keys: {sorted(stray)}")
    if "command" not in run_sec:
        raise ParseError("[run] needs a command")
    command = run_sec["command"].strip()
    if command not in _COMMAND_KEYS:
        raise ParseError(
            f"unknown command {command!r}; expected one of {sorted(_COMMAND_KEYS)}"
        )
    extra = set(cp.sections()) - {"run", command}
    if extra:
        raise UnknownKey(f"unknown sections: {sorted(extra)}")
    missing = [k for k in ("alpha", "beta", "gamma", "theta", "m1", "m2")
               if k not in run_sec]
    if missing:
        raise ParseError(f"[run] is missing {missing}")
    params = validate_params(
        Params(
            alpha=_float(run_sec, "alpha"),
            beta=_float(run_sec, "beta"),
            gamma=_float(run_sec, "gamma"),
            theta=_int(run_sec, "theta"),
            m1=_float(run_sec, "m1"),
            m2=_float(run_sec, "m2"),
        )
    )
    kwargs = {}
    if "grid_n" in run_sec:
        kwargs["grid_n"] = _int(run_sec, "grid_n")
    if cp.has_section(command):
        sec = cp[command]
        stray = set(sec) - _COMMAND_KEYS[command]
        if stray:
            raise UnknownKey(f"unknown [{command}] keys: {sorted(stray)}")
        if "m1_range" in sec:
            kwargs["m1_range"] = _pair(sec, "m1_range")
        if "m2_range" in sec:
            kwargs["m2_range"] = _pair(sec, "m2_range")
        if "resolution" in sec:
            kwargs["resolution"] = _int(sec, "resolution")
        if "psis" in sec:
            kwargs["psis"] = _floats(sec, "psis")
        if "scales" in sec:
            kwargs["scales"] = _floats(sec, "scales")
        if "mode" in sec:
            kwargs["mode"] = _choice(sec, "mode", {"full", "half"})
        if "case" in sec:
            kwargs["case"] = _choice(sec, "case", set(_FLOW_LIMITS))
        if "init" in sec:
            kwargs["init"] = _choice(sec, "init", {"bump", "random"})
        if "dt" in sec:
            kwargs["dt"] = _float(sec, "dt")
        if "t_end" in sec:
            kwargs["t_end"] = _float(sec, "t_end")
        if "adapt" in sec:
            kwargs["adapt"] = _bool(sec, "adapt")
    return RunConfig(command=command, params=params, **kwargs)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _header_lines(cfg: RunConfig, seed: int) -> list:
    p = cfg.params
    lines = [
        f"conflictlab {__version__}",
        f"command = {cfg.command}",
        f"alpha = {_fmt(p.alpha)}",
        f"beta = {_fmt(p.beta)}",
        f"gamma = {_fmt(p.gamma)}",
        f"theta = {p.theta}",
        f"m1 = {_fmt(p.m1)}",
        f"m2 = {_fmt(p.m2)}",
        f"grid_n = {cfg.grid_n}",
        f"seed = {seed}",
    ]
    if cfg.command == "sweep":
        lines += [
            f"m1_range = {_fmt(cfg.m1_range[0])}, {_fmt(cfg.m1_range[1])}",
            f"m2_range = {_fmt(cfg.m2_range[0])}, {_fmt(cfg.m2_range[1])}",
            f"resolution = {cfg.resolution}",
        ]
    elif cfg.command in ("blowdown", "functional"):
        lines += [
            "psis = " + ", ".join(_fmt(x) for x in cfg.psis),
            f"mode = {cfg.mode}",
        ]
    elif cfg.command == "oracle":
        lines.append("scales = " + ", ".join(_fmt(x) for x in cfg.scales))
    elif cfg.command == "flow":
        lines += [
            f"case = {cfg.case}",
            f"dt = {_fmt(cfg.dt)}",
            f"t_end = {_fmt(cfg.t_end)}",
            f"adapt = {cfg.adapt}",
            f"init = {cfg.init}",
        ]
    return lines


def _write_csv(path: Path, header, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    logger.info("wrote %s", path)


def _base_fields(grid, p: Params):
    rho = project_density(
        RadialField.density(grid, 2.0 - grid.r**2), p.m1
    )
    if p.m2 > 0:
        w = inv_laplacian(
            project_density(
                RadialField.density(grid, np.exp(-3.0 * grid.r**2)), p.m2
            )
        )
    else:
        w = RadialField.potential(grid, np.zeros(grid.r.size))
    return rho, w


def _cmd_classify(cfg: RunConfig, out: Path, header, threads: int) -> None:
    p = cfg.params
    verdict = classify_conflict(p) if p.theta == -1 else classify_conflict_free(p)
    columns = ["m1", "m2", "verdict", "rule"] + [name for name, _ in verdict.fired]
    row = [p.m1, p.m2, verdict.verdict, verdict.rule]
    row += [value for _, value in verdict.fired]
    _write_csv(out / "classify.csv", header, columns, [row])


def _cmd_sweep(cfg: RunConfig, out: Path, header, threads: int) -> None:
    res = sweep(
        cfg.params, cfg.m1_range, cfg.m2_range, cfg.resolution, workers=threads
    )
    rows = []
    for i in range(res.m1s.size):
        for j in range(res.m2s.size):
            v = res.verdicts[i, j]
            fired = dict(v.fired)
            rows.append(
                (
                    v.point[0],
                    v.point[1],
                    v.verdict,
                    fired["lambda"],
                    fired["lambda1"],
                    fired["lambda2"],
                    v.rule,
                )
            )
    _write_csv(
        out / "sweep.csv",
        header,
        ["m1", "m2", "verdict", "lambda", "lambda1", "lambda2", "rule_fired"],
        rows,
    )
    curve_rows = []
    for name in sorted(res.curves):
        for m1, m2 in res.curves[name]:
            curve_rows.append((name, m1, m2))
    _write_csv(
        out / "sweep_curves.csv", header, ["curve", "m1", "m2"], curve_rows
    )


def _cmd_steady(cfg: RunConfig, out: Path, header, threads: int) -> None:
    p = cfg.params
    grid = make_grid(cfg.grid_n)
    sol = solve_pair(p, grid)
    res1, res2 = residual(sol, p)
    g1 = p.alpha * sol.u1.values - p.beta * sol.u2.values
    g2 = -p.gamma * sol.u2.values - p.theta * p.beta * sol.u1.values
    rho1 = sol.multipliers[0] * np.exp(g1)
    rho2 = sol.multipliers[1] * np.exp(g2)
    rows = zip(grid.r, sol.u1.values, sol.u2.values, rho1, rho2)
    _write_csv(
        out / "steady.csv",
        header + [f"iterations = {sol.iterations}"],
        ["r", "u1", "u2", "rho1", "rho2", "residual1", "residual2"],
        [list(row) + [res1, res2] for row in rows],
    )


def _cmd_flow(cfg: RunConfig, out: Path, header, threads: int, seed: int) -> None:
    p = cfg.params
    grid = make_grid(cfg.grid_n)
    limits = _FLOW_LIMITS[cfg.case]
    fcfg = FlowConfig(*limits, dt=cfg.dt, t_end=cfg.t_end, adapt=cfg.adapt)
    if cfg.init == "random":
        rng = np.random.default_rng(seed)
        width = rng.uniform(0.5, 3.0)
        amp = rng.uniform(-0.4, 0.4)
        k = int(rng.integers(1, 4))
        shape = np.exp(-width * grid.r**2) * (1.0 + amp * np.cos(math.pi * k * grid.r))
    else:
        shape = np.exp(-2.0 * grid.r**2)
    rho1 = project_density(RadialField.density(grid, shape), p.m1)
    fields = {}
    if cfg.case == "single":
        fields["rho1"] = rho1
    elif cfg.case == "pair":
        fields["rho1"] = rho1
        fields["rho2"] = project_density(
            RadialField.density(grid, np.exp(-grid.r**2)), p.m2
        )
    else:
        fields["u1"] = inv_laplacian(rho1)
        fields["u2"] = inv_laplacian(
            project_density(RadialField.density(grid, np.exp(-grid.r**2)), p.m2)
        )
    state = initial_state(p, fcfg, **fields)
    end = run_flow(state, p, fcfg)
    _write_csv(
        out / "flow_trace.csv",
        header,
        ["t", "mass1", "mass2", "energy", "sup_rho1"],
        trace_rows(end),
    )
    columns = ["r", "rho1", "u1", "u2"]
    series = [grid.r, end.rho1.values, end.u1.values, end.u2.values]
    if end.rho2 is not None:
        columns.append("rho2")
        series.append(end.rho2.values)
    _write_csv(out / "flow_state.csv", header, columns, zip(*series))


def _cmd_blowdown(cfg: RunConfig, out: Path, header, threads: int) -> None:
    p = cfg.params
    grid = make_grid(cfg.grid_n, kind="graded")
    rho, w = _base_fields(grid, p)
    fam = BlowdownFamily(rho, w, psis=np.asarray(cfg.psis), mode=cfg.mode)
    rows = verify_identities(fam, p)
    slope = slope_estimate(fam, p)
    table = [
        (
            r.psi,
            r.term,
            math.nan if r.predicted is None else r.predicted,
            r.measured,
        )
        for r in rows
    ]
    _write_csv(
        out / "blowdown.csv",
        header + [f"slope = {_fmt(slope)}"],
        ["psi", "term", "predicted", "measured"],
        table,
    )


def _cmd_oracle(cfg: RunConfig, out: Path, header, threads: int) -> None:
    p = cfg.params
    limit = (p.m2 / (2.0 * math.pi)) ** 2
    rows = []
    for psi in cfg.scales:
        lp = AnnulusParams(gamma=p.gamma, beta_m=p.beta * p.m1, m2=p.m2, psi=psi)
        ratio = asymptotic_ratio(lp, n=cfg.grid_n)
        rows.append((psi, ratio, limit, abs(ratio - limit) / limit))
    _write_csv(
        out / "oracle.csv", header, ["psi", "ratio", "limit", "rel_err"], rows
    )


def _cmd_functional(cfg: RunConfig, out: Path, header, threads: int) -> None:
    p = cfg.params
    grid = make_grid(cfg.grid_n, kind="graded")
    rho, w = _base_fields(grid, p)
    rows = []
    for psi in cfg.psis:
        scale = psi if cfg.mode == "full" else math.sqrt(psi)
        rho_s = blowdown_density(rho, psi, cfg.mode)
        w_s = blowdown_potential(w, p.m2, scale)
        rep = joint_free_energy(rho_s, w_s, p)
        mt = moser_trudinger(inv_laplacian(rho_s), p.m1, p.alpha)
        rows.append(
            (
                psi,
                rep.entropy1,
                rep.interaction,
                rep.dirichlet,
                rep.log_terms,
                rep.total,
                mt,
            )
        )
    _write_csv(
        out / "functional.csv",
        header,
        ["psi", "entropy", "interaction", "dirichlet", "log_terms", "total",
         "moser_trudinger"],
        rows,
    )


def run(cfg: RunConfig, out_dir=".", threads=None, seed=0) -> int:
    """Dispatch a parsed configuration and write its tables under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if threads is None:
        threads = os.cpu_count() or 1
    header = _header_lines(cfg, seed)
    if cfg.command == "flow":
        _cmd_flow(cfg, out, header, threads, seed)
        return 0
    dispatch = {
        "classify": _cmd_classify,
        "sweep": _cmd_sweep,
        "steady": _cmd_steady,
        "blowdown": _cmd_blowdown,
        "oracle": _cmd_oracle,
        "functional": _cmd_functional,
    }
    dispatch[cfg.command](cfg, out, header, threads)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conflictlab",
        description="Steady states, free-energy flows, and phase diagrams "
        "for a two-species chemotaxis model on the unit disk.",
    )
    parser.add_argument("--config", required=True, help="configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for parallel maps")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized initial data")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        cfg = parse_config(text)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    try:
        return run(cfg, out_dir=args.out, threads=args.threads, seed=args.seed)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
