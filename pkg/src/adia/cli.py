"""Command-line entry point: adia {gap,schedule,evolve,bound,elcheck,sweep}.

Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import eta_components, measure_constant_for, write_report
from .errors import DomainError, NonConvergenceError, NumericError
from .evolve import propagate, write_trace_csv
from .gap import (estimate_measure_constant, grover_profile, pl_lower_bound, profile_from_pair,
                  qlsa_linear_profile, write_profile_csv)
from .harness import build_family, build_schedule, emit_report, fit_sweep, scaling_sweep
from .io import read_pair
from .operators import build_grover_reduced, random_pair
from .schedule import write_schedule_csv
from .variational import el_full_residual, write_residual_report

# Every default used by the CLI, in one place. Keys are argparse dest names.
DEFAULTS = {
    "family": "grover",    # grover | linear (alias qlsa_linear) | custom | file
    "n": 16,               # Grover item count N
    "kappa": 4.0,          # condition number of the linear-gap family
    "dim": 4,              # dimension of the random custom pair
    "seed": 0,             # seed for the custom pair
    "h0": None,            # operator JSON files for family=file
    "h1": None,
    "grid": 257,           # gap sampling grid
    "measure": False,
    "pl": False,
    "schedule": "power",   # power | linear | boundary
    "p": 1.5,
    "schedule_grid": 1025,
    "T": 50.0,
    "steps": None,         # None: max(4096, ceil(64 T))
    "dump_states": False,
    "el_grid": 1025,
    "sizes": "4,16,64",
    "eps": 0.1,
    "t_lo": 1.0,
    "growth": 2.0,
    "dense": False,
    "json": False,
}

OUTPUTS = {
    "gap": "profile.csv",
    "schedule": "schedule.csv",
    "evolve": "trace.csv",
    "bound": "bound.json",
    "elcheck": "residual.csv",
    "sweep": "report.json",
}

# Settings that never change results; left out of embedded configs.
_NOT_EMBEDDED = {"config", "out", "json", "command"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def embedded(self) -> dict:
        return {k: v for k, v in sorted(self.params.items()) if k not in _NOT_EMBEDDED}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_system(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system")
    g.add_argument("--family", choices=["grover", "linear", "qlsa_linear", "custom", "file"],
                   help="problem family (default: %(default)s)")
    g.add_argument("--n", type=int, help="Grover item count N")
    g.add_argument("--kappa", type=float, help="condition number of the linear-gap family")
    g.add_argument("--dim", type=int, help="dimension of the random custom pair")
    g.add_argument("--seed", type=int, help="seed for randomized inputs")
    g.add_argument("--h0", help="JSON operator file for H0 (family=file)")
    g.add_argument("--h1", help="JSON operator file for H1 (family=file)")


def _add_schedule(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("schedule")
    g.add_argument("--schedule", choices=["power", "linear", "boundary"],
                   help="schedule family (default: %(default)s)")
    g.add_argument("--p", type=float, help="power-law exponent in (1, 2)")
    g.add_argument("--schedule-grid", type=_positive_int, help="schedule nodes")


def _add_common(p: argparse.ArgumentParser, command: str) -> None:
    p.add_argument("--config", help="JSON file of defaults; explicit flags override it")
    p.add_argument("--out", default=OUTPUTS[command], help="output path (default: %(default)s)")
    p.add_argument("--json", action="store_true", help="print a machine-readable summary on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adia", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap", help="sample a gap profile and its measure constant")
    _add_system(p)
    p.add_argument("--grid", type=_positive_int, help="gap sampling points")
    p.add_argument("--measure", action="store_true",
                   help="also write the measure-constant estimate (JSON)")
    p.add_argument("--pl", action="store_true",
                   help="also write the piecewise-linear lower bound (CSV)")
    _add_common(p, "gap")

    p = sub.add_parser("schedule", help="build a schedule and write its nodes")
    _add_system(p)
    _add_schedule(p)
    _add_common(p, "schedule")

    p = sub.add_parser("evolve", help="propagate and write the error trace")
    _add_system(p)
    _add_schedule(p)
    p.add_argument("--T", type=float, help="total runtime")
    p.add_argument("--steps", type=_positive_int, help="integrator steps")
    p.add_argument("--dump-states", action="store_true",
                   help="also write decimated state vectors as JSON")
    _add_common(p, "evolve")

    p = sub.add_parser("bound", help="evaluate the error-bound components")
    _add_system(p)
    _add_schedule(p)
    p.add_argument("--T", type=float, help="total runtime")
    _add_common(p, "bound")

    p = sub.add_parser("elcheck", help="evaluate Euler-Lagrange residuals")
    _add_system(p)
    _add_schedule(p)
    p.add_argument("--el-grid", type=_positive_int, help="residual grid points")
    _add_common(p, "elcheck")

    p = sub.add_parser("sweep", help="minimal runtime over sizes and a log-log fit")
    _add_system(p)
    _add_schedule(p)
    p.add_argument("--sizes", help="comma-separated ascending sizes (N or kappa)")
    p.add_argument("--eps", type=float, help="target final error")
    p.add_argument("--t-lo", type=float, help="first runtime tried")
    p.add_argument("--growth", type=float, help="runtime growth factor while bracketing")
    p.add_argument("--dense", action="store_true",
                   help="use the full N-dimensional Grover pair")
    _add_common(p, "sweep")

    for action in sub.choices.values():
        action.set_defaults(**{k: v for k, v in DEFAULTS.items()
                               if k in {a.dest for a in action._actions}})
    return parser


def _load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise DomainError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - set(DEFAULTS) - {"out"}
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _coerce(sub: argparse.ArgumentParser, cfg: dict) -> dict:
    """Pass config values through each flag's type so both routes agree exactly."""
    actions = {a.dest: a for a in sub._actions}
    extra = set(cfg) - set(actions)
    if extra:
        raise DomainError(f"config keys not accepted by '{sub.prog}': {sorted(extra)}")
    out = {}
    for k, v in cfg.items():
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        typ = actions[k].type
        if typ is not None and v is not None:
            try:
                v = typ(str(v))
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise DomainError(f"config key {k!r}: {exc}") from None
        out[k] = v
    return out


def parse(argv=None) -> RunConfig:
    """Flags over config file over DEFAULTS."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub = subs.choices[args.command]
        sub.set_defaults(**_coerce(sub, _load_config(args.config)))
        args = parser.parse_args(argv)
    return RunConfig(args.command, vars(args))


# ---------------------------------------------------------------------------
# System resolution
# ---------------------------------------------------------------------------


def _family(p: dict) -> str:
    return "qlsa_linear" if p["family"] == "linear" else p["family"]


def _size(p: dict):
    fam = _family(p)
    return {"grover": p["n"], "qlsa_linear": p["kappa"], "custom": p["dim"]}.get(fam)


def _system(p: dict):
    """(pair or None, profile) for the requested family."""
    fam = _family(p)
    if fam == "grover":
        if p["n"] is None or p["n"] < 2:
            raise DomainError(f"Grover needs --n >= 2, got {p['n']}")
        return build_grover_reduced(p["n"]), grover_profile(p["n"])
    if fam == "qlsa_linear":
        if p["kappa"] < 1:
            raise DomainError("--kappa must be >= 1")
        pair, prof, _ = build_family("qlsa_linear", p["kappa"])
        return pair, prof
    if fam == "custom":
        pair = random_pair(p["dim"], p["seed"])
        return pair, profile_from_pair(pair, p["grid"] if "grid" in p else 257)
    if not p["h0"] or not p["h1"]:
        raise DomainError("family=file needs --h0 and --h1")
    pair = read_pair(p["h0"], p["h1"])
    return pair, profile_from_pair(pair, p["grid"] if "grid" in p else 257)


def _A(pair, profile) -> float:
    if pair is not None:
        return float(pair.diff_norm)
    return float(np.sqrt(1.0 - 1.0 / profile.params["N"]))


def _schedule(p: dict, profile):
    return build_schedule(profile, p["schedule"], p["p"], grid_points=p["schedule_grid"])


def _emit(cfg: RunConfig, summary: dict) -> None:
    doc = {"command": cfg.command, "config": cfg.embedded(), **summary}
    if cfg.params.get("json"):
        print(json.dumps(doc, indent=2, sort_keys=True, default=float))
    else:
        for k, v in summary.items():
            print(f"{k}: {v}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gap(cfg: RunConfig) -> int:
    p = cfg.params
    _, profile = _system(p)
    out = write_profile_csv(profile, p["out"], grid_points=p["grid"])
    summary = {"profile_csv": str(out), "min_gap": profile.min_gap, "argmin": profile.argmin}
    if p["measure"]:
        est = estimate_measure_constant(profile)
        mpath = out.with_name(out.stem + "_measure.json")
        mdoc = {"constant_hat": est.constant_hat, "witness_x": est.witness_x,
                "grid_resolution": est.grid_resolution, "x_grid": est.x_grid,
                "min_gap": profile.min_gap, "config": cfg.embedded()}
        mpath.write_text(json.dumps(mdoc, indent=2, sort_keys=True) + "\n")
        summary.update(constant_hat=est.constant_hat, measure_json=str(mpath))
    if p["pl"]:
        pl = pl_lower_bound(profile)
        ppath = write_profile_csv(pl, out.with_name(out.stem + "_pl.csv"))
        summary.update(pl_csv=str(ppath), pl_pieces=pl.params.get("n_kinks", 0) + 1)
    _emit(cfg, summary)
    return 0


def cmd_schedule(cfg: RunConfig) -> int:
    p = cfg.params
    _, profile = _system(p)
    sched = _schedule(p, profile)
    out = write_schedule_csv(sched, p["out"])
    _emit(cfg, {"schedule_csv": str(out), "family": sched.family, "nodes": sched.size,
                "c_p": sched.params.get("c_p")})
    return 0


def cmd_evolve(cfg: RunConfig) -> int:
    p = cfg.params
    pair, profile = _system(p)
    sched = _schedule(p, profile)
    trace = propagate(pair, sched, p["T"], p["steps"])
    out = write_trace_csv(trace, p["out"], dump_states=p["dump_states"])
    _emit(cfg, {"trace_csv": str(out), "final_error": trace.final_error, "steps": trace.steps,
                "T": trace.runtime_T})
    return 0


def cmd_bound(cfg: RunConfig) -> int:
    p = cfg.params
    pair, profile = _system(p)
    sched = _schedule(p, profile)
    report = eta_components(_A(pair, profile), profile, sched, p["T"])
    report.metadata.update(measure_constant=measure_constant_for(profile),
                           size=_size(p), config=cfg.embedded())
    out = write_report(report, p["out"])
    _emit(cfg, {"bound_json": str(out), "total_over_T": report.total_over_T,
                "predicted_eta": report.predicted_eta})
    return 0


def cmd_elcheck(cfg: RunConfig) -> int:
    p = cfg.params
    pair, profile = _system(p)
    sched = _schedule(p, profile)
    report = el_full_residual(sched, profile, _A(pair, profile), grid=p["el_grid"])
    out = write_residual_report(report, p["out"])
    _emit(cfg, {"residual_csv": str(out), "l2_norm_full": report.l2_norm_full,
                "excluded_near_kinks": report.metadata["excluded_near_kinks"]})
    return 0


def _parse_sizes(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"--sizes must be comma-separated integers, got {text!r}") from None


def cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.params
    fam = _family(p)
    if fam == "file":
        raise DomainError("sweep needs a sized family (grover, linear or custom)")
    points = scaling_sweep(fam, _parse_sizes(p["sizes"]), p["schedule"], p["p"], p["eps"],
                           p["t_lo"], p["growth"], seed=p["seed"], dense=p["dense"])
    fit = fit_sweep(points)
    out = emit_report(points, p["out"], fit=fit, config=cfg.embedded())
    _emit(cfg, {"report_json": str(out), "slope": fit.slope, "r_squared": fit.r_squared,
                "t_star": [pt.t_star for pt in points]})
    return 0


COMMANDS = {"gap": cmd_gap, "schedule": cmd_schedule, "evolve": cmd_evolve, "bound": cmd_bound,
            "elcheck": cmd_elcheck, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        cfg = parse(argv)
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:  # argparse: help (0) or bad flags (2)
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"adia: error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"adia: no convergence: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"adia: numerical failure: {exc}", file=sys.stderr)
        return 3




if __name__ == "__main__":
    sys.exit(main())
