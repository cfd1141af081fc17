"""Minimal-runtime search, size sweeps, log-log fits and report files."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from . import __version__
from .errors import DomainError, NonConvergenceError, NumericError
from .evolve import convergence_probe, default_steps, propagate_final_error
from .gap import GapProfile, grover_profile, profile_from_pair, qlsa_linear_profile
from .operators import HamiltonianPair, build_grover, build_grover_reduced, build_qlsa, random_pair
from .schedule import (DEFAULT_P, Schedule, boundary_cancellation_schedule, linear_schedule,
                       synthesize_power_law)

FAMILIES = ("grover", "qlsa_linear", "custom")
SCHEDULES = ("power", "linear", "boundary")
CSV_COLUMNS = ("family", "size", "delta_star", "schedule", "p", "epsilon", "t_star",
               "final_error", "steps")
T_MAX = 1e6
BISECTION_ROUNDS = 20
SCHEDULE_GRID = 1025
PROBE_TOL = 0.01  # allowed step-doubling change of the final error, relative to epsilon


@dataclass(frozen=True)
class SweepPoint:
    family: str
    size: int
    min_gap: float
    schedule_family: str
    p: float | None
    epsilon: float
    t_star: float
    final_error_at_t_star: float
    steps_used: int

    def __post_init__(self):
        if not self.t_star > 0:
            raise DomainError("t_star must be positive")
        if self.final_error_at_t_star > self.epsilon:
            raise DomainError("final error at t_star exceeds epsilon")


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    points: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "points": self.points.tolist()}


@dataclass(frozen=True)
class _Search:
    t_star: float
    error: float
    steps: int
    diagnostics: dict


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def build_family(family: str, size: int, seed: int = 0, dense: bool = False):
    """(pair, profile, delta_star) for one family member.

    Grover uses the exact two-level reduction unless ``dense`` is set; the
    linear-system family uses A = diag(1, 1/kappa) with b = (1, 1)/sqrt(2)
    and the closed-form lower-bound profile 1 - u + u/kappa.
    """
    if family == "grover":
        n = int(size)
        pair = build_grover(n) if dense else build_grover_reduced(n)
        return pair, grover_profile(n), 1.0 / math.sqrt(n)
    if family == "qlsa_linear":
        kappa = float(size)
        if kappa < 1:
            raise DomainError("condition number must be >= 1")
        pair = build_qlsa(np.diag([1.0, 1.0 / kappa]), np.array([1.0, 1.0]) / math.sqrt(2.0))
        return pair, qlsa_linear_profile(kappa), 1.0 / kappa
    if family == "custom":
        pair = random_pair(int(size), seed)
        prof = profile_from_pair(pair)
        return pair, prof, prof.min_gap
    raise DomainError(f"unknown family {family!r}; expected one of {FAMILIES}")


def build_schedule(profile: GapProfile, sched_family: str, p: float = DEFAULT_P,
                   grid_points: int = SCHEDULE_GRID) -> Schedule:
    if sched_family == "power":
        return synthesize_power_law(profile, p, grid_points=grid_points)
    if sched_family == "linear":
        return linear_schedule(grid_points)
    if sched_family == "boundary":
        return boundary_cancellation_schedule(grid_points)
    raise DomainError(f"unknown schedule family {sched_family!r}; expected one of {SCHEDULES}")


# ---------------------------------------------------------------------------
# Runtime search
# ---------------------------------------------------------------------------


def _check_search_args(epsilon, t_lo, growth):
    if not 0.001 < epsilon < 0.5:
        raise DomainError("epsilon must lie in (0.001, 0.5)")
    if t_lo <= 0:
        raise DomainError("t_lo must be positive")
    if growth <= 1:
        raise DomainError("growth must exceed 1")


def _search(pair: HamiltonianPair, sched: Schedule, epsilon: float, t_lo: float, growth: float,
            t_max: float, rounds: int, validate: bool) -> _Search:
    _check_search_args(epsilon, t_lo, growth)

    def err(T):
        return propagate_final_error(pair, sched, T, default_steps(T))

    history = []
    T, e = t_lo, err(t_lo)
    history.append((T, e))
    lo = None
    while e > epsilon:
        lo = T
        T *= growth
        if T > t_max:
            raise NonConvergenceError(
                f"error still {e:.4g} > {epsilon} at T = {lo:.4g}",
                diagnostics={"history": history, "t_max": t_max, "epsilon": epsilon})
        e = err(T)
        history.append((T, e))
    hi, e_hi = T, e
    if lo is not None:
        for _ in range(rounds):
            mid = 0.5 * (lo + hi)
            e_mid = err(mid)
            if e_mid <= epsilon:
                hi, e_hi = mid, e_mid
            else:
                lo = mid
    steps = default_steps(hi)
    diag = {"doublings": len(history) - 1, "bracket": [lo, hi]}
    if validate:
        probe = convergence_probe(pair, sched, hi, [steps, 2 * steps])
        change = abs(probe[1, 1] - probe[0, 1])
        diag["probe_change"] = float(change)
        if change > PROBE_TOL * epsilon:
            raise NumericError(f"final error at T = {hi:.6g} changes by {change:.3g} under step "
                               "doubling", achieved=float(change))
    return _Search(float(hi), float(e_hi), steps, diag)


def minimal_runtime(pair: HamiltonianPair, sched: Schedule, epsilon: float = 0.1,
                    t_lo: float = 1.0, growth: float = 2.0, t_max: float = T_MAX,
                    rounds: int = BISECTION_ROUNDS, validate: bool = True,
                    family: str = "custom", size: int | None = None,
                    min_gap: float | None = None) -> SweepPoint:
    """Smallest T on the doubling/bisection path with final error <= epsilon."""
    res = _search(pair, sched, epsilon, t_lo, growth, t_max, rounds, validate)
    if min_gap is None:
        min_gap = profile_from_pair(pair).min_gap
    return SweepPoint(family, int(pair.dim if size is None else size), float(min_gap),
                      sched.family, sched.params.get("p"), float(epsilon), res.t_star,
                      res.error, res.steps)


def _threads() -> int:
    env = os.environ.get("ADIA_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"ADIA_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise DomainError("ADIA_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def scaling_sweep(family: str, sizes, sched_family: str = "power", p: float = DEFAULT_P,
                  epsilon: float = 0.1, t_lo: float = 1.0, growth: float = 2.0, seed: int = 0,
                  dense: bool = False, validate: bool = True) -> list[SweepPoint]:
    sizes = [int(x) for x in sizes]
    if len(sizes) < 3:
        raise DomainError("a sweep needs at least 3 sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("sizes must be strictly ascending")
    _check_search_args(epsilon, t_lo, growth)
    if sched_family not in SCHEDULES:
        raise DomainError(f"unknown schedule family {sched_family!r}")

    def one(size):
        pair, profile, delta_star = build_family(family, size, seed=seed, dense=dense)
        sched = build_schedule(profile, sched_family, p)
        return minimal_runtime(pair, sched, epsilon, t_lo, growth, validate=validate,
                               family=family, size=size, min_gap=delta_star)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(sizes))) as pool:
        points = list(pool.map(one, sizes))
    return sorted(points, key=lambda pt: pt.size)


def fit_power_law(points) -> ScalingFit:
    """OLS of log t_star on log(1 / delta_star)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DomainError("need at least 3 (delta_star, t_star) pairs")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("delta_star and t_star must be positive and finite")
    x, y = np.log(1.0 / pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise DomainError("delta_star values must not all coincide")
    fit = linregress(x, y)
    r2 = min(1.0, max(0.0, float(fit.rvalue) ** 2))
    return ScalingFit(float(fit.slope), float(fit.intercept), r2, np.column_stack([x, y]))


def fit_sweep(points: list[SweepPoint]) -> ScalingFit:
    return fit_power_law([(pt.min_gap, pt.t_star) for pt in points])


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _settings() -> dict:
    return {"bisection_rounds": BISECTION_ROUNDS, "schedule_grid": SCHEDULE_GRID,
            "steps_rule": "max(4096, ceil(64 T))", "t_max": T_MAX, "probe_tol": PROBE_TOL}


def emit_report(results: list[SweepPoint], path, fit: ScalingFit | None = None,
                config: dict | None = None) -> Path:
    """Write ``path`` (JSON) and the same rows as CSV next to it."""
    path = Path(path)
    rows = [asdict(pt) for pt in sorted(results, key=lambda pt: (pt.family, pt.size))]
    doc = {
        "version": __version__,
        "settings": _settings(),
        "config": config or {},
        "fit": fit.to_dict() if fit is not None else None,
        "points": rows,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    with path.with_suffix(".csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r["family"], r["size"], repr(r["min_gap"]), r["schedule_family"],
                        "" if r["p"] is None else repr(r["p"]), repr(r["epsilon"]),
                        repr(r["t_star"]), repr(r["final_error_at_t_star"]), r["steps_used"]])
    return path


def load_report(path) -> tuple[list[SweepPoint], ScalingFit | None, dict]:
    doc = json.loads(Path(path).read_text())
    points = [SweepPoint(**r) for r in doc["points"]]
    fit = None
    if doc.get("fit"):
        f = doc["fit"]
        fit = ScalingFit(f["slope"], f["intercept"], f["r_squared"], np.array(f["points"]))
    return points, fit, doc
