"""Euler-Lagrange residuals of the schedule error functional.

The functional is I[u] = int_0^1 A |u''| / Delta^2(u) + A^2 u'^2 / Delta^3(u) ds.
Residuals are evaluated pointwise from (u, u', u'') supplied by the
schedule and (Delta, Delta', Delta'') supplied by the profile.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize

from .errors import DomainError
from .gap import GapProfile
from .schedule import Schedule, linear_schedule, schedule_eval

SGN_DEADBAND = 1e-12
KINK_CELLS = 2


@dataclass(frozen=True, eq=False)
class ELResidualReport:
    s_grid: np.ndarray
    full_residual: np.ndarray
    l1_residual: np.ndarray
    l2_residual: np.ndarray
    l2_norm_full: float
    scale: np.ndarray
    mask: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def full_normalized(self) -> np.ndarray:
        return self.full_residual / self.scale


@dataclass(frozen=True)
class _Pointwise:
    s: np.ndarray
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    d: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def _evaluate(sched: Schedule, profile: GapProfile, grid: int) -> _Pointwise:
    if grid < 3:
        raise DomainError("grid must be >= 3")
    if profile.kind == "tabulated" and profile.samples.shape[0] < 4:
        raise DomainError("tabulated profile has too few samples for Delta''")
    s = np.linspace(0.0, 1.0, grid)
    u, du, ddu = schedule_eval(sched, s)
    return _Pointwise(s, u, du, ddu, profile.value(u), profile.derivative(u),
                      profile.second_derivative(u))


def _sgn(ddu: np.ndarray, sched: Schedule) -> np.ndarray:
    c = float(sched.params.get("c_p", 1.0))
    out = np.sign(ddu)
    out[np.abs(ddu) <= SGN_DEADBAND * c * c] = 0.0
    return out


def _kink_mask(sched: Schedule, profile: GapProfile, s: np.ndarray) -> np.ndarray:
    """True where a grid point is more than KINK_CELLS cells from every kink."""
    mask = np.ones_like(s, dtype=bool)
    if profile.kind != "piecewise_linear" or not profile.breakpoints:
        return mask
    s_kinks = np.interp(np.array(profile.breakpoints), sched.u, sched.s)
    h = s[1] - s[0]
    for sk in s_kinks:
        mask &= np.abs(s - sk) > KINK_CELLS * h
    return mask


def _full_terms(pt: _Pointwise, A: float, sgn: np.ndarray) -> np.ndarray:
    d, d1, d2, du, ddu = pt.d, pt.d1, pt.d2, pt.du, pt.ddu
    return np.stack([
        -2.0 * np.abs(ddu) * d1 / d ** 3,
        3.0 * A * du ** 2 * d1 / d ** 4,
        -2.0 * A * ddu / d ** 3,
        6.0 * sgn * d1 ** 2 * du ** 2 / d ** 4,
        -2.0 * sgn * d2 * du ** 2 / d ** 3,
        -2.0 * sgn * d1 * ddu / d ** 3,
    ])


def _l1(pt: _Pointwise) -> np.ndarray:
    # u'' >= 0 branch: |u''| replaced by u''
    d, d1, d2, du, ddu = pt.d, pt.d1, pt.d2, pt.du, pt.ddu
    return (-2.0 * ddu * d1 / d ** 3 + 6.0 * d1 ** 2 * du ** 2 / d ** 4
            - 2.0 * d2 * du ** 2 / d ** 3 - 2.0 * d1 * ddu / d ** 3)


def _l2(pt: _Pointwise) -> np.ndarray:
    return 2.0 * pt.d * pt.ddu - 3.0 * pt.du ** 2 * pt.d1


def discrete_l2_norm(values: np.ndarray, s: np.ndarray, mask: np.ndarray | None = None) -> float:
    """sqrt(h * sum r_i^2) over the (masked) uniform grid."""
    h = s[1] - s[0]
    v = values if mask is None else values[mask]
    return float(np.sqrt(h * np.sum(v ** 2)))


def el_full_residual(sched: Schedule, profile: GapProfile, A: float, grid: int = 1025) -> ELResidualReport:
    pt = _evaluate(sched, profile, grid)
    sgn = _sgn(pt.ddu, sched)
    full = np.sum(_full_terms(pt, A, sgn), axis=0)
    mask = _kink_mask(sched, profile, pt.s)
    scale = np.maximum(1.0, A / pt.d ** 4)
    meta = {
        "schedule": sched.family, "p": sched.params.get("p"), "gap": profile.kind,
        "A": float(A), "grid": int(grid),
        "negative_branch_points": int(np.sum(pt.ddu < 0)),
        "excluded_near_kinks": int(np.sum(~mask)),
    }
    return ELResidualReport(pt.s, full, _l1(pt), _l2(pt), discrete_l2_norm(full, pt.s, mask),
                            scale, mask, meta)


def el_terms(sched: Schedule, profile: GapProfile, A: float, grid: int = 1025) -> np.ndarray:
    """The six Euler-Lagrange terms individually, shape (6, grid)."""
    pt = _evaluate(sched, profile, grid)
    return _full_terms(pt, A, _sgn(pt.ddu, sched))


def l1_residual(sched: Schedule, profile: GapProfile, grid: int = 1025) -> np.ndarray:
    return _l1(_evaluate(sched, profile, grid))


def l2_residual(sched: Schedule, profile: GapProfile, grid: int = 1025) -> np.ndarray:
    return _l2(_evaluate(sched, profile, grid))


def functional_value(sched: Schedule, profile: GapProfile, A: float) -> float:
    """Composite Simpson over the schedule nodes."""
    d = profile.value(sched.u)
    integrand = A * np.abs(sched.ddu) / d ** 2 + A * A * sched.du ** 2 / d ** 3
    return float(simpson(integrand, x=sched.s))


def compare_functionals(sched_a: Schedule, sched_b: Schedule, profile: GapProfile,
                        A: float) -> tuple[float, float]:
    return functional_value(sched_a, profile, A), functional_value(sched_b, profile, A)


def sine_perturbed_schedule(coeffs, grid_points: int = 1025) -> Schedule:
    """u(s) = s + sum_k a_k sin(k pi s) / (k pi); u' = 1 + sum_k a_k cos(k pi s)."""
    a = np.asarray(coeffs, dtype=float).reshape(-1)
    s = np.linspace(0.0, 1.0, grid_points)
    k = np.arange(1, a.size + 1)[:, None] * np.pi
    u = s + np.sum(a[:, None] * np.sin(k * s) / k, axis=0)
    du = 1.0 + np.sum(a[:, None] * np.cos(k * s), axis=0)
    ddu = -np.sum(a[:, None] * k * np.sin(k * s), axis=0)
    u[0], u[-1] = 0.0, 1.0
    return Schedule("sine_perturbed", s, u, du, ddu, params={"coeffs": a.tolist()})


@dataclass(frozen=True, eq=False)
class ScheduleSearch:
    schedule: Schedule
    value: float
    linear_value: float

    @property
    def improves(self) -> bool:
        return self.value < self.linear_value


def search_below_linear(profile: GapProfile, A: float, modes: int = 4, starts: int = 6,
                        seed: int = 0, grid_points: int = 2049) -> ScheduleSearch:
    """Nelder-Mead over sine perturbations of u(s) = s, minimizing the functional.

    Starts from the linear schedule and from ``starts`` random coefficient
    vectors; returns the best schedule found (linear itself if nothing beats it).
    """
    if modes < 1:
        raise DomainError("modes must be >= 1")

    def objective(a):
        k = np.arange(1, a.size + 1)[:, None] * np.pi
        s = np.linspace(0.0, 1.0, grid_points)
        du = 1.0 + np.sum(a[:, None] * np.cos(k * s), axis=0)
        if du.min() <= 0.0:
            return np.inf
        return functional_value(sine_perturbed_schedule(a, grid_points), profile, A)

    lin = functional_value(linear_schedule(grid_points), profile, A)
    rng = np.random.default_rng(seed)
    best_x, best_f = np.zeros(modes), lin
    for x0 in [np.zeros(modes)] + [rng.normal(0.0, 0.2, modes) for _ in range(starts)]:
        r = minimize(objective, x0, method="Nelder-Mead",
                     options={"maxiter": 400 * modes, "xatol": 1e-8, "fatol": 1e-10})
        if r.fun < best_f:
            best_x, best_f = r.x, float(r.fun)
    return ScheduleSearch(sine_perturbed_schedule(best_x, grid_points), best_f, lin)


def write_residual_report(report: ELResidualReport, path) -> Path:
    """CSV 's,full,l1,l2' plus a JSON summary next to it."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "full", "l1", "l2"])
        for row in zip(report.s_grid, report.full_residual, report.l1_residual, report.l2_residual):
            w.writerow([repr(float(x)) for x in row])
    summary = {
        "l2_norm_full": report.l2_norm_full,
        "max_abs_full": float(np.max(np.abs(report.full_residual[report.mask]))),
        "max_abs_full_normalized": float(np.max(np.abs(report.full_normalized[report.mask]))),
        "max_abs_l1": float(np.max(np.abs(report.l1_residual[report.mask]))),
        "max_abs_l2": float(np.max(np.abs(report.l2_residual))),
        **{k: v for k, v in report.metadata.items() if v is not None},
    }
    path.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path
