"""Term-by-term evaluation of the adiabatic error bound and its constants.

All values use the convention that the universal constant in front of the
bound equals 1, so they are meaningful only up to that factor. Scaling
statements (exponents, ratios) are unaffected.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import BoundViolationWarning, DomainError, NumericError
from .gap import GapProfile, estimate_measure_constant, gap_power_integral
from .schedule import Schedule, linear_schedule, schedule_eval


@dataclass(frozen=True)
class BoundReport:
    boundary_term_0: float
    boundary_term_1: float
    second_derivative_integral: float
    first_derivative_integral: float
    total_over_T: float
    runtime_T: float
    predicted_eta: float
    metadata: dict = field(default_factory=dict)

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.boundary_term_0, self.boundary_term_1,
                self.second_derivative_integral, self.first_derivative_integral)

    def to_json(self) -> str:
        return json.dumps({**asdict(self), "convention": "modulo universal constant (C=1)"},
                          indent=2, sort_keys=True)


@dataclass(frozen=True)
class TheoreticalConstants:
    c_p: float          # C p / (p - 1)
    c_p_bound: float    # C_p * Delta*^-(p-1), only when min_gap is given
    b1: float
    b2: float
    b0: float


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
MAX_SPLITS = 30


def _gl(f, a, b):
    x = 0.5 * (b - a)[:, None] * _GL_X + 0.5 * (a + b)[:, None]
    return 0.5 * (b - a) * np.sum(_GL_W * f(x.ravel()).reshape(x.shape), axis=1)


def _integral(f, breaks, rtol):
    """Adaptive composite Gauss-Legendre over cells between sorted ``breaks``.

    Each cell's 12-point value is compared against the sum over its two
    halves; cells whose difference is too large are bisected.
    """
    a, b = breaks[:-1], breaks[1:]
    done = 0.0
    done_err = 0.0
    for _ in range(MAX_SPLITS):
        m = 0.5 * (a + b)
        coarse = _gl(f, a, b)
        fine = _gl(f, a, m) + _gl(f, m, b)
        err = np.abs(fine - coarse)
        total = done + float(np.sum(fine))
        budget = rtol * max(abs(total), 1e-300) / 4.0
        ok = err <= budget * (b - a) / max(breaks[-1] - breaks[0], 1e-300)
        done += float(np.sum(fine[ok]))
        done_err += float(np.sum(err[ok]))
        if np.all(ok):
            break
        a, b = np.concatenate([a[~ok], m[~ok]]), np.concatenate([m[~ok], b[~ok]])
    else:
        raise NumericError(f"quadrature did not converge after {MAX_SPLITS} refinements",
                           achieved=float(np.sum(err)))
    if not np.isfinite(done):
        raise NumericError("quadrature produced a non-finite value")
    return done


def _s_knots(profile: GapProfile, sched: Schedule) -> list[float]:
    """Parameter-space features of the profile mapped back to s."""
    u_feats = np.array(profile.quad_points())
    if u_feats.size == 0:
        return []
    return [float(x) for x in np.interp(u_feats, sched.u, sched.s)]


def _breaks(profile: GapProfile, sched: Schedule, s_start: float, s_end: float) -> np.ndarray:
    """Schedule nodes, profile features and sign changes of u'' inside [s_start, s_end]."""
    pts = [sched.s, np.array(_s_knots(profile, sched)), sched._interp[2].roots(extrapolate=False)]
    pts = np.concatenate([np.ravel(x) for x in pts] + [[s_start, s_end]])
    pts = np.unique(pts[np.isfinite(pts) & (pts >= s_start) & (pts <= s_end)])
    return pts


def eta_components(pair_norm_A: float, profile: GapProfile, sched: Schedule, T: float,
                   s_end: float = 1.0, s_start: float = 0.0, rtol: float = 1e-8) -> BoundReport:
    """Boundary terms A u'/Delta^2 and the integrals of A|u''|/Delta^2, A^2 u'^2/Delta^3.

    The first boundary term is always taken at s = 0; ``s_start`` only moves
    the lower limit of the two integrals.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    if not 0.0 < s_end <= 1.0 or not 0.0 <= s_start < s_end:
        raise DomainError("need 0 <= s_start < s_end <= 1")
    A = float(pair_norm_A)

    def ev(s):
        u, du, ddu = schedule_eval(sched, s)
        return u, du, ddu, profile.value(u)

    u0, du0, _, d0 = ev(0.0)
    u1, du1, _, d1 = ev(s_end)
    b0 = A * abs(du0) / float(d0) ** 2
    b1 = A * abs(du1) / float(d1) ** 2
    breaks = _breaks(profile, sched, s_start, s_end)

    def second(s):
        _, _, ddu, d = ev(s)
        return A * np.abs(ddu) / d ** 2

    def first(s):
        _, du, _, d = ev(s)
        return A * A * du * du / d ** 3

    i2 = 0.0 if sched.family == "linear" else _integral(second, breaks, rtol)
    i1 = _integral(first, breaks, rtol)
    total = b0 + b1 + i2 + i1
    return BoundReport(b0, b1, i2, i1, total, float(T), total / T,
                       metadata={"family": sched.family, **{k: v for k, v in sched.params.items()
                                                            if isinstance(v, (int, float, str))},
                                 "gap": profile.kind, "A": A, "s_end": s_end,
                                 "nodes": sched.size})


def theoretical_constants(A: float, C: float, p: float, min_gap: float | None = None) -> TheoreticalConstants:
    if not 1.0 < p < 2.0:
        raise DomainError(f"p = {p} outside (1, 2)")
    if A <= 0 or C <= 0:
        raise DomainError("A and C must be positive")
    c_p = C * p / (p - 1.0)
    c_3p = C * (3.0 - p) / (2.0 - p)
    b2 = A * c_p * c_3p
    b1 = 2.0 * p * b2
    b0 = 2.0 * c_p + b1 + b2
    bound = c_p * min_gap ** (-(p - 1.0)) if min_gap is not None else float("nan")
    return TheoreticalConstants(c_p, bound, b1, b2, b0)


def power_law_component_bounds(A: float, C: float, p: float, min_gap: float) -> tuple[float, ...]:
    """Upper bounds for the four BoundReport components of a power-law schedule.

    These are the bracket bounds (C_p, C_p, B_1, B_2) / Delta* multiplied by
    the overall factor A that BoundReport carries on every component.
    """
    k = theoretical_constants(A, C, p)
    return tuple(A * x / min_gap for x in (k.c_p, k.c_p, k.b1, k.b2))


def measure_constant_for(profile: GapProfile) -> float:
    """Empirical measure constant, or the closed-form one for named families."""
    if profile.kind == "grover":
        n = profile.params["N"]
        return float(np.sqrt(n / (n - 1.0)))
    if profile.kind == "linear" and "kappa" in profile.params:
        k = profile.params["kappa"]
        return k / (k - 1.0) if k > 1 else 1.0
    return estimate_measure_constant(profile).constant_hat


def scaling_check_linear(profile: GapProfile, A: float, measure_constant: float | None = None,
                         slack: float = 0.05) -> float:
    """total_over_T of the linear schedule, checked against (2A + 1.5 C A^2) Delta*^-2."""
    c_hat = estimate_measure_constant(profile).constant_hat if measure_constant is None else measure_constant
    report = eta_components(A, profile, linear_schedule(3), 1.0)
    bound = (2.0 * A + 1.5 * A * A * c_hat) * profile.min_gap ** -2
    if report.total_over_T > bound * (1.0 + slack):
        warnings.warn(f"linear-schedule total {report.total_over_T:.6g} exceeds bound {bound:.6g}",
                      BoundViolationWarning, stacklevel=2)
    return report.total_over_T


def linear_first_derivative_reference(A: float, profile: GapProfile) -> float:
    """A^2 * int Delta^-3, the first-derivative term for u(s) = s."""
    return A * A * gap_power_integral(profile, 3.0)


def write_report(report: BoundReport, path) -> Path:
    path = Path(path)
    path.write_text(report.to_json() + "\n")
    return path
