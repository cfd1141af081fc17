"""Spectral-gap profiles u -> Delta(u), measure constants and gap integrals."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import BoundViolationWarning, ComplexityError, DegenerateGapError, DomainError, NumericError
from .operators import HamiltonianPair, gaps_along

LEVEL_CROSSING_TOL = 1e-12
INFLECTION_DEADBAND = 1e-8
MAX_INFLECTIONS = 64
MEASURE_RESOLUTION = 4096


@dataclass(frozen=True, eq=False)
class GapProfile:
    """A strictly positive gap function on [0, 1] with first and second derivatives.

    ``kind`` is one of ``"grover"``, ``"linear"``, ``"tabulated"`` or
    ``"piecewise_linear"``. Build instances with the factory functions below
    rather than directly.
    """

    kind: str
    params: dict
    min_gap: float
    argmin: float
    samples: np.ndarray | None = None
    breakpoints: tuple = ()
    _spline: CubicSpline | None = field(default=None, repr=False)

    def __call__(self, u):
        return self.value(u)

    def value(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "grover":
            k = self.params["k"]
            return np.sqrt(1.0 - k * u * (1.0 - u))
        if self.kind == "linear":
            return self.params["alpha"] * u + self.params["beta"]
        if self.kind == "piecewise_linear":
            return np.interp(u, self.samples[:, 0], self.samples[:, 1])
        return self._spline(u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "grover":
            k = self.params["k"]
            return -k * (1.0 - 2.0 * u) / (2.0 * np.sqrt(1.0 - k * u * (1.0 - u)))
        if self.kind == "linear":
            return np.full_like(u, self.params["alpha"])
        if self.kind == "piecewise_linear":
            x, y = self.samples[:, 0], self.samples[:, 1]
            slopes = np.diff(y) / np.diff(x)
            idx = np.clip(np.searchsorted(x, u, side="right") - 1, 0, len(slopes) - 1)
            return slopes[idx]
        return self._spline(u, 1)

    def second_derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "grover":
            k = self.params["k"]
            d = np.sqrt(1.0 - k * u * (1.0 - u))
            d1 = -k * (1.0 - 2.0 * u) / (2.0 * d)
            return (k - d1 ** 2) / d
        if self.kind in ("linear", "piecewise_linear"):
            return np.zeros_like(u)
        return self._spline(u, 2)

    @property
    def is_closed_form(self) -> bool:
        return self.kind in ("grover", "linear")

    def max_gap(self, resolution: int = MEASURE_RESOLUTION) -> float:
        return float(np.max(self.value(np.linspace(0.0, 1.0, resolution))))

    def quad_points(self) -> list[float]:
        pts = {float(self.argmin), *map(float, self.breakpoints)}
        return sorted(p for p in pts if 0.0 < p < 1.0)

    def to_config(self) -> dict:
        if self.kind == "grover":
            return {"kind": "grover", "N": self.params["N"]}
        if self.kind == "linear":
            return {"kind": "linear", "alpha": self.params["alpha"], "beta": self.params["beta"]}
        raise DomainError(f"{self.kind} profiles serialize as CSV, not config")


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def grover_profile(num_items: int) -> GapProfile:
    n = int(num_items)
    if n < 2:
        raise DomainError(f"Grover needs N >= 2, got {num_items}")
    return GapProfile("grover", {"N": n, "k": 4.0 * (1.0 - 1.0 / n)},
                      min_gap=1.0 / math.sqrt(n), argmin=0.5)


def linear_profile(alpha: float, beta: float) -> GapProfile:
    """Delta(u) = alpha * u + beta."""
    alpha, beta = float(alpha), float(beta)
    if beta <= 0 or alpha + beta <= 0:
        raise DomainError("linear gap must stay positive on [0, 1]")
    lo_at_one = alpha < 0
    return GapProfile("linear", {"alpha": alpha, "beta": beta},
                      min_gap=alpha + beta if lo_at_one else beta,
                      argmin=1.0 if lo_at_one else 0.0)


def qlsa_linear_profile(kappa: float) -> GapProfile:
    """The lower bound 1 - u + u / kappa of the linear-system family."""
    if kappa < 1:
        raise DomainError("condition number must be >= 1")
    prof = linear_profile(-(1.0 - 1.0 / kappa), 1.0)
    prof.params["kappa"] = float(kappa)
    return prof


def constant_profile(value: float = 1.0) -> GapProfile:
    return linear_profile(0.0, value)


def tabulated_profile(u, delta, min_gap: float | None = None,
                      argmin: float | None = None) -> GapProfile:
    u = np.asarray(u, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if u.ndim != 1 or u.shape != delta.shape or u.size < 2:
        raise DomainError("need matching 1-D u and delta arrays")
    if np.any(np.diff(u) <= 0):
        raise DomainError("u samples must be strictly increasing")
    if abs(u[0]) > 1e-12 or abs(u[-1] - 1.0) > 1e-12:
        raise DomainError("u samples must cover 0 and 1")
    if np.any(delta <= LEVEL_CROSSING_TOL):
        raise DegenerateGapError("gap closes on the tabulated grid")
    u = u.copy()
    u[0], u[-1] = 0.0, 1.0
    i = int(np.argmin(delta))
    spline = CubicSpline(u, delta) if u.size >= 4 else CubicSpline(u, delta, bc_type="natural")
    return GapProfile(
        "tabulated", {"n": int(u.size)},
        min_gap=float(delta[i]) if min_gap is None else float(min_gap),
        argmin=float(u[i]) if argmin is None else float(argmin),
        samples=np.column_stack([u, delta]),
        _spline=spline,
    )


def piecewise_linear_profile(u, delta, min_gap: float | None = None) -> GapProfile:
    u = np.asarray(u, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if np.any(np.diff(u) <= 0) or u[0] != 0.0 or u[-1] != 1.0:
        raise DomainError("breakpoints must increase from 0 to 1")
    if np.any(delta <= 0):
        raise DegenerateGapError("piecewise-linear gap must be positive")
    i = int(np.argmin(delta))
    return GapProfile(
        "piecewise_linear", {"pieces": int(u.size - 1)},
        min_gap=float(delta[i]) if min_gap is None else float(min_gap),
        argmin=float(u[i]),
        samples=np.column_stack([u, delta]),
        breakpoints=tuple(float(x) for x in u[1:-1]),
    )


def profile_from_pair(pair: HamiltonianPair, grid_points: int = 257) -> GapProfile:
    """Tabulate lambda_2 - lambda_1 of the pair and refine its minimum."""
    if grid_points < 2:
        raise DomainError("grid_points must be >= 2")
    u = np.linspace(0.0, 1.0, int(grid_points))
    d = gaps_along(pair, u)
    if np.min(d) < LEVEL_CROSSING_TOL:
        j = int(np.argmin(d))
        raise DegenerateGapError(f"level crossing near u = {u[j]:.6g} (gap {d[j]:.3e})")
    i = int(np.argmin(d))
    min_gap, argmin = float(d[i]), float(u[i])
    if 0 < i < len(u) - 1:
        res = minimize_scalar(lambda x: gaps_along(pair, np.array([x]))[0],
                              bounds=(u[i - 1], u[i + 1]), method="bounded",
                              options={"xatol": 1e-10})
        if res.fun < min_gap:
            min_gap, argmin = float(res.fun), float(res.x)
    if min_gap < LEVEL_CROSSING_TOL:
        raise DegenerateGapError(f"level crossing near u = {argmin:.6g}")
    return tabulated_profile(u, d, min_gap=min_gap, argmin=argmin)


# ---------------------------------------------------------------------------
# Measure condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureEstimate:
    constant_hat: float
    witness_x: float
    grid_resolution: int
    x_grid: int = 0


def sublevel_measure(profile: GapProfile, x, resolution: int = MEASURE_RESOLUTION):
    """Trapezoidal measure of {u : Delta(u) <= x} on a uniform u-grid."""
    u = np.linspace(0.0, 1.0, resolution)
    d = profile.value(u)
    w = np.full(resolution, 1.0 / (resolution - 1))
    w[0] = w[-1] = 0.5 / (resolution - 1)
    order = np.argsort(d, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(w[order])])
    return cum[np.searchsorted(d[order], np.asarray(x, dtype=float), side="right")]


def estimate_measure_constant(profile: GapProfile, x_grid: int = 256,
                              resolution: int = MEASURE_RESOLUTION) -> MeasureEstimate:
    """max over x in (Delta*, max Delta] of mu({Delta <= x}) / x."""
    if x_grid < 64:
        raise DomainError("x_grid must be >= 64")
    d_max = profile.max_gap(resolution)
    d_min = profile.min_gap
    if d_max - d_min <= 1e-12 * d_max:
        xs = np.array([d_max])
    else:
        xs = np.linspace(d_min, d_max, x_grid + 1)[1:]
    ratio = sublevel_measure(profile, xs, resolution) / xs
    j = int(np.argmax(ratio))
    return MeasureEstimate(float(ratio[j]), float(xs[j]), resolution, int(xs.size))


# ---------------------------------------------------------------------------
# Piecewise-linear lower bound
# ---------------------------------------------------------------------------


def _sign_changes(values: np.ndarray, deadband: float) -> np.ndarray:
    s = np.sign(values)
    s[np.abs(values) <= deadband] = 0
    # carry the last nonzero sign through the dead-band
    idx = np.where(s != 0, np.arange(s.size), 0)
    np.maximum.accumulate(idx, out=idx)
    s = s[idx]
    return np.nonzero(s[1:] * s[:-1] < 0)[0] + 1


def pl_lower_bound(profile: GapProfile, resolution: int = 4097) -> GapProfile:
    """Piecewise-linear Delta_l <= Delta with inf Delta_l = Delta*.

    [0, 1] is cut at inflection points and extrema. Convex pieces take the
    tangent at their larger-gap end, concave pieces the secant; every piece is
    clipped from below at Delta*, which leaves a flat floor around the minimum.
    """
    if profile.kind in ("linear", "piecewise_linear"):
        return profile
    if profile.kind == "tabulated" and profile.samples.shape[0] < 33:
        raise DomainError("tabulated profile needs at least 33 samples")
    u = np.linspace(0.0, 1.0, resolution)
    d = profile.value(u)
    floor = profile.min_gap
    if np.ptp(d) <= 1e-14 * np.max(d):
        return piecewise_linear_profile([0.0, 1.0], [float(d[0]), float(d[0])])
    d1 = profile.derivative(u)
    d2 = profile.second_derivative(u)
    inflections = _sign_changes(d2, INFLECTION_DEADBAND)
    if inflections.size > MAX_INFLECTIONS:
        raise ComplexityError(f"{inflections.size} inflection points (limit {MAX_INFLECTIONS})")
    extrema = _sign_changes(d1, 0.0)
    cuts = np.unique(np.concatenate([[0], inflections, extrema, [resolution - 1]]))

    values = np.full(resolution, np.inf)
    for a, b in zip(cuts[:-1], cuts[1:]):
        idx = np.arange(a, b + 1)
        convex = np.median(d2[idx]) >= 0
        if convex:
            j = a if d[a] >= d[b] else b
            line = d[j] + d1[j] * (u[idx] - u[j])
        else:
            line = d[a] + (d[b] - d[a]) * (u[idx] - u[a]) / (u[b] - u[a])
        # shared cut points keep the smaller of the two neighbouring lines
        values[idx] = np.minimum(values[idx], np.maximum(line, floor))
    values = np.minimum(values, d)
    # chords can overshoot a convex Delta between samples; measure at midpoints
    over = 0.5 * (values[:-1] + values[1:]) - profile.value(0.5 * (u[:-1] + u[1:]))
    seg = np.flatnonzero(over > 0)
    if seg.size:
        np.minimum.at(values, seg, values[seg] - 1.25 * over[seg])
        np.minimum.at(values, seg + 1, values[seg + 1] - 1.25 * over[seg])
    floor = min(floor, float(np.min(values)))

    # drop collinear interior samples
    slopes = np.diff(values) / np.diff(u)
    keep = np.concatenate([[True], np.abs(np.diff(slopes)) > 1e-9 * (1 + np.abs(slopes[1:])), [True]])
    out = piecewise_linear_profile(u[keep], values[keep], min_gap=floor)
    kinks = np.array(out.breakpoints)
    pos_slopes = np.abs(np.diff(out.samples[:, 1]) / np.diff(out.samples[:, 0]))
    nonflat = pos_slopes[pos_slopes > 1e-12]
    signs = np.sign(np.diff(out.samples[:, 1]))
    signs = signs[signs != 0]
    valleys = int(np.sum((signs[:-1] < 0) & (signs[1:] > 0)))
    if signs.size:
        valleys += int(signs[0] > 0) + int(signs[-1] < 0)
    out.params.update({
        "n_kinks": int(kinks.size),
        "n_valleys": valleys,
        "min_slope": float(nonflat.min()) if nonflat.size else 0.0,
        "source": profile.kind,
    })
    return out


# ---------------------------------------------------------------------------
# Gap integrals
# ---------------------------------------------------------------------------


def integrate_profile(func, profile: GapProfile, a: float = 0.0, b: float = 1.0,
                      rtol: float = 1e-8) -> float:
    pts = [p for p in profile.quad_points() if a < p < b]
    val, err = quad(func, a, b, points=pts or None, epsabs=0.0, epsrel=rtol, limit=1000)
    if not np.isfinite(val) or err > max(rtol * abs(val), 1e-14) * 10:
        raise NumericError(f"quadrature did not converge (est. error {err:.3e})", achieved=err)
    return float(val)


def lemma_bound(measure_constant: float, alpha: float, min_gap: float) -> float:
    """C * alpha / (alpha - 1) * Delta*^-(alpha - 1)."""
    return measure_constant * alpha / (alpha - 1.0) * min_gap ** (-(alpha - 1.0))


def gap_power_integral(profile: GapProfile, alpha: float,
                       measure: MeasureEstimate | float | None = None,
                       rtol: float = 1e-8) -> float:
    """Integral of Delta(u)^-alpha over [0, 1].

    When a measure constant is supplied the value is also compared against
    the gap-integral bound (2% discretization slack); exceeding it emits a
    BoundViolationWarning.
    """
    if alpha <= 1:
        raise DomainError("alpha must exceed 1")
    val = integrate_profile(lambda x: float(profile.value(x)) ** (-alpha), profile, rtol=rtol)
    if measure is not None:
        c_hat = measure.constant_hat if isinstance(measure, MeasureEstimate) else float(measure)
        bound = lemma_bound(c_hat, alpha, profile.min_gap)
        if val > bound * 1.02:
            warnings.warn(f"gap integral {val:.6g} exceeds lemma bound {bound:.6g}",
                          BoundViolationWarning, stacklevel=2)
    return val


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_profile_csv(profile: GapProfile, path, grid_points: int = 257) -> Path:
    path = Path(path)
    if profile.samples is not None and profile.kind != "grover":
        u, d = profile.samples[:, 0], profile.samples[:, 1]
    else:
        u = np.linspace(0.0, 1.0, grid_points)
        d = profile.value(u)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "delta"])
        for a, b in zip(u, d):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def read_profile_csv(path) -> GapProfile:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"u", "delta"}:
        raise DomainError(f"{path}: expected header 'u,delta'")
    u = np.array([float(r["u"]) for r in rows])
    d = np.array([float(r["delta"]) for r in rows])
    return tabulated_profile(u, d)


def profile_from_config(cfg: dict) -> GapProfile:
    kind = cfg.get("kind")
    if kind == "grover":
        return grover_profile(cfg["N"])
    if kind == "linear":
        return linear_profile(cfg["alpha"], cfg["beta"])
    raise DomainError(f"unknown profile kind {kind!r}")
