"""Schedule functions u(s): linear, gap-adaptive power law, boundary cancellation."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import DomainError, NumericError
from .gap import GapProfile, integrate_profile

DEFAULT_P = 1.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True, eq=False)
class Schedule:
    """Tabulated monotone map s -> (u, u', u'') on nodes spanning [0, 1]."""

    family: str
    s: np.ndarray
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    params: dict = field(default_factory=dict)
    interpolation_order: int = 3

    def __post_init__(self):
        arrays = [np.array(getattr(self, k), dtype=float) for k in ("s", "u", "du", "ddu")]
        n = arrays[0].size
        if any(a.shape != (n,) for a in arrays) or n < 2:
            raise DomainError("schedule node arrays must be 1-D with equal length >= 2")
        s, u, du, _ = arrays
        if abs(s[0]) > 1e-12 or abs(s[-1] - 1) > 1e-12 or np.any(np.diff(s) <= 0):
            raise DomainError("s nodes must increase from 0 to 1")
        if abs(u[0]) > 1e-10 or abs(u[-1] - 1) > 1e-10:
            raise DomainError("schedule must satisfy u(0) = 0 and u(1) = 1")
        if self.family == "boundary_cancellation":
            # derivatives vanish (and underflow) at the ends by design
            if np.any(np.diff(u) < 0) or np.any(du < 0):
                raise DomainError("schedule must be nondecreasing")
        else:
            if np.any(np.diff(u) <= 0):
                raise DomainError("schedule must be strictly increasing")
            if np.any(du <= 0):
                raise DomainError("u' must be positive at every node")
        for name, a in zip(("s", "u", "du", "ddu"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        self.params.setdefault("a", float(du[0]))
        self.params.setdefault("b", float(du[-1]))

    @property
    def size(self) -> int:
        return self.s.size

    @cached_property
    def _interp(self):
        slopes = _limit_slopes(self.s, self.u, self.du.copy())
        return (
            CubicHermiteSpline(self.s, self.u, slopes),
            CubicHermiteSpline(self.s, self.du, self.ddu),
            PchipInterpolator(self.s, self.ddu),
        )

    def __call__(self, s):
        return schedule_eval(self, s)


def _limit_slopes(x, y, m):
    """Fritsch-Carlson limiter: leaves consistent slopes untouched."""
    h = np.diff(x)
    delta = np.diff(y) / h
    for k in range(delta.size):
        if delta[k] == 0.0:
            m[k] = m[k + 1] = 0.0
            continue
        a, b = m[k] / delta[k], m[k + 1] / delta[k]
        r = a * a + b * b
        if r > 9.0:
            t = 3.0 / np.sqrt(r)
            m[k], m[k + 1] = t * a * delta[k], t * b * delta[k]
    return m


def schedule_eval(sched: Schedule, s):
    """(u, u', u'') at s; exact at nodes, cubic Hermite in between."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0) or np.any(~np.isfinite(s_arr)):
        raise DomainError("s outside [0, 1]")
    fu, fdu, fddu = sched._interp
    u, du, ddu = fu(s_arr), fdu(s_arr), fddu(s_arr)
    # snap exact node hits to the stored values
    idx = np.searchsorted(sched.s, s_arr)
    idx = np.clip(idx, 0, sched.size - 1)
    hit = sched.s[idx] == s_arr
    if np.any(hit):
        u = np.where(hit, sched.u[idx], u)
        du = np.where(hit, sched.du[idx], du)
        ddu = np.where(hit, sched.ddu[idx], ddu)
    if s_arr.ndim == 0:
        return float(u), float(du), float(ddu)
    return u, du, ddu


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def _check_p(p: float, allow_any_p: bool) -> None:
    if 1.0 < p < 2.0:
        return
    if not allow_any_p:
        raise DomainError(f"p = {p} outside (1, 2); pass allow_any_p=True to experiment")
    warnings.warn(f"exponent p = {p} outside (1, 2)", RuntimeWarning, stacklevel=3)


def normalization_constant(profile: GapProfile, p: float, allow_any_p: bool = False,
                           rtol: float = 1e-10) -> float:
    """c_p = integral of Delta(u)^-p over [0, 1]."""
    _check_p(p, allow_any_p)
    return integrate_profile(lambda x: float(profile.value(x)) ** (-p), profile, rtol=rtol)


def _gl_integral(profile: GapProfile, p: float, a, b):
    """Vectorized 12-point Gauss-Legendre of Delta^-p over [a_k, b_k]."""
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    return 0.5 * (b - a)[..., 0] * np.sum(_GL_W * profile.value(x) ** (-p), axis=-1)


def synthesize_power_law(profile: GapProfile, p: float = DEFAULT_P, grid_points: int = 1025,
                         allow_any_p: bool = False, u_cells: int | None = None) -> Schedule:
    """Schedule with u' = c_p Delta(u)^p, built by inverting s(u).

    s(u) = c_p^-1 * int_0^u Delta^-p is accumulated cell by cell, inverted on
    a uniform s-grid (monotone cubic guess, then Newton on the exact cell
    integral), and u', u'' are filled analytically from the profile.
    """
    if grid_points < 65:
        raise DomainError("grid_points must be >= 65")
    c_p = normalization_constant(profile, p, allow_any_p=allow_any_p)

    m = u_cells or max(4 * grid_points, 4096)
    ug = np.union1d(np.linspace(0.0, 1.0, m + 1), profile.quad_points())
    cells = _gl_integral(profile, p, ug[:-1], ug[1:])
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    if abs(cum[-1] - c_p) > 1e-9 * c_p:
        raise NumericError(f"cumulative integral {cum[-1]:.15g} disagrees with c_p {c_p:.15g}",
                           achieved=abs(cum[-1] - c_p) / c_p)
    sg = cum / cum[-1]

    s = np.linspace(0.0, 1.0, grid_points)
    k = np.clip(np.searchsorted(sg, s, side="right") - 1, 0, ug.size - 2)
    lo, hi = ug[k], ug[k + 1]
    u = np.clip(PchipInterpolator(sg, ug)(s), lo, hi)
    for _ in range(6):
        f = sg[k] + _gl_integral(profile, p, lo, u) / cum[-1] - s
        step = f * cum[-1] * profile.value(u) ** p
        u = np.clip(u - step, lo, hi)
        if np.max(np.abs(step)) < 1e-15:
            break
    u[0], u[-1] = 0.0, 1.0

    if np.any(np.diff(u) <= 0):
        raise NumericError("inverted schedule is not strictly increasing; refine the grid")
    d = profile.value(u)
    du = c_p * d ** p
    ddu = p * c_p ** 2 * d ** (2 * p - 1) * profile.derivative(u)
    return Schedule("power_law", s, u, du, ddu,
                    params={"p": float(p), "c_p": float(c_p), "gap": profile.kind,
                            "gap_params": _jsonable(profile.params)})


def linear_schedule(grid_points: int = 1025) -> Schedule:
    if grid_points < 2:
        raise DomainError("grid_points must be >= 2")
    s = np.linspace(0.0, 1.0, grid_points)
    return Schedule("linear", s, s.copy(), np.ones_like(s), np.zeros_like(s))


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    ti = t[inner]
    out[inner] = np.exp(-1.0 / (ti * (1.0 - ti)))
    return out


def _bump_derivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    ti = t[inner]
    out[inner] = np.exp(-1.0 / (ti * (1.0 - ti))) * (1.0 - 2.0 * ti) / (ti * (1.0 - ti)) ** 2
    return out


def bump_normalization(rtol: float = 1e-12) -> float:
    """c_e = integral of exp(-1 / (t (1 - t))) over [0, 1], split at 1/2."""
    half, err = quad(lambda t: float(_bump(t)), 0.0, 0.5, epsabs=0.0, epsrel=rtol, limit=200)
    if err > 1e-10 * half:
        raise NumericError("bump normalization did not converge", achieved=err)
    return 2.0 * half


def boundary_cancellation_schedule(grid_points: int = 257) -> Schedule:
    """u(s) = c_e^-1 int_0^s exp(-1/(t(1-t))) dt; every derivative vanishes at 0 and 1."""
    if grid_points < 65:
        raise DomainError("grid_points must be >= 65")
    c_e = bump_normalization()
    s = np.linspace(0.0, 1.0, grid_points)
    left = s[s <= 0.5]
    pieces = [quad(lambda t: float(_bump(t)), a, b, epsabs=0.0, epsrel=1e-12)[0]
              for a, b in zip(left[:-1], left[1:])]
    u_left = np.concatenate([[0.0], np.cumsum(pieces)]) / c_e
    u = np.empty_like(s)
    u[: left.size] = u_left
    # mirror: u(1 - s) = 1 - u(s)
    mirror = s > 0.5
    u[mirror] = 1.0 - np.interp(1.0 - s[mirror], left, u_left)
    if grid_points % 2:
        u[grid_points // 2] = 0.5
    u[0], u[-1] = 0.0, 1.0
    return Schedule("boundary_cancellation", s, u, _bump(s) / c_e, _bump_derivative(s) / c_e,
                    params={"c_e": float(c_e)})


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, (int, float, str, bool)) or v is None:
            out[k] = v
    return out


def write_schedule_csv(sched: Schedule, path) -> Path:
    """Write nodes as CSV 's,u,du,ddu' plus a sidecar JSON with family metadata."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "u", "du", "ddu"])
        for row in zip(sched.s, sched.u, sched.du, sched.ddu):
            w.writerow([repr(float(x)) for x in row])
    meta = {"family": sched.family, "nodes": sched.size,
            "interpolation_order": sched.interpolation_order, "params": _jsonable(sched.params)}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_schedule_csv(path) -> Schedule:
    path = Path(path)
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    if not rows or list(rows[0]) != ["s", "u", "du", "ddu"]:
        raise DomainError(f"{path}: expected header 's,u,du,ddu'")
    cols = {k: np.array([float(r[k]) for r in rows]) for k in ("s", "u", "du", "ddu")}
    family, params = "imported", {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
        family, params = meta.get("family", family), meta.get("params", {})
    return Schedule(family, cols["s"], cols["u"], cols["du"], cols["ddu"], params=params)
