from __future__ import annotations

import json
import math

import numpy as np
import pytest

from adia.errors import DomainError, NonConvergenceError
from adia.evolve import propagate_final_error
from adia.gap import grover_profile
from adia.harness import (CSV_COLUMNS, SweepPoint, build_family, emit_report, fit_power_law,
                          fit_sweep, load_report, minimal_runtime, scaling_sweep)
from adia.operators import HamiltonianPair, HermitianOperator, build_grover_reduced
from adia.schedule import linear_schedule, synthesize_power_law
from oracles import linear_scan_tstar


@pytest.fixture(scope="module")
def grover_sweeps():
    sizes = [4, 16, 64, 256]
    return {sf: scaling_sweep("grover", sizes, sf, epsilon=0.1) for sf in ("power", "linear")}


def test_static_hamiltonian_needs_no_time():
    h = HermitianOperator(np.diag([0.0, 1.0]))
    pt = minimal_runtime(HamiltonianPair(h, h), linear_schedule(), 0.1, t_lo=2.5, min_gap=1.0)
    assert pt.t_star == 2.5 and pt.final_error_at_t_star <= 1e-10


def test_grover4_tstar_matches_linear_scan():
    pair = build_grover_reduced(4)
    sched = synthesize_power_law(grover_profile(4), 1.5)
    pt = minimal_runtime(pair, sched, 0.1, family="grover", size=4, min_gap=0.5)
    ref = linear_scan_tstar(lambda T: propagate_final_error(pair, sched, T), 0.1,
                            np.arange(1.0, 30.0, 0.01))
    assert pt.t_star == pytest.approx(ref, rel=0.01)
    assert pt.final_error_at_t_star <= 0.1 and pt.steps_used == 4096


def test_grover4_linear_needs_longer_runtime():
    pair = build_grover_reduced(4)
    t_pow = minimal_runtime(pair, synthesize_power_law(grover_profile(4), 1.5), min_gap=0.5).t_star
    t_lin = minimal_runtime(pair, linear_schedule(), min_gap=0.5).t_star
    assert t_lin > t_pow


def test_search_validation():
    pair = build_grover_reduced(4)
    for kwargs in ({"epsilon": 0.6}, {"epsilon": 0.0005}, {"t_lo": 0.0}, {"growth": 1.0}):
        with pytest.raises(DomainError):
            minimal_runtime(pair, linear_schedule(), **kwargs)


def test_non_convergence_carries_diagnostics():
    with pytest.raises(NonConvergenceError) as info:
        minimal_runtime(build_grover_reduced(256), linear_schedule(), 0.1, t_max=20.0,
                        min_gap=1 / 16)
    diag = info.value.diagnostics
    assert diag["t_max"] == 20.0 and len(diag["history"]) >= 2


def test_sweep_point_invariants():
    with pytest.raises(DomainError):
        SweepPoint("grover", 4, 0.5, "linear", None, 0.1, 0.0, 0.0, 4096)
    with pytest.raises(DomainError):
        SweepPoint("grover", 4, 0.5, "linear", None, 0.1, 1.0, 0.2, 4096)


def test_grover_delta_star_column(grover_sweeps):
    assert [pt.min_gap for pt in grover_sweeps["power"][:3]] == [0.5, 0.25, 0.125]
    assert [pt.size for pt in grover_sweeps["power"]] == [4, 16, 64, 256]


def test_linear_system_delta_star_column():
    pts = scaling_sweep("qlsa_linear", [2, 4, 8], "power")
    assert [pt.min_gap for pt in pts] == [0.5, 0.25, 0.125]
    assert all(pt.final_error_at_t_star <= 0.1 for pt in pts)


def test_sweep_validation():
    with pytest.raises(DomainError):
        scaling_sweep("grover", [4, 16], "power")
    with pytest.raises(DomainError):
        scaling_sweep("grover", [16, 4, 64], "power")
    with pytest.raises(DomainError):
        scaling_sweep("grover", [4, 16, 64], "cubic")
    with pytest.raises(DomainError):
        build_family("ising", 4)


def test_thread_env_validation(monkeypatch):
    monkeypatch.setenv("ADIA_THREADS", "zero")
    with pytest.raises(DomainError):
        scaling_sweep("grover", [4, 16, 64], "power")


def test_single_thread_gives_same_points(monkeypatch, grover_sweeps):
    monkeypatch.setenv("ADIA_THREADS", "1")
    assert scaling_sweep("grover", [4, 16, 64, 256], "power") == grover_sweeps["power"]


def test_custom_family_sweep():
    pts = scaling_sweep("custom", [2, 3, 4], "linear", epsilon=0.2, seed=5)
    assert all(pt.min_gap > 0 and pt.t_star > 0 for pt in pts)


def test_exponent_separation(grover_sweeps):
    slope_pow = fit_sweep(grover_sweeps["power"]).slope
    slope_lin = fit_sweep(grover_sweeps["linear"]).slope
    assert slope_pow <= slope_lin - 0.5


def test_tstar_times_delta_star_is_stable():
    pts = scaling_sweep("grover", [4, 16, 64, 256, 1024], "power")
    ratio = [pt.t_star * pt.min_gap for pt in pts]
    assert max(ratio) / min(ratio) < 3.0


@pytest.mark.parametrize("power", [1.0, 2.0])
def test_fit_exact_laws(power):
    d = np.array([0.5, 0.25, 0.125, 0.0625])
    fit = fit_power_law(np.column_stack([d, 3.0 * d ** -power]))
    assert fit.slope == pytest.approx(power, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.points.shape == (4, 2)


def test_fit_validation():
    with pytest.raises(DomainError):
        fit_power_law([(0.5, 1.0), (0.25, 2.0)])
    with pytest.raises(DomainError):
        fit_power_law([(0.5, 1.0), (0.25, -2.0), (0.1, 3.0)])
    with pytest.raises(DomainError):
        fit_power_law([(0.5, 1.0), (0.5, 2.0), (0.5, 3.0)])


def test_fit_r_squared_in_unit_interval():
    rng = np.random.default_rng(0)
    d = np.geomspace(0.01, 1, 8)
    fit = fit_power_law(np.column_stack([d, rng.uniform(1, 10, 8)]))
    assert 0.0 <= fit.r_squared <= 1.0


def test_empty_report(tmp_path):
    path = emit_report([], tmp_path / "r.json")
    doc = json.loads(path.read_text())
    assert doc["points"] == [] and doc["fit"] is None and "version" in doc
    assert (tmp_path / "r.csv").read_text().splitlines() == [",".join(CSV_COLUMNS)]


def test_report_round_trip(tmp_path):
    pt = SweepPoint("grover", 16, 0.25, "power_law", 1.5, 0.1, 16.0123456789, 0.0999, 4096)
    path = emit_report([pt], tmp_path / "r.json", config={"eps": 0.1})
    points, fit, doc = load_report(path)
    assert points == [pt] and fit is None and doc["config"] == {"eps": 0.1}


def test_full_sweep_report(tmp_path, grover_sweeps):
    pts = grover_sweeps["power"]
    fit = fit_sweep(pts)
    path = emit_report(pts, tmp_path / "r.json", fit=fit)
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert len(rows) == len(pts) + 1
    points, back, _ = load_report(path)
    assert points == pts and back.slope == fit.slope


def test_report_is_deterministic(tmp_path):
    a = emit_report(scaling_sweep("grover", [4, 16, 64], "power"), tmp_path / "a.json")
    b = emit_report(scaling_sweep("grover", [4, 16, 64], "power"), tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
