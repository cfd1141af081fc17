"""End-to-end acceptance checks.

Each test prints one ``[acceptance n] PASS|FAIL`` line (also repeated in the
terminal summary) and asserts the criterion at its stated tolerance.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from adia.bounds import eta_components, linear_first_derivative_reference, power_law_component_bounds
from adia.cli import main
from adia.evolve import convergence_probe, propagate, richardson_ratio
from adia.gap import (constant_profile, estimate_measure_constant, gap_power_integral,
                      grover_profile, lemma_bound, qlsa_linear_profile)
from adia.harness import build_family, fit_sweep, scaling_sweep
from adia.operators import HamiltonianPair, HermitianOperator, build_grover_reduced
from adia.schedule import linear_schedule, normalization_constant, synthesize_power_law
from adia.variational import el_full_residual, functional_value, l2_residual
from oracles import linear_family_cp

RESULTS: list[str] = []

GROVER_SIZES = (4, 64)
KAPPAS = (2, 8)
FAMILIES = [("grover", n) for n in GROVER_SIZES] + [("qlsa_linear", k) for k in KAPPAS]


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"[acceptance {n}] {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)


def grover_A(n):
    return math.sqrt(1 - 1 / n)


def family_setup(family, size):
    pair, profile, delta_star = build_family(family, size)
    c_hat = estimate_measure_constant(profile, resolution=4096).constant_hat
    return pair, profile, delta_star, c_hat


@pytest.fixture(scope="module")
def setups():
    return {key: family_setup(*key) for key in FAMILIES}


def test_1_grover_exponent_separation():
    sizes = (4, 16, 64, 256, 1024)
    fits = {}
    for sched in ("power", "linear"):
        fits[sched] = fit_sweep(scaling_sweep("grover", sizes, sched, p=1.5, epsilon=0.1))
    pw, ln = fits["power"], fits["linear"]
    ok = (0.85 <= pw.slope <= 1.15 and pw.r_squared >= 0.98
          and 1.8 <= ln.slope <= 2.2 and ln.r_squared >= 0.98)
    verdict(1, ok, f"power slope {pw.slope:.4f} (r2 {pw.r_squared:.4f}) in [0.85, 1.15]; "
                   f"linear slope {ln.slope:.4f} (r2 {ln.r_squared:.4f}) in [1.8, 2.2]")
    assert ok


def test_2_measure_constants(setups):
    rows, ok = [], True
    for (family, size), (_, profile, _, c_hat) in setups.items():
        ref = math.sqrt(size / (size - 1)) if family == "grover" else size / (size - 1)
        good = abs(c_hat - ref) <= 0.05 * ref
        ok &= good
        rows.append(f"{family}:{size} C^={c_hat:.4f} vs {ref:.4f}")
    verdict(2, ok, "; ".join(rows))
    assert ok


def test_3_gap_integral_lemma(setups):
    worst, ok = 0.0, True
    for (_, profile, delta_star, c_hat) in setups.values():
        for alpha in (1.5, 2.0, 2.5, 3.0):
            val = gap_power_integral(profile, alpha)
            ratio = val / (lemma_bound(c_hat, alpha, delta_star) * 1.02)
            worst = max(worst, ratio)
            ok &= ratio <= 1.0
    verdict(3, ok, f"max integral / (1.02 * bound) = {worst:.4f}")
    assert ok


def test_4_cp_bound_and_closed_form(setups):
    worst, worst_rel, ok = 0.0, 0.0, True
    for (family, size), (_, profile, delta_star, c_hat) in setups.items():
        for p in (1.2, 1.5, 1.8):
            c_p = normalization_constant(profile, p)
            ratio = c_p / (c_hat * p / (p - 1) * delta_star ** (-(p - 1)) * 1.02)
            worst = max(worst, ratio)
            ok &= ratio <= 1.0
            if family == "qlsa_linear":
                rel = abs(c_p / linear_family_cp(size, p) - 1)
                worst_rel = max(worst_rel, rel)
                ok &= rel <= 1e-7
    verdict(4, ok, f"max c_p / (1.02 * bound) = {worst:.4f}; closed-form rel err {worst_rel:.2e}")
    assert ok


def test_5_euler_lagrange_optimality():
    prof = qlsa_linear_profile(4)
    norms = []
    for n in (257, 513, 1025):
        sched = synthesize_power_law(prof, 1.5, grid_points=n)
        norms.append(el_full_residual(sched, prof, 1.0, grid=2 * n - 1).l2_norm_full)
    at_1025 = el_full_residual(synthesize_power_law(prof, 1.5), prof, 1.0, grid=1025).l2_norm_full
    halving = norms[1] <= norms[0] / 2 and norms[2] <= norms[1] / 2
    l2_ok, l2_worst = True, 0.0
    for gp in (constant_profile(0.8), qlsa_linear_profile(4), grover_profile(16), grover_profile(64)):
        sched = synthesize_power_law(gp, 1.5)
        scale = sched.params["c_p"] ** 2 * gp.max_gap() ** 3
        r = float(np.max(np.abs(l2_residual(sched, gp)))) / scale
        l2_worst = max(l2_worst, r)
        l2_ok &= r <= 1e-6
    ok = at_1025 <= 1e-4 and halving and l2_ok
    verdict(5, ok, f"full L2 norm {at_1025:.2e} at grid 1025; off-node norms "
                   f"{', '.join(f'{x:.2e}' for x in norms)}; max |L2 comp|/scale {l2_worst:.2e}")
    assert ok


def test_6_linear_schedule_non_optimality():
    worst = 0.0
    for kappa in (2, 4, 8):
        prof = qlsa_linear_profile(kappa)
        rep = el_full_residual(linear_schedule(), prof, 1.0)
        u = rep.s_grid
        ref = 3.0 * prof.derivative(u) / prof.value(u) ** 4
        worst = max(worst, float(np.max(np.abs(rep.full_residual - ref) / np.abs(ref))))
    residual_ok = worst <= 1e-8
    comparisons, cmp_ok = [], True
    for prof, A, name in ((grover_profile(16), grover_A(16), "grover:16"),
                          (qlsa_linear_profile(4), 1.0, "qlsa_linear:4")):
        i_pow = functional_value(synthesize_power_law(prof, 1.5), prof, A)
        i_lin = functional_value(linear_schedule(), prof, A)
        cmp_ok &= i_pow < i_lin
        comparisons.append(f"{name} I[p=1.5]={i_pow:.4f} vs I[linear]={i_lin:.4f}")
    ok = residual_ok and cmp_ok
    verdict(6, ok, f"residual rel err {worst:.2e}; " + "; ".join(comparisons))
    assert ok


def test_7_dynamics_integrity():
    pair = build_grover_reduced(16)
    trace = propagate(pair, synthesize_power_law(grover_profile(16), 1.5), 40.0, 100_000)
    drift = float(np.max(np.abs(np.linalg.norm(trace.states, axis=1) - 1)))
    h = HermitianOperator(np.diag([0.0, 0.5, 1.0]))
    static = float(np.max(propagate(HamiltonianPair(h, h), linear_schedule(), 50.0, 4096).errors))
    probe = convergence_probe(build_grover_reduced(4), synthesize_power_law(grover_profile(4), 1.5),
                              50.0, [512, 1024, 2048])
    ratio = richardson_ratio(probe)
    ok = drift < 1e-9 and abs(static) <= 1e-10 and ratio <= 1 / 3
    verdict(7, ok, f"norm drift {drift:.2e}; static error {static:.2e}; Richardson ratio {ratio:.4f}")
    assert ok


def test_8_bound_component_consistency(setups):
    worst_rel, worst_ratio, ok = 0.0, 0.0, True
    for (pair, profile, delta_star, c_hat) in setups.values():
        A = pair.diff_norm
        lin = eta_components(A, profile, linear_schedule(), 1.0)
        rel = abs(lin.first_derivative_integral / linear_first_derivative_reference(A, profile) - 1)
        worst_rel = max(worst_rel, rel)
        ok &= rel <= 1e-7
        rep = eta_components(A, profile, synthesize_power_law(profile, 1.5), 1.0)
        for comp, bound in zip(rep.components, power_law_component_bounds(A, c_hat, 1.5, delta_star)):
            worst_ratio = max(worst_ratio, comp / (bound * 1.05))
            ok &= comp <= bound * 1.05
    verdict(8, ok, f"linear first-derivative rel err {worst_rel:.2e}; "
                   f"max component / (1.05 * bound) = {worst_ratio:.4f}")
    assert ok


def test_9_determinism(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    flags = ["sweep", "--family", "grover", "--sizes", "4,16,64", "--schedule", "power",
             "--p", "1.5", "--eps", "0.1"]
    codes = [main(flags + ["--out", f"run{i}.json"]) for i in range(2)]
    same = (tmp_path / "run0.json").read_bytes() == (tmp_path / "run1.json").read_bytes()
    same_csv = (tmp_path / "run0.csv").read_bytes() == (tmp_path / "run1.csv").read_bytes()
    ok = codes == [0, 0] and same and same_csv
    verdict(9, ok, f"exit codes {codes}; JSON identical {same}; CSV identical {same_csv}")
    assert ok
