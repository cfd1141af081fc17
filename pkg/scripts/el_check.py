"""Euler-Lagrange residuals and functional values for power-law and linear schedules."""

from __future__ import annotations

import math

from adia.gap import grover_profile, qlsa_linear_profile
from adia.schedule import linear_schedule, synthesize_power_law
from adia.variational import el_full_residual, functional_value, search_below_linear


def main() -> None:
    prof = qlsa_linear_profile(4)
    print("full residual of p = 1.5 on 1 - 3u/4, sampled between schedule nodes")
    for n in (257, 513, 1025, 2049):
        rep = el_full_residual(synthesize_power_law(prof, 1.5, grid_points=n), prof, 1.0,
                               grid=2 * n - 1)
        print(f"  nodes {n:5d}  L2 norm {rep.l2_norm_full:.3e}")

    print("\nfunctional I[u] (linear, p = 1.2, 1.5, 1.8, best sine-perturbed search)")
    cases = [(f"grover N={n}", grover_profile(n), math.sqrt(1 - 1 / n)) for n in (4, 16, 64)]
    cases += [(f"linear kappa={k}", qlsa_linear_profile(k), 1.0) for k in (2, 4, 8)]
    for name, prof, A in cases:
        vals = [functional_value(linear_schedule(), prof, A)]
        vals += [functional_value(synthesize_power_law(prof, p), prof, A) for p in (1.2, 1.5, 1.8)]
        best = search_below_linear(prof, A).value
        print(f"  {name:16s} " + "  ".join(f"{v:9.4f}" for v in vals) + f"  {best:9.4f}")


if __name__ == "__main__":
    main()
