"""Measured constants, gap integrals and c_p against their closed-form bounds."""

from __future__ import annotations

import math

from adia.gap import estimate_measure_constant, gap_power_integral, lemma_bound
from adia.harness import build_family
from adia.schedule import normalization_constant

CASES = [("grover", 4), ("grover", 64), ("qlsa_linear", 2), ("qlsa_linear", 8)]


def main() -> None:
    print(f"{'family':12s} {'size':>5s} {'C_hat':>8s} {'C_ref':>8s}  worst integral/bound")
    for family, size in CASES:
        _, prof, d_star = build_family(family, size)
        c_hat = estimate_measure_constant(prof).constant_hat
        ref = math.sqrt(size / (size - 1)) if family == "grover" else size / (size - 1)
        ratios = [gap_power_integral(prof, a) / lemma_bound(c_hat, a, d_star)
                  for a in (1.5, 2.0, 2.5, 3.0)]
        ratios += [normalization_constant(prof, p) / lemma_bound(c_hat, p, d_star)
                   for p in (1.2, 1.5, 1.8)]
        print(f"{family:12s} {size:5d} {c_hat:8.4f} {ref:8.4f}  {max(ratios):.4f}")


if __name__ == "__main__":
    main()
