"""Compare local spacing statistics across two different ensembles.

After unfolding (rescaling gaps by n times the local density), bulk
spacing statistics should not depend on the potential at all. The KS
distance between unfolded gap samples is held against the split-sample
noise floor of the reference run, which is what "indistinguishable"
means at finite sample size.
"""

import numpy as np

from betalab import (
    make_potential,
    sample_gaussian,
    sample_mcmc,
    solve_equilibrium,
    universality_distance,
)

n, count, halfwidth = 120, 400, 0.2

quartic_pot = make_potential("even-quartic", g=0.1)
quartic_eq = solve_equilibrium(quartic_pot)
gauss_eq = solve_equilibrium(make_potential("gaussian"))

quartic = sample_mcmc(quartic_pot, n, 2.0, count, seed=14, eq=quartic_eq)
gauss = sample_gaussian(n, 2.0, count, seed=15, window=quartic.window)

print(f"n = {n}, {count} configurations per ensemble, beta = 2")
print("quartic center   ks distance   noise floor   pooled gaps   verdict")
for center in (0.0, 0.5, -1.0):
    dist = universality_distance(quartic, quartic_eq, center, gauss, gauss_eq, 0.0, halfwidth)
    verdict = "same law" if dist.passed() else "DIFFERENT"
    print(
        f"{center:+.1f}             {dist.ks_distance:.4f}        {dist.noise_floor:.4f}        "
        f"{min(dist.gaps_a, dist.gaps_b):5d}       {verdict}"
    )

print()
print("microscopic linear statistics (z-scores, quartic at 0.0 vs gaussian):")
dist = universality_distance(quartic, quartic_eq, 0.0, gauss, gauss_eq, 0.0, halfwidth)
print(f"  {np.array2string(dist.phi_z, precision=2)}")
