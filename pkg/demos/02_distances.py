"""Kolmogorov, total variation and Levy distances; the concentration function.

Run:  python3 demos/02_distances.py
"""
import numpy as np

from poisson_approx import dist_core as dc
from poisson_approx import metrics as mt

E1 = dc.point_mass(1)
P = dc.compound_poisson(1.0, E1)
print(f"rho(E_1, e(E_1))  = {mt.kolmogorov_rho(E1, P):.7f}")
print(f"TV(E_1, e(E_1))   = {mt.total_variation(E1, P):.7f}")
print(f"Levy(E_1, e(E_1)) = {mt.levy_distance(E1, P):.7f}")

# concentration function: mass of the heaviest closed window of length b
unif = dc.from_atoms(range(10), np.full(10, 0.1))
for b in (0, 1, 4.5, 9):
    print(f"Q(uniform{{0..9}}, {b}) = {mt.concentration_Q(unif, b):.2f}")

# smoothing by convolution can only lower concentration
G = dc.from_atoms([0, 3], [0.5, 0.5])
for b in (0, 2, 5):
    q = mt.concentration_Q(dc.convolve(unif, G), b)
    print(f"b={b}: Q(F*G)={q:.3f} <= min(Q(F), Q(G)) = "
          f"{min(mt.concentration_Q(unif, b), mt.concentration_Q(G, b)):.3f}")

# empirical CDFs carry a DKW band
rng = np.random.default_rng(1)
sample = rng.poisson(1.0, 20000)
d, radius = mt.empirical_vs_law(mt.EmpiricalCDF.from_samples(sample), P)
print(f"sup |ECDF - Poisson(1)| = {d:.4f}, DKW radius at alpha=0.01: {radius:.4f}")
