"""The Poissonized sample as a point process: counts, intensity, independence.

Run:  python3 demos/05_poissonization.py
"""
import numpy as np

from poisson_approx import bounds as bd
from poisson_approx import metrics as mt
from poisson_approx import simulator as sim
from poisson_approx.model_io import load_model
from pathlib import Path

here = Path(__file__).parent / "models"
model = load_model(here / "three_components.json")

y = sim.poissonize(model, seed=3)
print("one realization, group sizes nu_i:", y.nu)
T, delta = sim.functional_sums(y, model)
print("T =", T, " Delta =", delta)

# boxes leave some atoms uncovered, so raw counts are negatively correlated but not exclusive
rep = sim.independence_check(model, sim.Box([-30.0], [0.0]), sim.Box([1.0], [12.0]),
                             reps=200000, seed=1)
print(f"corr of box counts, Poissonized: {rep.corr_Y:+.4f} (band {rep.corr_band:.4f})")
print(f"corr of box counts, raw sample:  {rep.corr_X:+.4f}")
print(f"E N(A): {rep.mean_A:.4f} vs intensity {rep.expected_A:.4f}")
print(f"total count: mean {rep.nu_total_mean:.3f}, var {rep.nu_total_var:.3f}, n = {rep.n}")

# the law of T is H2
draws = sim.simulate_T(model, 100000, seed=2)
H2 = bd.build_laws(model).H2
d, r = mt.empirical_vs_law(mt.EmpiricalCDF.from_samples(draws.T[:, 0]), H2)
print(f"sup |ECDF(T) - H2| = {d:.4f} within DKW radius {r:.4f}: {d <= r}")

planar = load_model(here / "planar_marks.json")
S = sim.simulate_S(planar, 5, seed=0)
print("planar S draws:\n", np.array2string(S, precision=1))
