"""Building lattice laws, convolving them and forming compound Poisson laws.

Run:  python3 demos/01_lattice_laws.py
"""
import math

import numpy as np

from poisson_approx import dist_core as dc
from poisson_approx import oracle

# a fair coin on {0, 1} and its 4-fold convolution power
coin = dc.from_atoms([0, 1], [0.5, 0.5])
print("coin^4 weights:", dc.power(coin, 4).weights * 16)

# mixtures: with prob. 0.1 jump to +1, otherwise stay at 0
F = dc.mixture(0.1, dc.point_mass(0), dc.point_mass(1))
print("F =", F.weights, "offset", F.offset)

# e(E_1) is the Poisson(1) law
P = dc.compound_poisson(1.0, dc.point_mass(1))
print(f"e(E_1) at 0: {P.weights[0]:.12f}   exp(-1) = {math.exp(-1):.12f}")
print(f"mass lost to series truncation: {P.lost_mass:.2e}")

# an atom at zero never matters: e(F) == e(0.1 E_1)
print("zero-atom collapse holds:",
      dc.compound_poisson(1.0, F).allclose(dc.compound_poisson(0.1, dc.point_mass(1)), 1e-12))

# the fast FFT path against the brute-force double loop
rng = np.random.default_rng(0)
A = dc.LatticeDistribution(1.0, -50.0, rng.dirichlet(np.ones(300)))
B = dc.LatticeDistribution(1.0, 10.0, rng.dirichlet(np.ones(200)))
fast = dc.convolve(A, B, method="fft")
slow = oracle.convolve_direct_reference(A, B)
_, a, b = dc.align(fast, slow)
print(f"FFT vs direct, worst atom difference: {np.max(np.abs(a - b)):.2e}")

# three routes to e(alpha H)
H = dc.from_atoms([-2, 1, 3], [0.2, 0.5, 0.3])
series, rem = oracle.compound_poisson_series(2.5, H, 60)
spectral = oracle.compound_poisson_spectral(2.5, H)
fast = dc.compound_poisson(2.5, H)
print("series == fast:", fast.allclose(series, 1e-11),
      " spectral == fast:", fast.allclose(spectral, 1e-11))
m = dc.moments(fast)
print(f"mean {m.mean:.6f} (alpha*mean(H) = {2.5 * dc.moments(H).mean:.6f})")
