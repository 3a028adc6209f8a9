import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from poisson_approx import bounds as bd
from poisson_approx import dist_core as dc
from poisson_approx import metrics as mt
from poisson_approx import oracle
from poisson_approx.errors import TooLarge

from conftest import lattice_laws, random_law


def test_direct_reference_examples():
    out = oracle.convolve_direct_reference(dc.point_mass(2), dc.point_mass(5))
    assert out.allclose(dc.point_mass(7), 0)
    rng = np.random.default_rng(3)
    F, G = random_law(rng, 40), random_law(rng, 40)
    out = oracle.convolve_direct_reference(F, G)
    assert abs(out.mass - 1.0) < 1e-14


def test_direct_reference_cap():
    big = dc.LatticeDistribution(1.0, 0.0, np.full(4000, 1 / 4000))
    with pytest.raises(TooLarge):
        oracle.convolve_direct_reference(big, big)


def test_series_examples():
    law, rem = oracle.compound_poisson_series(1.0, dc.point_mass(1), 50)
    k = np.arange(len(law))
    assert np.max(np.abs(law.weights - stats.poisson.pmf(k, 1.0))) < 1e-14
    assert rem < 1e-15
    law, rem = oracle.compound_poisson_series(0.7, dc.point_mass(1), 0)
    assert law.allclose(dc.LatticeDistribution(1.0, 0.0, [math.exp(-0.7)], 1 - math.exp(-0.7)), 1e-15)
    assert rem == pytest.approx(1 - math.exp(-0.7), abs=1e-15)
    with pytest.raises(TooLarge):
        oracle.compound_poisson_series(1.0, dc.point_mass(1), 201)


@given(lattice_laws(max_atoms=5, span=4), st.floats(0.05, 6.0))
def test_series_matches_fast_path(H, alpha):
    M = min(200, dc.poisson_cutoff(alpha, 1e-14) + 5)
    ref, rem = oracle.compound_poisson_series(alpha, H, M)
    fast = dc.compound_poisson(alpha, H, 1e-12)
    assert fast.allclose(ref, fast.lost_mass + ref.lost_mass + rem + 1e-12)


@given(lattice_laws(max_atoms=5, span=6), st.floats(0.05, 10.0))
def test_spectral_matches_fast_path(H, alpha):
    spectral = oracle.compound_poisson_spectral(alpha, H)
    fast = dc.compound_poisson(alpha, H, 1e-13)
    assert fast.allclose(spectral, 1e-11)


def test_exact_rho_examples():
    m = bd.RareEventModel.from_components([(0.1, dc.point_mass(0), dc.point_mass(1))])
    assert oracle.exact_rho_small(m) == pytest.approx(0.0048374180359596, abs=1e-12)
    m0 = bd.RareEventModel.from_components([(0.0, dc.point_mass(0), dc.point_mass(1))])
    assert oracle.exact_rho_small(m0) == 0


def test_exact_rho_cap():
    comps = [(0.1, dc.point_mass(0), dc.point_mass(1))] * 7
    with pytest.raises(TooLarge):
        oracle.exact_rho_small(bd.RareEventModel.from_components(comps))
    wide = dc.from_atoms(range(5), np.full(5, 0.2))
    with pytest.raises(TooLarge):
        oracle.exact_rho_small(bd.RareEventModel.from_components([(0.1, wide, wide)]))


def test_exact_rho_matches_pipeline():
    for seed in range(200):
        rng = np.random.default_rng([11, seed])
        n = int(rng.integers(1, 7))
        comps = [(float(rng.uniform(0, 0.3)), random_law(rng, 4, span=3),
                  random_law(rng, 4, span=10)) for _ in range(n)]
        model = bd.RareEventModel.from_components(comps)
        laws = bd.build_laws(model)
        fast = mt.kolmogorov_rho(laws.H1, laws.H2)
        assert fast == pytest.approx(oracle.exact_rho_small(model), abs=1e-9)
