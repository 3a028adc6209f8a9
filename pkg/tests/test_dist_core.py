import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_approx import dist_core as dc
from poisson_approx import oracle
from poisson_approx.errors import (IncompatibleLattice, InvalidInput, InvalidTolerance,
                                   NonLatticePoint, NumericalCorruption, SupportOverflow)

from conftest import lattice_laws

BERN = dc.from_atoms([0, 1], [0.5, 0.5])


def test_point_mass():
    E0 = dc.point_mass(0, 1)
    assert E0.offset == 0 and list(E0.weights) == [1.0] and E0.lost_mass == 0
    assert dc.point_mass(3, 1).offset == 3
    assert dc.point_mass(1.5, 0.5).offset == 1.5
    with pytest.raises(NonLatticePoint):
        dc.point_mass(0.5, 1)


def test_construction_rejects_bad_input():
    with pytest.raises(InvalidInput):
        dc.LatticeDistribution(0.0, 0.0, [1.0])
    with pytest.raises(InvalidInput):
        dc.LatticeDistribution(1.0, 0.0, [0.5, -0.1, 0.6])
    with pytest.raises(InvalidInput):
        dc.LatticeDistribution(1.0, 0.0, [0.5, 0.4])
    with pytest.raises(InvalidInput):
        dc.LatticeDistribution(1.0, 0.0, [0.0, 0.0])


def test_canonical_trim_and_readonly():
    F = dc.LatticeDistribution(1.0, -2.0, [0.0, 0.0, 0.3, 0.7, 0.0])
    assert F.offset == 0.0
    assert list(F.weights) == [0.3, 0.7]
    with pytest.raises(ValueError):
        F.weights[0] = 1.0


def test_mixture_examples():
    U = dc.from_atoms([0, 2], [0.5, 0.5])
    V = dc.from_atoms([5], [1.0])
    assert dc.mixture(0, U, V).allclose(U, 0)
    assert dc.mixture(1, U, V).allclose(V, 0)
    M = dc.mixture(0.1, dc.point_mass(0), dc.point_mass(1))
    assert M.offset == 0 and np.allclose(M.weights, [0.9, 0.1])
    with pytest.raises(IncompatibleLattice):
        dc.mixture(0.5, U, dc.point_mass(0, 0.5))


def test_mixture_lost_mass():
    U = dc.LatticeDistribution(1.0, 0.0, [0.5, 0.49], 0.01)
    V = dc.LatticeDistribution(1.0, 3.0, [0.98], 0.02)
    M = dc.mixture(0.25, U, V)
    assert M.lost_mass == pytest.approx(0.75 * 0.01 + 0.25 * 0.02)


def test_shift_examples():
    s = dc.shift(dc.point_mass(0), 2)
    assert s.dist.allclose(dc.point_mass(2), 0) and s.residual == 0
    F = dc.from_atoms([0, 1, 3], [0.2, 0.3, 0.5])
    s = dc.shift(F, 0.4)
    assert s.dist.allclose(F, 0) and s.residual == pytest.approx(0.4)
    back = dc.shift(dc.shift(F, 2.0).dist, -2.0)
    assert back.dist.allclose(F, 0) and back.residual == 0


def test_convolve_examples():
    assert dc.convolve(dc.point_mass(2), dc.point_mass(-5)).allclose(dc.point_mass(-3), 0)
    B2 = dc.convolve(BERN, BERN)
    assert np.allclose(B2.weights, [0.25, 0.5, 0.25], atol=1e-15)
    with pytest.raises(IncompatibleLattice):
        dc.convolve(BERN, dc.point_mass(0, 0.3))


def test_convolve_rejects_negative_corruption(monkeypatch):
    def bad(a, b, method="auto"):
        out = np.convolve(a, b)
        out[1] -= 1e-6
        out[2] += 1e-6
        return out
    gap = dc.from_atoms([0, 2], [0.5, 0.5])
    monkeypatch.setattr(dc, "_conv_arrays", bad)
    with pytest.raises(NumericalCorruption):
        dc.convolve(gap, gap)


def test_fft_and_direct_agree_on_large_support():
    rng = np.random.default_rng(5)
    F = dc.LatticeDistribution(1.0, -100.0, rng.dirichlet(np.ones(400)))
    G = dc.LatticeDistribution(1.0, 7.0, rng.dirichlet(np.ones(300)))
    A = dc.convolve(F, G, method="fft")
    B = dc.convolve(F, G, method="direct")
    assert A.allclose(B, 1e-12)
    assert A.allclose(oracle.convolve_direct_reference(F, G), 1e-10)


def test_power_examples():
    H = dc.from_atoms([-1, 4], [0.3, 0.7])
    assert dc.power(H, 0).allclose(dc.point_mass(0), 0)
    assert dc.power(dc.point_mass(1), 5).allclose(dc.point_mass(5), 0)
    B4 = dc.power(BERN, 4)
    assert np.allclose(B4.weights, np.array([1, 4, 6, 4, 1]) / 16, atol=1e-15)
    ref = dc.point_mass(0)
    for _ in range(7):
        ref = oracle.convolve_direct_reference(ref, H)
    assert dc.power(H, 7).allclose(ref, 1e-12)


def test_compound_poisson_examples():
    assert dc.compound_poisson(1, dc.point_mass(0), 1e-12).allclose(dc.point_mass(0), 0)
    P1 = dc.compound_poisson(1, dc.point_mass(1), 1e-12)
    assert P1.offset == 0
    assert P1.weights[0] == pytest.approx(math.exp(-1), abs=1e-15)
    k = np.arange(len(P1))
    pmf = np.exp(-1) / np.array([math.factorial(int(i)) for i in k])
    assert np.max(np.abs(P1.weights - pmf)) < 1e-15
    assert dc.compound_poisson(0.1, dc.point_mass(1), 1e-12).weights[0] == pytest.approx(
        math.exp(-0.1), abs=1e-15)


def test_compound_poisson_tolerance_checks():
    with pytest.raises(InvalidTolerance):
        dc.compound_poisson(1, BERN, 1e-2)
    with pytest.raises(InvalidTolerance):
        dc.compound_poisson(1, BERN, 0)
    with pytest.raises(InvalidInput):
        dc.compound_poisson(0, BERN)


def test_compound_poisson_needs_zero_on_lattice():
    H = dc.LatticeDistribution(1.0, 0.5, [1.0])
    with pytest.raises(IncompatibleLattice):
        dc.compound_poisson(1.0, H)


def test_compound_poisson_lost_mass_within_budget():
    H = dc.LatticeDistribution(1.0, -2.0, [0.3, 0.69], 0.01)
    for alpha in (0.05, 1.0, 7.0):
        tol = 1e-10
        C = dc.compound_poisson(alpha, H, tol)
        # mass of H^m is (1-l)^m, so the expected loss is 1 - exp(-alpha l)
        assert C.lost_mass <= 1 - math.exp(-alpha * 0.01) + tol + 1e-15
        assert C.mass + C.lost_mass == pytest.approx(1.0, abs=1e-12)


def test_moments_examples():
    m = dc.moments(dc.point_mass(3))
    assert m.mean == 3 and m.variance == 0
    m = dc.moments(BERN)
    assert m.mean == 0.5 and m.variance == 0.25 and m.second_moment == 0.5


def test_truncate_support_examples():
    E0 = dc.point_mass(0)
    assert dc.truncate_support(E0, 1e-12) is E0
    P = dc.compound_poisson(1, dc.point_mass(1), 1e-15)
    T = dc.truncate_support(P, 1e-12)
    assert T.lost_mass <= 1e-12 + P.lost_mass
    assert len(T) < len(P)
    assert T.mass + T.lost_mass == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidTolerance):
        dc.truncate_support(P, 1e-3)


def test_truncate_trims_both_sides_maximally():
    F = dc.LatticeDistribution(1.0, 0.0, [1e-9, 3e-9, 0.5, 0.5 - 9e-9, 5e-9])
    T = dc.truncate_support(F, 6e-9)
    # dropping 1e-9 + 5e-9 beats dropping 1e-9 + 3e-9 from the left only
    assert len(T) == 3 and T.offset == 1.0
    assert T.lost_mass == pytest.approx(6e-9, abs=1e-18)


def test_convolve_many_cap():
    laws = [BERN] * 10
    assert dc.convolve_many(laws).allclose(dc.power(BERN, 10), 1e-14)
    with pytest.raises(SupportOverflow):
        dc.convolve_many(laws, cap=5)


# -- properties ----------------------------------------------------------------

@given(lattice_laws(), lattice_laws())
def test_convolve_commutative_and_mass(F, G):
    A = dc.convolve(F, G)
    assert A.allclose(dc.convolve(G, F), 1e-12)
    assert abs(A.mass + A.lost_mass - 1.0) <= 1e-9
    assert len(A) == len(F) + len(G) - 1


@given(lattice_laws(), lattice_laws(), lattice_laws())
def test_convolve_associative(F, G, K):
    left = dc.convolve(dc.convolve(F, G), K)
    right = dc.convolve(F, dc.convolve(G, K))
    assert left.allclose(right, 1e-10)


@given(lattice_laws(max_atoms=6, span=4), st.floats(0.05, 4.0), st.floats(0.05, 4.0))
def test_exponential_morphism(H, a, b):
    whole = dc.compound_poisson(a + b, H, 1e-13)
    parts = dc.convolve(dc.compound_poisson(a, H, 1e-13), dc.compound_poisson(b, H, 1e-13))
    assert whole.allclose(parts, 1e-9)


@given(st.floats(0.0, 1.0), lattice_laws(max_atoms=6, span=5), st.floats(0.1, 3.0))
def test_zero_atom_collapse(p, V, alpha):
    F = dc.mixture(p, dc.point_mass(0), V)
    left = dc.compound_poisson(alpha, F, 1e-13)
    if p == 0:
        assert left.allclose(dc.point_mass(0), 1e-15)
        return
    right = dc.compound_poisson(alpha * p, V, 1e-13)
    assert left.allclose(right, 1e-10)


@given(lattice_laws(max_atoms=6, span=5), st.floats(0.05, 6.0))
def test_compound_poisson_moments(H, alpha):
    tol = 1e-12
    C = dc.compound_poisson(alpha, H, tol)
    mh = dc.moments(H)
    mc = dc.moments(C)
    # the dropped series tail has mass <= tol and sits within M * max|x| of 0
    reach = max(abs(H.offset), abs(H.last)) * (dc.poisson_cutoff(alpha, tol) + 40)
    assert mc.mean == pytest.approx(alpha * mh.mean, abs=10 * tol * max(reach, 1) + 1e-9)
    assert mc.variance == pytest.approx(alpha * mh.second_moment,
                                        abs=10 * tol * max(reach, 1) ** 2 + 1e-8)


@given(lattice_laws(), st.floats(0.0, 1e-6))
def test_truncate_conserves_mass(F, tol):
    T = dc.truncate_support(F, tol)
    assert abs(T.mass + T.lost_mass - F.mass - F.lost_mass) <= 1e-15
    assert T.lost_mass - F.lost_mass <= tol + 1e-18
    assert T.weights[0] > 0 and T.weights[-1] > 0


@given(lattice_laws(), st.integers(-50, 50))
def test_shift_roundtrip(F, k):
    s = dc.shift(F, k * F.step)
    assert s.residual == 0
    assert dc.shift(s.dist, -k * F.step).dist.allclose(F, 0)
