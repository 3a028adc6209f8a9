"""Distances and concentration functions.

Exact functionals operate on :class:`LatticeDistribution` pairs that share a
lattice.  Both distribution functions are then right-continuous step
functions that only jump on the common lattice, so suprema over ``x`` reduce
to maxima over atoms.  Empirical counterparts work on sorted samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist_core import LatticeDistribution, align
from .errors import EmptySample, InvalidInput

DEFAULT_ALPHA = 0.01
# relative slack (in lattice steps) when locating atoms <= x
_EPS = 1e-9


def cdf_at(F: LatticeDistribution, x) -> float | np.ndarray:
    """``F((-inf, x])`` for scalar or array ``x``."""
    cum = np.concatenate(([0.0], np.cumsum(F.weights)))
    k = np.floor((np.asarray(x, dtype=float) - F.offset) / F.step + _EPS).astype(np.int64) + 1
    k = np.clip(k, 0, len(F))
    out = cum[k]
    return float(out) if np.ndim(out) == 0 else out


def kolmogorov_rho(F: LatticeDistribution, H: LatticeDistribution) -> float:
    """Uniform distance ``sup_x |F(x) - H(x)|``."""
    _, a, b = align(F, H)
    return float(np.max(np.abs(np.cumsum(a) - np.cumsum(b))))


def total_variation(F: LatticeDistribution, H: LatticeDistribution,
                    with_uncertainty: bool = False):
    """``sup_A |F(A) - H(A)| = 0.5 * sum |F{x} - H{x}|``.

    With ``with_uncertainty=True`` returns ``(value, 0.5 * (lost_F + lost_H))``.
    """
    _, a, b = align(F, H)
    tv = 0.5 * float(np.abs(a - b).sum())
    if with_uncertainty:
        return tv, 0.5 * (F.lost_mass + H.lost_mass)
    return tv


def sup_cdf_excess(F: LatticeDistribution, G: LatticeDistribution, lag: float) -> float:
    """``sup_x [F(x) - G(x + lag)]``, never below zero (the value at -inf).

    The difference is right-continuous and piecewise constant with breaks at
    atoms of F and at atoms of G moved by ``-lag``, so it suffices to check
    those points.
    """
    pts = np.concatenate((F.positions, G.positions - lag))
    vals = cdf_at(F, pts) - cdf_at(G, pts + lag)
    return max(0.0, float(np.max(vals)))


def _levy_ok(F, H, eps) -> bool:
    # F(x - eps) - eps <= H(x)  and  H(x) <= F(x + eps) + eps
    return (sup_cdf_excess(F, H, eps) <= eps + 1e-15
            and sup_cdf_excess(H, F, eps) <= eps + 1e-15)


def levy_distance(F: LatticeDistribution, H: LatticeDistribution) -> float:
    """Lévy distance by bisection on ``eps`` to ``1e-9 * step``."""
    align(F, H)
    lo, hi = 0.0, 1.0
    if _levy_ok(F, H, 0.0):
        return 0.0
    tol = 1e-9 * F.step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_ok(F, H, mid):
            hi = mid
        else:
            lo = mid
    return hi


def concentration_Q(F: LatticeDistribution, b: float) -> float:
    """``sup_x F([x, x + b])``: best window of ``floor(b / step) + 1`` atoms."""
    if b < 0:
        raise InvalidInput(f"window length must be non-negative, got {b}")
    width = int(math.floor(b / F.step + _EPS)) + 1
    w = F.weights
    if width >= w.size:
        return float(w.sum())
    cum = np.concatenate(([0.0], np.cumsum(w)))
    return float(np.max(cum[width:] - cum[:-width]))


def dkw_radius(n: int, alpha: float = DEFAULT_ALPHA) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    values: np.ndarray
    sample_size: int
    alpha: float
    dkw_radius: float

    @classmethod
    def from_samples(cls, samples, alpha: float = DEFAULT_ALPHA) -> "EmpiricalCDF":
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise EmptySample("empirical CDF needs at least one observation")
        x.setflags(write=False)
        return cls(x, int(x.size), alpha, dkw_radius(x.size, alpha))

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.sample_size


def empirical_ks(A: EmpiricalCDF, B: EmpiricalCDF) -> tuple[float, float]:
    """Two-sample sup distance and the summed DKW radii as its uncertainty."""
    if A.sample_size == 0 or B.sample_size == 0:
        raise EmptySample("both samples must be non-empty")
    pts = np.concatenate((A.values, B.values))
    d = float(np.max(np.abs(A(pts) - B(pts))))
    return d, A.dkw_radius + B.dkw_radius


def empirical_vs_law(A: EmpiricalCDF, F: LatticeDistribution) -> tuple[float, float]:
    """Sup distance between an empirical CDF and a lattice law, with DKW radius."""
    pts = np.concatenate((A.values, F.positions))
    d = float(np.max(np.abs(A(pts) - cdf_at(F, pts))))
    return d, A.dkw_radius
