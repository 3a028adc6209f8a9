"""Finite probability laws on an arithmetic lattice ``{offset + k * step}``.

Every law used by the package (U_i, V_i, the mixtures F_i and the products
H1, H2, H3) is a :class:`LatticeDistribution`.  Operations are pure and
return new objects.  Mass thrown away by truncation is never renormalised;
it is carried in ``lost_mass`` so that callers can add it to error budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft
from scipy import stats

from .errors import (
    IncompatibleLattice,
    InvalidInput,
    InvalidTolerance,
    NonLatticePoint,
    NumericalCorruption,
    SupportOverflow,
)

MASS_TOL = 1e-9
LATTICE_TOL = 1e-9
NEG_CLAMP = 1e-12
# below this many atoms on the shorter side the direct sum is faster than FFT
_DIRECT_CUTOFF = 48


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Finite measure with atoms at ``offset + k * step``, ``k = 0..len-1``.

    The weights are stored in canonical trimmed form (first and last weight
    strictly positive) and the array is made read-only.
    """

    step: float
    offset: float
    weights: np.ndarray
    lost_mass: float = 0.0

    def __post_init__(self):
        step = float(self.step)
        if not step > 0 or not math.isfinite(step):
            raise InvalidInput(f"step must be positive, got {self.step!r}")
        w = np.array(self.weights, dtype=np.float64).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise InvalidInput("weights must be a non-empty finite sequence")
        if np.any(w < 0):
            raise InvalidInput("weights must be non-negative")
        lost = float(self.lost_mass)
        if lost < 0:
            if lost < -MASS_TOL:
                raise InvalidInput(f"lost_mass must be non-negative, got {lost}")
            lost = 0.0
        nz = np.flatnonzero(w)
        if nz.size == 0:
            raise InvalidInput("at least one weight must be positive")
        offset = float(self.offset) + int(nz[0]) * step
        w = w[nz[0]:nz[-1] + 1].copy()
        total = float(w.sum()) + lost
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInput(f"weights + lost_mass must sum to 1, got {total!r}")
        w.setflags(write=False)
        object.__setattr__(self, "step", step)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lost_mass", lost)

    def __len__(self):
        return self.weights.size

    def __repr__(self):
        return (f"LatticeDistribution(step={self.step!r}, offset={self.offset!r}, "
                f"atoms={len(self)}, lost_mass={self.lost_mass:.3g})")

    @property
    def positions(self) -> np.ndarray:
        return self.offset + self.step * np.arange(len(self))

    @property
    def last(self) -> float:
        return self.offset + self.step * (len(self) - 1)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def allclose(self, other: "LatticeDistribution", atol: float = 1e-10) -> bool:
        """Atomwise comparison on the union grid."""
        _, a, b = align(self, other)
        return bool(np.max(np.abs(a - b)) <= atol)


class MomentSummary(NamedTuple):
    mean: float
    variance: float
    second_moment: float


class Shifted(NamedTuple):
    dist: LatticeDistribution
    residual: float


# -- lattice bookkeeping ------------------------------------------------------

def _check_step(F: LatticeDistribution, G: LatticeDistribution) -> float:
    if abs(F.step - G.step) > 1e-12 * max(F.step, G.step):
        raise IncompatibleLattice(f"steps differ: {F.step} vs {G.step}")
    return F.step


def _index_shift(F: LatticeDistribution, G: LatticeDistribution) -> int:
    """Integer k with ``G.offset == F.offset + k * step``."""
    step = _check_step(F, G)
    r = (G.offset - F.offset) / step
    k = round(r)
    if abs(r - k) > LATTICE_TOL * max(1.0, abs(r)):
        raise IncompatibleLattice(
            f"offsets {F.offset} and {G.offset} are not commensurate with step {step}")
    return int(k)


def align(F: LatticeDistribution, G: LatticeDistribution):
    """Return ``(offset, wF, wG)`` with both weight vectors on the union grid."""
    k = _index_shift(F, G)
    lo = min(0, k)
    hi = max(len(F), k + len(G))
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[-lo:-lo + len(F)] = F.weights
    b[k - lo:k - lo + len(G)] = G.weights
    return F.offset + lo * F.step, a, b


def on_lattice(x: float, step: float) -> int:
    """Index of ``x`` on ``step * Z``; raises if ``x`` is off the lattice."""
    r = x / step
    k = round(r)
    if abs(r - k) > LATTICE_TOL * max(1.0, abs(r)):
        raise NonLatticePoint(f"{x} is not an integer multiple of step {step}")
    return int(k)


# -- constructors -------------------------------------------------------------

def point_mass(a: float, step: float = 1.0) -> LatticeDistribution:
    """The law ``E_a``; ``a`` must lie on ``step * Z``."""
    k = on_lattice(a, step)
    return LatticeDistribution(step, k * step, np.ones(1))


def from_atoms(indices, weights, step: float = 1.0) -> LatticeDistribution:
    """Build a law from integer lattice indices (atoms at ``index * step``).

    Repeated indices are merged.
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if idx.size != w.size or idx.size == 0:
        raise InvalidInput("indices and weights must be non-empty and of equal length")
    lo = int(idx.min())
    dense = np.bincount(idx - lo, weights=w)
    return LatticeDistribution(step, lo * step, dense)


# -- arithmetic ---------------------------------------------------------------

def mixture(p: float, U: LatticeDistribution, V: LatticeDistribution) -> LatticeDistribution:
    """``(1 - p) U + p V``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"mixing weight must lie in [0, 1], got {p}")
    offset, u, v = align(U, V)
    w = (1.0 - p) * u + p * v
    lost = (1.0 - p) * U.lost_mass + p * V.lost_mass
    return LatticeDistribution(U.step, offset, w, lost)


def shift(F: LatticeDistribution, a: float) -> Shifted:
    """Convolve with ``E_a`` after snapping ``a`` to the nearest lattice point.

    Returns the shifted law and the snapping residual ``|a - snapped|``.
    """
    k = math.floor(a / F.step + 0.5)
    residual = abs(a - k * F.step)
    if k == 0:
        return Shifted(F, residual)
    moved = LatticeDistribution(F.step, F.offset + k * F.step, F.weights, F.lost_mass)
    return Shifted(moved, residual)


def _conv_arrays(a: np.ndarray, b: np.ndarray, method: str = "auto") -> np.ndarray:
    if method == "auto":
        method = "direct" if min(a.size, b.size) <= _DIRECT_CUTOFF else "fft"
    if method == "direct":
        out = np.convolve(a, b)
    elif method == "fft":
        n = a.size + b.size - 1
        nfft = scipy.fft.next_fast_len(n, real=True)
        out = scipy.fft.irfft(scipy.fft.rfft(a, nfft) * scipy.fft.rfft(b, nfft), nfft)[:n]
    else:
        raise InvalidInput(f"unknown convolution method {method!r}")
    return out


def _clamp(out: np.ndarray) -> np.ndarray:
    """Zero out transform round-off; anything below ``-NEG_CLAMP`` is an error."""
    worst = out.min()
    if worst < -NEG_CLAMP:
        raise NumericalCorruption(f"convolution produced weight {worst:.3e}")
    return np.maximum(out, 0.0)


def convolve(F: LatticeDistribution, G: LatticeDistribution,
             method: str = "auto") -> LatticeDistribution:
    """Exact convolution ``F * G``.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (direct for short
    supports).  FFT round-off below ``-1e-12`` raises
    :class:`NumericalCorruption`; smaller negatives are clamped to zero.
    """
    _check_step(F, G)
    w = _clamp(_conv_arrays(F.weights, G.weights, method))
    lost = F.lost_mass + G.lost_mass - F.lost_mass * G.lost_mass
    # convolution round-off may shift the total by ~1e-16 per atom
    return LatticeDistribution(F.step, F.offset + G.offset, w, lost)


def power(H: LatticeDistribution, m: int) -> LatticeDistribution:
    """m-fold convolution power by repeated squaring; ``H^0 = E_0``."""
    if m < 0 or int(m) != m:
        raise InvalidInput(f"power must be a non-negative integer, got {m}")
    result = point_mass(0.0, H.step)
    base = H
    m = int(m)
    while m:
        if m & 1:
            result = convolve(result, base)
        m >>= 1
        if m:
            base = convolve(base, base)
    return result


def poisson_cutoff(alpha: float, tail_tol: float) -> int:
    """Smallest M with ``P{Poisson(alpha) > M} <= tail_tol``."""
    M = int(max(0.0, stats.poisson.isf(tail_tol, alpha)))
    while stats.poisson.sf(M, alpha) > tail_tol:
        M += 1
    while M > 0 and stats.poisson.sf(M - 1, alpha) <= tail_tol:
        M -= 1
    return M


def compound_poisson(alpha: float, H: LatticeDistribution,
                     tail_tol: float = 1e-12) -> LatticeDistribution:
    """The compound Poisson law ``e(alpha H) = exp(-alpha) sum_m alpha^m H^m / m!``.

    The series is cut at the smallest ``M`` whose Poisson(alpha) upper tail
    is at most ``tail_tol``; the discarded tail goes to ``lost_mass``.  An
    atom of ``H`` at zero is factored out first, since
    ``e(alpha (h0 E_0 + (1 - h0) H')) = e(alpha (1 - h0) H')``.
    """
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    if not 0 < tail_tol <= 1e-3:
        raise InvalidTolerance(f"tail_tol must lie in (0, 1e-3], got {tail_tol}")
    step = H.step
    start = on_lattice(H.offset, step) if _has_zero_phase(H) else None
    if start is None:
        raise IncompatibleLattice("compound_poisson needs 0 on the lattice of H")

    w = np.array(H.weights)
    lost_h = H.lost_mass
    zero = -start
    if 0 <= zero < w.size and w[zero] > 0:
        h0 = w[zero]
        w[zero] = 0.0
        rest = 1.0 - h0
        if rest <= 0 or w.max() <= 0:
            if lost_h > 0:
                w[zero] = h0
            else:
                return point_mass(0.0, step)
        else:
            alpha = alpha * rest
            w /= rest
            lost_h /= rest
    nz = np.flatnonzero(w)
    w = w[nz[0]:nz[-1] + 1]
    start += int(nz[0])

    M = poisson_cutoff(alpha, tail_tol)
    pmf = stats.poisson.pmf(np.arange(M + 1), alpha)
    acc, lo = _series_sum(pmf, w, start)
    # H'^m carries mass (1 - lost_h)^m
    decay = -np.expm1(np.arange(M + 1) * np.log1p(-lost_h)) if lost_h > 0 else 0.0
    lost = float(stats.poisson.sf(M, alpha) + np.sum(pmf * decay))
    return LatticeDistribution(step, lo * step, acc, lost)


def _has_zero_phase(H: LatticeDistribution) -> bool:
    r = H.offset / H.step
    return abs(r - round(r)) <= LATTICE_TOL * max(1.0, abs(r))


def _series_sum(pmf: np.ndarray, w: np.ndarray, start: int):
    """``sum_m pmf[m] * w^{*m}`` for a base law starting at lattice index ``start``.

    The m-th power starts at index ``m * start``; returns the dense sum and
    the lattice index of its first cell.
    """
    M = pmf.size - 1
    L = w.size
    lo = min(0, M * start)
    hi = max(0, M * (start + L - 1))
    acc = np.zeros(hi - lo + 1)
    term = np.ones(1)
    for m in range(M + 1):
        s = m * start - lo
        acc[s:s + term.size] += pmf[m] * term
        if m < M:
            term = _clamp(_conv_arrays(term, w))
    return acc, lo


def moments(F: LatticeDistribution) -> MomentSummary:
    """Mean, variance and second moment as plain weighted sums over atoms."""
    x = F.positions
    mean = float(np.dot(F.weights, x))
    second = float(np.dot(F.weights, x * x))
    var = max(second - mean * mean, 0.0)
    return MomentSummary(mean, var, second)


def truncate_support(F: LatticeDistribution, tol: float) -> LatticeDistribution:
    """Drop as many edge atoms as possible with total dropped mass ``<= tol``.

    The dropped mass is added to ``lost_mass``; nothing is renormalised.
    """
    if not 0 <= tol <= 1e-6:
        raise InvalidTolerance(f"truncation tolerance must lie in [0, 1e-6], got {tol}")
    w = F.weights
    n = w.size
    if n == 1 or tol == 0:
        return F
    prefix = np.concatenate(([0.0], np.cumsum(w)))
    suffix = np.concatenate(([0.0], np.cumsum(w[::-1])))
    best = (0, 0)
    n_pre = int(np.searchsorted(prefix, tol, side="right"))
    for i in range(n_pre):
        j = int(np.searchsorted(suffix, tol - prefix[i], side="right")) - 1
        j = min(j, n - 1 - i)
        if i + j > sum(best):
            best = (i, j)
    i, j = best
    if i + j == 0:
        return F
    kept = w[i:n - j]
    dropped = prefix[i] + suffix[j]
    return LatticeDistribution(F.step, F.offset + i * F.step, kept, F.lost_mass + dropped)


def convolve_many(laws, trim_tol: float = 0.0, cap: int | None = None) -> LatticeDistribution:
    """Product of several laws, optionally trimming after each factor."""
    laws = list(laws)
    if not laws:
        raise InvalidInput("need at least one law")
    out = laws[0]
    for G in laws[1:]:
        out = convolve(out, G)
        if trim_tol:
            out = truncate_support(out, trim_tol)
        if cap is not None and len(out) > cap:
            raise SupportOverflow(f"support of {len(out)} atoms exceeds cap {cap}")
    return out
