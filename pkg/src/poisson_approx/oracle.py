"""Slow, transparent reference computations.

Nothing here shares code paths with the fast routines in :mod:`dist_core`;
the functions exist so that the fast paths can be checked against them.
:func:`compound_poisson_spectral` is a third, transform-based route to
``e(alpha H)`` and is only ever used as a cross-check.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .dist_core import LatticeDistribution, _index_shift
from .errors import InvalidInput, TooLarge

MAX_PAIRS = 10**7
MAX_SERIES_TERMS = 200
MAX_COMPONENTS = 6
MAX_ATOMS_PER_LAW = 4


def convolve_direct_reference(F: LatticeDistribution, G: LatticeDistribution) -> LatticeDistribution:
    """Convolution by explicit double summation over atom pairs."""
    if len(F) * len(G) > MAX_PAIRS:
        raise TooLarge(f"{len(F)} x {len(G)} atom pairs exceeds {MAX_PAIRS}")
    _index_shift(F, G)
    out = np.zeros(len(F) + len(G) - 1)
    f = F.weights
    for j, g in enumerate(G.weights):
        if g:
            out[j:j + len(F)] += g * f
    lost = 1.0 - out.sum()
    return LatticeDistribution(F.step, F.offset + G.offset, out, max(lost, 0.0))


def compound_poisson_series(alpha: float, H: LatticeDistribution, M: int):
    """Partial sum ``exp(-alpha) sum_{m<=M} alpha^m H^m / m!``.

    Returns ``(law, remainder)`` where ``remainder`` is the Poisson(alpha)
    mass of the omitted terms ``m > M``.  The law carries every unassigned
    bit of mass in ``lost_mass``.
    """
    if M > MAX_SERIES_TERMS:
        raise TooLarge(f"M={M} exceeds {MAX_SERIES_TERMS} terms")
    if alpha <= 0 or M < 0:
        raise InvalidInput("alpha must be positive and M non-negative")
    step = H.step
    acc: dict[int, float] = defaultdict(float)
    term = LatticeDistribution(step, 0.0, [1.0])
    kept = 0.0
    for m in range(M + 1):
        coef = math.exp(-alpha) * alpha**m / math.factorial(m)
        kept += coef
        start = round(term.offset / step)
        for k, w in enumerate(term.weights):
            acc[start + k] += coef * w
        if m < M:
            term = convolve_direct_reference(term, H)
    remainder = max(0.0, 1.0 - kept)
    lo, hi = min(acc), max(acc)
    dense = np.zeros(hi - lo + 1)
    for k, w in acc.items():
        dense[k - lo] = w
    lost = max(0.0, 1.0 - dense.sum())
    return LatticeDistribution(step, lo * step, dense, lost), remainder


def compound_poisson_spectral(alpha: float, H: LatticeDistribution,
                              tail_tol: float = 1e-13) -> LatticeDistribution:
    """``e(alpha H)`` as ``exp(alpha (phi_H - 1))`` on a periodic grid.

    The grid covers every lattice point reachable with up to ``M`` jumps,
    where ``P{Poisson(alpha) > M} <= tail_tol``, so wrap-around aliasing is
    bounded by ``tail_tol``.  That bound is recorded as ``lost_mass``.
    """
    if alpha <= 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    step = H.step
    i0 = round(H.offset / step)
    i1 = i0 + len(H) - 1
    M = int(stats.poisson.isf(tail_tol, alpha)) + 1
    lo, hi = min(0, M * i0), max(0, M * i1)
    if hi - lo + 1 > MAX_PAIRS:
        raise TooLarge(f"periodic grid of {hi - lo + 1} points exceeds {MAX_PAIRS}")
    N = sfft.next_fast_len(hi - lo + 1)
    grid = np.zeros(N)
    for k, w in enumerate(H.weights):
        grid[(i0 + k) % N] += w
    phi = sfft.fft(grid)
    out = np.real(sfft.ifft(np.exp(alpha * (phi - 1.0))))
    idx = np.arange(lo, lo + N)
    dense = np.clip(out[idx % N], 0.0, None)
    dense[np.abs(out[idx % N]) < 1e-15] = 0.0
    return LatticeDistribution(step, lo * step, dense, float(stats.poisson.sf(M, alpha)))


def _atom_dict(F: LatticeDistribution, scale: float = 1.0) -> dict[int, float]:
    start = round(F.offset / F.step)
    return {start + k: scale * w for k, w in enumerate(F.weights) if w > 0}


def _dict_convolve(a: dict[int, float], b: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = defaultdict(float)
    for x, u in a.items():
        for y, v in b.items():
            out[x + y] += u * v
    return out


def exact_rho_small(model) -> float:
    """Kolmogorov distance between H1 and H2 by brute force.

    H1 is enumerated over every joint choice of branch (U or V) and atom for
    all components.  H2 = prod e(F_i) = e(sum F_i) is summed term by term
    until the Poisson(n) terms fall below 1e-20.
    """
    comps = list(model.components)
    if len(comps) > MAX_COMPONENTS:
        raise TooLarge(f"enumeration limited to {MAX_COMPONENTS} components")
    choices = []
    for p, U, V in comps:
        if len(U) > MAX_ATOMS_PER_LAW or len(V) > MAX_ATOMS_PER_LAW:
            raise TooLarge(f"enumeration limited to {MAX_ATOMS_PER_LAW} atoms per law")
        opts = [(x, (1 - p) * w) for x, w in _atom_dict(U).items()]
        opts += [(x, p * w) for x, w in _atom_dict(V).items()]
        choices.append([o for o in opts if o[1] > 0])

    h1: dict[int, float] = defaultdict(float)
    for combo in itertools.product(*choices):
        pos = sum(c[0] for c in combo)
        prob = math.prod(c[1] for c in combo)
        h1[pos] += prob

    n = len(comps)
    pooled: dict[int, float] = defaultdict(float)
    for opts in choices:
        for x, w in opts:
            pooled[x] += w
    h2: dict[int, float] = defaultdict(float)
    term: dict[int, float] = {0: 1.0}
    coef = math.exp(-n)
    m = 0
    while True:
        for x, w in term.items():
            h2[x] += coef * w
        if m > n and coef < 1e-20:
            break
        m += 1
        coef *= n / m
        term = {x: w / n for x, w in _dict_convolve(term, pooled).items()}

    keys = sorted(set(h1) | set(h2))
    c1 = np.cumsum([h1.get(k, 0.0) for k in keys])
    c2 = np.cumsum([h2.get(k, 0.0) for k in keys])
    return float(np.max(np.abs(c1 - c2)))
