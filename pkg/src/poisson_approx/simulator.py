"""Monte-Carlo sampling of the rare-event sample and its Poissonized version.

The raw sample has one mark per component: with probability ``p_i`` a draw
from ``V_i``, otherwise from ``U_i``.  The Poissonized sample replaces each
component by ``nu_i ~ Poisson(1)`` independent marks from ``F_i``; the
resulting random set is a Poisson point process with intensity
``sum_i L(X_i)``.

Random streams are Philox generators keyed by ``(seed, purpose, component,
block)``.  Replications are generated in fixed-size blocks, so results do not
depend on how blocks are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import bounds as bd
from . import metrics
from .dist_core import LatticeDistribution
from .errors import InvalidInput, OverlappingRegions, SupportViolation

BLOCK = 1 << 16
MAX_DIM = 3
THREADS_ENV = "POISSON_APPROX_THREADS"

_TAG_X = 1
_TAG_Y = 2


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInput(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _stream(seed: int, tag: int, component: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tag, component, block])))


def _blocks(reps: int):
    return [(b, min(BLOCK, reps - b * BLOCK)) for b in range(math.ceil(reps / BLOCK))]


def _map_blocks(fn, reps: int):
    blocks = _blocks(reps)
    threads = min(thread_count(), len(blocks))
    if threads <= 1:
        return [fn(b, m) for b, m in blocks]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda bm: fn(*bm), blocks))


# -- mark laws -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Finite law on R^d given by atoms (k x d) and weights."""

    atoms: np.ndarray
    weights: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape[0] != w.size or w.size == 0:
            raise InvalidInput("atoms and weights must have matching non-zero length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-6:
            raise InvalidInput("weights must be non-negative and sum to 1")
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_lattice(cls, F: LatticeDistribution) -> "DiscreteLaw":
        w = F.weights / F.weights.sum()
        keep = w > 0
        return cls(F.positions[keep, None], w[keep])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    @property
    def radius(self) -> float:
        return float(np.max(np.linalg.norm(self.atoms, axis=1)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = np.searchsorted(self._cdf, rng.random(size), side="right")
        return self.atoms[np.minimum(idx, self.atoms.shape[0] - 1)]

    def mass(self, box: "Box") -> float:
        return float(self.weights[box.contains(self.atoms)].sum())


class MarkComponent(NamedTuple):
    p: float
    U: DiscreteLaw
    V: DiscreteLaw


@dataclass(frozen=True)
class MarkSampler:
    components: tuple
    dim: int

    def __post_init__(self):
        comps = tuple(MarkComponent(float(p), U, V) for p, U, V in self.components)
        if not 1 <= self.dim <= MAX_DIM:
            raise InvalidInput(f"mark dimension must be in 1..{MAX_DIM}, got {self.dim}")
        for i, c in enumerate(comps):
            if not 0 <= c.p <= 1:
                raise InvalidInput(f"components[{i}].p = {c.p} is outside [0, 1]")
            if c.U.dim != self.dim or c.V.dim != self.dim:
                raise InvalidInput(f"components[{i}] has marks of the wrong dimension")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_model(cls, model: bd.RareEventModel) -> "MarkSampler":
        comps = [(p, DiscreteLaw.from_lattice(U), DiscreteLaw.from_lattice(V))
                 for p, U, V in model.components]
        return cls(tuple(comps), 1)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def a(self) -> np.ndarray:
        """Means of the U_i, shape (n, d)."""
        return np.array([c.U.mean for c in self.components])

    @property
    def p(self) -> float:
        return max(c.p for c in self.components)

    @property
    def u_radius(self) -> float:
        return max(c.U.radius for c in self.components)

    def mixture_mass(self, i: int, box: "Box") -> float:
        p, U, V = self.components[i]
        return (1 - p) * U.mass(box) + p * V.mass(box)


def _as_sampler(model) -> MarkSampler:
    if isinstance(model, MarkSampler):
        return model
    if isinstance(model, bd.RareEventModel):
        return MarkSampler.from_model(model)
    raise InvalidInput(f"expected a RareEventModel or MarkSampler, got {type(model).__name__}")


def _draw_marks(comp: MarkComponent, rng: np.random.Generator, size: int):
    """Marks from F_i through the explicit rare-event branch."""
    rare = rng.random(size) < comp.p
    u = comp.U.sample(rng, size)
    v = comp.V.sample(rng, size)
    return np.where(rare[:, None], v, u), rare


# -- sampling ------------------------------------------------------------------

def sample_X(model, seed: int, reps: int | None = None, return_branch: bool = False):
    """The raw sample: shape (n, d), or (reps, n, d) when ``reps`` is given.

    With ``return_branch=True`` also returns the rare-event indicators.
    """
    s = _as_sampler(model)
    m = 1 if reps is None else reps
    marks = np.empty((m, s.n, s.dim))
    rare = np.empty((m, s.n), dtype=bool)
    for b, size in _blocks(m):
        sl = slice(b * BLOCK, b * BLOCK + size)
        for i, comp in enumerate(s.components):
            marks[sl, i], rare[sl, i] = _draw_marks(comp, _stream(seed, _TAG_X, i, b), size)
    if reps is None:
        marks, rare = marks[0], rare[0]
    return (marks, rare) if return_branch else marks


@dataclass(frozen=True)
class PointProcessSample:
    """One realization of the Poissonized sample, grouped by component."""

    nu: tuple
    marks: tuple

    def __post_init__(self):
        for i, (k, x) in enumerate(zip(self.nu, self.marks)):
            if len(x) != k:
                raise InvalidInput(f"group {i}: {len(x)} marks but nu = {k}")

    @property
    def points(self) -> np.ndarray:
        return np.concatenate(self.marks, axis=0)


def poissonize(model, seed: int) -> PointProcessSample:
    """Replace each observation by ``nu_i ~ Poisson(1)`` i.i.d. copies."""
    s = _as_sampler(model)
    nus, marks = [], []
    for i, comp in enumerate(s.components):
        rng = _stream(seed, _TAG_Y, i, 0)
        k = int(rng.poisson(1.0))
        x, _ = _draw_marks(comp, rng, k)
        nus.append(k)
        marks.append(x.reshape(k, s.dim))
    return PointProcessSample(tuple(nus), tuple(marks))


def functional_sums(sample, model) -> tuple[np.ndarray, np.ndarray]:
    """``(S, 0)`` for a raw sample, ``(T, Delta)`` for a Poissonized one."""
    s = _as_sampler(model)
    if isinstance(sample, PointProcessSample):
        T = sample.points.sum(axis=0) if sum(sample.nu) else np.zeros(s.dim)
        delta = (np.asarray(sample.nu, dtype=float) - 1.0) @ s.a
        return T.reshape(s.dim), delta.reshape(s.dim)
    x = np.asarray(sample, dtype=float).reshape(s.n, s.dim)
    return x.sum(axis=0), np.zeros(s.dim)


def simulate_S(model, reps: int, seed: int) -> np.ndarray:
    """``reps`` independent copies of S, shape (reps, d)."""
    s = _as_sampler(model)

    def block(b, m):
        out = np.zeros((m, s.dim))
        for i, comp in enumerate(s.components):
            x, _ = _draw_marks(comp, _stream(seed, _TAG_X, i, b), m)
            out += x
        return out

    return np.concatenate(_map_blocks(block, reps))


class TDraws(NamedTuple):
    T: np.ndarray
    delta: np.ndarray
    nu_total: np.ndarray


def simulate_T(model, reps: int, seed: int) -> TDraws:
    """Copies of T, the matching Delta, and the total point count."""
    s = _as_sampler(model)
    a = s.a

    def block(b, m):
        T = np.zeros((m, s.dim))
        delta = np.zeros((m, s.dim))
        total = np.zeros(m, dtype=np.int64)
        for i, comp in enumerate(s.components):
            rng = _stream(seed, _TAG_Y, i, b)
            nu = rng.poisson(1.0, m)
            x, _ = _draw_marks(comp, rng, int(nu.sum()))
            owner = np.repeat(np.arange(m), nu)
            for j in range(s.dim):
                T[:, j] += np.bincount(owner, weights=x[:, j], minlength=m)
            delta += (nu - 1.0)[:, None] * a[i]
            total += nu
        return T, delta, total

    parts = _map_blocks(block, reps)
    return TDraws(*(np.concatenate(z) for z in zip(*parts)))


# -- regions and counts --------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lo, hi]`` in mark space."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise InvalidInput("box needs lo <= hi coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.lo.size)
        return np.all((x >= self.lo) & (x <= self.hi), axis=1)

    def overlaps(self, other: "Box") -> bool:
        return bool(np.all(self.lo <= other.hi) and np.all(other.lo <= self.hi))


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return 0.0
    return float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))


@dataclass
class IndependenceReport:
    reps: int
    corr_Y: float
    corr_band: float
    mean_A: float
    expected_A: float
    se_A: float
    mean_B: float
    expected_B: float
    se_B: float
    corr_X: float
    nu_total_mean: float
    nu_total_var: float
    nu_mean_se: float
    nu_var_se: float
    n: int

    @property
    def independent(self) -> bool:
        return abs(self.corr_Y) <= self.corr_band

    @property
    def intensity_ok(self) -> bool:
        return (abs(self.mean_A - self.expected_A) <= 3 * self.se_A
                and abs(self.mean_B - self.expected_B) <= 3 * self.se_B)

    @property
    def counts_ok(self) -> bool:
        return (abs(self.nu_total_mean - self.n) <= 3 * self.nu_mean_se
                and abs(self.nu_total_var - self.n) <= 3 * self.nu_var_se)


def independence_check(model, A: Box, B: Box, reps: int, seed: int) -> IndependenceReport:
    """Counts in two disjoint boxes for the Poissonized and the raw sample."""
    s = _as_sampler(model)
    if A.overlaps(B):
        raise OverlappingRegions("regions A and B must be disjoint")

    def block(b, m):
        out = np.zeros((5, m))
        for i, comp in enumerate(s.components):
            rng = _stream(seed, _TAG_Y, i, b)
            nu = rng.poisson(1.0, m)
            y, _ = _draw_marks(comp, rng, int(nu.sum()))
            owner = np.repeat(np.arange(m), nu)
            out[0] += np.bincount(owner[A.contains(y)], minlength=m)
            out[1] += np.bincount(owner[B.contains(y)], minlength=m)
            out[4] += nu
            x, _ = _draw_marks(comp, _stream(seed, _TAG_X, i, b), m)
            out[2] += A.contains(x)
            out[3] += B.contains(x)
        return out

    c = np.concatenate(_map_blocks(block, reps), axis=1)
    nA, nB, xA, xB, tot = c
    exp_A = sum(s.mixture_mass(i, A) for i in range(s.n))
    exp_B = sum(s.mixture_mass(i, B) for i in range(s.n))
    n = s.n
    return IndependenceReport(
        reps=reps,
        corr_Y=_corr(nA, nB),
        corr_band=3.0 / math.sqrt(reps),
        mean_A=float(nA.mean()), expected_A=exp_A, se_A=float(nA.std() / math.sqrt(reps)),
        mean_B=float(nB.mean()), expected_B=exp_B, se_B=float(nB.std() / math.sqrt(reps)),
        corr_X=_corr(xA, xB),
        nu_total_mean=float(tot.mean()),
        nu_total_var=float(tot.var(ddof=1)),
        nu_mean_se=math.sqrt(n / reps),
        nu_var_se=math.sqrt((n + 2.0 * n * n) / reps),
        n=n,
    )


# -- sandwich inequalities -----------------------------------------------------

@dataclass
class SandwichReport:
    dim: int
    lam: float
    tau: float
    c: float
    remainder: float
    delta_tail: float
    delta_method: str
    slack_upper: float
    slack_lower: float
    error_budget: float
    exact: bool
    st_far_prob: float
    st_far_se: float
    rhs_closeness: float
    coupled: bool = False
    note: str = ("st_far_prob uses independent S and T; the coupling that the "
                 "closeness-in-probability bound refers to is not constructed.")

    @property
    def worst_slack(self) -> float:
        return min(self.slack_upper, self.slack_lower)

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -self.error_budget

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items()}
        d["worst_slack"] = self.worst_slack
        d["passed"] = self.passed
        return d


def _bernstein_coordinatewise(a: np.ndarray, lam: float) -> float:
    """Union bound over coordinates of the one-dimensional Bernstein tail."""
    total = 0.0
    for j in range(a.shape[1]):
        col = a[:, j]
        summ = bd.ModelSummary(0.0, col, float(np.linalg.norm(col)),
                               float(np.max(np.abs(col))), np.zeros_like(col), 0.0)
        total += bd.bernstein_delta_tail(summ, lam)
    return min(1.0, total)


def _ecdf_grid(Z: np.ndarray, grid: Sequence[np.ndarray]) -> np.ndarray:
    """Multivariate empirical CDF at every point of a tensor grid."""
    d = Z.shape[1]
    idx = [np.searchsorted(grid[j], Z[:, j], side="left") for j in range(d)]
    shape = tuple(len(g) + 1 for g in grid)
    flat = np.ravel_multi_index(idx, shape)
    H = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape).astype(float)
    for ax in range(d):
        H = np.cumsum(H, axis=ax)
    return H[tuple(slice(0, len(g)) for g in grid)] / Z.shape[0]


class ExactSandwich(NamedTuple):
    slack_upper: float
    slack_lower: float
    remainder: float
    delta_tail: float
    delta_method: str
    error_budget: float


def sandwich_exact(model: bd.RareEventModel, lam: float, tau: float | None = None,
                   c: float = 1.0, tail_tol: float = bd.DEFAULT_TAIL_TOL,
                   laws: bd.Laws | None = None,
                   delta_law: LatticeDistribution | None = None) -> ExactSandwich:
    """Worst slack over all x of both CDF sandwiches for a lattice model.

    ``slack_upper = min_x [H2(x + 2 lam) + R - H1(x)]`` and symmetrically for
    ``slack_lower``, where ``R = c (p + exp(-lam / (c tau))) + P{|Delta| >= lam}``.
    The Delta tail is exact when the centering constants share a lattice and
    the Bernstein bound otherwise.
    """
    if tau is None:
        tau = max(max(abs(U.offset), abs(U.last)) for _, U, _ in model.components)
    summary = bd.summarize(model)
    if laws is None:
        laws = bd.build_laws(model, tail_tol)
    if delta_law is None:
        delta_law = bd.delta_law(summary, model.step, tail_tol)
    budget = laws.H1.lost_mass + laws.H2.lost_mass
    if delta_law is not None:
        delta = bd.delta_tail_exact(delta_law, lam, inclusive=True)
        method = "exact"
        budget += delta_law.lost_mass
    else:
        delta = min(1.0, bd.bernstein_delta_tail(summary, lam))
        method = "bernstein"
    expo = math.exp(-lam / (c * tau)) if tau > 0 else 0.0
    remainder = c * (summary.p + expo)
    slack_upper = remainder + delta - metrics.sup_cdf_excess(laws.H1, laws.H2, 2 * lam)
    slack_lower = remainder + delta - metrics.sup_cdf_excess(laws.H2, laws.H1, 2 * lam)
    return ExactSandwich(slack_upper, slack_lower, remainder, delta, method, budget)


def verify_sandwich(model, lam: float, reps: int, seed: int, tau: float | None = None,
                    c: float = 1.0, tail_tol: float = bd.DEFAULT_TAIL_TOL,
                    probes: int = 17, alpha: float = metrics.DEFAULT_ALPHA) -> SandwichReport:
    """Check the two-sided CDF sandwich between H1 and H2 with lag ``2 lam``.

    For a one-dimensional lattice model the comparison is exact over all
    ``x``; otherwise empirical CDFs are compared on a tensor probe grid and
    the DKW radii serve as the error budget.  The unknown constant is ``c``.
    """
    if not lam > 0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    s = _as_sampler(model)
    radius = s.u_radius
    if tau is None:
        tau = radius
    elif radius > tau + 1e-9 * max(1.0, tau):
        raise SupportViolation(f"some U_i has an atom at norm {radius} > tau = {tau}")
    p = s.p
    expo = math.exp(-lam / (c * tau)) if tau > 0 else 0.0
    remainder = c * (p + expo)

    S = simulate_S(s, reps, seed)
    Td = simulate_T(s, reps, seed)
    far = np.linalg.norm(S - Td.T, axis=1) > 2 * lam
    st_far = float(far.mean())
    st_far_se = math.sqrt(max(st_far * (1 - st_far), 0.0) / reps)
    delta_l2_tail = float((np.linalg.norm(Td.delta, axis=1) >= lam).mean())
    sum_p2 = sum(comp.p**2 for comp in s.components)
    rhs_closeness = remainder + sum_p2 + delta_l2_tail

    if isinstance(model, bd.RareEventModel):
        ex = sandwich_exact(model, lam, tau, c, tail_tol)
        return SandwichReport(1, lam, tau, c, ex.remainder, ex.delta_tail, ex.delta_method,
                              ex.slack_upper, ex.slack_lower, ex.error_budget, True,
                              st_far, st_far_se, rhs_closeness)

    delta = _bernstein_coordinatewise(s.a, lam)
    pooled = np.concatenate((S, Td.T))
    levels = (np.arange(probes) + 0.5) / probes
    grid = [np.unique(np.quantile(pooled[:, j], levels)) for j in range(s.dim)]
    shifted = [g + 2 * lam for g in grid]
    h1 = _ecdf_grid(S, grid)
    h2 = _ecdf_grid(Td.T, grid)
    h1s = _ecdf_grid(S, shifted)
    h2s = _ecdf_grid(Td.T, shifted)
    slack_upper = float(np.min(h2s + remainder + delta - h1))
    slack_lower = float(np.min(h1s + remainder + delta - h2))
    budget = 2 * metrics.dkw_radius(reps, alpha)
    return SandwichReport(s.dim, lam, tau, c, remainder, delta, "bernstein-coordinatewise",
                          slack_upper, slack_lower, budget, False, st_far, st_far_se, rhs_closeness)
