"""Compound Poisson approximation of rare-event samples.

Exact lattice laws for the sum over a rare-event sample (H1), over its
Poissonized version (H2) and the centered accompanying law (H3); distances
and concentration functions between them; bound expressions; and Monte-Carlo
checks of the Poisson point process picture.
"""

from .bounds import (
    BoundEvaluation,
    GFunction,
    RareEventModel,
    TheoremId,
    build_laws,
    summarize,
    theorem_rhs,
)
from .dist_core import (
    LatticeDistribution,
    compound_poisson,
    convolve,
    from_atoms,
    mixture,
    moments,
    point_mass,
    power,
    shift,
    truncate_support,
)
from .metrics import (
    EmpiricalCDF,
    cdf_at,
    concentration_Q,
    empirical_ks,
    kolmogorov_rho,
    levy_distance,
    total_variation,
)

__version__ = "0.1.0"
