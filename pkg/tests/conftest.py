import numpy as np
import pytest
from hypothesis import settings, strategies as st

from poisson_approx import dist_core as dc

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# acceptance tests append (name, passed, detail) here; printed at the end of the run
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_acceptance():
    def record(name, passed, detail=""):
        ACCEPTANCE_LINES.append((name, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}".rstrip())


@st.composite
def lattice_laws(draw, max_atoms=12, step=1.0, span=20):
    n = draw(st.integers(1, max_atoms))
    start = draw(st.integers(-span, span))
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    w = np.asarray(raw) + 1e-3
    return dc.LatticeDistribution(step, start * step, w / w.sum())


def random_law(rng, max_atoms=12, step=1.0, span=20, sparse=0.0):
    n = int(rng.integers(1, max_atoms + 1))
    w = rng.random(n)
    if sparse:
        w[rng.random(n) < sparse] = 0.0
        w[0] = w[-1] = max(w[0], 1e-3)
    return dc.LatticeDistribution(step, int(rng.integers(-span, span + 1)) * step, w / w.sum())
