"""End-to-end acceptance criteria.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from poisson_approx import bounds as bd
from poisson_approx import dist_core as dc
from poisson_approx import harness
from poisson_approx import metrics as mt
from poisson_approx import oracle
from poisson_approx import simulator as sim

pytestmark = pytest.mark.acceptance

SEEDS = (0, 1, 2, 3, 4)


def _pair(rng, max_atoms):
    def one():
        n = int(rng.integers(1, max_atoms + 1))
        w = rng.random(n)
        w[rng.random(n) < 0.3] = 0.0
        w[0] = w[-1] = max(w[-1], 0.01)
        return dc.LatticeDistribution(1.0, float(rng.integers(-300, 301)), w / w.sum())
    return one(), one()


def test_oracle_parity(record_acceptance):
    rng = np.random.default_rng(20240601)
    worst_conv = 0.0
    for _ in range(1000):
        F, G = _pair(rng, 512)
        ref = oracle.convolve_direct_reference(F, G)
        for method in ("fft", "auto"):
            _, a, b = dc.align(dc.convolve(F, G, method=method), ref)
            worst_conv = max(worst_conv, float(np.max(np.abs(a - b))))
    worst_cp = 0.0
    for k in range(200):
        r = np.random.default_rng([7, k])
        H = dc.LatticeDistribution(1.0, float(r.integers(-4, 2)), r.dirichlet(np.ones(r.integers(1, 6))))
        alpha = float(r.uniform(0.05, 8.0))
        ref, rem = oracle.compound_poisson_series(alpha, H, min(200, dc.poisson_cutoff(alpha, 1e-15) + 5))
        fast = dc.compound_poisson(alpha, H, 1e-12)
        tol = fast.lost_mass + ref.lost_mass + rem + 1e-12
        _, a, b = dc.align(fast, ref)
        worst_cp = max(worst_cp, float(np.max(np.abs(a - b))) / tol)
    ok = worst_conv <= 1e-10 and worst_cp <= 1.0
    record_acceptance("1 oracle parity", ok,
                      f"max conv diff {worst_conv:.2e} (tol 1e-10); "
                      f"max compound diff / combined tol {worst_cp:.2e}")
    assert ok


def test_analytic_fixtures(record_acceptance):
    E1 = dc.point_mass(1)
    P = dc.compound_poisson(1.0, E1, 1e-12)
    w0 = P.weights[0]
    rho = mt.kolmogorov_rho(E1, P)
    model = bd.RareEventModel.from_components([(0.1, dc.point_mass(0), E1)])
    laws = bd.build_laws(model)
    fixture = mt.kolmogorov_rho(laws.H1, laws.H2)
    frozen = 0.0048374180359596   # exact enumeration, oracle.exact_rho_small
    ok = (abs(w0 - math.exp(-1)) <= 1e-12 and abs(rho - math.exp(-1)) <= 1e-9
          and abs(fixture - frozen) <= 1e-7
          and abs(oracle.exact_rho_small(model) - frozen) <= 1e-12)
    record_acceptance("2 analytic fixtures", ok,
                      f"e(E1){{0}}={w0:.13f} rho(E1,e(E1))={rho:.10f} rho(H1,H2)={fixture:.10f}")
    assert ok


def test_zero_u_ratio_suite(record_acceptance):
    maxima, worst_ceiling = [], 0.0
    for seed in SEEDS:
        rows = harness.t0_suite(200, seed)
        ratios = [r["ratio"] for r in rows]
        maxima.append(max(ratios))
        worst_ceiling = max(worst_ceiling, max(r["rho_h1_h2"] / (10 * r["p"]) for r in rows))
    cv = harness.coefficient_of_variation(maxima)
    ok = all(math.isfinite(m) for m in maxima) and cv < 0.20 and worst_ceiling <= 1.0
    record_acceptance("3 t0 ratio suite", ok,
                      f"max ratio per seed {[round(m, 4) for m in maxima]} CV={cv:.3f}; "
                      f"max rho/(10p)={worst_ceiling:.4f}")
    assert ok


def test_concentration_suite(record_acceptance):
    fitted, factors, degenerate = [], [], []
    for seed in SEEDS:
        rows = harness.t2_suite(200, seed)
        live = [r for r in rows if not r["degenerate"]]
        fitted.append(max(r["ratio"] for r in live))
        factors += [r["term[alt_shape]"] / r["total_with_c1"] for r in live]
        degenerate += [r["rho_h1_h3"] / r["p"] for r in rows if r["degenerate"] and r["p"] > 0]
    R = max(fitted)
    cv = harness.coefficient_of_variation(fitted)
    lo, hi = min(factors), max(factors)
    ok = (math.isfinite(R) and cv < 0.20 and 0 < lo and math.isfinite(hi)
          and degenerate and max(degenerate) <= R)
    record_acceptance("4 t2 suite", ok,
                      f"fitted R per seed {[round(r, 4) for r in fitted]} CV={cv:.3f}; "
                      f"shape factor in [{lo:.3f}, {hi:.3f}]; "
                      f"B2=0 max ratio {max(degenerate):.4f} over {len(degenerate)} models")
    assert ok


def test_bernstein_suite(record_acceptance):
    out = harness.bernstein_suite(models=50, gammas=20, reps=10**5, seed=0)
    worst, exact_dev, used_exact, snappable = -math.inf, 0.0, 0, 0
    for rec in out:
        k = rec["instance"]
        model = harness.general_model(harness.instance_rng(0, k), generic_u=(k % 3 == 2))
        s = bd.summarize(model)
        shares = bd.common_lattice(np.asarray(s.a), model.step) is not None
        snappable += shares
        used_exact += rec["exact_available"]
        if shares != rec["exact_available"]:
            worst = math.inf
        for row in rec["rows"]:
            worst = max(worst, row["mc"] - row["bound"] - 3 * row["se"])
            if row["exact"] is not None:
                dev = abs(row["mc"] - row["exact"]) - row["exact_budget"]
                exact_dev = max(exact_dev, dev / max(row["se"], 1 / 10**5))
    ok = worst <= 0 and exact_dev <= 5
    record_acceptance("5 bernstein tail", ok,
                      f"max(mc - bound - 3se)={worst:.4f}; exact law on {used_exact}/50 "
                      f"(snappable {snappable}); max |mc-exact|/se={exact_dev:.2f}")
    assert ok


def test_sandwich_exact(record_acceptance):
    out = harness.sandwich_suite(families=50, seed=0)
    worst = math.inf
    failures = 0
    for rec in out:
        for row in rec["rows"]:
            slack = min(row["slack_upper"], row["slack_lower"])
            worst = min(worst, slack + row["error_budget"])
            failures += slack < -row["error_budget"]
    ok = failures == 0
    record_acceptance("6 sandwich d=1 exact", ok,
                      f"min(slack + budget)={worst:.4f} over {sum(len(r['rows']) for r in out)} probes")
    assert ok


def test_point_process(record_acceptance):
    reps = 10**6
    comps = [(0.1, dc.from_atoms([-1, 0, 1], [0.25, 0.5, 0.25]), dc.from_atoms([-8, 5, 9], [0.3, 0.3, 0.4])),
             (0.05, dc.point_mass(0), dc.point_mass(4)),
             (0.2, dc.from_atoms([0, 2], [0.5, 0.5]), dc.point_mass(-6)),
             (0.08, dc.point_mass(1), dc.from_atoms([3, 7], [0.5, 0.5])),
             (0.15, dc.point_mass(-1), dc.point_mass(6))]
    model = bd.RareEventModel.from_components(comps)
    rep1 = sim.independence_check(model, sim.Box([-10.0], [0.0]), sim.Box([0.5], [10.0]), reps, 11)
    U = sim.DiscreteLaw(np.array([[0.0, 0.0], [1.0, 1.0]]), [0.5, 0.5])
    V = sim.DiscreteLaw(np.array([[5.0, -3.0], [-2.0, 4.0]]), [0.5, 0.5])
    vec = sim.MarkSampler(((0.1, U, V), (0.3, V, U), (0.05, U, U)), 2)
    rep2 = sim.independence_check(vec, sim.Box([-1, -1], [0.5, 0.5]), sim.Box([0.6, 0.6], [6, 6]), reps, 12)
    ok = all(r.independent and r.intensity_ok and r.counts_ok for r in (rep1, rep2))
    record_acceptance("7 point process", ok,
                      f"corr_Y {rep1.corr_Y:+.5f}/{rep2.corr_Y:+.5f} (band {rep1.corr_band:.4f}); "
                      f"sum nu mean {rep1.nu_total_mean:.4f} var {rep1.nu_total_var:.4f} (n={rep1.n})")
    assert ok


def test_metric_properties(record_acceptance):
    rng = np.random.default_rng(99)
    order_bad = mono_bad = conv_bad = 0
    for _ in range(1000):
        F, G = _pair(rng, 40)
        levy, rho, tv = mt.levy_distance(F, G), mt.kolmogorov_rho(F, G), mt.total_variation(F, G)
        order_bad += not (0 <= levy <= rho + 1e-9 and rho <= 2 * tv + 1e-12)
        bs = np.sort(rng.uniform(0, 60, 8))
        qs = [mt.concentration_Q(F, b) for b in bs]
        mono_bad += any(b < a - 1e-15 for a, b in zip(qs, qs[1:]))
        FG = dc.convolve(F, G)
        for b in bs[:3]:
            conv_bad += mt.concentration_Q(FG, b) > min(mt.concentration_Q(F, b),
                                                        mt.concentration_Q(G, b)) + 1e-12
    ok = order_bad == mono_bad == conv_bad == 0
    record_acceptance("8 metric properties", ok,
                      f"violations: ordering {order_bad}, Q monotone {mono_bad}, Q(F*G) {conv_bad}")
    assert ok


def _cli(args, threads, dest):
    env = dict(os.environ, POISSON_APPROX_THREADS=str(threads))
    subprocess.run([sys.executable, "-m", "poisson_approx", *args, "--out", str(dest)],
                   env=env, check=True, capture_output=True)
    return dest.read_bytes()


def test_determinism(record_acceptance, tmp_path):
    model = {"step": 1, "components": [
        {"p": 0.05, "U": {"atoms": [[-1, 0.25], [0, 0.5], [1, 0.25]]}, "V": {"atoms": [[-20, 0.5], [30, 0.5]]}},
        {"p": 0.08, "U": {"atoms": [[0, 0.5], [2, 0.5]]}, "V": {"atoms": [[10, 1.0]]}}]}
    vec = {"step": 1, "dim": 2, "components": [
        {"p": 0.1, "U": {"atoms": [[[0, 0], 0.5], [[1, -1], 0.5]]}, "V": {"atoms": [[[5, 3], 1.0]]}}]}
    mpath, vpath = tmp_path / "m.json", tmp_path / "v.json"
    mpath.write_text(json.dumps(model))
    vpath.write_text(json.dumps(vec))
    runs = {
        "compute": ["compute", "--model", str(mpath), "--theorem", "t3", "--seed", "5"],
        "verify": ["verify", "--theorem", "t2", "--families", "20", "--seed", "42"],
        "simulate": ["simulate", "--model", str(mpath), "--reps", "150000", "--seed", "3"],
        "simulate-2d": ["simulate", "--model", str(vpath), "--reps", "150000", "--seed", "3"],
        "sweep": ["sweep", "--model", str(vpath), "--reps", "20000", "--seed", "9"],
    }
    differing = []
    for name, args in runs.items():
        outs = {_cli(args, t, tmp_path / f"{name}-{t}-{i}.out") for t in (1, 8) for i in range(2)}
        if len(outs) != 1:
            differing.append(name)
    ok = not differing
    record_acceptance("9 determinism", ok,
                      f"{len(runs)} CLI configs x threads {{1,8}} x 2 runs; differing: {differing or 'none'}")
    assert ok
