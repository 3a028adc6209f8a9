"""Empirical constants: distance / bound shape over randomized model families.

Run:  python3 demos/04_ratio_families.py
"""
from poisson_approx import harness

for seed in range(3):
    rows = harness.t0_suite(families=60, seed=seed)
    worst = max(rows, key=lambda r: r["ratio"])
    print(f"zero-U family, seed {seed}: max rho/p = {worst['ratio']:.4f} "
          f"(n={worst['n']}, p={worst['p']:.4f})")

rows = harness.t2_suite(families=60, seed=0)
live = [r for r in rows if not r["degenerate"]]
print(f"concentration bound: fitted R = {max(r['ratio'] for r in live):.4f} on {len(live)} models")
factors = [r["alt_ratio"] for r in live]
print(f"alternative shape / min-Q shape in [{min(factors):.3f}, {max(factors):.3f}]")
flat = [r["rho_h1_h3"] / r["p"] for r in rows if r["degenerate"]]
print(f"B^2 = 0 members: max rho(H1,H3)/p = {max(flat):.4f} over {len(flat)} models")
