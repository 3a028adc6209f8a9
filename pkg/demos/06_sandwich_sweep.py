"""CDF sandwich between H1 and H2 over a geometric grid of lambda.

Run:  python3 demos/06_sandwich_sweep.py
"""
from pathlib import Path

from poisson_approx import bounds as bd
from poisson_approx import simulator as sim
from poisson_approx.model_io import load_model

here = Path(__file__).parent / "models"
model = load_model(here / "three_components.json")
laws = bd.build_laws(model)
dlaw = bd.delta_law(bd.summarize(model), model.step)

print(" lambda   slack_upper  slack_lower  Delta tail")
for k in range(9):
    lam = 0.125 * 2**k
    ex = sim.sandwich_exact(model, lam, laws=laws, delta_law=dlaw)
    print(f"{lam:7.3f}  {ex.slack_upper:11.5f}  {ex.slack_lower:11.5f}  {ex.delta_tail:.2e} ({ex.delta_method})")

rep = sim.verify_sandwich(load_model(here / "planar_marks.json"), 1.0, reps=50000, seed=0)
print(f"planar marks: worst slack {rep.worst_slack:.4f}, budget {rep.error_budget:.4f}, passed {rep.passed}")
print("note:", rep.note)
