"""Every bound shape on one model, with the constant set to one.

Run:  python3 demos/03_bound_shapes.py
"""
from pathlib import Path

from poisson_approx import bounds as bd
from poisson_approx import metrics as mt
from poisson_approx.model_io import load_model

model = load_model(Path(__file__).parent / "models" / "three_components.json")
s = bd.summarize(model)
print(f"n={model.n}  p={s.p}  |a|_2={s.a_l2:.3f}  B^2={s.B2:.3f}")

laws = bd.build_laws(model)
rho12 = mt.kolmogorov_rho(laws.H1, laws.H2)
rho13 = mt.kolmogorov_rho(laws.H1, laws.H3)
print(f"rho(H1,H2)={rho12:.5f}  rho(H1,H3)={rho13:.5f}")

params = {"tau": 2.0, "gamma": 1.0, "seed": 0}
for tid in bd.TheoremId:
    ev = bd.theorem_rhs(tid, model, params, laws=laws)
    dist = rho13 if tid in (bd.TheoremId.T2, bd.TheoremId.COR1) else rho12
    terms = ", ".join(f"{k}={v:.4g}" for k, v in ev.terms.items() if k in ev.summands)
    print(f"{tid.value:>9}: total {ev.total_with_c1:8.4f}  ratio {dist / ev.total_with_c1:7.4f}  [{terms}]")

# the quadratic g is outside the admissible class, but the expression can still be evaluated
beta, lam = bd.beta_lambda(model, bd.G_SQUARE, strict=False)
print(f"g=x^2: beta={beta:.3f} lambda={lam:.3f}; violations: {bd.G_SQUARE.violations()}")
