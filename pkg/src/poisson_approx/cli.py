"""Batch front-end.

    python -m poisson_approx compute  --model m.json --theorem t2 --g abs
    python -m poisson_approx verify   --theorem t0 --families 200 --seed 42
    python -m poisson_approx simulate --model m.json --lambda 1 --reps 100000
    python -m poisson_approx sweep    --model m.json --lambda 0.25

Exit codes: 0 success, 1 bad input, 2 numerical corruption, 3 size cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import bounds as bd
from . import harness
from . import metrics as mt
from . import simulator as sim
from .errors import InvalidInput, PoissonApproxError
from .model_io import load_model

THEOREMS = [t.value for t in bd.TheoremId]
SWEEP_POINTS = 12


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poisson_approx", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model_required):
        p.add_argument("--model", required=model_required)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--tau", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--g", choices=sorted(bd.G_FUNCTIONS), default="abs")
        p.add_argument("--dim", type=int, default=None)

    p = sub.add_parser("compute", help="evaluate one bound on one model")
    common(p, True)
    p.add_argument("--theorem", choices=THEOREMS, required=True)

    p = sub.add_parser("verify", help="distance/bound ratios over a random family")
    common(p, False)
    p.add_argument("--theorem", choices=THEOREMS, required=True)
    p.add_argument("--families", type=int, default=200)

    p = sub.add_parser("simulate", help="Monte-Carlo sandwich and Poissonization report")
    common(p, True)

    p = sub.add_parser("sweep", help="sandwich slack over a geometric lambda grid")
    common(p, True)
    return ap


def _check(args):
    if not 0 <= args.seed < 2**64:
        raise InvalidInput(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
    if args.reps is not None and args.reps < 1:
        raise InvalidInput(f"--reps must be >= 1, got {args.reps}")
    if getattr(args, "families", 1) < 1:
        raise InvalidInput(f"--families must be >= 1, got {args.families}")
    for name in ("tau", "gamma", "kappa", "lam"):
        v = getattr(args, name)
        if v is not None and (not math.isfinite(v) or v < 0):
            flag = "--lambda" if name == "lam" else f"--{name}"
            raise InvalidInput(f"{flag} must be a non-negative number, got {v}")


def _load(args):
    model, args.quantization_error = load_model(args.model, with_error=True)
    dim = model.dim if isinstance(model, sim.MarkSampler) else 1
    if args.dim is not None and args.dim != dim:
        raise InvalidInput(f"--dim: {args.dim} does not match the model file (dim = {dim})")
    return model


def _require_scalar(model, command):
    if not isinstance(model, bd.RareEventModel):
        raise InvalidInput(f"--model: '{command}' needs a one-dimensional lattice model")
    return model


def _params(args) -> dict:
    out = {"tau": args.tau, "gamma": args.gamma, "kappa": args.kappa, "g": args.g,
           "seed": args.seed}
    if args.g != "abs":
        out["strict_g"] = False
    if args.reps is not None:
        out["reps"] = max(args.reps, bd.DEFAULT_DELTA_REPS)
    return out


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def _render(payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(payload), indent=2, sort_keys=False) + "\n"
    rows = payload if isinstance(payload, list) else [payload]
    header: list[str] = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if r.get(k) is None else _cell(r.get(k)) for k in header])
    return buf.getvalue()


def _cell(v):
    v = _clean(v)
    return repr(v) if isinstance(v, float) else v


def cmd_compute(args):
    model = _require_scalar(_load(args), "compute")
    laws = bd.build_laws(model)
    ev = bd.theorem_rhs(args.theorem, model, _params(args), laws=laws)
    rho12 = mt.kolmogorov_rho(laws.H1, laws.H2)
    rho13 = mt.kolmogorov_rho(laws.H1, laws.H3)
    dist = rho13 if ev.theorem_id in (bd.TheoremId.T2, bd.TheoremId.COR1) else rho12
    out = {
        "rho_h1_h2": rho12,
        "rho_h1_h3": rho13,
        "tv_h1_h2": mt.total_variation(laws.H1, laws.H2),
        "levy_h1_h2": mt.levy_distance(laws.H1, laws.H2),
        "bound": ev.to_dict(),
        "ratio": dist / ev.total_with_c1 if ev.total_with_c1 > 0 else None,
        "error_budget": ev.error_budget + bd.error_budget(laws, model),
    }
    if args.quantization_error:
        out["quantization_error"] = args.quantization_error
    if (args.format or "json") == "csv":
        flat = {k: v for k, v in out.items() if k != "bound"}
        flat.update({f"term[{k}]": v for k, v in ev.terms.items()})
        flat["total_with_c1"] = ev.total_with_c1
        return flat, "csv"
    return out, "json"


def cmd_verify(args):
    rows = harness.run_family(args.theorem, args.families, args.seed, _params(args))
    return rows, args.format or "csv"


def cmd_simulate(args):
    model = _load(args)
    reps = args.reps or 10**5
    lam = args.lam if args.lam else 1.0
    rep = sim.verify_sandwich(model, lam, reps, args.seed, tau=args.tau)
    draws = sim.simulate_T(model, reps, args.seed)
    n = model.n
    out = {
        "dim": rep.dim,
        "reps": reps,
        "sandwich": rep.to_dict(),
        "poissonization": {
            "n": n,
            "nu_total_mean": float(draws.nu_total.mean()),
            "nu_total_var": float(draws.nu_total.var(ddof=1)),
        },
    }
    if isinstance(model, bd.RareEventModel):
        H2 = bd.build_laws(model).H2
        d, radius = mt.empirical_vs_law(mt.EmpiricalCDF.from_samples(draws.T[:, 0]), H2)
        out["poissonization"]["ks_T_vs_H2"] = d
        out["poissonization"]["dkw_radius"] = radius
    return out, args.format or "json"


def cmd_sweep(args):
    model = _load(args)
    start = args.lam if args.lam else 0.125
    grid = start * 2.0 ** np.arange(SWEEP_POINTS)
    rows = []
    if isinstance(model, bd.RareEventModel):
        laws = bd.build_laws(model)
        dlaw = bd.delta_law(bd.summarize(model), model.step)
        for lam in grid:
            ex = sim.sandwich_exact(model, float(lam), tau=args.tau, laws=laws, delta_law=dlaw)
            rows.append({"lambda": float(lam), "slack_upper": ex.slack_upper, "slack_lower": ex.slack_lower,
                         "worst_slack": min(ex.slack_upper, ex.slack_lower),
                         "remainder": ex.remainder, "delta_tail": ex.delta_tail,
                         "delta_method": ex.delta_method, "error_budget": ex.error_budget,
                         "passed": min(ex.slack_upper, ex.slack_lower) >= -ex.error_budget})
    else:
        reps = args.reps or 10**5
        for lam in grid:
            rep = sim.verify_sandwich(model, float(lam), reps, args.seed, tau=args.tau)
            rows.append({"lambda": float(lam), "slack_upper": rep.slack_upper, "slack_lower": rep.slack_lower,
                         "worst_slack": rep.worst_slack, "remainder": rep.remainder,
                         "delta_tail": rep.delta_tail, "delta_method": rep.delta_method,
                         "error_budget": rep.error_budget, "passed": rep.passed})
    return rows, args.format or "csv"


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _check(args)
        payload, fmt = COMMANDS[args.command](args)
        text = _render(payload, fmt)
    except PoissonApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
