"""JSON model files.

Scalar models::

    {"step": 0.5,
     "components": [{"p": 0.05,
                     "U": {"atoms": [[0, 1.0]]},
                     "V": {"atoms": [[-4, 0.5], [6, 0.5]]}}]}

Each atom is ``[k, weight]`` and sits at ``k * step``.  Vector-mark models
add ``"dim": d`` and give each atom as ``[[k_1, ..., k_d], weight]``.

With ``"units": "value"`` positions are real mark values instead of lattice
indices; they are rounded to the nearest multiple of ``step`` by
:func:`quantize` and :func:`read_model` reports the largest rounding error.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import dist_core as dc
from .bounds import RareEventModel
from .errors import InvalidInput
from .simulator import DiscreteLaw, MarkSampler


def quantize(values, step: float):
    """Round mark values to lattice indices; returns ``(indices, max_error)``."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidInput("positions must be finite")
    k = np.floor(v / step + 0.5)
    err = float(np.max(np.abs(v - k * step))) if v.size else 0.0
    return k.astype(np.int64), err


def _is_num(x) -> bool:
    return not isinstance(x, bool) and isinstance(x, (int, float))


def _fail(where: str, msg: str):
    raise InvalidInput(f"{where}: {msg}")


def _atoms(obj, where: str, dim: int, exact: bool):
    if not isinstance(obj, dict) or "atoms" not in obj:
        _fail(where, "expected an object with an 'atoms' list")
    atoms = obj["atoms"]
    if not isinstance(atoms, list) or not atoms:
        _fail(f"{where}.atoms", "must be a non-empty list")
    coords, weights = [], []
    for j, atom in enumerate(atoms):
        loc = f"{where}.atoms[{j}]"
        if not isinstance(atom, (list, tuple)) or len(atom) != 2:
            _fail(loc, "each atom must be [position, weight]")
        pos, w = atom
        if dim == 1:
            if not _is_num(pos) or (exact and pos != int(pos)):
                _fail(loc, f"position must be an integer lattice index, got {pos!r}")
            coords.append(pos)
        else:
            if not isinstance(pos, list) or len(pos) != dim:
                _fail(loc, f"position must be a list of {dim} coordinates")
            if any(not _is_num(c) or (exact and c != int(c)) for c in pos):
                _fail(loc, "coordinates must be integer lattice indices")
            coords.append(list(pos))
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not w >= 0:
            _fail(loc, f"weight must be a non-negative number, got {w!r}")
        weights.append(float(w))
    total = sum(weights)
    if abs(total - 1.0) > 1e-9:
        _fail(f"{where}.atoms", f"weights sum to {total!r}, expected 1")
    return coords, weights


def read_model(data) -> tuple[RareEventModel | MarkSampler, float]:
    """Build a model from decoded JSON; returns ``(model, quantization_error)``."""
    if not isinstance(data, dict):
        _fail("model", "top level must be a JSON object")
    step = data.get("step")
    if isinstance(step, bool) or not isinstance(step, (int, float)) or not step > 0:
        _fail("step", f"must be a positive number, got {step!r}")
    dim = data.get("dim", 1)
    if isinstance(dim, bool) or not isinstance(dim, int) or not 1 <= dim <= 3:
        _fail("dim", f"must be 1, 2 or 3, got {dim!r}")
    units = data.get("units", "index")
    if units not in ("index", "value"):
        _fail("units", f"must be 'index' or 'value', got {units!r}")
    comps = data.get("components")
    if not isinstance(comps, list) or not comps:
        _fail("components", "must be a non-empty list")
    parsed = []
    qerr = 0.0
    for i, c in enumerate(comps):
        where = f"components[{i}]"
        if not isinstance(c, dict):
            _fail(where, "must be an object")
        p = c.get("p")
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 <= p <= 1:
            _fail(f"{where}.p", f"must be a number in [0, 1], got {p!r}")
        laws = []
        for name in ("U", "V"):
            coords, weights = _atoms(c.get(name), f"{where}.{name}", dim, units == "index")
            if units == "value":
                coords, err = quantize(coords, float(step))
                qerr = max(qerr, err)
            if dim == 1:
                laws.append(dc.from_atoms(coords, weights, float(step)))
            else:
                laws.append(DiscreteLaw(np.asarray(coords, dtype=float) * step, weights))
        parsed.append((float(p), *laws))
    if dim == 1:
        model = RareEventModel(tuple(parsed), float(step))
    else:
        model = MarkSampler(tuple(parsed), dim)
    return model, qerr


def parse_model(data) -> RareEventModel | MarkSampler:
    return read_model(data)[0]


def load_model(path, with_error: bool = False):
    """Read a model file.  With ``with_error`` also return the quantization error."""
    path = Path(path)
    if not path.is_file():
        _fail("--model", f"file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        _fail("--model", f"invalid JSON ({exc})")
    model, qerr = read_model(data)
    return (model, qerr) if with_error else model


def _law_json(F: dc.LatticeDistribution) -> dict:
    start = dc.on_lattice(F.offset, F.step)
    return {"atoms": [[start + k, float(w)] for k, w in enumerate(F.weights) if w > 0]}


def model_to_json(model: RareEventModel) -> dict:
    """Inverse of :func:`parse_model` for scalar lattice models."""
    return {
        "step": model.step,
        "components": [{"p": p, "U": _law_json(U), "V": _law_json(V)}
                       for p, U, V in model.components],
    }
