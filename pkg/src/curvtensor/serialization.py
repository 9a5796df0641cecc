"""JSON wire formats for contexts, operators, tensors, terms and decompositions.

Exact scalars are written as ``"p/q"`` strings, float scalars as JSON numbers.
Readers accept either form in both modes.
"""

from __future__ import annotations

from typing import Any, Optional

import numpy as np

from .curvature import Build, CanonicalTerm, CurvatureTensor
from .linalg_core import _MPQ, Kind, Mode, Operator, SpaceContext


def scalar_to_json(x: Any):
    if isinstance(x, _MPQ):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialize scalar of type {type(x).__name__}")


def array_to_json(arr: np.ndarray) -> list:
    return np.vectorize(scalar_to_json, otypes=[object])(arr).tolist() if arr.size else arr.tolist()


def jsonable(obj: Any):
    """Recursively convert reports (dicts, lists, scalars, arrays) to JSON-ready values."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return array_to_json(obj)
    if isinstance(obj, (Kind, Mode, Build)):
        return obj.value
    return scalar_to_json(obj)


def context_to_json(ctx: SpaceContext) -> dict:
    return {
        "dim": ctx.dim,
        "mode": ctx.mode.value,
        "tolerance": ctx.tolerance,
        "phi": "identity" if ctx.phi_is_identity else array_to_json(ctx.phi),
    }


def context_from_json(data: dict, mode: Optional[str] = None, tolerance: Optional[float] = None) -> SpaceContext:
    phi = data.get("phi", "identity")
    return SpaceContext(
        int(data["dim"]),
        None if phi == "identity" else phi,
        Mode(mode or data.get("mode", "float64")),
        float(tolerance if tolerance is not None else data.get("tolerance", 1e-9)),
    )


def operator_to_json(op: Operator) -> dict:
    return {"kind": op.kind.value, "matrix": array_to_json(op.matrix)}


def operator_from_json(data: dict, ctx: SpaceContext) -> Operator:
    return Operator(ctx, ctx.asarray(data["matrix"]), Kind(data.get("kind", "general")))


def term_to_json(term: CanonicalTerm) -> dict:
    out = {"build": term.build.value, "sign": term.sign, "operator": operator_to_json(term.op)}
    if term.weight != 1:
        out["weight"] = scalar_to_json(term.weight)
    if term.raw:
        out["raw"] = True
    return out


def term_from_json(data: dict, ctx: SpaceContext) -> CanonicalTerm:
    op = operator_from_json(data["operator"], ctx)
    build = data.get("build")
    if build is None:
        return CanonicalTerm.of(op, int(data.get("sign", 1)), data.get("weight", 1))
    return CanonicalTerm(Build(build), int(data.get("sign", 1)), op, data.get("weight", 1), bool(data.get("raw", False)))


def tensor_to_json(R: CurvatureTensor) -> dict:
    out = {"dim": R.dim, "entries": array_to_json(R.entries)}
    if R.canonical is not None:
        out["canonical"] = term_to_json(R.canonical)
    return out


def tensor_from_json(data: dict, ctx: SpaceContext) -> CurvatureTensor:
    if int(data["dim"]) != ctx.dim:
        raise ValueError("tensor dimension does not match the context")
    canonical = term_from_json(data["canonical"], ctx) if "canonical" in data else None
    return CurvatureTensor(ctx, ctx.asarray(data["entries"]), canonical=canonical)


def infer_dim(data: Any) -> int:
    """Dimension implied by an operator, term, tensor or context JSON object."""
    if isinstance(data, dict):
        if "dim" in data:
            return int(data["dim"])
        if "matrix" in data:
            return len(data["matrix"])
        for key in ("operator", "tensor", "target", "tau", "context"):
            if key in data and data[key] is not None:
                return infer_dim(data[key])
        if "terms" in data and data["terms"]:
            return infer_dim(data["terms"][0])
        if "ops" in data and data["ops"]:
            return infer_dim(data["ops"][0])
    if isinstance(data, list) and data:
        return infer_dim(data[0])
    raise ValueError("cannot infer the dimension from the input")
