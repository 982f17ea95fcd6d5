"""JSON wire formats: operators, calibrations, domains, contours.

Complex matrices are stored as separate real and imaginary arrays.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .calib import Calibration, DerivedSeminorm, WeightedSup
from .errors import DimensionError, PreconditionError

__all__ = [
    "operator_to_json",
    "operator_from_json",
    "calibration_to_json",
    "calibration_from_json",
    "complex_list",
    "load_json",
    "dumps",
]


def operator_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def operator_from_json(d: dict) -> np.ndarray:
    try:
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed operator JSON: {exc}") from None
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise DimensionError(f"operator arrays must be square and congruent, got {re.shape} and {im.shape}")
    if "dim" in d and int(d["dim"]) != re.shape[0]:
        raise DimensionError(f"declared dim {d['dim']} does not match matrix size {re.shape[0]}")
    return re + 1j * im


def calibration_to_json(P: Calibration) -> dict:
    sems = []
    for p in P:
        if isinstance(p, WeightedSup):
            sems.append({"kind": "weighted_sup", "weights": p.weights.tolist()})
        else:
            A = p.functionals
            sems.append({"kind": "derived", "functionals": operator_to_json_rect(A), "meta": _plain(p.meta)})
    return {"dim": P.dim, "principal": P.principal, "seminorms": sems}


def operator_to_json_rect(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def calibration_from_json(d: dict) -> Calibration:
    try:
        sems = []
        for s in d["seminorms"]:
            kind = s.get("kind", "weighted_sup")
            if kind == "weighted_sup":
                sems.append(WeightedSup(s["weights"]))
            elif kind == "derived":
                f = s["functionals"]
                sems.append(DerivedSeminorm(np.asarray(f["re"]) + 1j * np.asarray(f.get("im", 0)), s.get("meta", {})))
            else:
                raise PreconditionError(f"unknown seminorm kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed calibration JSON: {exc}") from None
    P = Calibration(tuple(sems), bool(d.get("principal", False)))
    if "dim" in d and int(d["dim"]) != P.dim:
        raise DimensionError(f"declared dim {d['dim']} does not match seminorm length {P.dim}")
    return P


def complex_list(zs) -> list:
    return [{"re": float(z.real), "im": float(z.imag)} for z in np.asarray(zs, dtype=complex).ravel()]


def load_json(path) -> dict:
    """Read JSON; malformed content raises json.JSONDecodeError."""
    return json.loads(Path(path).read_text())


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, plain types, inf as a string."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2)
