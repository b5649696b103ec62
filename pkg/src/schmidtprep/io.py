"""JSON formats for MPS, circuits and reports.

Complex numbers are stored as ``[re, im]`` pairs. Python's ``json`` writes
floats with ``repr``, so every value round-trips bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .circuit import Circuit, StaircaseLayer, Su4Gate
from .errors import ValidationError
from .mps import MPS
from .sso import SynthesisReport


def _complex_list(a: np.ndarray) -> list:
    flat = np.asarray(a, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _complex_array(data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != math.prod(shape):
        raise ValidationError(f"complex data does not match shape {list(shape)}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def mps_to_dict(psi: MPS) -> dict:
    return {
        "n": psi.n,
        "tensors": [{"shape": list(t.shape), "data": _complex_list(t)} for t in psi.tensors],
        "norm_log": float(psi.norm_log),
    }


def mps_from_dict(d: dict) -> MPS:
    try:
        tensors = [_complex_array(t["data"], tuple(t["shape"])) for t in d["tensors"]]
        n, norm_log = int(d["n"]), float(d.get("norm_log", 0.0))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed MPS JSON: {exc}") from exc
    if len(tensors) != n:
        raise ValidationError(f"MPS JSON declares n={n} but holds {len(tensors)} tensors")
    return MPS(tensors, None, norm_log)


def circuit_to_dict(c: Circuit) -> dict:
    return {
        "n": c.n,
        "layers": [
            {
                "adjoint": bool(adj),
                "gates": [
                    {"sites": list(g.sites), "params": [float(x) for x in g.params], "unitary": [_complex_list(row) for row in g.unitary]}
                    for g in layer.gates
                ],
            }
            for layer, adj in c.layers
        ],
        "meta": to_jsonable(c.meta),
    }


def circuit_from_dict(d: dict) -> Circuit:
    try:
        layers = []
        for ld in d["layers"]:
            gates = [Su4Gate(tuple(g["sites"]), np.asarray(g["params"], dtype=float), _complex_array(sum(g["unitary"], []), (4, 4))) for g in ld["gates"]]
            layers.append((StaircaseLayer(gates), bool(ld["adjoint"])))
        return Circuit(int(d["n"]), layers, dict(d.get("meta", {})))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed circuit JSON: {exc}") from exc


def report_to_dict(report: SynthesisReport, config: dict | None = None) -> dict:
    """Report payload with wall-clock data split out under ``timing``."""
    body = report.to_dict()
    timing = body.pop("timing")
    out = {"report": to_jsonable(body), "timing": to_jsonable(timing)}
    if config is not None:
        out["config"] = to_jsonable(config)
    return out


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1) + "\n"


def save_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def save_mps(psi: MPS, path) -> None:
    save_json(mps_to_dict(psi), path)


def load_mps(path) -> MPS:
    return mps_from_dict(load_json(path))


def save_circuit(c: Circuit, path) -> None:
    save_json(circuit_to_dict(c), path)


def load_circuit(path) -> Circuit:
    return circuit_from_dict(load_json(path))
