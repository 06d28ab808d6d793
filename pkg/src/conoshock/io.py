"""Artifact writers, the output manifest and the JSON report schemas.

CSV numbers are printed with 17 significant digits; JSON numbers use
Python's shortest round-trip representation. Neither carries timestamps, so
repeated runs produce byte-identical files.
"""

import hashlib
import json
import math
import os

import numpy as np


def fmt(x):
    return f"{float(x):.17g}"


def write_csv(path, header, columns):
    """Write equal-length columns under a comma-separated header."""
    cols = [np.ravel(np.asarray(c, dtype=float)) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, names):
    """manifest.json listing name, size and sha256 of each artifact."""
    entries = []
    for name in sorted(names):
        path = os.path.join(out_dir, name)
        entries.append({"name": name, "size": os.path.getsize(path), "sha256": sha256(path)})
    write_json(os.path.join(out_dir, "manifest.json"), {"files": entries})
    return entries


# --- schemas -----------------------------------------------------------------

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_BOOL_OR_NULL = {"type": ["boolean", "null"]}


def _obj(props, required=None):
    return {"type": "object", "properties": props, "required": list(required or props)}


FAILURE_SCHEMA = _obj({
    "status": {"const": "error"},
    "code": {"type": "string"},
    "message": {"type": "string"},
    "diagnostics": {"type": "object"},
})

MANIFEST_SCHEMA = _obj({
    "files": {
        "type": "array",
        "items": _obj({"name": {"type": "string"}, "size": {"type": "integer"},
                       "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"}}),
    }
})

POLAR_SCHEMA = _obj({
    "status": {"const": "ok"},
    "gamma": _NUM, "nu": _NUM, "b": _NUM, "tau": _NUM, "omega1": _NUM,
    "post": _obj({"u": _NUM, "v": _NUM, "rho": _NUM}),
    "mach_post": _NUM,
    "residuals": _obj({"r1": _NUM, "r2": _NUM, "g_form": _NUM}),
    "roots": {"type": "array", "items": _NUM},
})

BACKGROUND_SCHEMA = _obj({
    "status": {"const": "ok"},
    "tau": _NUM, "kappa": _NUM, "omega0": _NUM, "omega1": _NUM,
    "slip_residual": _NUM,
    "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
})

SOLVE_SUMMARY_SCHEMA = _obj({
    "residual_interior": _NUM, "residual_bc0": _NUM, "residual_bc1": _NUM,
    "stability_ratio": _NUM, "modes_solved": {"type": "integer"}, "rate": _NUM,
})

LINSOLVE_SCHEMA = _obj({
    "status": {"enum": ["ok", "fail"]},
    "levels": {"type": "array"},
    "cases": {
        "type": "array",
        "items": _obj({
            "solver": {"enum": ["dirichlet", "neumann", "first_order"]},
            "case": {"type": "integer"},
            "errors": {"type": "array", "items": _NUM},
            "ratios": {"type": "array", "items": _NUM},
            "residual": _NUM,
            "passed": {"type": "boolean"},
        }),
    },
    "summary": SOLVE_SUMMARY_SCHEMA,
})

_LOOP = _obj({"iterates": {"type": "integer"}, "rate": _NUM_OR_NULL,
              "max_rate": _NUM_OR_NULL, "contracting": _BOOL_OR_NULL})

REPORT_SCHEMA = _obj({
    "status": {"const": "ok"},
    "case": {"type": "object"},
    "background": _obj({"tau": _NUM, "kappa": _NUM, "omega0": _NUM, "omega1": _NUM,
                        "alpha": _NUM, "beta": _NUM}),
    "norms": _obj({k: _NUM for k in (
        "epsilon", "eps_cone", "eps_upstream", "du_norm", "shock_norm", "shock_sup", "F_norm",
        "g0_norm", "g1_norm", "M", "M_S", "eps_hat", "gate_quantity")}),
    "iterations": _obj({"outer": {"type": "integer"}, "inner": {"type": "array", "items": {"type": "integer"}}}),
    "rates": _obj({
        "outer": _LOOP,
        "inner": _obj({"passes": {"type": "integer"}, "max_rate": _NUM_OR_NULL, "contracting": _BOOL_OR_NULL}),
        "linear": {"type": "array", "items": _NUM},
        "contracting": _BOOL_OR_NULL,
    }),
    "rh": _obj({"max_res1": _NUM, "max_res2": _NUM}),
    "shock": _obj({"max_slope_deviation": _NUM, "tail_ratio": _NUM_OR_NULL}),
    "flags": {"type": "object", "additionalProperties": {"type": "boolean"}},
})

SWEEP_SCHEMA = _obj({
    "status": {"enum": ["ok", "fail"]},
    "parameter": {"type": "string"},
    "points": {
        "type": "array",
        "items": _obj({"value": _NUM, "status": {"enum": ["ok", "error"]}, "code": {"type": "string"},
                       "du_norm": _NUM_OR_NULL, "shock_norm": _NUM_OR_NULL, "outer_rate": _NUM_OR_NULL},
                      ["value", "status"]),
    },
})

SCHEMAS = {
    "failure": FAILURE_SCHEMA,
    "manifest": MANIFEST_SCHEMA,
    "polar": POLAR_SCHEMA,
    "background": BACKGROUND_SCHEMA,
    "linsolve": LINSOLVE_SCHEMA,
    "report": REPORT_SCHEMA,
    "sweep": SWEEP_SCHEMA,
    "solve_summary": SOLVE_SUMMARY_SCHEMA,
}
