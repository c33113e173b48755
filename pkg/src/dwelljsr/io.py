"""JSON input parsing, schemas and report serialisation."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

from .dwell import DwellSystem, SignalSpec, as_fraction
from .graph import Edge, GraphSystem, Multinorm
from .linalg import expm, logm
from .mixed import BoundsReport, Flow, Jump, MixedSystem, SwitchingLaw
from .polytope import SymPolytope
from .weighted import WeightedSystem

SCHEMA_VERSION = 1

_number = {"type": "number"}
_rational = {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                       {"type": "string", "pattern": r"^\s*\d+(\.\d*)?(\s*/\s*\d+)?\s*$"}]}
_row = {"type": "array", "items": _number, "minItems": 1}
_literal = {"type": "array", "items": _row, "minItems": 1}

MATRIX = {
    "$id": "matrix",
    "oneOf": [
        _literal,
        {"type": "object", "required": ["logm"], "properties": {"logm": {"$ref": "#"}},
         "additionalProperties": False},
        {"type": "object", "required": ["expm"],
         "properties": {"expm": {"$ref": "#"}, "t": _number}, "additionalProperties": False},
        {"type": "object", "required": ["scale", "matrix"],
         "properties": {"scale": _number, "matrix": {"$ref": "#"}}, "additionalProperties": False},
    ],
}


def _with_matrix(schema: dict) -> dict:
    return {"$defs": {"matrix": MATRIX}, **schema}


_M = {"$ref": "#/$defs/matrix"}
_vertices = {"type": "array", "items": _row, "minItems": 1}

WEIGHTED_SCHEMA = _with_matrix({
    "type": "object",
    "required": ["matrices"],
    "properties": {
        "matrices": {"type": "array", "items": _M, "minItems": 1},
        "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "labels": {"type": "array", "items": {"type": "string"}},
    },
})

MIXED_SCHEMA = _with_matrix({
    "type": "object",
    "properties": {
        "discrete": {"type": "array", "items": {
            "type": "object", "required": ["A", "alpha"],
            "properties": {"A": _M, "alpha": {"type": "number", "exclusiveMinimum": 0},
                           "label": {"type": "string"}},
        }},
        "continuous": {"type": "array", "items": {"oneOf": [
            _M,
            {"type": "object", "required": ["B"], "properties": {"B": _M, "label": {"type": "string"}}},
        ]}},
    },
    "anyOf": [{"required": ["discrete"]}, {"required": ["continuous"]}],
})

GRAPH_SCHEMA = _with_matrix({
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["dim"],
            "properties": {"dim": {"type": "integer", "minimum": 1},
                           "continuous": {"type": "array", "items": _M}},
        }},
        "edges": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["from", "to", "A", "alpha"],
            "properties": {"from": {"type": "integer", "minimum": 0},
                           "to": {"type": "integer", "minimum": 0},
                           "A": _M, "alpha": {"type": "number", "exclusiveMinimum": 0},
                           "label": {"type": "string"}},
        }},
    },
})

DWELL_SCHEMA = _with_matrix({
    "type": "object",
    "required": ["generators", "dwell_times"],
    "properties": {
        "generators": {"type": "array", "items": _M, "minItems": 1},
        "dwell_times": {"type": "array", "items": _rational, "minItems": 1},
        "labels": {"type": "array", "items": {"type": "string"}},
    },
})

SIMULATION_SCHEMA = _with_matrix({
    "type": "object",
    "required": ["system", "events", "x0"],
    "properties": {
        "system": MIXED_SCHEMA,
        "events": {"type": "array", "items": {"oneOf": [
            {"type": "object", "required": ["jump"],
             "properties": {"jump": {"type": "integer", "minimum": 0}, "start": _number},
             "additionalProperties": False},
            {"type": "object", "required": ["flow", "duration"],
             "properties": {"flow": {"type": "integer", "minimum": 0},
                            "duration": {"type": "number", "minimum": 0}},
             "additionalProperties": False},
        ]}},
        "repeat": {"type": "integer", "minimum": 1},
        "x0": _row,
        "sample_dt": {"type": "number", "exclusiveMinimum": 0},
    },
})

_nullnum = {"type": ["number", "null"]}
_polytope = {"type": "object", "required": ["vertices"], "properties": {"vertices": _vertices}}
_signal = {
    "type": "object", "required": ["word", "segments", "cell"],
    "properties": {
        "word": {"type": "string"},
        "cell": {"type": "string"},
        "segments": {"type": "array", "items": {
            "type": "object", "required": ["mode", "duration"],
            "properties": {"mode": {"type": "string"}, "duration": {"type": "string"}},
        }},
    },
}
_bounds_fields = {
    "tau": _nullnum, "beta": _nullnum, "mu": _nullnum, "mu_flow": _nullnum, "mu_jump": _nullnum,
    "rho": _number, "witness": {"type": "string"},
    "witness_word": {"type": "array", "items": {"type": "integer"}},
    "status": {"type": "string"}, "iterations": {"type": "integer"},
    "eps_extremal": _nullnum, "delta": _nullnum,
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind", "version"],
    "properties": {"kind": {"enum": ["jsr", "mixed", "graph", "dwell"]}, "version": {"const": SCHEMA_VERSION}},
    "allOf": [
        {"if": {"properties": {"kind": {"const": "jsr"}}},
         "then": {"required": ["rho", "witness", "status", "polytope"],
                  "properties": {"rho": _number, "witness": {"type": "string"},
                                 "polytope": {"oneOf": [_polytope, {"type": "null"}]}}}},
        {"if": {"properties": {"kind": {"const": "mixed"}}},
         "then": {"required": ["beta", "mu", "witness", "polytope"],
                  "properties": {**_bounds_fields, "polytope": {"oneOf": [_polytope, {"type": "null"}]}}}},
        {"if": {"properties": {"kind": {"const": "graph"}}},
         "then": {"required": ["beta", "mu", "witness", "multinorm"],
                  "properties": {**_bounds_fields,
                                 "multinorm": {"oneOf": [{"type": "array", "items": _polytope}, {"type": "null"}]}}}},
        {"if": {"properties": {"kind": {"const": "dwell"}}},
         "then": {"required": ["reports"],
                  "properties": {"reports": {"type": "array", "items": {
                      "type": "object",
                      "properties": {**_bounds_fields,
                                     "tau_exact": {"type": "string"},
                                     "signal": _signal,
                                     "multinorm": {"oneOf": [{"type": "array", "items": _polytope}, {"type": "null"}]},
                                     "error": {"type": "string"}},
                  }}}}},
    ],
}

SCHEMAS = {
    "jsr": WEIGHTED_SCHEMA,
    "mixed": MIXED_SCHEMA,
    "graph": GRAPH_SCHEMA,
    "dwell": DWELL_SCHEMA,
    "simulate": SIMULATION_SCHEMA,
    "plot": REPORT_SCHEMA,
}


def validate(doc: Any, kind: str) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``doc`` matches the ``kind`` schema."""
    jsonschema.validate(doc, SCHEMAS[kind])


# --- parsing -------------------------------------------------------------------

def parse_matrix(spec) -> np.ndarray:
    """Literal nested list or one of ``{"logm": M}``, ``{"expm": M, "t": s}``, ``{"scale": c, "matrix": M}``."""
    if isinstance(spec, dict):
        if "logm" in spec:
            return logm(parse_matrix(spec["logm"]))
        if "expm" in spec:
            return expm(parse_matrix(spec["expm"]), float(spec.get("t", 1.0)))
        return float(spec["scale"]) * parse_matrix(spec["matrix"])
    A = np.array(spec, dtype=float)
    if A.ndim != 2:
        raise ValueError("a matrix must be a list of rows")
    return A


def parse_weighted(doc) -> WeightedSystem:
    validate(doc, "jsr")
    mats = tuple(parse_matrix(m) for m in doc["matrices"])
    weights = tuple(doc.get("weights", [1.0] * len(mats)))
    return WeightedSystem(mats, weights, tuple(doc.get("labels", ())))


def parse_mixed(doc) -> MixedSystem:
    validate(doc, "mixed")
    disc = tuple((parse_matrix(e["A"]), float(e["alpha"])) for e in doc.get("discrete", []))
    dl = tuple(e.get("label", f"A{i + 1}") for i, e in enumerate(doc.get("discrete", [])))
    cont, cl = [], []
    for j, e in enumerate(doc.get("continuous", [])):
        if isinstance(e, dict) and "B" in e:
            cont.append(parse_matrix(e["B"]))
            cl.append(e.get("label", f"B{j + 1}"))
        else:
            cont.append(parse_matrix(e))
            cl.append(f"B{j + 1}")
    return MixedSystem(disc, tuple(cont), dl, tuple(cl))


def parse_graph(doc) -> GraphSystem:
    validate(doc, "graph")
    dims = tuple(v["dim"] for v in doc["vertices"])
    cont = tuple(tuple(parse_matrix(B) for B in v.get("continuous", [])) for v in doc["vertices"])
    edges = tuple(
        Edge(e["from"], e["to"], parse_matrix(e["A"]), float(e["alpha"]), e.get("label", f"e{k}"))
        for k, e in enumerate(doc["edges"])
    )
    return GraphSystem(dims, edges, cont)


def parse_dwell(doc) -> DwellSystem:
    validate(doc, "dwell")
    gens = tuple(parse_matrix(B) for B in doc["generators"])
    return DwellSystem(gens, tuple(as_fraction(a) for a in doc["dwell_times"]), tuple(doc.get("labels", ())))


def parse_simulation(doc):
    validate(doc, "simulate")
    ms = parse_mixed(doc["system"])
    events = []
    for e in doc["events"]:
        events.append(Jump(e["jump"], e.get("start")) if "jump" in e else Flow(e["flow"], float(e["duration"])))
    law = SwitchingLaw(tuple(events)).repeat(int(doc.get("repeat", 1)))
    return ms, law, np.array(doc["x0"], dtype=float), float(doc.get("sample_dt", 0.05))


# --- serialisation ------------------------------------------------------------

def num(x):
    """JSON-safe float: non-finite values become ``None``."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def frac(x: Fraction) -> str:
    return str(x)


def polytope_doc(P: SymPolytope | None):
    if P is None:
        return None
    return {"vertices": [[float(c) for c in v] for v in P.vertices]}


def multinorm_doc(mn: Multinorm | None):
    if mn is None:
        return None
    return [polytope_doc(P) for P in mn.polytopes]


def signal_doc(spec: SignalSpec) -> dict:
    return {
        "word": spec.word,
        "cell": frac(spec.cell),
        "period": frac(spec.period),
        "segments": [{"mode": spec.labels[k], "duration": frac(d)} for k, d in spec.segments],
    }


def bounds_doc(rep: BoundsReport) -> dict:
    return {
        "tau": num(rep.tau),
        "beta": num(rep.beta),
        "mu": num(rep.mu),
        "mu_flow": num(rep.mu_flow),
        "mu_jump": num(rep.mu_jump),
        "rho": float(rep.rho),
        "witness": rep.witness_label,
        "witness_word": [int(k) for k in rep.witness],
        "status": rep.status,
        "iterations": int(rep.iterations),
        "eps_extremal": num(rep.eps_extremal),
        "delta": num(rep.delta),
        "trace": [list(t) if isinstance(t, tuple) else int(t) for t in rep.trace],
    }


def dumps(doc) -> str:
    """Deterministic JSON; floats use the shortest repr that round-trips exactly."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
