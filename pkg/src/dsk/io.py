"""Problem, point and sequence files (JSON)."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import DimensionError, DskError, ExpressionError, SchemaError
from .expr import parse
from .geometry import OrthoDisjunctiveSet
from .problem import DisjunctiveProblem, MpccProblem
from .sequences import SequenceTerm

SCHEMA_VERSION = 1

_BOUND = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "+inf"]}]}
_EXPR = {"type": ["string", "number"]}
_VEC = {"type": "array", "items": {"type": "number"}}
_TERM = {
    "type": "object",
    "required": ["x"],
    "properties": {
        "x": _VEC,
        "lambda": _VEC,
        "lam": _VEC,
        "delta": _VEC,
        "eps": _VEC,
    },
    "anyOf": [{"required": ["lambda"]}, {"required": ["lam"]}],
}
SEQUENCE_SCHEMA = {
    "oneOf": [
        {"type": "array", "items": _TERM, "minItems": 1},
        {
            "type": "object",
            "required": ["terms"],
            "properties": {"terms": {"type": "array", "items": _TERM, "minItems": 1}},
        },
    ]
}
PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["kind", "n", "objective"],
    "properties": {
        "kind": {"enum": ["disjunctive", "mpcc"]},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "objective": _EXPR,
        "map": {"type": "array", "items": _EXPR, "minItems": 1},
        "gamma": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "items": _BOUND, "minItems": 2, "maxItems": 2},
            },
        },
        "g": {"type": "array", "items": _EXPR},
        "h": {"type": "array", "items": _EXPR},
        "G": {"type": "array", "items": _EXPR, "minItems": 1},
        "H": {"type": "array", "items": _EXPR, "minItems": 1},
        "points": {"type": "object", "additionalProperties": _VEC},
        "sequences": {"type": "object", "additionalProperties": {"oneOf": [{"type": "string"}, SEQUENCE_SCHEMA]}},
        "generator": {
            "type": "object",
            "properties": {
                "schedule": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "y_radius": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "direction": {"enum": ["newton", "gauss-newton", "gradient"]},
                "point": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "disjunctive"}}}, "then": {"required": ["map", "gamma"]}},
        {"if": {"properties": {"kind": {"const": "mpcc"}}}, "then": {"required": ["G", "H"]}},
    ],
}


def _validate(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(e.message, e.absolute_path)


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise DskError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DskError(f"invalid JSON in {path}: {exc.msg} at line {exc.lineno}") from None


def _exprs(doc, key, n):
    out = []
    for i, text in enumerate(doc.get(key, [])):
        try:
            out.append(parse(str(text), n))
        except ExpressionError as exc:
            raise SchemaError(str(exc), (key, i)) from None
    return tuple(out)


def problem_from_dict(doc):
    _validate(doc, PROBLEM_SCHEMA)
    n = doc["n"]
    name = doc.get("name", "")
    try:
        objective = parse(str(doc["objective"]), n)
    except ExpressionError as exc:
        raise SchemaError(str(exc), ("objective",)) from None
    if doc["kind"] == "mpcc":
        G, H = _exprs(doc, "G", n), _exprs(doc, "H", n)
        if len(G) != len(H):
            raise SchemaError("G and H must have the same length", ("H",))
        return MpccProblem(n, objective, _exprs(doc, "g", n), _exprs(doc, "h", n), G, H, name)
    cmap = _exprs(doc, "map", n)
    comps = doc["gamma"]
    for j, comp in enumerate(comps):
        if len(comp) != len(cmap):
            raise SchemaError(f"component has {len(comp)} intervals, the map has {len(cmap)} entries", ("gamma", j))
    try:
        gamma = OrthoDisjunctiveSet.from_bounds(comps)
    except ValueError as exc:
        raise SchemaError(str(exc), ("gamma",)) from None
    return DisjunctiveProblem(n, objective, cmap, gamma, name)


def problem_to_dict(p) -> dict:
    from .expr import to_string

    if isinstance(p, MpccProblem):
        doc = {"kind": "mpcc", "n": p.n, "objective": to_string(p.f)}
        for key in ("g", "h", "G", "H"):
            doc[key] = [to_string(e) for e in getattr(p, key)]
    else:
        doc = {
            "kind": "disjunctive",
            "n": p.n,
            "objective": to_string(p.objective),
            "map": [to_string(e) for e in p.constraint_map],
            "gamma": p.gamma.to_json(),
        }
    if p.name:
        doc["name"] = p.name
    return doc


class ProblemFile:
    """A parsed problem document together with its location on disk."""

    def __init__(self, doc, base: Path | None = None):
        self.doc = doc
        self.base = base or Path.cwd()
        self.problem = problem_from_dict(doc)

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls(read_json(path), path.parent)

    @property
    def points(self) -> dict:
        return self.doc.get("points", {})

    def point(self, ref) -> np.ndarray:
        """A named point of the file, or a literal like ``"0,1.5"`` / ``"[0, 1.5]"``."""
        if isinstance(ref, str) and ref in self.points:
            x = self.points[ref]
        elif isinstance(ref, str):
            try:
                x = json.loads(ref if ref.lstrip().startswith("[") else f"[{ref}]")
            except json.JSONDecodeError:
                raise SchemaError(f"unknown point {ref!r}", ("points",)) from None
        else:
            x = ref
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.problem.n:
            raise DimensionError(f"point has length {x.shape[0]}, the problem has n = {self.problem.n}")
        return x

    def sequence(self, ref):
        """Terms of a named sequence of the file, or of a sequence file at ``ref``."""
        named = self.doc.get("sequences", {})
        if ref in named:
            data = named[ref]
            if isinstance(data, str):
                return load_sequence(self.base / data, self.problem)
            return sequence_from_json(data, self.problem)
        return load_sequence(ref, self.problem)


def sequence_from_json(data, problem=None):
    _validate(data, SEQUENCE_SCHEMA)
    items = data["terms"] if isinstance(data, dict) else data
    return [SequenceTerm.from_json(d, problem) for d in items]


def load_sequence(path, problem=None):
    return sequence_from_json(read_json(path), problem)


def sequence_to_json(terms, **meta) -> dict:
    return {"schema": SCHEMA_VERSION, **meta, "terms": [t.to_json() for t in terms]}
