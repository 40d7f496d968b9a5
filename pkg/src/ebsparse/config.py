"""Reading data files and JSON configurations, writing canonical JSON.

Config documents are validated against closed schemas: unknown keys are
errors, so a misspelled field never silently falls back to a default.
"""

import hashlib
import json
import math
from importlib import resources

import jsonschema
import numpy as np

from .exceptions import ConfigError, InputError
from .model import ModelConfig
from .rng import derive_seed
from .sampler import SamplerConfig
from .simulation import StudySpec, TruthSpec

_NUMBER = {"type": "number"}
_INT = {"type": "integer"}

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kappa": _NUMBER,
        "sigma2": _NUMBER,
        "alpha": {"oneOf": [_NUMBER, {"const": "auto"}, {"type": "null"}]},
    },
}

_SAMPLER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"iterations": _INT, "burn_in": _INT, "thin": _INT, "seed": _INT},
}

FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": _MODEL,
        "sampler": _SAMPLER,
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"k_const": _NUMBER, "bins": _INT, "s": _INT},
        },
    },
}

_STUDY_SAMPLER = dict(_SAMPLER, properties={k: _INT for k in ("iterations", "burn_in", "thin")})

STUDY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "cells"],
    "properties": {
        "name": {"type": "string"},
        "n": _INT,
        "cells": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "groups"],
                "properties": {
                    "label": {"type": "string"},
                    "groups": {
                        "type": "array",
                        "items": {"type": "array", "prefixItems": [_INT, _NUMBER],
                                  "minItems": 2, "maxItems": 2},
                    },
                },
            },
        },
        "replications": _INT,
        "estimators": {"type": "array", "items": {"enum": ["EBM", "HT", "HTO"]}, "minItems": 1},
        "model": _MODEL,
        "sampler": _STUDY_SAMPLER,
        "root_seed": _INT,
        "reference": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": ["number", "null"]}},
        },
    },
}


def _validate(doc, schema, what):
    try:
        jsonschema.validate(doc, schema, cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {exc.message}") from None


def read_json(path, what="config"):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path} is not valid JSON: {exc}") from None


def read_data(path) -> np.ndarray:
    """Read one real number per line; blank lines and ``#`` comments are skipped."""
    values = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    v = float(text)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: not a number: {text!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"{path}:{lineno}: non-finite value {text!r}")
                values.append(v)
    except OSError as exc:
        raise InputError(f"cannot read data file {path}: {exc.strerror}") from None
    if not values:
        raise InputError(f"{path}: no data values found")
    return np.array(values)


def write_data(path, x):
    with open(path, "w") as fh:
        fh.writelines(f"{float(v)!r}\n" for v in x)


def parse_fit_config(doc, n, seed=None):
    """Resolve a fit config for ``n`` observations.

    Returns ``(model_kwargs, alpha_setting, sampler, diag)`` where
    ``alpha_setting`` is a float, ``"auto"`` or ``None``.
    """
    doc = doc or {}
    _validate(doc, FIT_SCHEMA, "fit config")
    m = dict(doc.get("model", {}))
    alpha = m.pop("alpha", None)
    s = dict(doc.get("sampler", {}))
    if seed is not None:
        s["seed"] = seed
    sampler = SamplerConfig(**s)
    model_kwargs = dict(m, n=n)
    # validate everything except alpha now, so a bad kappa fails before any data work
    ModelConfig(**model_kwargs, alpha=alpha if isinstance(alpha, (int, float)) else None)
    return model_kwargs, alpha, sampler, dict(doc.get("diagnostics", {}))


def parse_study(doc, seed=None):
    """Expand a study document into ``(label, StudySpec)`` pairs, one per cell.

    Cell ``c`` uses root seed ``derive_seed(root_seed, c)``.
    """
    _validate(doc, STUDY_SCHEMA, "study config")
    n = doc["n"]
    root = doc.get("root_seed", 0) if seed is None else seed
    m = dict(doc.get("model", {}))
    alpha = m.pop("alpha", None)
    auto = alpha == "auto"
    model = ModelConfig(n=n, alpha=None if auto else alpha, **m)
    sampler = SamplerConfig(**doc.get("sampler", {}))
    ref = doc.get("reference", {})
    for label, vals in ref.items():
        if len(vals) != len(doc["cells"]):
            raise ConfigError(f"reference row {label!r} needs one value per cell")
    specs = []
    for c, cell in enumerate(doc["cells"]):
        spec = StudySpec(
            truth=TruthSpec(n, tuple(tuple(g) for g in cell["groups"])),
            replications=doc.get("replications", 100),
            estimators=tuple(doc.get("estimators", ["EBM"])),
            model=model,
            sampler=sampler,
            root_seed=derive_seed(root, c),
            auto_alpha=auto,
        )
        specs.append((cell["label"], spec))
    return specs, root


def builtin_study(name) -> dict:
    """Load one of the bundled study files (``table1``, ``table2``, ``table3``)."""
    try:
        text = resources.files("ebsparse.studies").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigError(f"no bundled study named {name!r}") from None
    return json.loads(text)


def jsonable(obj):
    """Convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj, indent=None) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats, no NaN."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=indent, allow_nan=False,
                      separators=(",", ":") if indent is None else (",", ": "))


def digest(obj) -> str:
    return hashlib.sha256(dumps(obj).encode()).hexdigest()
