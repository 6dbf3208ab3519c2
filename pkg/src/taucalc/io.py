"""JSON file formats: group specs, function files and reports (all carry ``"format": 1``)."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .algebra import GFunction, KFunction
from .groups import (
    SemidirectGroup,
    StructureError,
    builtin_group,
    conjugation_action,
    inversion_action,
    semidirect,
    trivial_action,
    validate_action,
    validate_group,
    _action,
)
from .scalars import ExactArray, format_scalar, parse_scalar

__all__ = [
    "FORMAT",
    "InputError",
    "load_json",
    "write_json_atomic",
    "group_from_spec",
    "load_group",
    "function_to_dict",
    "function_from_dict",
    "load_function",
]

FORMAT = 1


class InputError(ValueError):
    """Bad input file; ``witness`` carries a validator report when there is one."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_json_atomic(path, obj):
    write_text_atomic(path, dumps(obj))


def write_text_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_format(d, what):
    if not isinstance(d, dict):
        raise InputError(f"{what} must be a JSON object")
    if d.get("format", FORMAT) != FORMAT:
        raise InputError(f"{what}: unsupported format {d.get('format')!r}")


# -------------------------------------------------------------------- groups
def group_from_spec(spec, label=None) -> SemidirectGroup:
    """Build and validate ``{"H": ..., "K": ..., "tau": {...}}``.

    tau kinds: ``table`` (with ``perm``), ``inversion``, ``trivial`` and
    ``conjugation`` (with ``by``, an element of K).
    """
    _check_format(spec, "group spec")
    try:
        H = builtin_group(spec.get("H", "trivial"))
        K = builtin_group(spec["K"])
    except KeyError:
        raise InputError("group spec needs 'K'") from None
    except (StructureError, ValueError, TypeError) as e:
        raise InputError(f"bad group spec: {e}") from None
    for name, g in (("H", H), ("K", K)):
        rep = validate_group(g)
        if not rep:
            raise InputError(f"{name} is not a group: {rep.axiom} fails at {rep.witness}", rep.to_dict())
    tau = spec.get("tau", {"kind": "trivial"})
    kind = tau.get("kind") if isinstance(tau, dict) else None
    try:
        if kind == "trivial":
            act = trivial_action(H, K)
        elif kind == "inversion":
            act = inversion_action(H, K)
        elif kind == "conjugation":
            act = conjugation_action(H, K, int(tau["by"]))
        elif kind == "table":
            perm = np.asarray(tau["perm"], dtype=np.int64)
            act = _action(H, K, perm)
        else:
            raise InputError(f"unknown tau kind {kind!r}")
        rep = validate_action(H, K, act)
    except (StructureError, KeyError, ValueError, TypeError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"bad action: {e}") from None
    if not rep:
        raise InputError(f"tau is not a homomorphism into Aut(K): {rep.axiom} fails at {rep.witness}", rep.to_dict())
    return semidirect(H, K, act, label=label or spec.get("label"))


def load_group(ref, base=None):
    """A group from a path or an inline spec dict; returns ``(G, spec)``."""
    if isinstance(ref, dict):
        return group_from_spec(ref), ref
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = Path(base) / path
    spec = load_json(path)
    return group_from_spec(spec, label=spec.get("label") or path.stem), spec


# ----------------------------------------------------------------- functions
def _rows(values):
    if isinstance(values, ExactArray):
        re, im = values.real_fractions(), values.imag_fractions()
        return [[format_scalar(re[i, j], im[i, j]) for j in range(values.shape[1])] for i in range(values.shape[0])]
    v = np.asarray(values)
    return [[format_scalar(x.real, x.imag) for x in row] for row in v]


def function_to_dict(f, group_ref=None, **extra):
    """Serialize an unbatched G- or K-function."""
    is_g = isinstance(f, GFunction)
    vals = f.values if is_g else f.values.reshape(1, -1)
    d = {"format": FORMAT, "kind": "G" if is_g else "K", "backend": f.backend, "values": _rows(vals)}
    if group_ref is not None:
        d["group"] = group_ref
    d.update(extra)
    return d


def function_from_dict(d, G: SemidirectGroup, backend=None):
    """Parse a function file against ``G``; a single row of length |K| with kind K gives a KFunction."""
    _check_format(d, "function file")
    backend = backend or d.get("backend", "exact")
    if backend not in ("exact", "float"):
        raise InputError(f"unknown backend {backend!r}")
    rows = d.get("values")
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("'values' must be a list of rows")
    kind = d.get("kind", "G")
    try:
        scal = [[parse_scalar(v, backend) for v in row] for row in rows]
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise InputError(f"bad scalar: {e}") from None
    if len({len(r) for r in scal}) != 1:
        raise InputError("ragged values")
    shape = (len(scal), len(scal[0]))
    if backend == "exact":
        arr = ExactArray.from_values([[list(x) for x in r] for r in scal])
    else:
        arr = np.array(scal, dtype=complex)
    if kind == "K":
        if shape != (1, G.K.order):
            raise InputError(f"K-function needs one row of {G.K.order} values, got {shape}")
        return KFunction(G.K, arr.reshape(G.K.order))
    if shape != G.shape:
        raise InputError(f"values shape {shape} does not match group shape {G.shape}")
    return GFunction(G, arr)


def load_function(path, G, backend=None):
    return function_from_dict(load_json(path), G, backend)
