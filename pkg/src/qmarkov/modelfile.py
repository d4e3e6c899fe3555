"""JSON model files (schema ``qmc-model/1``).

::

    {
      "schema": "qmc-model/1",
      "name": "two-vertex walk",
      "vertices": 2,
      "internal_dim": 2,
      "params": {"a": 0.6},
      "maps": [
        {"from": 0, "to": 0, "kraus": [[[["a", 0], ["sqrt(1-a^2)", 0]], [[0, 0], [0, 0]]]]}
      ]
    }

Vertices are 0-based.  Each matrix entry is ``[re, im]`` where both parts are
numbers or expression strings.  Pairs ``(from, to)`` not listed are zero maps.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .expr import ExprEvalError, ExprSyntaxError, UnboundIdentifierError, evaluate, parse
from .model import QmcModel, validate

SCHEMA = "qmc-model/1"


class ModelFileError(ValueError):
    """Malformed file, bad expression, unbound parameter or failed validation."""


@dataclass(frozen=True)
class LoadedModel:
    model: QmcModel
    params: dict
    digest: str  # sha256 of the file bytes
    path: str


def _entry(value, env, where: str) -> float:
    if isinstance(value, bool):
        raise ModelFileError(f"{where}: booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return evaluate(parse(value), env)
        except UnboundIdentifierError as exc:
            raise ModelFileError(f"{where}: unbound identifier {exc.name!r} in {value!r}") from exc
        except ExprSyntaxError as exc:
            raise ModelFileError(f"{where}: syntax error: {exc}") from exc
        except ExprEvalError as exc:
            raise ModelFileError(f"{where}: {exc} in {value!r}") from exc
    raise ModelFileError(f"{where}: expected a number or expression string, got {value!r}")


def _matrix(raw, k: int, env, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != k:
        raise ModelFileError(f"{where}: expected {k} rows")
    out = np.zeros((k, k), dtype=complex)
    for r, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != k:
            raise ModelFileError(f"{where} row {r}: expected {k} entries")
        for c, cell in enumerate(row):
            loc = f"{where}[{r}][{c}]"
            if not isinstance(cell, list) or len(cell) != 2:
                raise ModelFileError(f"{loc}: entries are [re, im] pairs")
            out[r, c] = complex(_entry(cell[0], env, loc + ".re"), _entry(cell[1], env, loc + ".im"))
    return out


def _count(doc, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ModelFileError(f"{key!r} must be a positive integer")
    return v


def model_from_document(doc, overrides: Mapping[str, float] | None = None, *, tol: float = 1e-10):
    """Build and validate a model from a parsed document; returns ``(model, bindings)``."""
    if not isinstance(doc, dict):
        raise ModelFileError("top level must be a JSON object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ModelFileError(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
    n = _count(doc, "vertices")
    k = _count(doc, "internal_dim")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ModelFileError("'params' must be an object of name: number")
    env = {}
    for name, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ModelFileError(f"parameter {name!r} must be a number")
        env[name] = float(v)
    env.update({name: float(v) for name, v in (overrides or {}).items()})
    grid = [[[] for _ in range(n)] for _ in range(n)]
    maps = doc.get("maps")
    if not isinstance(maps, list):
        raise ModelFileError("'maps' must be a list")
    for idx, entry in enumerate(maps):
        where = f"maps[{idx}]"
        if not isinstance(entry, dict):
            raise ModelFileError(f"{where}: expected an object")
        src, dst = entry.get("from"), entry.get("to")
        for label, v in (("from", src), ("to", dst)):
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < n:
                raise ModelFileError(f"{where}: {label!r} must be a vertex in 0..{n - 1}")
        kraus = entry.get("kraus")
        if not isinstance(kraus, list):
            raise ModelFileError(f"{where}: 'kraus' must be a list of matrices")
        for m_idx, raw in enumerate(kraus):
            grid[dst][src].append(_matrix(raw, k, env, f"{where}.kraus[{m_idx}]"))
    model = QmcModel(n=n, k=k, maps=tuple(tuple(tuple(c) for c in row) for row in grid),
                     name=str(doc.get("name", "")))
    report = validate(model, tol)
    if not report.ok:
        cols = ", ".join(f"vertex {j}: {report.residuals[j]:.3e}" for j in report.failures)
        raise ModelFileError(f"model is not trace preserving (||sum V^dag V - I|| per source {cols})")
    return model, env


def parse_model(path, overrides: Mapping[str, float] | None = None, *, tol: float = 1e-10) -> LoadedModel:
    """Read, evaluate and validate a model file; ``overrides`` beat file params."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except UnicodeDecodeError as exc:
        raise ModelFileError(f"{path}: not UTF-8 ({exc})") from exc
    try:
        model, env = model_from_document(doc, overrides, tol=tol)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc
    return LoadedModel(model=model, params=env, digest=hashlib.sha256(raw).hexdigest(), path=str(path))
