"""JSON serialization of tensors, factor matrices and DMD results.

Tensor files::

    {"dims": [I1, I2, I3], "data": [[re, im], ...]}

with entries in canonical order (``i1`` fastest, ``i3`` slowest).

Factor files::

    {"R": R, "A": M, "B": M, "C": M}

where each matrix ``M`` is ``{"dims": [rows, cols], "data": [[re, im], ...]}``
in row-major order.  A DMD result is a factor file (modes, Vandermonde time
factors, amplitudes) with the extra keys ``kind = "dmd"``, ``eigenvalues``,
``strategy``, ``rank_used`` and ``steps``, so any reader of CP factors can
load it.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .dmd import DMDResult, Strategy, dmd_to_cp
from .errors import FormatError
from .tensor_core import CPFactors


def _encode_complex(values) -> list[list[float]]:
    flat = np.asarray(values, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(flat)):
        bad = int(np.flatnonzero(~np.isfinite(flat))[0])
        raise FormatError(f"entry {bad} is not finite")
    return [[float(z.real), float(z.imag)] for z in flat]


def _decode_complex(data, expected: int, where: str) -> np.ndarray:
    if not isinstance(data, list):
        raise FormatError(f"{where}: 'data' must be a list")
    if len(data) != expected:
        raise FormatError(f"{where}: expected {expected} entries, found {len(data)}")
    out = np.empty(expected, dtype=np.complex128)
    for i, pair in enumerate(data):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise FormatError(f"{where}: entry {i} is not a [re, im] pair")
        re, im = pair
        if isinstance(re, bool) or isinstance(im, bool) or not isinstance(re, (int, float)) \
                or not isinstance(im, (int, float)):
            raise FormatError(f"{where}: entry {i} is not numeric")
        if not (math.isfinite(re) and math.isfinite(im)):
            raise FormatError(f"{where}: entry {i} is not finite")
        out[i] = complex(re, im)
    return out


def _dims(value, count: int, where: str) -> list[int]:
    if not (isinstance(value, list) and len(value) == count
            and all(isinstance(d, int) and not isinstance(d, bool) and d >= 0 for d in value)):
        raise FormatError(f"{where}: 'dims' must be a list of {count} non-negative integers")
    return value


def _load(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top-level value must be an object")
    return doc


def _dump(doc: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False)


def tensor_to_dict(t) -> dict:
    t = np.asarray(t, dtype=np.complex128)
    if t.ndim != 3:
        raise FormatError(f"expected a 3-D tensor, got shape {t.shape}")
    return {"dims": list(t.shape), "data": _encode_complex(t.reshape(-1, order="F"))}


def tensor_from_dict(doc: dict, where: str = "tensor") -> np.ndarray:
    if "dims" not in doc or "data" not in doc:
        raise FormatError(f"{where}: missing 'dims' or 'data'")
    dims = _dims(doc["dims"], 3, where)
    flat = _decode_complex(doc["data"], int(np.prod(dims)), where)
    return flat.reshape(dims, order="F")


def tensor_io_write(t, path) -> None:
    _dump(tensor_to_dict(t), path)


def tensor_io_read(path) -> np.ndarray:
    return tensor_from_dict(_load(path), str(path))


def matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"dims": list(m.shape), "data": _encode_complex(m)}


def matrix_from_dict(doc, where: str) -> np.ndarray:
    if not isinstance(doc, dict) or "dims" not in doc or "data" not in doc:
        raise FormatError(f"{where}: matrix must have 'dims' and 'data'")
    rows, cols = _dims(doc["dims"], 2, where)
    return _decode_complex(doc["data"], rows * cols, where).reshape(rows, cols)


def factors_to_dict(f: CPFactors | DMDResult, steps: int | None = None) -> dict:
    if isinstance(f, DMDResult):
        if steps is None:
            raise ValueError("writing a DMD result needs the number of time steps")
        cp = dmd_to_cp(f, steps)
        doc = factors_to_dict(cp)
        doc.update(
            kind="dmd",
            eigenvalues=_encode_complex(f.eigenvalues),
            strategy=Strategy(f.strategy).value,
            rank_used=int(f.rank_used),
            steps=int(steps),
        )
        return doc
    return {
        "kind": "cp",
        "R": f.R,
        "A": matrix_to_dict(f.A),
        "B": matrix_to_dict(f.B),
        "C": matrix_to_dict(f.C),
    }


def factors_from_dict(doc: dict, where: str = "factors") -> CPFactors:
    for key in ("R", "A", "B", "C"):
        if key not in doc:
            raise FormatError(f"{where}: missing '{key}'")
    R = doc["R"]
    if not isinstance(R, int) or isinstance(R, bool) or R < 0:
        raise FormatError(f"{where}: 'R' must be a non-negative integer")
    mats = [matrix_from_dict(doc[k], f"{where}.{k}") for k in ("A", "B", "C")]
    for key, m in zip("ABC", mats):
        if m.shape[1] != R:
            raise FormatError(f"{where}: R={R} but {key} has {m.shape[1]} columns")
    return CPFactors(*mats)


def dmd_from_dict(doc: dict, where: str = "factors") -> DMDResult:
    if doc.get("kind") != "dmd":
        raise FormatError(f"{where}: not a DMD result file")
    f = factors_from_dict(doc, where)
    lam = _decode_complex(doc.get("eigenvalues"), f.R, f"{where}.eigenvalues")
    try:
        strategy = Strategy(doc.get("strategy"))
    except ValueError as exc:
        raise FormatError(f"{where}: unknown strategy {doc.get('strategy')!r}") from exc
    return DMDResult(
        modes=f.A,
        eigenvalues=lam,
        amplitudes=f.C,
        rank_used=int(doc.get("rank_used", f.R)),
        strategy=strategy,
    )


def factors_io_write(f: CPFactors | DMDResult, path, steps: int | None = None) -> None:
    _dump(factors_to_dict(f, steps), path)


def factors_io_read(path) -> CPFactors:
    return factors_from_dict(_load(path), str(path))


def dmd_io_read(path) -> DMDResult:
    return dmd_from_dict(_load(path), str(path))


def write_json(doc: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
