"""Channel serialization: JSON documents holding a Choi matrix or Kraus list.

Schema (all complex scalars are two-element arrays [re, im]; no NaN/Inf):

    {
      "dim_in": m, "dim_out": n,
      "repr": "choi" | "kraus",
      "data": choi rows (mn x mn)            for "choi"
              list of operators (n x m each) for "kraus",
      "name": optional string
    }

Floats are emitted by Python's shortest round-trip repr (at most 17
significant digits), so a choi document survives save/load bit-exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .cpmaps import CpMap, from_choi, from_kraus
from .errors import InvalidInput, NotCompletelyPositive, ParseError, ShapeError
from .hermlinalg import TOL_HERM


def _complex_to_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix_to_rows(m: np.ndarray) -> list[list[list[float]]]:
    return [[_complex_to_pair(z) for z in row] for row in m]


def _pair_to_complex(obj) -> complex:
    if (not isinstance(obj, (list, tuple)) or len(obj) != 2
            or not all(isinstance(x, (int, float)) for x in obj)):
        raise ParseError(f"complex entries must be [re, im] pairs, got {obj!r}")
    re, im = float(obj[0]), float(obj[1])
    if not (np.isfinite(re) and np.isfinite(im)):
        raise ParseError("non-finite entries are not permitted in documents")
    return complex(re, im)


def _rows_to_matrix(rows, shape: tuple[int, int]) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != shape[0]:
        raise ParseError(f"expected {shape[0]} rows, got {type(rows).__name__}")
    out = np.zeros(shape, dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != shape[1]:
            raise ParseError(f"row {i} must hold {shape[1]} entries")
        for j, cell in enumerate(row):
            out[i, j] = _pair_to_complex(cell)
    return out


def channel_to_doc(f: CpMap, repr_kind: str = "choi", name: str | None = None) -> dict:
    """Serialize a CpMap to a JSON-ready document."""
    if repr_kind == "choi":
        data = _matrix_to_rows(f.choi.entries)
    elif repr_kind == "kraus":
        ops = f.kraus
        if ops is None:
            from .cpmaps import kraus_decompose
            ops = kraus_decompose(f)
        data = [_matrix_to_rows(np.asarray(k)) for k in ops]
    else:
        raise ParseError(f"unknown representation {repr_kind!r}")
    doc = {"dim_in": f.dim_in, "dim_out": f.dim_out, "repr": repr_kind, "data": data}
    if name is not None:
        doc["name"] = name
    return doc


def doc_to_channel(doc) -> CpMap:
    """Parse a document object into a verified CpMap."""
    if not isinstance(doc, dict):
        raise ParseError("channel document must be a JSON object")
    try:
        m = doc["dim_in"]
        n = doc["dim_out"]
        kind = doc["repr"]
        data = doc["data"]
    except KeyError as exc:
        raise ParseError(f"missing document field {exc}") from exc
    if not (isinstance(m, int) and isinstance(n, int) and m >= 1 and n >= 1):
        raise ParseError("dim_in and dim_out must be positive integers")
    if kind == "choi":
        mat = _rows_to_matrix(data, (m * n, m * n))
        herm_defect = np.abs(mat - mat.conj().T).max()
        scale = max(1.0, float(np.abs(mat).max()))
        if herm_defect > TOL_HERM * scale:
            raise ParseError(f"choi data is not Hermitian (defect {herm_defect:.3e})")
        try:
            return from_choi(m, n, mat)
        except InvalidInput as exc:
            raise NotCompletelyPositive(str(exc)) from exc
    if kind == "kraus":
        if not isinstance(data, list):
            raise ParseError("kraus data must be a list of operators")
        ops = [_rows_to_matrix(entry, (n, m)) for entry in data]
        return from_kraus(ops, dim_in=m, dim_out=n)
    raise ParseError(f"unknown representation {kind!r}")


def save_channel(f: CpMap, path: str | os.PathLike, repr_kind: str = "choi",
                 name: str | None = None) -> None:
    """Write a channel document to a file."""
    doc = channel_to_doc(f, repr_kind=repr_kind, name=name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_doc(path: str | os.PathLike) -> dict:
    """Read a raw document object from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("channel document must be a JSON object")
    return doc


def load_channel(path: str | os.PathLike) -> CpMap:
    """Read and verify a channel document from a file."""
    doc = read_doc(path)
    try:
        return doc_to_channel(doc)
    except ShapeError as exc:
        raise ParseError(f"inconsistent shapes in {path}: {exc}") from exc
