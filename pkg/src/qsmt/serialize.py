"""JSON helpers shared by the file formats.

Complex numbers are serialized as two-element arrays ``[re, im]`` and
matrices as row-major nested arrays. Floats go through Python's default
shortest round-trip repr, so files carry full double precision.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def complex_matrix_to_json(m) -> list:
    a = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def complex_matrix_from_json(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValueError("complex matrix JSON must be nested [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def real_matrix_to_json(m) -> list:
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
