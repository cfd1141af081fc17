"""JSON files for operators {"dim", "re", "im"} and vectors {"re", "im"}."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .operators import HamiltonianPair, HermitianOperator


def _load(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or "re" not in doc:
        raise DomainError(f"{path}: expected an object with 're' (and optionally 'im')")
    return doc


def read_matrix(path) -> np.ndarray:
    doc = _load(path)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.ndim != 2 or re.shape != im.shape:
        raise DomainError(f"{path}: 're' and 'im' must be equal-shape 2-D arrays")
    if "dim" in doc and re.shape != (doc["dim"], doc["dim"]):
        raise DomainError(f"{path}: declared dim {doc['dim']} does not match {re.shape}")
    return re + 1j * im


def read_vector(path) -> np.ndarray:
    doc = _load(path)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.ndim != 1 or re.shape != im.shape:
        raise DomainError(f"{path}: 're' and 'im' must be equal-length 1-D arrays")
    return re + 1j * im


def read_operator(path) -> HermitianOperator:
    return HermitianOperator(read_matrix(path))


def read_pair(h0_path, h1_path) -> HamiltonianPair:
    return HamiltonianPair(read_operator(h0_path), read_operator(h1_path),
                           label={"family": "file", "h0": str(h0_path), "h1": str(h1_path)})


def write_matrix(a, path) -> Path:
    a = np.asarray(a, dtype=complex)
    path = Path(path)
    path.write_text(json.dumps({"dim": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}))
    return path


def write_vector(v, path) -> Path:
    v = np.asarray(v, dtype=complex).reshape(-1)
    path = Path(path)
    path.write_text(json.dumps({"re": v.real.tolist(), "im": v.imag.tolist()}))
    return path
