"""JSON matrix files: ``{"dim": N, "re": [[...]], "im": [[...]]}``, row-major."""

import json

import numpy as np

from .errors import DimensionMismatch, ValidationError


def _row(values):
    return "[" + ", ".join(format(float(x), ".17g") for x in values) + "]"


def dumps_matrix(m):
    """Serialize a square matrix with 17 significant digits per entry."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix entries must be finite")
    re = ",\n    ".join(_row(r) for r in a.real)
    im = ",\n    ".join(_row(r) for r in a.imag)
    return f'{{\n  "dim": {a.shape[0]},\n  "re": [\n    {re}\n  ],\n  "im": [\n    {im}\n  ]\n}}\n'


def loads_matrix(text):
    try:
        obj = json.loads(text)
        n = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix file: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise DimensionMismatch(
            f"declared dim {n} but got re {re.shape}, im {im.shape}")
    return re + 1j * im


def save_matrix(path, m):
    with open(path, "w") as fh:
        fh.write(dumps_matrix(m))


def load_matrix(path):
    with open(path) as fh:
        return loads_matrix(fh.read())
