"""JSON state files: labels, dims, kind and [re, im] data pairs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .linalg import DensityOperator, InvalidStateError, RegisterLayout, StateVector


class StateFileError(ValueError):
    pass


def fmt(x: float) -> str:
    """17 significant digits, locale independent."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def dumps_state(state) -> str:
    if isinstance(state, StateVector):
        kind, flat = "pure", state.amplitudes
    elif isinstance(state, DensityOperator):
        kind, flat = "density", state.matrix.reshape(-1)
    else:
        raise TypeError("expected StateVector or DensityOperator")
    pairs = ",".join(f"[{fmt(z.real)},{fmt(z.imag)}]" for z in flat)
    return (
        "{\n"
        f'  "labels": {json.dumps(list(state.layout.labels))},\n'
        f'  "dims": {json.dumps(list(state.layout.dims))},\n'
        f'  "kind": "{kind}",\n'
        f'  "data": [{pairs}]\n'
        "}\n"
    )


def save_state(state, path) -> None:
    Path(path).write_text(dumps_state(state))


def loads_state(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise StateFileError("top level must be an object")
    for key in ("labels", "dims", "kind", "data"):
        if key not in obj:
            raise StateFileError(f"missing field {key!r}")
    labels, dims, kind, data = obj["labels"], obj["dims"], obj["kind"], obj["data"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise StateFileError("field 'labels' must be an array of strings")
    if not isinstance(dims, list) or not all(isinstance(x, int) and x >= 1 for x in dims):
        raise StateFileError("field 'dims' must be an array of positive integers")
    if len(labels) != len(dims):
        raise StateFileError("fields 'labels' and 'dims' differ in length")
    if kind not in ("pure", "density"):
        raise StateFileError("field 'kind' must be 'pure' or 'density'")
    try:
        layout = RegisterLayout.of(labels, dims)
    except ValueError as exc:
        raise StateFileError(f"field 'labels': {exc}") from None
    d = layout.total_dim
    expected = d if kind == "pure" else d * d
    if not isinstance(data, list) or len(data) != expected:
        raise StateFileError(f"field 'data' must hold {expected} [re, im] pairs")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise StateFileError("field 'data' must contain numeric [re, im] pairs") from None
    if arr.shape != (expected, 2):
        raise StateFileError("field 'data' entries must be [re, im] pairs")
    z = arr[:, 0] + 1j * arr[:, 1]
    try:
        if kind == "pure":
            return StateVector(layout, z)
        return DensityOperator(layout, z.reshape(d, d))
    except InvalidStateError as exc:
        raise StateFileError(f"invariant violated: {exc}") from None


def load_state(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StateFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads_state(text)
