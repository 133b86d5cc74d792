"""Named-tensor checkpoint files.

Format: repeated sections, each an ASCII header line `name rows cols`
followed by rows*cols little-endian float64 values.  Sections are written
in sorted name order so identical parameter sets produce identical bytes.
Vectors are stored as (n, 1) and scalars as (1, 1); use fit_params_to to
restore the shapes a model expects.
"""

from __future__ import annotations

import numpy as np

from .errors import IngestionError, UnsupportedShapeError
from .models import ForecastModel, model_params, model_with_params


def _as_2d(value: np.ndarray) -> np.ndarray:
    a = np.asarray(value, dtype=np.float64)
    if a.ndim == 0:
        return a.reshape(1, 1)
    if a.ndim == 1:
        return a.reshape(-1, 1)
    if a.ndim == 2:
        return a
    raise UnsupportedShapeError(f"cannot store rank-{a.ndim} tensor in a checkpoint")


def save_checkpoint(path, params: dict[str, np.ndarray]) -> None:
    """Write a parameter dict; keys must be nonempty and whitespace-free."""
    if not params:
        raise UnsupportedShapeError("refusing to write an empty checkpoint")
    with open(path, "wb") as fh:
        for name in sorted(params):
            if not name or any(c.isspace() for c in name):
                raise UnsupportedShapeError(f"bad tensor name {name!r}")
            a = _as_2d(params[name])
            if not np.all(np.isfinite(a)):
                raise UnsupportedShapeError(f"tensor {name!r} has non-finite entries")
            fh.write(f"{name} {a.shape[0]} {a.shape[1]}\n".encode("ascii"))
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read back a dict of (rows, cols) float64 arrays."""
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0
    while pos < len(blob):
        nl = blob.find(b"\n", pos)
        if nl < 0:
            raise IngestionError(f"{path}: truncated header at byte {pos}")
        try:
            name, rows_s, cols_s = blob[pos:nl].decode("ascii").split(" ")
            rows, cols = int(rows_s), int(cols_s)
        except (UnicodeDecodeError, ValueError):
            raise IngestionError(f"{path}: malformed header at byte {pos}") from None
        if rows < 1 or cols < 1:
            raise IngestionError(f"{path}: bad shape {rows}x{cols} for {name!r}")
        start = nl + 1
        end = start + rows * cols * 8
        if end > len(blob):
            raise IngestionError(f"{path}: payload for {name!r} runs past end of file")
        if name in out:
            raise IngestionError(f"{path}: duplicate tensor {name!r}")
        out[name] = np.frombuffer(blob[start:end], dtype="<f8").reshape(rows, cols).copy()
        pos = end
    if not out:
        raise IngestionError(f"{path}: no tensor sections found")
    return out


def save_model(path, model: ForecastModel) -> None:
    save_checkpoint(path, model_params(model))


def fit_params_to(model: ForecastModel, loaded: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Reshape loaded (rows, cols) tensors to the template model's shapes."""
    template = model_params(model)
    if set(template) != set(loaded):
        missing = sorted(set(template) - set(loaded))
        extra = sorted(set(loaded) - set(template))
        raise UnsupportedShapeError(
            f"checkpoint does not match model: missing {missing}, unexpected {extra}"
        )
    out = {}
    for name, t in template.items():
        a = loaded[name]
        if a.size != t.size:
            raise UnsupportedShapeError(
                f"tensor {name!r}: checkpoint has {a.size} values, model needs {t.size}"
            )
        out[name] = a.reshape(t.shape)
    return out


def load_model(path, template: ForecastModel) -> ForecastModel:
    return model_with_params(template, fit_params_to(template, load_checkpoint(path)))
