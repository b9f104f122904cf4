"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


def check_frame(frame, shape=None) -> np.ndarray:
    arr = np.asarray(getattr(frame, "pixels", frame), dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"a frame must be a non-empty 2D array, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeError(f"frame shape {arr.shape} differs from fitted shape {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("frame contains NaN or infinite values")
    return arr


def check_sequence(X, shape=None) -> np.ndarray:
    """Coerce ``X`` to a finite float array of shape ``(T, H, W)``.

    Accepts a 3D array, or any iterable of 2D arrays / objects with a
    ``pixels`` attribute.
    """
    if isinstance(X, np.ndarray):
        arr = np.asarray(X, dtype=float)
    else:
        frames = [check_frame(f) for f in X]
        if not frames:
            raise ShapeError("empty frame sequence")
        first = frames[0].shape
        for k, f in enumerate(frames):
            if f.shape != first:
                raise ShapeError(f"frame {k} has shape {f.shape}, expected {first}")
        arr = np.stack(frames)
    if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0 or arr.shape[2] == 0:
        raise ShapeError(f"expected a non-empty (T, H, W) sequence, got shape {arr.shape}")
    if shape is not None and arr.shape[1:] != tuple(shape):
        raise ShapeError(f"frame shape {arr.shape[1:]} differs from fitted shape {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence contains NaN or infinite values")
    return arr
