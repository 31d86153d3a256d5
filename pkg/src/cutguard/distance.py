"""Regularized window distance between a frame and its trailing context.

The distance is the Euclidean norm of the element-wise z-score of the current
embedding against the mean and standard deviation of the preceding ``w``
frames. Only frames before the current one enter the window.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embed_io import FrameEmbedding
from .errors import DimMismatch, EmptyHistory, TooShort


@dataclass(frozen=True)
class DistanceConfig:
    window: int = 5
    variance_floor: float = 1e-6

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")


@dataclass(frozen=True, eq=False)
class WindowStats:
    mean: np.ndarray
    variance: np.ndarray
    effective_window: int


def _as_matrix(history) -> np.ndarray:
    if isinstance(history, np.ndarray):
        return np.asarray(history, dtype=np.float64)
    dims = {f.dim for f in history}
    if len(dims) > 1:
        raise DimMismatch(f"history has differing dims {sorted(dims)}")
    return np.stack([f.values for f in history]).astype(np.float64)


def window_stats(history: Sequence[FrameEmbedding] | np.ndarray, w: int) -> WindowStats:
    """Element-wise mean and population variance of the last ``min(w, len)`` frames."""
    if w < 1:
        raise ValueError("w must be >= 1")
    if len(history) == 0:
        raise EmptyHistory("window statistics need at least one frame")
    window = _as_matrix(history[-w:])
    mean = window.mean(axis=0)
    variance = window.var(axis=0)
    return WindowStats(mean, variance, window.shape[0])


def regularized_distance(current, stats: WindowStats, cfg: DistanceConfig = DistanceConfig()) -> float:
    """Norm of ``(current - mean) / max(std, floor)``.

    A window with no spread at all (a single frame, or identical frames)
    degrades to the plain L2 distance to the window mean.
    """
    values = current.values if isinstance(current, FrameEmbedding) else current
    values = np.asarray(values, dtype=np.float64)
    if values.shape != stats.mean.shape:
        raise DimMismatch(f"frame dim {values.shape[0]} != window dim {stats.mean.shape[0]}")
    deviation = values - stats.mean
    if stats.effective_window == 1 or not np.any(stats.variance):
        return float(np.sqrt(np.dot(deviation, deviation)))
    scale = np.maximum(np.sqrt(stats.variance), cfg.variance_floor)
    z = deviation / scale
    return float(np.sqrt(np.dot(z, z)))


def stream_distances(frames: Sequence[FrameEmbedding], cfg: DistanceConfig = DistanceConfig()) -> list[float]:
    """Distance of every frame ``i >= 1`` to the ``min(w, i)`` frames before it.

    Output index ``k`` belongs to frame ``k + 1``.
    """
    if len(frames) < 2:
        raise TooShort("need at least 2 frames")
    data = _as_matrix(frames)
    out = []
    for i in range(1, len(data)):
        stats = window_stats(data[max(0, i - cfg.window) : i], cfg.window)
        out.append(regularized_distance(data[i], stats, cfg))
    return out
