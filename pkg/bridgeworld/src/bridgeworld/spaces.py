"""Minimal box-space metadata matching the ecosystem-standard shape."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    """A bounded (or unbounded) box of float vectors.

    Carries the same metadata as the ecosystem-standard space type: per-axis
    ``low``/``high`` arrays, ``shape``, and ``dtype``; ``contains`` checks
    membership inclusively.
    """

    low: np.ndarray
    high: np.ndarray
    shape: tuple[int, ...] = field(init=False)
    dtype: np.dtype = field(init=False)

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64)
        high = np.asarray(self.high, dtype=np.float64)
        if low.shape != high.shape:
            raise ValueError("low and high must share a shape")
        if np.any(low > high):
            raise ValueError("low must be <= high everywhere")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "shape", low.shape)
        object.__setattr__(self, "dtype", low.dtype)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return (
            x.shape == self.shape
            and bool(np.all(x >= self.low))
            and bool(np.all(x <= self.high))
        )


def observation_space() -> Box:
    """The core's 39-dim observation vector (positions, openness, object
    frames, previous frame, goal); no finite bounds are contracted."""
    dim = 39
    return Box(low=np.full(dim, -np.inf), high=np.full(dim, np.inf))


def action_space() -> Box:
    """The core's 4-dim action in [-1, 1]."""
    dim = 4
    return Box(low=np.full(dim, -1.0), high=np.full(dim, 1.0))
