"""Per-crop intensity normalization and its inverse."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, RangeError
from .tensor import as_image


@dataclass(frozen=True)
class NormStats:
    """Statistics needed to undo :func:`normalize`.

    ``mean`` is measured after the minimum has been subtracted. ``degenerate``
    marks a constant input that was replaced by zeros.
    """

    min: float
    mean: float
    degenerate: bool = False


def normalize(img, *, allow_degenerate: bool = False) -> tuple[np.ndarray, NormStats]:
    """Subtract the minimum, then divide by the mean of the shifted image.

    The result has minimum 0 and mean 1. A constant image has no defined
    scale: by default that raises :class:`DegenerateInputError`; with
    ``allow_degenerate`` the all-zeros image is returned with stats
    ``(min, 1.0)`` so that denormalization restores the constant.
    """
    arr = as_image(img)
    lo = float(arr.min())
    shifted = arr - lo
    mean = float(shifted.mean())
    if not mean > 0.0:
        if allow_degenerate:
            return np.zeros_like(arr), NormStats(lo, 1.0, degenerate=True)
        raise DegenerateInputError("cannot normalize a constant image (mean after min subtraction is 0)")
    return shifted / mean, NormStats(lo, mean)


def denormalize(img, stats: NormStats) -> np.ndarray:
    if not (math.isfinite(stats.min) and math.isfinite(stats.mean)):
        raise RangeError(f"non-finite normalization stats {stats}")
    arr = np.asarray(img, dtype=np.float64)
    return arr * stats.mean + stats.min
