"""Learning-curve smoothing, tail summaries and the curve/summary text formats."""

from __future__ import annotations

import csv
import os
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError, RangeError, SizeError


def moving_average(series, window: int) -> np.ndarray:
    """Trailing moving average; the first ``window - 1`` points average what is available."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size == 0:
        raise SizeError("cannot smooth an empty series")
    if window < 1:
        raise RangeError(f"window must be >= 1, got {window}")
    if window == 1:
        return x.copy()
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(0, idx - window)
    out = (csum[idx] - csum[lo]) / (idx - lo)
    # Cumulative sums can drift outside the input range by rounding.
    return np.clip(out, x.min(), x.max())


class TailStats(NamedTuple):
    mean: float
    std_dev: float


def tail_stats(series, n: int = 500) -> TailStats:
    """Mean and population standard deviation of the last ``n`` entries."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if n < 1:
        raise RangeError(f"n must be >= 1, got {n}")
    if x.size < n:
        raise SizeError(f"series has {x.size} entries, fewer than n={n}")
    tail = x[-n:]
    return TailStats(float(tail.mean()), float(tail.std()))


def write_curve(path: str | os.PathLike, mse: Iterable[float], start: int = 0) -> None:
    """Write ``iteration,mse`` rows with a header line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mse"])
        for i, value in enumerate(mse, start):
            writer.writerow([i, repr(float(value))])


def read_curve(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Read a curve file; returns ``(iterations, mse)``."""
    iters, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["iteration", "mse"]:
            raise ParseError(f"{path}: expected header 'iteration,mse', got {header}")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                it, val = row
                iters.append(int(it))
                values.append(float(val))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed row {row}") from None
    return np.array(iters, dtype=np.int64), np.array(values, dtype=np.float64)


def write_summary(path: str | os.PathLike, rows: Iterable[tuple[str, float, float]]) -> None:
    """Write ``model,mean,std_dev`` rows, one per trained model."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "mean", "std_dev"])
        for name, mean, std in rows:
            writer.writerow([name, f"{mean:.6f}", f"{std:.6f}"])
