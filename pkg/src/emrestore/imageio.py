"""Binary PGM (P5) and headerless float32 image files.

16-bit PGM output is min-max rescaled to the full 0..65535 range; the
original range is written as ``<min> <max>`` to a ``<path>.range`` sidecar
so that reading the pair back restores intensities.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ParseError, SizeError

RAW_SUFFIXES = (".raw", ".f32", ".bin")


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens, i, n = [], 0, len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise ParseError("truncated PGM header")
        tokens.append(data[start:i])
    return tokens, i


def decode_pgm(data: bytes) -> np.ndarray:
    tokens, pos = _tokens(data, 4)
    if tokens[0] != b"P5":
        raise ParseError(f"not a binary PGM (magic {tokens[0]!r}, expected b'P5')")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError(f"non-integer PGM header fields {tokens[1:]}") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ParseError(f"invalid PGM dimensions {width}x{height} or maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    body = data[pos:pos + need]
    if len(body) != need:
        raise ParseError(f"PGM pixel data truncated: {len(body)} of {need} bytes")
    return np.frombuffer(body, dtype=dtype).reshape(height, width).astype(np.float64)


def encode_pgm(img: np.ndarray) -> tuple[bytes, float, float]:
    """16-bit PGM bytes of ``img`` rescaled to 0..65535; returns ``(bytes, min, max)``."""
    img = np.asarray(img, dtype=np.float64)
    lo, hi = float(img.min()), float(img.max())
    scale = 65535.0 / (hi - lo) if hi > lo else 0.0
    q = np.rint((img - lo) * scale).astype(">u2")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii")
    return header + q.tobytes(), lo, hi


def read_image(path: str | os.PathLike, width: int | None = None, height: int | None = None) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() in RAW_SUFFIXES:
        if not width or not height:
            raise SizeError(f"{path}: raw float32 input needs --width and --height")
        if len(data) != 4 * width * height:
            raise ParseError(f"{path}: {len(data)} bytes, expected {4 * width * height} for {width}x{height} f32")
        return np.frombuffer(data, dtype="<f4").reshape(height, width).astype(np.float64)
    img = decode_pgm(data)
    sidecar = Path(str(path) + ".range")
    if sidecar.exists():
        try:
            lo, hi = (float(v) for v in sidecar.read_text().split())
        except ValueError:
            raise ParseError(f"{sidecar}: expected '<min> <max>'") from None
        img = lo + img * ((hi - lo) / 65535.0)
    return img


def write_image(path: str | os.PathLike, img) -> None:
    path = Path(path)
    img = np.asarray(img, dtype=np.float64)
    if path.suffix.lower() in RAW_SUFFIXES:
        path.write_bytes(np.ascontiguousarray(img, dtype="<f4").tobytes())
        return
    data, lo, hi = encode_pgm(img)
    path.write_bytes(data)
    Path(str(path) + ".range").write_text(f"{lo!r} {hi!r}\n")
