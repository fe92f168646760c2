"""Image and feature-map helpers.

Images are 2-D float arrays of shape ``(height, width)``; feature maps and
latents are C-ordered ``(height, width, depth)`` arrays, so the depth index
varies fastest in memory.
"""

from __future__ import annotations

import numpy as np

from .errors import RangeError, SizeError


def as_image(img, *, dtype=np.float64) -> np.ndarray:
    """Validate ``img`` as a finite, non-empty 2-D array and return a float copy view."""
    arr = np.asarray(img, dtype=dtype)
    if arr.ndim != 2 or arr.size == 0:
        raise SizeError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RangeError("image contains NaN or Inf values")
    return arr


def as_tensor3(t, *, dtype=np.float64) -> np.ndarray:
    arr = np.asarray(t, dtype=dtype)
    if arr.ndim != 3 or arr.size == 0:
        raise SizeError(f"expected a non-empty (height, width, depth) tensor, got shape {arr.shape}")
    return arr


def crop(img, top: int, left: int, size: int) -> np.ndarray:
    """Copy the ``size`` x ``size`` region whose top-left corner is ``(top, left)``."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise SizeError(f"expected a 2-D image, got shape {img.shape}")
    height, width = img.shape
    if size <= 0:
        raise RangeError(f"size must be positive, got {size}")
    if top < 0:
        raise RangeError(f"top={top} must be >= 0")
    if left < 0:
        raise RangeError(f"left={left} must be >= 0")
    if top + size > height:
        raise RangeError(f"top+size={top + size} exceeds height={height}")
    if left + size > width:
        raise RangeError(f"left+size={left + size} exceeds width={width}")
    return img[top:top + size, left:left + size].copy()


def pad_reflect(img, margin: int) -> np.ndarray:
    """Mirror-pad all four sides by ``margin`` without repeating the edge pixel.

    ``[1, 2, 3]`` padded by 1 becomes ``[2, 1, 2, 3, 2]``.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise SizeError(f"expected a 2-D image, got shape {img.shape}")
    if margin < 0:
        raise RangeError(f"margin={margin} must be >= 0")
    for n in img.shape:
        # A 1-pixel axis has nothing to mirror and is padded with the pixel itself.
        if n > 1 and margin >= n:
            raise RangeError(f"margin={margin} must be < min(height, width)={min(img.shape)}")
    if margin == 0:
        return img.copy()
    return _reflect(img, ((margin, margin), (margin, margin)))


def reflect_to(img, height: int, width: int, *, centered: bool = False) -> np.ndarray:
    """Grow ``img`` to ``(height, width)`` by repeated mirror reflection.

    Unlike :func:`pad_reflect` the added border may be wider than the image;
    the reflection is then folded back as many times as needed. With
    ``centered`` the padding is split evenly between both sides of each axis,
    otherwise it goes to the bottom and right only. Only in-bounds pixels are
    ever read.
    """
    img = np.asarray(img)
    h, w = img.shape
    if height < h or width < w:
        raise SizeError(f"cannot reflect-grow {img.shape} to ({height}, {width})")
    dh, dw = height - h, width - w
    if centered:
        pads = ((dh // 2, dh - dh // 2), (dw // 2, dw - dw // 2))
    else:
        pads = ((0, dh), (0, dw))
    return _reflect(img, pads)


def _reflect(img: np.ndarray, pads) -> np.ndarray:
    # np.pad's "reflect" mode is undefined for length-1 axes; fall back to edge
    # replication there, which is the only in-bounds choice.
    out = img
    for axis, (before, after) in enumerate(pads):
        if before == 0 and after == 0:
            continue
        axis_pads = [(0, 0), (0, 0)]
        axis_pads[axis] = (before, after)
        mode = "edge" if out.shape[axis] == 1 else "reflect"
        out = np.pad(out, axis_pads, mode=mode)
    return out


def sliding_windows(img: np.ndarray, w: int) -> np.ndarray:
    """All ``w`` x ``w`` windows of ``img`` flattened row-major, shape ``(n, w*w)``.

    Windows are ordered row-major by their top-left corner, matching the
    layout of a valid-mode output image.
    """
    view = np.lib.stride_tricks.sliding_window_view(img, (w, w))
    return view.reshape(-1, w * w)
