"""Differentiable building blocks for the autoencoder.

Feature maps are ``(N, H, W, C)`` arrays. Every ``*_forward`` returns the
output and a cache consumed by the matching ``*_backward``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import col2im, im2col
from .errors import SizeError, StateError

# Upper bound on the im2col buffer; larger batches are processed in chunks.
_COLS_BYTES = 64 * 2**20


def _chunks(x: np.ndarray, ho: int, wo: int, depth: int):
    per_sample = max(1, ho * wo * depth * x.itemsize)
    step = max(1, _COLS_BYTES // per_sample)
    for start in range(0, x.shape[0], step):
        yield slice(start, min(start + step, x.shape[0]))


def _out_size(n: int, ksize: int, stride: int) -> int:
    pad = ksize // 2
    return (n + 2 * pad - ksize) // stride + 1


def conv2d_forward(x, weights, biases, stride=1):
    """Zero-padded ("same" for stride 1) convolution with an odd square kernel."""
    k, _, cin, cout = weights.shape
    if x.shape[-1] != cin:
        raise SizeError(f"conv expects {cin} input channels, got {x.shape[-1]}")
    n, h, w, _ = x.shape
    ho, wo = _out_size(h, k, stride), _out_size(w, k, stride)
    wmat = weights.reshape(k * k * cin, cout)
    out = np.empty((n, ho, wo, cout), dtype=x.dtype)
    for sl in _chunks(x, ho, wo, k * k * cin):
        cols = im2col(x[sl], k, stride)
        out[sl] = cols @ wmat
    out += biases
    return out, (x, weights, stride)


def conv2d_backward(dout, cache):
    x, weights, stride = cache
    k, _, cin, cout = weights.shape
    ho, wo = dout.shape[1], dout.shape[2]
    wmat = weights.reshape(k * k * cin, cout)
    dw = np.zeros_like(wmat)
    dx = np.empty_like(x)
    for sl in _chunks(x, ho, wo, k * k * cin):
        cols = im2col(x[sl], k, stride).reshape(-1, k * k * cin)
        g = dout[sl].reshape(-1, cout)
        dw += cols.T @ g
        dcols = (g @ wmat.T).reshape(dout[sl].shape[:3] + (k * k * cin,))
        dx[sl] = col2im(dcols, x[sl].shape, k, stride)
    db = dout.sum(axis=(0, 1, 2))
    return dx, dw.reshape(weights.shape), db


@dataclass
class BatchNorm:
    """Per-channel batch normalization parameters and running statistics.

    ``running_mean``/``running_var`` may be ``None`` for a layer that has
    never seen a batch; inference then raises :class:`StateError`.
    """

    scale: np.ndarray
    offset: np.ndarray
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None
    eps: float = 1e-5
    updates: int = field(default=0, compare=False)

    @classmethod
    def identity(cls, channels: int, dtype=np.float64) -> "BatchNorm":
        return cls(
            scale=np.ones(channels, dtype=dtype),
            offset=np.zeros(channels, dtype=dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
        )


def batchnorm_forward(x, bn: BatchNorm, mode: str = "train", decay: float = 0.999, update: bool = True):
    """Normalize over every axis but the last.

    ``train`` uses the biased batch variance and, if ``update``, moves the
    running statistics toward the batch statistics by ``1 - decay``.
    ``infer`` uses the running statistics only.
    """
    axes = tuple(range(x.ndim - 1))
    if mode == "train":
        if x.size == 0:
            raise SizeError("batch normalization needs a non-empty batch in train mode")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        if update:
            if bn.running_mean is None or bn.running_var is None:
                bn.running_mean = np.zeros_like(mean)
                bn.running_var = np.ones_like(var)
            bn.running_mean *= decay
            bn.running_mean += (1 - decay) * mean
            bn.running_var *= decay
            bn.running_var += (1 - decay) * var
            bn.updates += 1
    elif mode == "infer":
        if bn.running_mean is None or bn.running_var is None:
            raise StateError("batch normalization has no running statistics; train it first")
        mean, var = bn.running_mean, bn.running_var
    else:
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    inv_std = 1.0 / np.sqrt(var + bn.eps)
    xhat = (x - mean) * inv_std
    return xhat * bn.scale + bn.offset, (xhat, inv_std, bn.scale, mode)


def batchnorm_backward(dout, cache):
    xhat, inv_std, scale, mode = cache
    axes = tuple(range(dout.ndim - 1))
    dscale = (dout * xhat).sum(axis=axes)
    doffset = dout.sum(axis=axes)
    dxhat = dout * scale
    if mode == "infer":
        return dxhat * inv_std, dscale, doffset
    m = dout.size // dout.shape[-1]
    dx = (inv_std / m) * (m * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes))
    return dx, dscale, doffset


def upsample_forward(x, factor: int = 2):
    """Nearest-neighbour upsampling of the two spatial axes."""
    return x.repeat(factor, axis=1).repeat(factor, axis=2)


def upsample_backward(dout, factor: int = 2):
    n, h, w, c = dout.shape
    return dout.reshape(n, h // factor, factor, w // factor, factor, c).sum(axis=(2, 4))


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask
