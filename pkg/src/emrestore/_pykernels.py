"""Pure-numpy implementations of the hot loops.

Same signatures and results as the compiled ``_ckernels`` extension; used
when the extension is unavailable or ``EMRESTORE_PURE_PYTHON`` is set.
"""

import numpy as np


def correlate_valid(img, kernel):
    """Valid-mode 2-D cross-correlation: ``out[i, j] = sum(kernel * img[i:i+kh, j:j+kw])``."""
    img = np.ascontiguousarray(img)
    kernel = np.ascontiguousarray(kernel, dtype=img.dtype)
    kh, kw = kernel.shape
    oh, ow = img.shape[0] - kh + 1, img.shape[1] - kw + 1
    out = np.zeros((oh, ow), dtype=img.dtype)
    for a in range(kh):
        for b in range(kw):
            out += kernel[a, b] * img[a:a + oh, b:b + ow]
    return out


def im2col(x, ksize, stride):
    """Patch matrix for a zero-padded ``ksize`` x ``ksize`` convolution.

    ``x`` is ``(N, H, W, C)``; the result is ``(N, Ho, Wo, ksize*ksize*C)``
    with patch entries ordered ``(ky, kx, c)``.
    """
    n, h, w, c = x.shape
    pad = ksize // 2
    ho = (h + 2 * pad - ksize) // stride + 1
    wo = (w + 2 * pad - ksize) // stride + 1
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = np.empty((n, ho, wo, ksize, ksize, c), dtype=x.dtype)
    for ky in range(ksize):
        for kx in range(ksize):
            cols[:, :, :, ky, kx, :] = xp[:, ky:ky + stride * (ho - 1) + 1:stride,
                                          kx:kx + stride * (wo - 1) + 1:stride, :]
    return cols.reshape(n, ho, wo, ksize * ksize * c)


def col2im(cols, shape, ksize, stride):
    """Adjoint of :func:`im2col`: scatter-add patch gradients back to ``shape``."""
    n, h, w, c = shape
    pad = ksize // 2
    ho, wo = cols.shape[1], cols.shape[2]
    cols = cols.reshape(n, ho, wo, ksize, ksize, c)
    xp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=cols.dtype)
    for ky in range(ksize):
        for kx in range(ksize):
            xp[:, ky:ky + stride * (ho - 1) + 1:stride,
               kx:kx + stride * (wo - 1) + 1:stride, :] += cols[:, :, :, ky, kx, :]
    return xp[:, pad:pad + h, pad:pad + w, :]
