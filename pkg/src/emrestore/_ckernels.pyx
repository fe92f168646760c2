# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. See ``_pykernels`` for the reference semantics."""

import numpy as np
cimport cython

ctypedef fused real:
    float
    double


def correlate_valid(const real[:, :] img, kernel):
    cdef const real[:, ::1] k = np.ascontiguousarray(kernel, dtype=np.asarray(img).dtype)
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1]
    cdef Py_ssize_t oh = img.shape[0] - kh + 1, ow = img.shape[1] - kw + 1
    out_arr = np.zeros((max(oh, 0), max(ow, 0)), dtype=np.asarray(img).dtype)
    cdef real[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, a, b
    cdef real acc
    for i in range(oh):
        for j in range(ow):
            acc = 0
            for a in range(kh):
                for b in range(kw):
                    acc = acc + k[a, b] * img[i + a, j + b]
            out[i, j] = acc
    return out_arr


def im2col(const real[:, :, :, :] x, Py_ssize_t ksize, Py_ssize_t stride):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t pad = ksize // 2
    cdef Py_ssize_t ho = (h + 2 * pad - ksize) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - ksize) // stride + 1
    cols_arr = np.zeros((n, ho, wo, ksize * ksize * c), dtype=np.asarray(x).dtype)
    cdef real[:, :, :, ::1] cols = cols_arr
    cdef Py_ssize_t b, i, j, ky, kx, ch, yy, xx, base
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                for ky in range(ksize):
                    yy = i * stride + ky - pad
                    if yy < 0 or yy >= h:
                        continue
                    for kx in range(ksize):
                        xx = j * stride + kx - pad
                        if xx < 0 or xx >= w:
                            continue
                        base = (ky * ksize + kx) * c
                        for ch in range(c):
                            cols[b, i, j, base + ch] = x[b, yy, xx, ch]
    return cols_arr


def col2im(const real[:, :, :, :] cols, shape, Py_ssize_t ksize, Py_ssize_t stride):
    cdef Py_ssize_t n = shape[0], h = shape[1], w = shape[2], c = shape[3]
    cdef Py_ssize_t pad = ksize // 2
    cdef Py_ssize_t ho = cols.shape[1], wo = cols.shape[2]
    out_arr = np.zeros((n, h, w, c), dtype=np.asarray(cols).dtype)
    cdef real[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, j, ky, kx, ch, yy, xx, base
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                for ky in range(ksize):
                    yy = i * stride + ky - pad
                    if yy < 0 or yy >= h:
                        continue
                    for kx in range(ksize):
                        xx = j * stride + kx - pad
                        if xx < 0 or xx >= w:
                            continue
                        base = (ky * ksize + kx) * c
                        for ch in range(c):
                            out[b, yy, xx, ch] += cols[b, i, j, base + ch]
    return out_arr
