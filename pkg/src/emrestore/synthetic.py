"""Synthetic micrograph-like images for desk-scale experiments.

Used by tests and benchmarks in place of real TEM/STEM acquisitions.
"""

from __future__ import annotations

import numpy as np


def gaussian_blobs(height: int, width: int, rng: np.random.Generator, n_blobs: int = 24,
                   sigma_range=(2.0, 12.0), background: float = 0.2) -> np.ndarray:
    """Sum of randomly placed isotropic Gaussians on a flat background."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.full((height, width), background)
    for _ in range(n_blobs):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        sigma = rng.uniform(*sigma_range)
        amp = rng.uniform(0.3, 1.0)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    return img


def poisson_gaussian(img, rng: np.random.Generator, photons: float = 50.0, read_sigma: float = 0.02) -> np.ndarray:
    """Shot noise at ``photons`` counts per unit intensity plus Gaussian read noise."""
    img = np.asarray(img, dtype=np.float64)
    counts = rng.poisson(np.clip(img, 0, None) * photons)
    return counts / photons + rng.normal(0.0, read_sigma, img.shape)


def synthetic_micrographs(n: int, size: int = 256, seed: int = 0, noisy: bool = True, photons: float = 50.0,
                          **blob_kw) -> list[np.ndarray]:
    """``n`` blob images; with ``noisy`` each gets Poisson-Gaussian noise at ``photons``.

    The clean images do not depend on ``noisy`` or ``photons``: noise is drawn
    from a separate stream.
    """
    blob_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    rng, noise_rng = np.random.default_rng(blob_ss), np.random.default_rng(noise_ss)
    images = []
    for _ in range(n):
        img = gaussian_blobs(size, size, rng, **blob_kw)
        if noisy:
            img = poisson_gaussian(img, noise_rng, photons)
        images.append(img)
    return images


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized ``size`` x ``size`` Gaussian blur kernel."""
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()
