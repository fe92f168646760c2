"""Published denoising kernels and the inventory of trained model configurations.

The kernel matrices are stored at the printed 3-decimal precision and are not
renormalized (the TEM 3x3 kernel sums to 1.014). One printed entry of the
TEM+STEM 11x11 kernel reads ``1`` at row 1, column 10 (0-based); every
other symmetry of that matrix requires ``-0.003`` there, which is what is
stored. 15x15 kernels were trained but their values are not available.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotFoundError


class Modality(enum.IntEnum):
    TEM = 0
    STEM = 1
    TEM_STEM = 2

    @property
    def label(self) -> str:
        return "TEM+STEM" if self is Modality.TEM_STEM else self.name

    @property
    def short(self) -> str:
        return {Modality.TEM: "tem", Modality.STEM: "stem", Modality.TEM_STEM: "temstem"}[self]

    @classmethod
    def parse(cls, text: str) -> "Modality":
        key = text.strip().lower().replace("+", "").replace("_", "").replace("-", "")
        for m in cls:
            if m.short == key:
                return m
        raise NotFoundError(f"unknown modality {text!r}; expected one of tem, stem, temstem")


RAW_TEM_STEM_11_ENTRY = 1.0  # value as printed at (1, 10) before correction

_KERNELS = {
    (Modality.TEM, 3): (
        ( 0.064,  0.135,  0.064),
        ( 0.135,  0.218,  0.135),
        ( 0.064,  0.135,  0.064),
    ),
    (Modality.TEM, 5): (
        (-0.084, -0.001,  0.030, -0.001, -0.084),
        (-0.001,  0.107,  0.157,  0.107, -0.001),
        ( 0.030,  0.157,  0.220,  0.157,  0.030),
        (-0.001,  0.107,  0.157,  0.107, -0.001),
        (-0.084, -0.001,  0.030, -0.001, -0.084),
    ),
    (Modality.TEM, 7): (
        (-0.039, -0.038, -0.025, -0.018, -0.025, -0.038, -0.039),
        (-0.038, -0.009,  0.035,  0.058,  0.035, -0.009, -0.038),
        (-0.025,  0.035,  0.114,  0.153,  0.114,  0.035, -0.025),
        (-0.018,  0.058,  0.153,  0.204,  0.153,  0.058, -0.018),
        (-0.025,  0.035,  0.114,  0.153,  0.114,  0.035, -0.025),
        (-0.038, -0.009,  0.035,  0.058,  0.035, -0.009, -0.038),
        (-0.039, -0.038, -0.025, -0.018, -0.025, -0.038, -0.039),
    ),
    (Modality.TEM, 11): (
        (-0.017,  0.000,  0.001, -0.005, -0.006, -0.006, -0.006, -0.005,  0.001,  0.000, -0.017),
        ( 0.000,  0.009, -0.001, -0.013, -0.015, -0.014, -0.015, -0.013, -0.001,  0.009,  0.000),
        ( 0.001, -0.001, -0.015, -0.022, -0.010, -0.001, -0.010, -0.022, -0.015, -0.001,  0.001),
        (-0.005, -0.013, -0.022, -0.007,  0.035,  0.059,  0.035, -0.007, -0.022, -0.013, -0.005),
        (-0.006, -0.015, -0.010,  0.035,  0.111,  0.152,  0.111,  0.035, -0.010, -0.015, -0.006),
        (-0.006, -0.014, -0.001,  0.059,  0.152,  0.202,  0.152,  0.059, -0.001, -0.014, -0.006),
        (-0.006, -0.015, -0.010,  0.035,  0.111,  0.152,  0.111,  0.035, -0.010, -0.015, -0.006),
        (-0.005, -0.013, -0.022, -0.007,  0.035,  0.059,  0.035, -0.007, -0.022, -0.013, -0.005),
        ( 0.001, -0.001, -0.015, -0.022, -0.010, -0.001, -0.010, -0.022, -0.015, -0.001,  0.001),
        ( 0.000,  0.009, -0.001, -0.013, -0.015, -0.014, -0.015, -0.013, -0.001,  0.009,  0.000),
        (-0.017,  0.000,  0.001, -0.005, -0.006, -0.006, -0.006, -0.005,  0.001,  0.000, -0.017),
    ),
    (Modality.STEM, 3): (
        ( 0.108,  0.111,  0.108),
        ( 0.111,  0.109,  0.111),
        ( 0.108,  0.111,  0.108),
    ),
    (Modality.STEM, 5): (
        ( 0.004,  0.026,  0.040,  0.026,  0.004),
        ( 0.026,  0.057,  0.089,  0.057,  0.026),
        ( 0.040,  0.089,  0.089,  0.089,  0.040),
        ( 0.026,  0.057,  0.089,  0.057,  0.026),
        ( 0.004,  0.026,  0.040,  0.026,  0.004),
    ),
    (Modality.STEM, 7): (
        (-0.016, -0.004,  0.007,  0.012,  0.007, -0.004, -0.016),
        (-0.004,  0.007,  0.026,  0.035,  0.026,  0.007, -0.004),
        ( 0.007,  0.026,  0.057,  0.071,  0.057,  0.026,  0.007),
        ( 0.012,  0.035,  0.071,  0.089,  0.071,  0.035,  0.012),
        ( 0.007,  0.026,  0.057,  0.071,  0.057,  0.026,  0.007),
        (-0.004,  0.007,  0.026,  0.035,  0.026,  0.007, -0.004),
        (-0.016, -0.004,  0.007,  0.012,  0.007, -0.004, -0.016),
    ),
    (Modality.STEM, 11): (
        ( 0.012,  0.003, -0.001, -0.002,  0.000,  0.002,  0.000, -0.002, -0.001,  0.003,  0.012),
        ( 0.003, -0.006, -0.009, -0.007, -0.001,  0.005, -0.001, -0.007, -0.009, -0.006,  0.003),
        (-0.001, -0.009, -0.010, -0.001,  0.007,  0.013,  0.007, -0.001, -0.010, -0.009, -0.001),
        (-0.002, -0.007, -0.001,  0.012,  0.029,  0.038,  0.029,  0.012, -0.001, -0.007, -0.002),
        ( 0.000, -0.001,  0.007,  0.029,  0.055,  0.070,  0.055,  0.029,  0.007, -0.001,  0.000),
        ( 0.002,  0.005,  0.013,  0.038,  0.070,  0.089,  0.070,  0.038,  0.013,  0.005,  0.002),
        ( 0.000, -0.001,  0.007,  0.029,  0.055,  0.070,  0.055,  0.029,  0.007, -0.001,  0.000),
        (-0.002, -0.007, -0.001,  0.012,  0.029,  0.038,  0.029,  0.012, -0.001, -0.007, -0.002),
        (-0.001, -0.009, -0.010, -0.001,  0.007,  0.013,  0.007, -0.001, -0.010, -0.009, -0.001),
        ( 0.003, -0.006, -0.009, -0.007, -0.001,  0.005, -0.001, -0.007, -0.009, -0.006,  0.003),
        ( 0.012,  0.003, -0.001, -0.002,  0.000,  0.002,  0.000, -0.002, -0.001,  0.003,  0.012),
    ),
    (Modality.TEM_STEM, 3): (
        ( 0.093,  0.124,  0.093),
        ( 0.124,  0.149,  0.124),
        ( 0.093,  0.124,  0.093),
    ),
    (Modality.TEM_STEM, 5): (
        (-0.061,  0.016,  0.042,  0.016, -0.061),
        ( 0.016,  0.091,  0.116,  0.091,  0.016),
        ( 0.042,  0.116,  0.142,  0.116,  0.042),
        ( 0.016,  0.091,  0.116,  0.091,  0.016),
        (-0.061,  0.016,  0.042,  0.016, -0.061),
    ),
    (Modality.TEM_STEM, 7): (
        (-0.077, -0.037, -0.008,  0.001, -0.008, -0.037, -0.077),
        (-0.037,  0.016,  0.052,  0.063,  0.052,  0.016, -0.037),
        (-0.008,  0.052,  0.095,  0.110,  0.095,  0.052, -0.008),
        ( 0.001,  0.063,  0.110,  0.127,  0.110,  0.063,  0.001),
        (-0.008,  0.052,  0.095,  0.110,  0.095,  0.052, -0.008),
        (-0.037,  0.016,  0.052,  0.063,  0.052,  0.016, -0.037),
        (-0.077, -0.037, -0.008,  0.001, -0.008, -0.037, -0.077),
    ),
    (Modality.TEM_STEM, 11): (
        ( 0.005, -0.003, -0.015, -0.022, -0.019,  0.017, -0.019, -0.022, -0.015, -0.003,  0.005),
        (-0.003, -0.008, -0.013, -0.013, -0.004,  0.001, -0.004, -0.013, -0.013, -0.008, -0.003),
        (-0.015, -0.013, -0.011, -0.001,  0.017,  0.025,  0.017, -0.001, -0.011, -0.013, -0.015),
        (-0.022, -0.013, -0.001,  0.021,  0.050,  0.062,  0.050,  0.021, -0.001, -0.013, -0.022),
        (-0.019, -0.004,  0.017,  0.050,  0.088,  0.105,  0.088,  0.050,  0.017, -0.004, -0.019),
        ( 0.017,  0.001,  0.025,  0.062,  0.105,  0.123,  0.105,  0.062,  0.025,  0.001,  0.017),
        (-0.019, -0.004,  0.017,  0.050,  0.088,  0.105,  0.088,  0.050,  0.017, -0.004, -0.019),
        (-0.022, -0.013, -0.001,  0.021,  0.050,  0.062,  0.050,  0.021, -0.001, -0.013, -0.022),
        (-0.015, -0.013, -0.011, -0.001,  0.017,  0.025,  0.017, -0.001, -0.011, -0.013, -0.015),
        (-0.003, -0.008, -0.013, -0.013, -0.004,  0.001, -0.004, -0.013, -0.013, -0.008, -0.003),
        ( 0.005, -0.003, -0.015, -0.022, -0.019,  0.017, -0.019, -0.022, -0.015, -0.003,  0.005),
    ),
}

KERNEL_SIZES = (3, 5, 7, 11)


@dataclass(frozen=True)
class PublishedKernel:
    modality: Modality
    size: int
    weights: np.ndarray

    @property
    def name(self) -> str:
        return f"{self.modality.short}-k{self.size}"


def get_kernel(modality: Modality | str, size: int) -> PublishedKernel:
    """Return the published ``size`` x ``size`` kernel for ``modality``."""
    if isinstance(modality, str):
        modality = Modality.parse(modality)
    try:
        rows = _KERNELS[(Modality(modality), int(size))]
    except KeyError:
        available = ", ".join(f"({m.label}, {s})" for m, s in _KERNELS)
        raise NotFoundError(
            f"no published kernel for ({Modality(modality).label}, {size}); available: {available}"
        ) from None
    weights = np.array(rows, dtype=np.float64)
    weights.setflags(write=False)
    return PublishedKernel(Modality(modality), int(size), weights)


def kernel_by_name(name: str) -> PublishedKernel:
    """Look up a kernel by short name such as ``tem-k3`` or ``temstem-k11``."""
    try:
        mod, size = name.lower().rsplit("-k", 1)
        return get_kernel(Modality.parse(mod), int(size))
    except (ValueError, NotFoundError):
        names = ", ".join(f"{m.short}-k{s}" for m, s in _KERNELS)
        raise NotFoundError(f"unknown kernel name {name!r}; available: {names}") from None


def published_kernels() -> list[PublishedKernel]:
    return [get_kernel(m, s) for m, s in _KERNELS]


class InventoryEntry(NamedTuple):
    kind: str  # "autoencoder", "kernel" or "mlp"
    modality: Modality
    size: int  # latent depth for autoencoders, input size otherwise
    hidden_layers: int  # 0 for kernels and autoencoders


_AUTOENCODER_DEPTHS = {
    Modality.TEM: (1, 4, 16, 64),
    Modality.STEM: (4, 16, 64),
    Modality.TEM_STEM: (1, 2, 4, 8, 16, 32, 64),
}

_MLP_SIZES = {
    (Modality.TEM, 1): (3, 5, 7),
    (Modality.TEM, 2): (5, 7),
    (Modality.STEM, 1): (3, 5, 7),
    (Modality.STEM, 2): (),
    (Modality.TEM_STEM, 1): (3, 5, 7, 11),
    (Modality.TEM_STEM, 2): (3, 7),
}

_TRAINED_KERNEL_SIZES = (3, 5, 7, 11, 15)


def inventory() -> list[InventoryEntry]:
    """Every trained configuration: 14 autoencoders, 15 kernels and 14 MLPs."""
    entries = []
    for m in Modality:
        entries += [InventoryEntry("autoencoder", m, x, 0) for x in _AUTOENCODER_DEPTHS[m]]
    for m in Modality:
        entries += [InventoryEntry("kernel", m, w, 0) for w in _TRAINED_KERNEL_SIZES]
    for m in Modality:
        for hidden in (1, 2):
            entries += [InventoryEntry("mlp", m, w, hidden) for w in _MLP_SIZES[(m, hidden)]]
    return entries
