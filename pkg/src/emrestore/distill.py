"""Teacher-student distillation of kernels and MLPs from a frozen restorer.

Students in one set are trained side by side on the same sequence of
single ``d`` x ``d`` crops. Each student's loss is the MSE against the
teacher's restoration over pixels at least ``(w - 1) / 2`` from the crop
edges.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, SizeError
from .models import AutoencoderParams, KernelModel, MlpModel, autoencoder_apply, kernel_apply
from .preprocess import normalize
from .tensor import reflect_to
from .training import AdamState, Schedule, adam_step, backward, check_dataset, init_kernel, init_mlp, learning_rate

log = logging.getLogger(__name__)

Teacher = Callable[[np.ndarray], np.ndarray]


def masked_mse(student_out, teacher_out, w: int) -> float:
    """MSE over the interior that excludes a ``(w - 1) / 2`` pixel border."""
    a = np.asarray(student_out, dtype=np.float64)
    b = np.asarray(teacher_out, dtype=np.float64)
    if a.shape != b.shape:
        raise SizeError(f"shapes differ: {a.shape} vs {b.shape}")
    m = (w - 1) // 2
    if a.ndim != 2 or min(a.shape) <= 2 * m:
        raise SizeError(f"images of shape {a.shape} leave no interior for w={w}")
    diff = a[m:a.shape[0] - m, m:a.shape[1] - m] - b[m:b.shape[0] - m, m:b.shape[1] - m]
    return float(np.mean(diff * diff))


# --------------------------------------------------------------------------- teachers


def autoencoder_teacher(params: AutoencoderParams) -> Teacher:
    """Wrap an autoencoder as a crop-to-restoration callable.

    A ``d`` x ``d`` crop is mirror-grown to the autoencoder's input size
    around its centre, restored in inference mode, and the central
    ``d`` x ``d`` region is returned.
    """
    size = params.crop_size

    def restore(crop: np.ndarray) -> np.ndarray:
        h, w = crop.shape
        if h > size or w > size:
            raise SizeError(f"crop {crop.shape} exceeds the teacher input size {size}")
        padded = reflect_to(crop, size, size, centered=True)
        top, left = (size - h) // 2, (size - w) // 2
        return autoencoder_apply(params, padded)[top:top + h, left:left + w].astype(np.float64)

    return restore


def kernel_teacher(weights) -> Teacher:
    """A fixed filter (e.g. a Gaussian blur) standing in for an autoencoder.

    The crop is mirror-extended by the filter radius on every side, so the
    filter may be larger than the crop.
    """
    weights = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    w = weights.shape[0]

    def restore(crop: np.ndarray) -> np.ndarray:
        h, wd = crop.shape
        grown = reflect_to(crop, h + w - 1, wd + w - 1, centered=True)
        return kernel_apply(weights, grown, "crop")

    return restore


def as_teacher(teacher) -> Teacher:
    if isinstance(teacher, AutoencoderParams):
        return autoencoder_teacher(teacher)
    if isinstance(teacher, (KernelModel, np.ndarray)) or hasattr(teacher, "weights"):
        return kernel_teacher(teacher)
    if callable(teacher):
        return teacher
    raise TypeError(f"cannot use {type(teacher).__name__} as a teacher")


# --------------------------------------------------------------------------- sampling


def sample_position(img: np.ndarray, d: int, rng: np.random.Generator) -> tuple[int, int]:
    h, w = np.shape(img)
    if h < d or w < d:
        raise SizeError(f"image {np.shape(img)} is smaller than the {d}x{d} crop")
    return int(rng.integers(h - d + 1)), int(rng.integers(w - d + 1))


def training_pair_at(teacher, img, top: int, left: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    crop, _ = normalize(np.asarray(img)[top:top + d, left:left + d], allow_degenerate=True)
    return crop, np.asarray(as_teacher(teacher)(crop), dtype=np.float64)


def sample_training_pair(teacher, img, d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A normalized random ``d`` x ``d`` crop and the teacher's restoration of it."""
    top, left = sample_position(img, d, rng)
    return training_pair_at(teacher, img, top, left, d)


# --------------------------------------------------------------------------- students


_SPEC_RE = re.compile(r"^(?:k(?P<k>\d+)|m(?P<h>[12])-(?P<w>\d+))$")


@dataclass(frozen=True)
class StudentSpec:
    kind: str  # "kernel" or "mlp"
    size: int
    hidden_layers: int = 0
    sigmoid_output: bool = False

    def __post_init__(self):
        if self.kind not in ("kernel", "mlp"):
            raise ConfigError(f"student kind must be 'kernel' or 'mlp', got {self.kind!r}")
        if self.size < 3 or self.size % 2 == 0:
            raise ConfigError(f"student input size must be odd and >= 3, got {self.size}")
        if self.kind == "mlp" and self.hidden_layers not in (1, 2):
            raise ConfigError("MLP students need 1 or 2 hidden layers")
        if self.kind == "kernel" and self.hidden_layers != 0:
            raise ConfigError("kernel students have no hidden layers")

    @classmethod
    def parse(cls, text: str) -> "StudentSpec":
        """``k3`` is a 3x3 kernel; ``m2-7`` a 7x7 MLP with 2 hidden layers."""
        match = _SPEC_RE.match(text.strip().lower())
        if not match:
            raise ConfigError(f"bad student spec {text!r}; use k<w> or m<hidden>-<w>")
        if match["k"]:
            return cls("kernel", int(match["k"]))
        return cls("mlp", int(match["w"]), int(match["h"]))

    @property
    def name(self) -> str:
        return f"k{self.size}" if self.kind == "kernel" else f"m{self.hidden_layers}-{self.size}"

    def build(self, rng: np.random.Generator):
        if self.kind == "kernel":
            return init_kernel(self.size, rng)
        return init_mlp(self.size, self.hidden_layers, rng, self.sigmoid_output)


@dataclass
class DistillConfig:
    students: list[StudentSpec]
    max_iter: int = 10000
    crop_size: int | None = None  # defaults to w_max + 5
    eta0: float = 0.01
    batch_size: int = 1
    seed: int = 0

    def __post_init__(self):
        self.students = [s if isinstance(s, StudentSpec) else StudentSpec.parse(s) for s in self.students]
        if not self.students:
            raise ConfigError("a student set needs at least one student")
        if self.crop_size is None:
            self.crop_size = self.w_max + 5
        too_big = [s.name for s in self.students if s.size > self.crop_size - 5]
        if too_big:
            raise ConfigError(f"crop size {self.crop_size} is too small for students {too_big}; need d >= w + 5")
        if self.max_iter < 1 or self.batch_size < 1:
            raise ConfigError("max_iter and batch_size must be positive")

    @property
    def w_max(self) -> int:
        return max(s.size for s in self.students)

    @property
    def schedule(self) -> Schedule:
        return Schedule(self.max_iter, self.eta0, 1)


class CropRecord(NamedTuple):
    image: int
    top: int
    left: int


@dataclass
class DistillResult:
    students: list
    curves: list[np.ndarray]
    crops: list[list[CropRecord]] = field(repr=False)
    specs: list[StudentSpec] = field(default_factory=list)


def train_students(config: DistillConfig, teacher, dataset, init_models: list | None = None) -> DistillResult:
    """Fit every student of ``config`` to the frozen ``teacher``.

    Students are Xavier-initialized (zero biases) from ``config.seed`` unless
    ``init_models`` supplies them. All students see exactly the same crops in
    the same order; the crops each student consumed are logged per student.
    """
    d = config.crop_size
    images = check_dataset(dataset, d)
    restore = as_teacher(teacher)
    init_ss, sample_ss = np.random.SeedSequence(config.seed).spawn(2)
    init_rng = np.random.default_rng(init_ss)
    sample_rng = np.random.default_rng(sample_ss)
    students = init_models if init_models is not None else [s.build(init_rng) for s in config.students]
    if len(students) != len(config.students):
        raise ConfigError("init_models must match the student specs one to one")
    named = [s.parameters() for s in students]
    states = [AdamState.zeros_like(p) for p in named]
    curves = [np.empty(config.max_iter) for _ in students]
    logs: list[list[CropRecord]] = [[] for _ in students]
    schedule = config.schedule
    for it in range(config.max_iter):
        crops = np.empty((config.batch_size, d, d))
        targets = np.empty_like(crops)
        records = []
        for b in range(config.batch_size):
            idx = int(sample_rng.integers(len(images)))
            top, left = sample_position(images[idx], d, sample_rng)
            crops[b], targets[b] = training_pair_at(restore, images[idx], top, left, d)
            records.append(CropRecord(idx, top, left))
        lr = learning_rate(schedule, it)
        for k, student in enumerate(students):
            lg = backward(student, crops, targets)
            adam_step(named[k], lg.grads, states[k], lr)
            curves[k][it] = lg.mse
            logs[k].extend(records)
        if it % 1000 == 0:
            log.debug("iteration %d: %s", it, ", ".join(f"{c[it]:.5f}" for c in curves))
    return DistillResult(students, curves, logs, list(config.students))
