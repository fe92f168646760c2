"""Loss, initialization, optimizer, learning-rate schedule, gradients and the
autoencoder training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._backend import correlate_valid
from .errors import ConfigError, RangeError, SizeError
from .layers import (
    BatchNorm,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    relu_backward,
    upsample_backward,
)
from .metrics import moving_average
from .models import (
    CROP_SIZE,
    DEFAULT_CHANNELS,
    AutoencoderParams,
    ConvLayer,
    KernelModel,
    MlpModel,
    layer_plan,
    mlp_forward_batch,
    run_layers,
)
from .preprocess import normalize
from .synthetic import poisson_gaussian
from .tensor import sliding_windows

log = logging.getLogger(__name__)

__all__ = [
    "AdamState", "LossGrad", "Schedule", "TrainConfig", "TrainResult", "adam_step", "backward",
    "batchnorm_forward", "huber_mse_loss", "init_autoencoder", "init_kernel", "init_mlp",
    "learning_rate", "train_autoencoder", "xavier_init",
]


# --------------------------------------------------------------------------- loss


def huber_mse_loss(output, target) -> tuple[float, float]:
    """Return ``(loss, mse)`` where loss is the MSE below 1 and its square root above."""
    output = np.asarray(output)
    target = np.asarray(target)
    if output.shape != target.shape:
        raise SizeError(f"output {output.shape} and target {target.shape} differ in shape")
    mse = float(np.mean((output.astype(np.float64) - target) ** 2))
    return huberize(mse), mse


def huberize(mse: float) -> float:
    return mse if mse < 1.0 else math.sqrt(mse)


def huberize_grad(mse: float) -> float:
    """d(loss)/d(mse)."""
    return 1.0 if mse < 1.0 else 0.5 / math.sqrt(mse)


# --------------------------------------------------------------------------- schedule


@dataclass(frozen=True)
class Schedule:
    """Quadratic step-down ``eta0 * (1 - k / max_iter)**2`` refreshed every ``step_every`` iterations."""

    max_iter: int
    eta0: float = 0.01
    step_every: int = 1

    def __post_init__(self):
        if self.max_iter < 1 or self.step_every < 1:
            raise ConfigError("max_iter and step_every must be positive")
        if self.step_every > self.max_iter:
            raise ConfigError(f"step_every={self.step_every} exceeds max_iter={self.max_iter}")
        if not self.eta0 > 0:
            raise ConfigError(f"eta0 must be positive, got {self.eta0}")


def learning_rate(s: Schedule, iteration: int) -> float:
    if not 0 <= iteration < s.max_iter:
        raise RangeError(f"iteration {iteration} outside [0, {s.max_iter})")
    k = s.step_every * (iteration // s.step_every)
    return (1.0 - k / s.max_iter) ** 2 * s.eta0


# --------------------------------------------------------------------------- initialization


def xavier_init(fan_in: int, fan_out: int, shape, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Uniform samples on +-sqrt(6 / (fan_in + fan_out))."""
    if fan_in <= 0 or fan_out <= 0:
        raise ConfigError(f"fans must be positive, got fan_in={fan_in}, fan_out={fan_out}")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_kernel(w: int, rng: np.random.Generator) -> KernelModel:
    return KernelModel(xavier_init(w * w, 1, (w, w), rng))


def init_mlp(w: int, hidden_layers: int, rng: np.random.Generator, sigmoid_output: bool = False) -> MlpModel:
    n = w * w
    gates, biases, dense = [], [], []
    for _ in range(hidden_layers):
        gates.append(xavier_init(n, n, (n,), rng))
        biases.append(np.zeros(n))
        dense.append(xavier_init(n, n, (n, n), rng))
    out = xavier_init(n, 1, (n,), rng)
    return MlpModel(gates, biases, dense, out, sigmoid_output=sigmoid_output)


def init_autoencoder(latent_depth: int, rng: np.random.Generator, channels=DEFAULT_CHANNELS,
                     crop_size: int = CROP_SIZE, dtype=np.float32) -> AutoencoderParams:
    layers = []
    for spec in layer_plan(latent_depth, channels):
        if not spec.parameters:
            layers.append(ConvLayer(None, None, has_activation=False))
            continue
        k = 3
        weights = xavier_init(k * k * spec.cin, k * k * spec.cout, (k, k, spec.cin, spec.cout), rng, dtype)
        bn = BatchNorm.identity(spec.cout, dtype) if spec.batchnorm else None
        layers.append(ConvLayer(weights, np.zeros(spec.cout, dtype=dtype), spec.stride, spec.upsample, bn,
                                spec.activation))
    names = [s.name for s in layer_plan(latent_depth, channels)]
    return AutoencoderParams(latent_depth, layers, crop_size, names)


# --------------------------------------------------------------------------- ADAM


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray], **kw) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()}, **kw)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, lr: float):
    """Bias-corrected ADAM update, applied in place to the arrays in ``params``."""
    if not lr > 0:
        raise RangeError(f"learning rate must be positive, got {lr}")
    if params.keys() != grads.keys() or params.keys() != state.m.keys():
        raise SizeError("params, grads and optimizer state must share the same names")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise SizeError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)
    return params, state


# --------------------------------------------------------------------------- gradients


class LossGrad(NamedTuple):
    loss: float
    mse: float
    grads: dict[str, np.ndarray]


def backward(model, inputs, targets, *, mode: str = "train", decay: float = 0.999,
             update_stats: bool = False) -> LossGrad:
    """Loss and exact gradients with respect to every parameter of ``model``.

    Kernels and MLPs take ``(N, d, d)`` input crops and ``(N, d, d)`` teacher
    targets; their loss is the MSE over pixels at least ``(w - 1) / 2`` from
    the crop edges. Autoencoders take ``(N, S, S)`` normalized crops and
    targets and use the Huberised MSE.
    """
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    if inputs.ndim == 2:
        inputs, targets = inputs[None], targets[None]
    if inputs.shape != targets.shape:
        raise SizeError(f"inputs {inputs.shape} and targets {targets.shape} differ in shape")
    if isinstance(model, KernelModel):
        return _kernel_backward(model, inputs, targets)
    if isinstance(model, MlpModel):
        return _mlp_backward(model, inputs, targets)
    if isinstance(model, AutoencoderParams):
        return _autoencoder_backward(model, inputs, targets, mode, decay, update_stats)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _interior(targets: np.ndarray, w: int) -> np.ndarray:
    m = (w - 1) // 2
    d = targets.shape[-1]
    if d - 2 * m < 1 or targets.shape[-2] - 2 * m < 1:
        raise SizeError(f"crop {targets.shape[-2:]} too small for a {w}x{w} student")
    return targets[:, m:targets.shape[-2] - m, m:d - m]


def _kernel_backward(model: KernelModel, inputs, targets) -> LossGrad:
    w = model.size
    target = _interior(targets, w)
    n = target.size
    dk = np.zeros_like(model.weights)
    sq = 0.0
    for x, t in zip(inputs, target):
        x = np.ascontiguousarray(x, dtype=np.float64)
        r = correlate_valid(x, model.weights) - t
        sq += float(np.sum(r * r))
        dk += correlate_valid(x, (2.0 / n) * r)
    mse = sq / n
    return LossGrad(mse, mse, {"weights": dk})


def _mlp_backward(model: MlpModel, inputs, targets) -> LossGrad:
    w = model.size
    target = _interior(targets, w).reshape(-1)
    patches = np.concatenate([sliding_windows(np.asarray(x, dtype=np.float64), w) for x in inputs])
    acts = mlp_forward_batch(model, patches, keep=True)
    resid = acts.output - target
    n = resid.size
    mse = float(np.mean(resid * resid))
    da = (2.0 / n) * resid
    if model.sigmoid_output:
        da = da * acts.output * (1.0 - acts.output)
    grads = {"output.weights": acts.hidden[-1].T @ da}
    dh = np.outer(da, model.output_weights)
    for i in reversed(range(model.hidden_layers)):
        g, b, d = model.gates[i], model.biases[i], model.dense[i]
        h_in, h_out = acts.inputs[i], acts.hidden[i]
        u = g * h_in + b
        dz = dh * h_out * (1.0 - h_out)
        grads[f"hidden{i}.dense"] = dz.T @ u
        du = dz @ d
        grads[f"hidden{i}.gates"] = np.sum(du * h_in, axis=0)
        grads[f"hidden{i}.biases"] = du.sum(axis=0)
        dh = du * g
    return LossGrad(mse, mse, {k: grads[k] for k in model.parameters()})


def _autoencoder_backward(params: AutoencoderParams, inputs, targets, mode, decay, update_stats) -> LossGrad:
    dtype = params.dtype
    x = np.asarray(inputs, dtype=dtype)[..., None]
    tape: list[dict] = []
    y = run_layers(params.layers, x, mode, decay, tape=tape, update_stats=update_stats)
    resid = y[..., 0].astype(np.float64) - targets
    mse = float(np.mean(resid * resid))
    loss = huberize(mse)
    dy = ((huberize_grad(mse) * 2.0 / resid.size) * resid).astype(dtype)[..., None]
    grads = {}
    for name, layer, record in reversed(list(zip(params.names, params.layers, tape))):
        if "relu" in record:
            dy = relu_backward(dy, record["relu"])
        if "bn" in record:
            dy, grads[f"{name}.bn_scale"], grads[f"{name}.bn_offset"] = batchnorm_backward(dy, record["bn"])
        if "conv" in record:
            dy, grads[f"{name}.weights"], grads[f"{name}.biases"] = conv2d_backward(dy, record["conv"])
        if layer.upsample > 1:
            dy = upsample_backward(dy, layer.upsample)
    return LossGrad(loss, mse, {k: grads[k] for k in params.parameters()})


# --------------------------------------------------------------------------- training loop


NOISE_MODELS = ("none", "poisson-gaussian")


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_iter: int = 60000
    bn_decay: float = 0.999
    seed: int = 0
    latent_depth: int = 16
    channels: tuple[int, int, int] = DEFAULT_CHANNELS
    crop_size: int = CROP_SIZE
    noise: str = "none"
    dtype: type = np.float32

    def __post_init__(self):
        if self.batch_size < 1 or self.max_iter < 1:
            raise ConfigError("batch_size and max_iter must be positive")
        if not 0 < self.bn_decay < 1:
            raise ConfigError(f"bn_decay must lie in (0, 1), got {self.bn_decay}")
        if self.noise not in NOISE_MODELS:
            raise ConfigError(f"noise must be one of {NOISE_MODELS}, got {self.noise!r}")


@dataclass
class TrainResult:
    params: object
    mse: np.ndarray
    loss: np.ndarray = field(repr=False, default=None)

    def smoothed(self, window: int = 5000) -> np.ndarray:
        return moving_average(self.mse, window)


def check_dataset(dataset: Sequence[np.ndarray], size: int) -> list[np.ndarray]:
    images = [np.asarray(img, dtype=np.float64) for img in dataset]
    if not images:
        raise SizeError("dataset is empty")
    for i, img in enumerate(images):
        if img.ndim != 2 or min(img.shape) < size:
            raise SizeError(f"dataset image {i} has shape {img.shape}; every image needs at least {size}x{size}")
    return images


def sample_crop(images: Sequence[np.ndarray], size: int, rng: np.random.Generator):
    """Uniformly pick an image and a crop position; returns ``(crop, (index, top, left))``."""
    idx = int(rng.integers(len(images)))
    img = images[idx]
    top = int(rng.integers(img.shape[0] - size + 1))
    left = int(rng.integers(img.shape[1] - size + 1))
    return img[top:top + size, left:left + size], (idx, top, left)


def train_autoencoder(config: TrainConfig, schedule: Schedule | None, dataset,
                      callback: Callable[[int, float], None] | None = None) -> TrainResult:
    """Train a denoising autoencoder to reconstruct normalized random crops.

    Deterministic for a given ``config.seed`` and dataset. With
    ``config.noise == "poisson-gaussian"`` the inputs are corrupted before
    encoding and the clean crops are the targets.
    """
    if schedule is None:
        schedule = Schedule(config.max_iter, 0.01, min(5000, config.max_iter))
    if schedule.max_iter != config.max_iter:
        raise ConfigError("schedule.max_iter must equal config.max_iter")
    images = check_dataset(dataset, config.crop_size)
    init_ss, sample_ss, noise_ss = np.random.SeedSequence(config.seed).spawn(3)
    params = init_autoencoder(config.latent_depth, np.random.default_rng(init_ss), config.channels,
                              config.crop_size, config.dtype)
    sample_rng = np.random.default_rng(sample_ss)
    noise_rng = np.random.default_rng(noise_ss)
    named = params.parameters()
    state = AdamState.zeros_like(named)
    mse_curve = np.empty(config.max_iter)
    loss_curve = np.empty(config.max_iter)
    for it in range(config.max_iter):
        batch_in = np.empty((config.batch_size, config.crop_size, config.crop_size))
        batch_out = np.empty_like(batch_in)
        for b in range(config.batch_size):
            raw, _ = sample_crop(images, config.crop_size, sample_rng)
            clean, stats = normalize(raw, allow_degenerate=True)
            batch_out[b] = clean
            if config.noise == "poisson-gaussian":
                batch_in[b] = poisson_gaussian(clean, noise_rng)
            else:
                batch_in[b] = clean
        lg = backward(params, batch_in, batch_out, mode="train", decay=config.bn_decay, update_stats=True)
        adam_step(named, lg.grads, state, learning_rate(schedule, it))
        mse_curve[it] = lg.mse
        loss_curve[it] = lg.loss
        if callback is not None:
            callback(it, lg.mse)
        if it % 100 == 0:
            log.debug("iteration %d: mse %.6f", it, lg.mse)
    return TrainResult(params, mse_curve, loss_curve)
