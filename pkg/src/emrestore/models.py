"""Parameter containers and forward passes for kernels, MLPs and autoencoders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._backend import correlate_valid
from .errors import ConfigError, SizeError
from .layers import (
    BatchNorm,
    batchnorm_forward,
    conv2d_forward,
    relu_forward,
    upsample_forward,
)
from .tensor import as_image, as_tensor3, pad_reflect, sliding_windows

BORDERS = ("reflect", "crop")

# Full-size channel widths of the three strided encoder stages (mirrored by the decoder).
DEFAULT_CHANNELS = (32, 64, 128)
CROP_SIZE = 160
LATENT_DEPTHS = (1, 2, 4, 8, 16, 32, 64)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# --------------------------------------------------------------------------- kernels


@dataclass
class KernelModel:
    """A single ``size`` x ``size`` linear filter.

    The elementwise weighting followed by a full connection to one output
    node collapses into this one matrix.
    """

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        w = self.weights.shape[0]
        if self.weights.shape != (w, w) or w < 3 or w % 2 == 0:
            raise ConfigError(f"kernel must be an odd square matrix of size >= 3, got {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise ConfigError("kernel weights must be finite")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights}


def _check_border(border: str):
    if border not in BORDERS:
        raise ValueError(f"border must be one of {BORDERS}, got {border!r}")


def _prepare(img, w: int, border: str) -> np.ndarray:
    _check_border(border)
    arr = as_image(img)
    if min(arr.shape) < w:
        raise SizeError(f"image {arr.shape} is smaller than the {w}x{w} window")
    if border == "reflect":
        arr = pad_reflect(arr, (w - 1) // 2)
    return arr


def kernel_apply(model, img, border: str = "reflect") -> np.ndarray:
    """Slide the kernel over ``img`` and take the windowed dot product.

    ``reflect`` keeps the image size by mirror-padding; ``crop`` returns only
    the ``(H - w + 1, W - w + 1)`` fully-covered positions.
    """
    weights = np.asarray(getattr(model, "weights", model), dtype=np.float64)
    w = weights.shape[0]
    return correlate_valid(_prepare(img, w, border), weights)


# --------------------------------------------------------------------------- MLPs


@dataclass
class MlpModel:
    """Per-window perceptron with ``w*w`` nodes in every hidden layer.

    Each hidden layer computes ``sigmoid(dense @ (gate * h + bias))``; the
    output node is ``output_weights @ h`` (optionally sigmoid-activated).
    """

    gates: list[np.ndarray]
    biases: list[np.ndarray]
    dense: list[np.ndarray]
    output_weights: np.ndarray
    sigmoid_output: bool = False

    def __post_init__(self):
        n = self.output_weights.shape[0]
        w = int(round(np.sqrt(n)))
        if w * w != n or w < 3 or w % 2 == 0:
            raise ConfigError(f"output weights must have w*w entries for odd w >= 3, got {n}")
        if not (len(self.gates) == len(self.biases) == len(self.dense)) or len(self.gates) not in (1, 2):
            raise ConfigError("an MLP needs 1 or 2 hidden layers with gates, biases and dense matrices each")
        for g, b, d in zip(self.gates, self.biases, self.dense):
            if g.shape != (n,) or b.shape != (n,) or d.shape != (n, n):
                raise ConfigError(f"hidden layer tensors must be ({n},), ({n},), ({n}, {n})")

    @property
    def size(self) -> int:
        return int(round(np.sqrt(self.output_weights.shape[0])))

    @property
    def hidden_layers(self) -> int:
        return len(self.gates)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        for i, (g, b, d) in enumerate(zip(self.gates, self.biases, self.dense)):
            params[f"hidden{i}.gates"] = g
            params[f"hidden{i}.biases"] = b
            params[f"hidden{i}.dense"] = d
        params["output.weights"] = self.output_weights
        return params


class MlpActivations(NamedTuple):
    inputs: list[np.ndarray]  # input of each hidden layer
    hidden: list[np.ndarray]  # sigmoid output of each hidden layer
    output: np.ndarray


def mlp_forward_batch(model: MlpModel, patches: np.ndarray, keep: bool = False):
    """Evaluate the MLP on an ``(n, w*w)`` stack of flattened windows."""
    h = patches
    inputs, hidden = [], []
    for g, b, d in zip(model.gates, model.biases, model.dense):
        inputs.append(h)
        h = sigmoid((g * h + b) @ d.T)
        hidden.append(h)
    out = h @ model.output_weights
    if model.sigmoid_output:
        out = sigmoid(out)
    if keep:
        return MlpActivations(inputs, hidden, out)
    return out


def mlp_forward(model: MlpModel, patch) -> float:
    patch = np.asarray(patch, dtype=np.float64).reshape(-1)
    if patch.shape[0] != model.output_weights.shape[0]:
        raise SizeError(f"patch has {patch.shape[0]} values, model expects {model.output_weights.shape[0]}")
    return float(mlp_forward_batch(model, patch[None, :])[0])


def mlp_denoise(model: MlpModel, img, border: str = "reflect") -> np.ndarray:
    """Apply :func:`mlp_forward` to every window of ``img``."""
    w = model.size
    arr = _prepare(img, w, border)
    oh, ow = arr.shape[0] - w + 1, arr.shape[1] - w + 1
    out = np.empty((oh, ow))
    rows = max(1, 2**16 // max(ow, 1))
    for r0 in range(0, oh, rows):
        r1 = min(oh, r0 + rows)
        windows = sliding_windows(arr[r0:r1 + w - 1], w)
        out[r0:r1] = mlp_forward_batch(model, windows).reshape(r1 - r0, ow)
    return out


# --------------------------------------------------------------------------- autoencoders


@dataclass
class ConvLayer:
    """One autoencoder stage: optional 2x upsample, 3x3 conv, batch norm, ReLU.

    A layer with ``weights=None`` is the parameter-free identity output stage.
    """

    weights: np.ndarray | None
    biases: np.ndarray | None
    stride: int = 1
    upsample: int = 1
    bn: BatchNorm | None = None
    has_activation: bool = True

    @property
    def has_parameters(self) -> bool:
        return self.weights is not None

    @property
    def has_batchnorm(self) -> bool:
        return self.bn is not None


class LayerSpec(NamedTuple):
    name: str
    cin: int
    cout: int
    stride: int
    upsample: int
    batchnorm: bool
    activation: bool
    parameters: bool


def layer_plan(latent_depth: int, channels=DEFAULT_CHANNELS) -> list[LayerSpec]:
    """Layer layout for a given latent depth and encoder channel widths.

    Encoder: 3x3 convs with strides (2, 2, 2, 1) and widths ``channels`` then
    ``latent_depth``. Decoder: three (2x resize, 3x3 conv) stages with the
    widths reversed, a 3x3 conv to one channel without batch norm or
    activation, and a parameter-free identity stage.
    """
    c1, c2, c3 = channels
    x = latent_depth
    return [
        LayerSpec("enc0", 1, c1, 2, 1, True, True, True),
        LayerSpec("enc1", c1, c2, 2, 1, True, True, True),
        LayerSpec("enc2", c2, c3, 2, 1, True, True, True),
        LayerSpec("enc3", c3, x, 1, 1, True, True, True),
        LayerSpec("dec0", x, c3, 1, 2, True, True, True),
        LayerSpec("dec1", c3, c2, 1, 2, True, True, True),
        LayerSpec("dec2", c2, c1, 1, 2, True, True, True),
        LayerSpec("dec3", c1, 1, 1, 1, False, False, True),
        LayerSpec("dec4", 1, 1, 1, 1, False, False, False),
    ]


N_ENCODER_LAYERS = 4


@dataclass
class AutoencoderParams:
    latent_depth: int
    layers: list[ConvLayer]
    crop_size: int = CROP_SIZE
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.crop_size % 8:
            raise ConfigError(f"crop size must be divisible by 8, got {self.crop_size}")
        if not self.names:
            self.names = [s.name for s in layer_plan(self.latent_depth, (1, 1, 1))]
        last, second = self.layers[-1], self.layers[-2]
        if last.has_parameters or last.has_batchnorm or last.has_activation:
            raise ConfigError("the final layer must have no parameters, batch norm or activation")
        if second.has_batchnorm:
            raise ConfigError("the second-to-last layer must not be batch normalized")

    @property
    def encoder(self) -> list[ConvLayer]:
        return self.layers[:N_ENCODER_LAYERS]

    @property
    def decoder(self) -> list[ConvLayer]:
        return self.layers[N_ENCODER_LAYERS:]

    @property
    def channels(self) -> tuple[int, int, int]:
        return tuple(layer.weights.shape[3] for layer in self.layers[:3])

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        side = self.crop_size // 8
        return (side, side, self.latent_depth)

    @property
    def dtype(self):
        return self.layers[0].weights.dtype

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable tensors keyed ``<layer>.<tensor>``."""
        params = {}
        for name, layer in zip(self.names, self.layers):
            if layer.has_parameters:
                params[f"{name}.weights"] = layer.weights
                params[f"{name}.biases"] = layer.biases
            if layer.has_batchnorm:
                params[f"{name}.bn_scale"] = layer.bn.scale
                params[f"{name}.bn_offset"] = layer.bn.offset
        return params

    def buffers(self) -> dict[str, np.ndarray]:
        """Non-trainable batch-norm running statistics."""
        out = {}
        for name, layer in zip(self.names, self.layers):
            if layer.has_batchnorm and layer.bn.running_mean is not None:
                out[f"{name}.running_mean"] = layer.bn.running_mean
                out[f"{name}.running_var"] = layer.bn.running_var
        return out


def run_layers(layers, x, mode: str, decay: float = 0.999, tape: list | None = None, update_stats: bool = True):
    """Push an ``(N, H, W, C)`` batch through ``layers``.

    When ``tape`` is a list, per-layer caches are appended to it for
    reverse-mode differentiation.
    """
    for layer in layers:
        record = {}
        if layer.upsample > 1:
            x = upsample_forward(x, layer.upsample)
        if layer.has_parameters:
            x, record["conv"] = conv2d_forward(x, layer.weights, layer.biases, layer.stride)
        if layer.has_batchnorm:
            x, record["bn"] = batchnorm_forward(x, layer.bn, mode, decay, update=update_stats)
        if layer.has_activation:
            x, record["relu"] = relu_forward(x)
        if tape is not None:
            tape.append(record)
    return x


def _as_batch(img, side: int, dtype) -> np.ndarray:
    arr = np.asarray(img, dtype=dtype)
    if arr.ndim == 2:
        arr = arr[None, :, :, None]
    elif arr.ndim == 3:
        arr = arr[:, :, :, None]
    if arr.shape[1:] != (side, side, 1):
        raise SizeError(f"autoencoder expects {side}x{side} inputs, got {arr.shape[1:3]}")
    return arr


def autoencoder_encode(params: AutoencoderParams, crop, mode: str = "infer", decay: float = 0.999) -> np.ndarray:
    """Encode one normalized crop (or an ``(N, S, S)`` batch) to its latent(s)."""
    single = np.ndim(crop) == 2
    x = _as_batch(crop, params.crop_size, params.dtype)
    z = run_layers(params.encoder, x, mode, decay)
    return z[0] if single else z


def autoencoder_decode(params: AutoencoderParams, latent, mode: str = "infer", decay: float = 0.999) -> np.ndarray:
    """Decode one ``(h, w, x)`` latent (or a batch) to image(s) of the crop size."""
    z = np.asarray(latent, dtype=params.dtype)
    single = z.ndim == 3
    if single:
        as_tensor3(z)
        z = z[None]
    if z.ndim != 4 or z.shape[1:] != params.latent_shape:
        raise SizeError(f"latent must have shape {params.latent_shape}, got {z.shape[-3:]}")
    y = run_layers(params.decoder, z, mode, decay)[..., 0]
    return y[0] if single else y


def autoencoder_apply(params: AutoencoderParams, crop, mode: str = "infer") -> np.ndarray:
    """Encode then decode: the denoised reconstruction of a normalized crop."""
    return autoencoder_decode(params, autoencoder_encode(params, crop, mode), mode)
