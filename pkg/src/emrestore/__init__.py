"""Denoising autoencoders, kernels and multilayer perceptrons for electron
micrograph restoration and latent-space compression."""

from ._backend import BACKEND
from .codec import LatentContainer, compress, decompress, deserialize, serialize
from .container import load_model, save_model
from .distill import DistillConfig, StudentSpec, masked_mse, train_students
from .errors import (
    ConfigError,
    DegenerateInputError,
    EmRestoreError,
    NotFoundError,
    ParseError,
    RangeError,
    SizeError,
    StateError,
)
from .metrics import moving_average, tail_stats
from .models import (
    AutoencoderParams,
    KernelModel,
    MlpModel,
    autoencoder_decode,
    autoencoder_encode,
    kernel_apply,
    mlp_denoise,
    mlp_forward,
)
from .preprocess import NormStats, denormalize, normalize
from .published import Modality, get_kernel, inventory
from .tensor import crop, pad_reflect
from .training import Schedule, TrainConfig, huber_mse_loss, learning_rate, train_autoencoder

__version__ = "0.1.0"
