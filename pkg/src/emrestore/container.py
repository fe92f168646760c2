"""Binary model container (``.emnn``) for kernels, MLPs and autoencoders.

Layout, little-endian::

    magic "EMNN" | version u16 | kind u8 (0 kernel, 1 mlp, 2 autoencoder)
    | modality u8 | size u32 (input size w, or latent depth)
    | hidden_layers u8 | flags u8 (bit 0: sigmoid output node)
    | crop_size u32 (0 unless autoencoder) | tensor_count u32
    then per tensor:
    name_len u16 | name utf-8 | rank u8 | dims u32[rank] | data f32[prod(dims)]

Parameters are stored as float32; models held in float64 are rounded on save.
"""

from __future__ import annotations

import os
import struct
from typing import NamedTuple

import numpy as np

from .errors import ParseError
from .layers import BatchNorm
from .models import AutoencoderParams, ConvLayer, KernelModel, MlpModel, layer_plan
from .published import Modality, PublishedKernel

MAGIC = b"EMNN"
VERSION = 1
KIND_KERNEL, KIND_MLP, KIND_AUTOENCODER = 0, 1, 2
_HEADER = struct.Struct("<4sHBBIBBII")


class ModelFile(NamedTuple):
    model: object
    modality: Modality


def _kind(model) -> int:
    if isinstance(model, KernelModel):
        return KIND_KERNEL
    if isinstance(model, MlpModel):
        return KIND_MLP
    if isinstance(model, AutoencoderParams):
        return KIND_AUTOENCODER
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _tensors(model) -> dict[str, np.ndarray]:
    if isinstance(model, AutoencoderParams):
        return {**model.parameters(), **model.buffers()}
    return model.parameters()


def dumps(model, modality: Modality = Modality.TEM) -> bytes:
    if isinstance(model, PublishedKernel):
        model, modality = KernelModel(model.weights), model.modality
    kind = _kind(model)
    if kind == KIND_KERNEL:
        size, hidden, flags, crop = model.size, 0, 0, 0
    elif kind == KIND_MLP:
        size, hidden, flags, crop = model.size, model.hidden_layers, int(model.sigmoid_output), 0
    else:
        size, hidden, flags, crop = model.latent_depth, 0, 0, model.crop_size
    tensors = _tensors(model)
    parts = [_HEADER.pack(MAGIC, VERSION, kind, int(modality), size, hidden, flags, crop, len(tensors))]
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def loads(data: bytes) -> ModelFile:
    if len(data) < _HEADER.size:
        raise ParseError(f"truncated model header: {len(data)} bytes")
    magic, version, kind, modality, size, hidden, flags, crop, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ParseError(f"unsupported model version {version}, expected {VERSION}")
    try:
        modality = Modality(modality)
    except ValueError:
        raise ParseError(f"unknown modality code {modality}") from None
    tensors = {}
    offset = _HEADER.size
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset:offset + n].decode("utf-8")
            offset += n
            (rank,) = struct.unpack_from("<B", data, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", data, offset)
            offset += 4 * rank
            numel = int(np.prod(dims, dtype=np.int64))
            if offset + 4 * numel > len(data):
                raise ParseError(f"tensor {name!r} declares {numel} values but the file is truncated")
            tensors[name] = np.frombuffer(data, "<f4", numel, offset).reshape(dims).astype(np.float32)
            offset += 4 * numel
    except (struct.error, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed tensor table: {exc}") from None
    if offset != len(data):
        raise ParseError(f"{len(data) - offset} trailing bytes after the tensor table")
    try:
        model = _build(kind, size, hidden, flags, crop, tensors)
    except KeyError as exc:
        raise ParseError(f"missing required tensor {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParseError(f"inconsistent model tensors: {exc}") from None
    return ModelFile(model, modality)


def _build(kind, size, hidden, flags, crop, t):
    if kind == KIND_KERNEL:
        if t["weights"].shape != (size, size):
            raise ValueError(f"kernel weights {t['weights'].shape} do not match size {size}")
        return KernelModel(t["weights"].astype(np.float64))
    if kind == KIND_MLP:
        f64 = {k: v.astype(np.float64) for k, v in t.items()}
        model = MlpModel(
            [f64[f"hidden{i}.gates"] for i in range(hidden)],
            [f64[f"hidden{i}.biases"] for i in range(hidden)],
            [f64[f"hidden{i}.dense"] for i in range(hidden)],
            f64["output.weights"],
            sigmoid_output=bool(flags & 1),
        )
        if model.size != size:
            raise ValueError(f"MLP tensors describe w={model.size}, header says {size}")
        return model
    if kind == KIND_AUTOENCODER:
        channels = tuple(t[f"enc{i}.weights"].shape[3] for i in range(3))
        layers, names = [], []
        for spec in layer_plan(size, channels):
            names.append(spec.name)
            if not spec.parameters:
                layers.append(ConvLayer(None, None, has_activation=False))
                continue
            w = t[f"{spec.name}.weights"]
            if w.shape != (3, 3, spec.cin, spec.cout):
                raise ValueError(f"{spec.name}.weights has shape {w.shape}, expected {(3, 3, spec.cin, spec.cout)}")
            bn = None
            if spec.batchnorm:
                bn = BatchNorm(t[f"{spec.name}.bn_scale"], t[f"{spec.name}.bn_offset"],
                               t.get(f"{spec.name}.running_mean"), t.get(f"{spec.name}.running_var"))
            layers.append(ConvLayer(w, t[f"{spec.name}.biases"], spec.stride, spec.upsample, bn, spec.activation))
        return AutoencoderParams(size, layers, crop, names)
    raise ValueError(f"unknown model kind {kind}")


def save_model(path: str | os.PathLike, model, modality: Modality = Modality.TEM) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(model, modality))


def load_model(path: str | os.PathLike) -> ModelFile:
    with open(path, "rb") as fh:
        return loads(fh.read())
