"""Latent-space image codec and its binary container.

Container layout, all fields little-endian::

    magic "EMLC" | version u16 | modality u8 | latent_depth u8 | crop_size u32
    | grid_rows u32 | grid_cols u32 | orig_height u32 | orig_width u32
    then per block, row-major over the tile grid:
    min f32 | mean f32 | tile_row u32 | tile_col u32 | latent f32[side*side*depth]

The latent of each block is stored height-major with depth fastest.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SizeError
from .models import AutoencoderParams, autoencoder_decode, autoencoder_encode
from .preprocess import NormStats, denormalize, normalize
from .published import Modality
from .tensor import as_image, reflect_to

MAGIC = b"EMLC"
VERSION = 1
_HEADER = struct.Struct("<4sHBBIIIII")
_BLOCK = struct.Struct("<ffII")
HEADER_SIZE = _HEADER.size  # 28
BLOCK_HEADER_SIZE = _BLOCK.size  # 16


@dataclass
class LatentBlock:
    latent: np.ndarray  # (side, side, depth) float32
    stats: NormStats
    tile_row: int
    tile_col: int


@dataclass
class LatentContainer:
    modality: Modality
    latent_depth: int
    crop_size: int
    grid_rows: int
    grid_cols: int
    height: int
    width: int
    blocks: list[LatentBlock]

    @property
    def latent_side(self) -> int:
        return self.crop_size // 8

    def compression_ratio(self) -> float:
        """Input pixels per stored latent value over full tiles (64 / depth at crop 160)."""
        return self.crop_size**2 / (self.latent_side**2 * self.latent_depth)

    def validate(self) -> None:
        if len(self.blocks) != self.grid_rows * self.grid_cols:
            raise ParseError(f"{len(self.blocks)} blocks for a {self.grid_rows}x{self.grid_cols} grid")
        shape = (self.latent_side, self.latent_side, self.latent_depth)
        for i, b in enumerate(self.blocks):
            if b.latent.shape != shape:
                raise ParseError(f"block {i} latent has shape {b.latent.shape}, expected {shape}")
            if (b.tile_row, b.tile_col) != divmod(i, self.grid_cols):
                raise ParseError(f"block {i} is tagged ({b.tile_row}, {b.tile_col}), out of grid order")


def compress(params: AutoencoderParams, img, modality: Modality = Modality.TEM,
             allow_degenerate: bool = False) -> LatentContainer:
    """Tile ``img`` into crop-size tiles and encode each one.

    Right and bottom remainder tiles are mirror-grown to full size; the
    original extent is kept in the container and restored on decode.
    """
    arr = as_image(img)
    size = params.crop_size
    h, w = arr.shape
    if h < size or w < size:
        raise SizeError(f"image {arr.shape} is smaller than one {size}x{size} tile")
    rows, cols = math.ceil(h / size), math.ceil(w / size)
    blocks = []
    for r in range(rows):
        for c in range(cols):
            tile = arr[r * size:(r + 1) * size, c * size:(c + 1) * size]
            if tile.shape != (size, size):
                tile = reflect_to(tile, size, size)
            norm, stats = normalize(tile, allow_degenerate=allow_degenerate)
            latent = autoencoder_encode(params, norm, "infer").astype(np.float32)
            stats = NormStats(float(np.float32(stats.min)), float(np.float32(stats.mean)))
            blocks.append(LatentBlock(latent, stats, r, c))
    return LatentContainer(Modality(modality), params.latent_depth, size, rows, cols, h, w, blocks)


def decompress(params: AutoencoderParams, c: LatentContainer) -> np.ndarray:
    """Decode every block, undo its normalization and reassemble the image."""
    if params.latent_depth != c.latent_depth:
        raise SizeError(f"model latent depth {params.latent_depth} != container depth {c.latent_depth}")
    if params.crop_size != c.crop_size:
        raise SizeError(f"model crop size {params.crop_size} != container crop size {c.crop_size}")
    c.validate()
    size = c.crop_size
    out = np.empty((c.grid_rows * size, c.grid_cols * size))
    for b in c.blocks:
        tile = autoencoder_decode(params, b.latent, "infer")
        r, col = b.tile_row * size, b.tile_col * size
        out[r:r + size, col:col + size] = denormalize(tile, b.stats)
    return out[:c.height, :c.width]


def serialize(c: LatentContainer) -> bytes:
    c.validate()
    parts = [_HEADER.pack(MAGIC, VERSION, int(c.modality), c.latent_depth, c.crop_size,
                          c.grid_rows, c.grid_cols, c.height, c.width)]
    for b in c.blocks:
        parts.append(_BLOCK.pack(b.stats.min, b.stats.mean, b.tile_row, b.tile_col))
        parts.append(np.ascontiguousarray(b.latent, dtype="<f4").tobytes())
    return b"".join(parts)


def deserialize(data: bytes) -> LatentContainer:
    if len(data) < HEADER_SIZE:
        raise ParseError(f"truncated header: {len(data)} bytes, need {HEADER_SIZE}")
    magic, version, modality, depth, crop, rows, cols, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ParseError(f"unsupported container version {version}, expected {VERSION}")
    try:
        modality = Modality(modality)
    except ValueError:
        raise ParseError(f"unknown modality code {modality}") from None
    if depth < 1 or crop < 8 or crop % 8:
        raise ParseError(f"invalid latent depth {depth} or crop size {crop}")
    if rows != math.ceil(h / crop) or cols != math.ceil(w / crop) or h < crop or w < crop:
        raise ParseError(f"grid {rows}x{cols} inconsistent with image {h}x{w} and crop {crop}")
    side = crop // 8
    n_latent = side * side * depth
    block_size = BLOCK_HEADER_SIZE + 4 * n_latent
    expected = HEADER_SIZE + rows * cols * block_size
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "trailing data in"
        raise ParseError(f"{kind} container: {len(data)} bytes, expected {expected}")
    blocks = []
    offset = HEADER_SIZE
    for i in range(rows * cols):
        lo, mean, tr, tc = _BLOCK.unpack_from(data, offset)
        offset += BLOCK_HEADER_SIZE
        latent = np.frombuffer(data, dtype="<f4", count=n_latent, offset=offset).reshape(side, side, depth)
        offset += 4 * n_latent
        blocks.append(LatentBlock(latent.astype(np.float32), NormStats(lo, mean), tr, tc))
    c = LatentContainer(modality, depth, crop, rows, cols, h, w, blocks)
    c.validate()
    return c
