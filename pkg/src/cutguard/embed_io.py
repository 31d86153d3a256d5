"""Data model and binary file formats for embedding, mask and label streams.

Two fixed little-endian formats are used:

``CUTGEMB1`` (embeddings)
    8-byte magic, ``u32 dim``, ``u32 frame_count``, then ``frame_count``
    records of ``dim`` float32 values.

``CUTGMSK1`` (binary masks)
    8-byte magic, ``u32 width``, ``u32 height``, ``u32 frame_count``, then one
    bit-packed frame after another. Bits are row-major, most significant bit
    first, and every frame is padded to a whole byte.

Region labels live in a plain text sidecar with one of ``P``/``I``/``S``/``C``
per line.
"""
from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadMagic, DimMismatch, IndexGap, NonFiniteValue, TruncatedFile

EMB_MAGIC = b"CUTGEMB1"
MASK_MAGIC = b"CUTGMSK1"
EMB_HEADER = struct.Struct("<8sII")
MASK_HEADER = struct.Struct("<8sIII")


@dataclass(frozen=True, eq=False)
class FrameEmbedding:
    """One frame's flat feature vector and its position in the stream."""

    frame_index: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 1 or values.size == 0:
            raise DimMismatch(f"frame {self.frame_index}: expected a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue(f"frame {self.frame_index}: NaN or Inf in embedding")
        if self.frame_index < 0:
            raise IndexGap(f"negative frame index {self.frame_index}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FrameEmbedding):
            return NotImplemented
        return self.frame_index == other.frame_index and np.array_equal(
            self.values.view(np.uint32), other.values.view(np.uint32)
        )

    def __hash__(self):
        return hash((self.frame_index, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A binary segmentation mask stored as a ``(height, width)`` bool array."""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=bool)
        if pixels.ndim != 2:
            raise DimMismatch("mask must be 2-D")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def bits(self) -> np.ndarray:
        """Row-major flat view of the mask as 0/1 integers."""
        return self.pixels.reshape(-1).astype(np.uint8)

    def count(self) -> int:
        return int(np.count_nonzero(self.pixels))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


class RegionLabel(enum.Enum):
    PREFIX = "P"
    INTERJECTION = "I"
    SUFFIX = "S"
    CLEAN = "C"


def embeddings_from_array(array) -> list[FrameEmbedding]:
    """Wrap a ``(frames, dim)`` array as a list of embeddings indexed from 0."""
    array = np.asarray(array, dtype=np.float32)
    if array.ndim != 2:
        raise DimMismatch("expected a (frames, dim) array")
    return [FrameEmbedding(i, row) for i, row in enumerate(array)]


def embeddings_to_array(frames: Sequence[FrameEmbedding]) -> np.ndarray:
    _check_frames(frames)
    if not frames:
        return np.zeros((0, 0), dtype=np.float32)
    return np.stack([f.values for f in frames])


def _check_frames(frames: Sequence[FrameEmbedding]) -> None:
    dims = {f.dim for f in frames}
    if len(dims) > 1:
        raise DimMismatch(f"frames have differing dims {sorted(dims)}")
    for expected, f in enumerate(frames):
        if f.frame_index != expected:
            raise IndexGap(f"expected frame_index {expected}, got {f.frame_index}")


def read_sequence(path) -> list[FrameEmbedding]:
    """Read a ``CUTGEMB1`` file.

    The header is validated against the file size before the payload is
    decoded, so a corrupt ``frame_count`` cannot trigger a large allocation.
    """
    size, (dim, count) = _read_header(path, EMB_HEADER, EMB_MAGIC)
    expected = EMB_HEADER.size + 4 * dim * count
    if size != expected:
        raise TruncatedFile(f"{path}: header implies {expected} bytes, file has {size}")
    with open(path, "rb") as fh:
        fh.seek(EMB_HEADER.size)
        payload = np.frombuffer(fh.read(), dtype="<f4")
    if count and dim == 0:
        raise DimMismatch(f"{path}: dim 0 with {count} frames")
    data = payload.reshape(count, dim).astype(np.float32)
    bad = ~np.isfinite(data)
    if bad.any():
        frame = int(np.argwhere(bad)[0][0])
        raise NonFiniteValue(f"{path}: non-finite value in frame {frame}")
    return [FrameEmbedding(i, row) for i, row in enumerate(data)]


def _read_header(path, header: struct.Struct, magic: bytes):
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.read(header.size)
    if head[: len(magic)] != magic[: len(head)]:
        raise BadMagic(f"{path}: not a {magic.decode()} file")
    if len(head) < header.size:
        raise TruncatedFile(f"{path}: {size} bytes is shorter than the {header.size}-byte header")
    fields = header.unpack(head)
    if fields[0] != magic:
        raise BadMagic(f"{path}: not a {magic.decode()} file")
    return size, fields[1:]


def write_sequence(path, frames: Sequence[FrameEmbedding]) -> None:
    _check_frames(frames)
    dim = frames[0].dim if frames else 0
    with open(path, "wb") as fh:
        fh.write(EMB_HEADER.pack(EMB_MAGIC, dim, len(frames)))
        for f in frames:
            fh.write(f.values.astype("<f4", copy=False).tobytes())


def _frame_bytes(width: int, height: int) -> int:
    return (width * height + 7) // 8


def read_masks(path) -> list[BinaryMask]:
    size, (width, height, count) = _read_header(path, MASK_HEADER, MASK_MAGIC)
    per_frame = _frame_bytes(width, height)
    expected = MASK_HEADER.size + per_frame * count
    if size != expected:
        raise TruncatedFile(f"{path}: header implies {expected} bytes, file has {size}")
    if count and (width == 0 or height == 0):
        raise DimMismatch(f"{path}: zero-sized masks")
    with open(path, "rb") as fh:
        fh.seek(MASK_HEADER.size)
        payload = np.frombuffer(fh.read(), dtype=np.uint8)
    masks = []
    for k in range(count):
        chunk = payload[k * per_frame : (k + 1) * per_frame]
        bits = np.unpackbits(chunk, count=width * height, bitorder="big")
        masks.append(BinaryMask(bits.reshape(height, width).astype(bool)))
    return masks


def write_masks(path, masks: Sequence[BinaryMask]) -> None:
    if masks:
        width, height = masks[0].width, masks[0].height
        if width == 0 or height == 0:
            raise DimMismatch("mask width and height must be positive")
        for k, m in enumerate(masks):
            if (m.width, m.height) != (width, height):
                raise DimMismatch(f"mask {k} is {m.width}x{m.height}, expected {width}x{height}")
    else:
        width = height = 0
    with open(path, "wb") as fh:
        fh.write(MASK_HEADER.pack(MASK_MAGIC, width, height, len(masks)))
        for m in masks:
            fh.write(np.packbits(m.pixels.reshape(-1), bitorder="big").tobytes())


def read_labels(path) -> list[RegionLabel]:
    with open(path) as fh:
        return [RegionLabel(line.strip()) for line in fh if line.strip()]


def write_labels(path, labels: Iterable[RegionLabel]) -> None:
    with open(path, "w") as fh:
        for label in labels:
            fh.write(label.value + "\n")
