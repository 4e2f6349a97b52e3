"""Readers and writers for every on-disk format the package touches.

All binary containers are little-endian with a 4-byte magic and a ``u32``
version of 1:

* ATNG: one attention grid, ``grid_size u32`` then ``G*G`` float32 scores.
* ATNW: extractor weights, ``layers u32`` then per layer
  ``out, in, kh, kw`` as u32, the float32 kernel (out-major) and float32 biases.
* ATNB: an image batch, ``count, height, width, channels`` as u32 then
  float32 pixels, sample-major, row-major, channel-last.

CIFAR-10/100 use the canonical binary record layout: label byte(s) followed
by 3072 pixel bytes in planar R, G, B order.

Parsers accept arbitrary bytes and either return a value or raise a
:class:`~attentive_cutmix.errors.FormatError` subclass.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .attention import GridCell, PatchSet, PixelSpan, as_grid
from .augment import METHODS, IDENTITY, AugmentedSample
from .errors import (
    BadMagicError,
    ConsistencyError,
    FormatError,
    InvalidValueError,
    TrailingBytesError,
    TruncatedError,
    VersionError,
)
from .extractor import ConvLayer, ExtractorWeights
from .tensor import IMAGE_DTYPE

VERSION = 1
MANIFEST_VERSION = 1
ATNG_MAGIC = b"ATNG"
ATNW_MAGIC = b"ATNW"
ATNB_MAGIC = b"ATNB"

CIFAR_SIDE = 32
CIFAR_PIXELS = 3 * CIFAR_SIDE * CIFAR_SIDE
CIFAR10_RECORD = 1 + CIFAR_PIXELS
CIFAR100_RECORD = 2 + CIFAR_PIXELS

_F32 = np.dtype("<f4")
_MAX_ELEMENTS = 1 << 31


class _Reader:
    """Bounds-checked cursor over a byte buffer."""

    def __init__(self, data: bytes, what: str):
        self.data = memoryview(data)
        self.pos = 0
        self.what = what

    def take(self, n: int, field: str) -> memoryview:
        if n > len(self.data) - self.pos:
            raise TruncatedError(
                f"{self.what}: truncated while reading {field} "
                f"(need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos})"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, field: str) -> int:
        return struct.unpack("<I", self.take(4, field))[0]

    def f32(self, count: int, field: str) -> np.ndarray:
        if count > _MAX_ELEMENTS:
            raise TruncatedError(f"{self.what}: {field} declares {count} values, more than any file holds")
        return np.frombuffer(self.take(4 * count, field), dtype=_F32).copy()

    def header(self, magic: bytes) -> None:
        got = bytes(self.data[:4])
        if len(got) < 4 and magic.startswith(got):
            raise TruncatedError(f"{self.what}: truncated inside the magic bytes")
        self.pos = 4
        if got != magic:
            raise BadMagicError(f"{self.what}: bad magic {got!r}, expected {magic!r}")
        version = self.u32("version")
        if version != VERSION:
            raise VersionError(f"{self.what}: unsupported version {version}, expected {VERSION}")

    def finish(self) -> None:
        extra = len(self.data) - self.pos
        if extra:
            raise TrailingBytesError(f"{self.what}: {extra} unexpected trailing bytes")


# ----------------------------------------------------------------------------
# ATNG attention grids


def dump_attention_file(grid) -> bytes:
    grid = as_grid(grid)
    g = grid.shape[0]
    return ATNG_MAGIC + struct.pack("<II", VERSION, g) + grid.astype(_F32).tobytes()


def load_attention_file(data: bytes) -> np.ndarray:
    reader = _Reader(data, "ATNG")
    reader.header(ATNG_MAGIC)
    g = reader.u32("grid_size")
    if g == 0:
        raise InvalidValueError("ATNG: grid_size must be >= 1")
    scores = reader.f32(g * g, "scores")
    reader.finish()
    if not np.all(np.isfinite(scores)):
        raise InvalidValueError("ATNG: scores contain NaN or infinity")
    if np.any(scores < 0):
        raise InvalidValueError("ATNG: scores contain negative values")
    return as_grid(scores.astype(np.float64).reshape(g, g))


# ----------------------------------------------------------------------------
# ATNW extractor weights


def dump_weights_file(weights: ExtractorWeights) -> bytes:
    parts = [ATNW_MAGIC, struct.pack("<II", VERSION, len(weights.layers))]
    for layer in weights.layers:
        parts.append(struct.pack("<IIII", *layer.kernel.shape))
        parts.append(layer.kernel.astype(_F32).tobytes())
        parts.append(layer.bias.astype(_F32).tobytes())
    return b"".join(parts)


def load_weights_file(data: bytes) -> ExtractorWeights:
    reader = _Reader(data, "ATNW")
    reader.header(ATNW_MAGIC)
    count = reader.u32("layer count")
    if count == 0:
        raise InvalidValueError("ATNW: layer count must be >= 1")
    layers = []
    for k in range(count):
        shape = tuple(reader.u32(f"layer {k} shape") for _ in range(4))
        if 0 in shape:
            raise InvalidValueError(f"ATNW: layer {k} has a zero dimension {shape}")
        kernel = reader.f32(int(np.prod(shape, dtype=object)), f"layer {k} kernel")
        bias = reader.f32(shape[0], f"layer {k} bias")
        if not (np.all(np.isfinite(kernel)) and np.all(np.isfinite(bias))):
            raise InvalidValueError(f"ATNW: layer {k} holds NaN or infinite weights")
        layers.append(ConvLayer(kernel.reshape(shape), bias))
    reader.finish()
    try:
        return ExtractorWeights(tuple(layers))
    except ValueError as exc:
        raise InvalidValueError(f"ATNW: {exc}") from None


# ----------------------------------------------------------------------------
# CIFAR binary datasets


@dataclass(frozen=True)
class DatasetRecord:
    image: np.ndarray
    fine_label: int
    coarse_label: int | None = None


def _parse_cifar(data: bytes, label_bytes: int, limits: tuple[int, ...], what: str):
    record = label_bytes + CIFAR_PIXELS
    if len(data) % record:
        raise FormatError(f"{what}: length {len(data)} is not a multiple of {record}")
    raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, record)
    for col, (limit, name) in enumerate(zip(limits, ("coarse", "fine")[-label_bytes:])):
        bad = np.flatnonzero(raw[:, col] >= limit)
        if bad.size:
            k = int(bad[0])
            raise InvalidValueError(f"{what}: record {k} has {name} label {raw[k, col]} >= {limit}")
    planes = raw[:, label_bytes:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE)
    images = planes.transpose(0, 2, 3, 1).astype(IMAGE_DTYPE) / IMAGE_DTYPE(255)
    out = []
    for k in range(raw.shape[0]):
        img = images[k]
        img.setflags(write=False)
        if label_bytes == 1:
            out.append(DatasetRecord(img, int(raw[k, 0])))
        else:
            out.append(DatasetRecord(img, int(raw[k, 1]), int(raw[k, 0])))
    return out


def parse_cifar10(data: bytes) -> list[DatasetRecord]:
    return _parse_cifar(data, 1, (10,), "CIFAR-10")


def parse_cifar100(data: bytes) -> list[DatasetRecord]:
    return _parse_cifar(data, 2, (20, 100), "CIFAR-100")


def quantize(image) -> np.ndarray:
    """Inverse of ingestion scaling: ``round(v * 255)`` as bytes."""
    return np.rint(np.asarray(image, dtype=np.float64) * 255.0).astype(np.uint8)


def _serialize_cifar(records, coarse: bool) -> bytes:
    parts = []
    for rec in records:
        if coarse:
            parts.append(bytes([rec.coarse_label, rec.fine_label]))
        else:
            parts.append(bytes([rec.fine_label]))
        parts.append(quantize(rec.image).transpose(2, 0, 1).tobytes())
    return b"".join(parts)


def serialize_cifar10(records) -> bytes:
    return _serialize_cifar(records, coarse=False)


def serialize_cifar100(records) -> bytes:
    return _serialize_cifar(records, coarse=True)


def read_cifar(path, dataset: str = "cifar10") -> list[DatasetRecord]:
    with open(path, "rb") as fh:
        data = fh.read()
    if dataset == "cifar10":
        return parse_cifar10(data)
    if dataset == "cifar100":
        return parse_cifar100(data)
    raise ValueError(f"unknown dataset {dataset!r}")


# ----------------------------------------------------------------------------
# ATNB batches and JSON manifests


def dump_images(images) -> bytes:
    arr = np.stack([np.asarray(x, dtype=IMAGE_DTYPE) for x in images])
    count, h, w, c = arr.shape
    return ATNB_MAGIC + struct.pack("<IIIII", VERSION, count, h, w, c) + arr.astype(_F32).tobytes()


def load_images(data: bytes) -> np.ndarray:
    """Decode an ATNB payload to a read-only ``(count, H, W, C)`` float32 array."""
    reader = _Reader(data, "ATNB")
    reader.header(ATNB_MAGIC)
    count, h, w, c = (reader.u32(f) for f in ("count", "height", "width", "channels"))
    if min(h, w) == 0 or c not in (1, 3):
        raise InvalidValueError(f"ATNB: invalid image shape {h}x{w}x{c}")
    values = reader.f32(count * h * w * c, "pixels")
    reader.finish()
    if not np.all(np.isfinite(values)) or (values.size and (values.min() < 0 or values.max() > 1)):
        raise InvalidValueError("ATNB: pixel values must be finite and within [0, 1]")
    arr = values.astype(IMAGE_DTYPE).reshape(count, h, w, c)
    arr.setflags(write=False)
    return arr


def sample_record(index: int, sample: AugmentedSample) -> dict:
    rec = {
        "index": index,
        "method": sample.method,
        "source_i": int(sample.source_indices[0]),
        "source_j": int(sample.source_indices[1]),
        "lambda": float(sample.lam),
        "label": [float(p) for p in sample.label],
    }
    if sample.patchset is not None:
        rec["grid_size"] = sample.patchset.grid_size
        rec["cells"] = [[c.row, c.col] for c in sample.patchset.cells]
    if sample.box is not None:
        rec["box"] = list(sample.box)
    return rec


def build_manifest(samples, method: str | None = None, config: dict | None = None,
                   master_seed: int | None = None) -> dict:
    config = dict(config or {})
    return {
        "format_version": MANIFEST_VERSION,
        "method": method if method is not None else samples[0].method,
        "grid_size": config.get("grid_size"),
        "n_patches": config.get("n_patches"),
        "master_seed": master_seed,
        "config": config,
        "samples": [sample_record(k, s) for k, s in enumerate(samples)],
    }


def dump_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_manifest(text: str | bytes) -> dict:
    try:
        manifest = json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"manifest: not valid JSON ({exc})") from None
    if not isinstance(manifest, dict):
        raise FormatError("manifest: top level must be an object")
    version = manifest.get("format_version")
    if version != MANIFEST_VERSION:
        raise VersionError(f"manifest: unsupported format_version {version!r}")
    if not isinstance(manifest.get("samples"), list):
        raise FormatError("manifest: missing samples list")
    return manifest


def _sample_from_record(rec, image: np.ndarray, count: int) -> AugmentedSample:
    try:
        method = rec["method"]
        if method not in METHODS and method != IDENTITY:
            raise InvalidValueError(f"manifest: unknown method {method!r}")
        i, j = int(rec["source_i"]), int(rec["source_j"])
        if not (0 <= i < count and 0 <= j < count):
            raise InvalidValueError(f"manifest: source indices ({i}, {j}) outside batch of {count}")
        lam = rec["lambda"]
        if not isinstance(lam, (int, float)) or not 0.0 <= lam <= 1.0:
            raise InvalidValueError(f"manifest: lambda {lam!r} outside [0, 1]")
        label = np.array(rec["label"], dtype=np.float64)
        if label.ndim != 1 or not np.all(np.isfinite(label)) or np.any(label < 0):
            raise InvalidValueError("manifest: label must be a nonnegative vector")
        label.setflags(write=False)
        patchset = None
        if "cells" in rec:
            patchset = PatchSet(int(rec["grid_size"]), tuple(GridCell(int(r), int(c)) for r, c in rec["cells"]))
        box = PixelSpan(*(int(v) for v in rec["box"])) if "box" in rec else None
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"manifest: malformed sample record ({exc!r})") from None
    return AugmentedSample(image, label, float(lam), method, (i, j), patchset, box)


def samples_from_manifest(manifest: dict, images: np.ndarray) -> list[AugmentedSample]:
    records = manifest["samples"]
    if len(records) != len(images):
        raise ConsistencyError(
            f"manifest lists {len(records)} samples but the image file holds {len(images)}"
        )
    return [_sample_from_record(rec, images[k], len(images)) for k, rec in enumerate(records)]


def write_batch(samples, image_path, manifest_path, *, config: dict | None = None,
                master_seed: int | None = None, method: str | None = None):
    """Write images to ``image_path`` (ATNB) and metadata to ``manifest_path`` (JSON)."""
    samples = list(samples)
    if not samples:
        raise ValueError("write_batch needs at least one sample")
    shapes = {s.image.shape for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"write_batch needs uniformly shaped images, got {sorted(shapes)}")
    payload = dump_images([s.image for s in samples])
    text = dump_manifest(build_manifest(samples, method, config, master_seed))
    with open(image_path, "wb") as fh:
        fh.write(payload)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return os.fspath(image_path), os.fspath(manifest_path)


def read_batch(image_path, manifest_path) -> list[AugmentedSample]:
    with open(image_path, "rb") as fh:
        images = load_images(fh.read())
    with open(manifest_path, "rb") as fh:
        manifest = load_manifest(fh.read())
    return samples_from_manifest(manifest, images)
