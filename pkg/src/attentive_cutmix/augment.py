"""Mixup, Cutout, CutMix and Attentive CutMix as pair and batch transforms.

Pair operations take ``(x1, y1, x2, y2)``. In every sample ``lam`` is the
weight given to ``y1`` and, for the cut methods, the fraction of pixels
taken from ``x1``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attention import DEFAULT_GRID_SIZE, PatchSet, PixelSpan, mask_from_patchset, top_n_cells
from .errors import RangeError, ShapeError
from .rng import RngStream
from .tensor import (
    as_image,
    as_label,
    combine_masked,
    lerp_images,
    mask_area_fraction,
    mix_labels,
)

METHODS = ("mixup", "cutout", "cutmix", "attentive_cutmix")
# emitted by augment_batch for positions skipped by the apply probability
IDENTITY = "identity"
PROVIDERS = ("file", "gradient_energy", "tiny_cnn")
CUTOUT_FILL = 0.5


@dataclass(frozen=True)
class AugmentedSample:
    image: np.ndarray
    label: np.ndarray
    lam: float
    method: str
    source_indices: tuple[int, int]
    patchset: PatchSet | None = None
    box: PixelSpan | None = None

    def __eq__(self, other):
        if not isinstance(other, AugmentedSample):
            return NotImplemented
        return (
            self.method == other.method
            and self.lam == other.lam
            and tuple(self.source_indices) == tuple(other.source_indices)
            and self.patchset == other.patchset
            and self.box == other.box
            and self.image.shape == other.image.shape
            and self.image.tobytes() == other.image.tobytes()
            and np.array_equal(self.label, other.label)
        )

    __hash__ = None


@dataclass(frozen=True)
class AugmentConfig:
    method: str = "attentive_cutmix"
    n_patches: int = 6
    grid_size: int = DEFAULT_GRID_SIZE
    mixup_alpha: float = 1.0
    cutout_size: int | None = None  # None: half the smaller image side
    attention_provider: str = "gradient_energy"
    apply_prob: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise RangeError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.attention_provider not in PROVIDERS:
            raise RangeError(f"unknown attention provider {self.attention_provider!r}")
        if self.grid_size < 1:
            raise RangeError(f"grid_size must be >= 1, got {self.grid_size}")
        if not 0 <= self.n_patches <= self.grid_size**2:
            raise RangeError(f"n_patches must lie in [0, {self.grid_size ** 2}]")
        if not self.mixup_alpha > 0:
            raise RangeError(f"mixup_alpha must be positive, got {self.mixup_alpha}")
        if self.cutout_size is not None and self.cutout_size < 0:
            raise RangeError(f"cutout_size must be nonnegative, got {self.cutout_size}")
        if not 0.0 <= self.apply_prob <= 1.0:
            raise RangeError(f"apply_prob must lie in [0, 1], got {self.apply_prob}")

    def resolved_cutout_size(self, h: int, w: int) -> int:
        size = min(h, w) // 2 if self.cutout_size is None else self.cutout_size
        if size > min(h, w):
            raise RangeError(f"cutout_size {size} exceeds the smaller image side {min(h, w)}")
        return size


def _check_pair(x1, x2):
    if x1.shape != x2.shape:
        raise ShapeError(f"pair images differ in shape: {x1.shape} vs {x2.shape}")


def attentive_cutmix_pair(x1, y1, x2, y2, grid, n: int, source_indices=(0, 1)) -> AugmentedSample:
    """Paste the ``n`` most attended cells of ``x1`` onto ``x2`` at the same place.

    ``grid`` scores ``x1``. The operation is deterministic: the mask depends
    only on ``grid``, ``n`` and the image size.
    """
    x1, x2 = as_image(x1), as_image(x2)
    _check_pair(x1, x2)
    patches = top_n_cells(grid, n)
    mask = mask_from_patchset(patches, x1.shape[0], x1.shape[1])
    lam = mask_area_fraction(mask)
    return AugmentedSample(
        image=combine_masked(x1, x2, mask),
        label=mix_labels(y1, y2, lam),
        lam=lam,
        method="attentive_cutmix",
        source_indices=tuple(source_indices),
        patchset=patches,
    )


def cutmix_box(h: int, w: int, lam_raw: float, center_row: int, center_col: int) -> PixelSpan:
    """Box with sides ``round(dim * sqrt(1 - lam_raw))`` around a center, clipped."""
    scale = math.sqrt(1.0 - lam_raw)
    cut_h, cut_w = round(h * scale), round(w * scale)
    r0 = center_row - cut_h // 2
    c0 = center_col - cut_w // 2
    return PixelSpan(
        min(max(r0, 0), h), min(max(r0 + cut_h, 0), h), min(max(c0, 0), w), min(max(c0 + cut_w, 0), w)
    )


def box_mask(h: int, w: int, box: PixelSpan) -> np.ndarray:
    mask = np.zeros((h, w), dtype=np.bool_)
    mask[box.row_start : box.row_end, box.col_start : box.col_end] = True
    return mask


def cutmix_with_box(x1, y1, x2, y2, box: PixelSpan, source_indices=(0, 1)) -> AugmentedSample:
    """Paste the ``box`` region of ``x2`` onto ``x1``."""
    x1, x2 = as_image(x1), as_image(x2)
    _check_pair(x1, x2)
    h, w = x1.shape[:2]
    mask = ~box_mask(h, w, box)
    lam = mask_area_fraction(mask)
    return AugmentedSample(
        image=combine_masked(x1, x2, mask),
        label=mix_labels(y1, y2, lam),
        lam=lam,
        method="cutmix",
        source_indices=tuple(source_indices),
        box=box,
    )


def cutmix_pair(x1, y1, x2, y2, rng: RngStream | np.random.Generator, source_indices=(0, 1)):
    gen = _generator(rng)
    h, w = np.shape(x1)[:2]
    lam_raw = gen.random()
    center_row = int(gen.integers(0, h))
    center_col = int(gen.integers(0, w))
    box = cutmix_box(h, w, lam_raw, center_row, center_col)
    return cutmix_with_box(x1, y1, x2, y2, box, source_indices)


def cutout_box(h: int, w: int, size: int, center_row: int, center_col: int) -> PixelSpan:
    r0 = center_row - size // 2
    c0 = center_col - size // 2
    return PixelSpan(
        max(r0, 0), min(r0 + size, h), max(c0, 0), min(c0 + size, w)
    )


def cutout_with_box(x, y, box: PixelSpan, index: int = 0) -> AugmentedSample:
    x = as_image(x)
    out = np.array(x)
    out[box.row_start : box.row_end, box.col_start : box.col_end, :] = CUTOUT_FILL
    out.setflags(write=False)
    return AugmentedSample(
        image=out,
        label=as_label(y),
        lam=1.0,
        method="cutout",
        source_indices=(index, index),
        box=box,
    )


def cutout_single(x, y, rng: RngStream | np.random.Generator, size: int, index: int = 0):
    """Fill a ``size`` x ``size`` square at a uniform random center with mid-gray."""
    h, w = np.shape(x)[:2]
    if not 0 <= size <= min(h, w):
        raise RangeError(f"cutout size {size} outside [0, {min(h, w)}]")
    gen = _generator(rng)
    center_row = int(gen.integers(0, h))
    center_col = int(gen.integers(0, w))
    return cutout_with_box(x, y, cutout_box(h, w, size, center_row, center_col), index)


def mixup_with_ratio(x1, y1, x2, y2, lam: float, source_indices=(0, 1)) -> AugmentedSample:
    return AugmentedSample(
        image=lerp_images(x1, x2, lam),
        label=mix_labels(y1, y2, lam),
        lam=float(lam),
        method="mixup",
        source_indices=tuple(source_indices),
    )


def mixup_pair(x1, y1, x2, y2, rng: RngStream | np.random.Generator, alpha: float = 1.0,
               source_indices=(0, 1)) -> AugmentedSample:
    if not alpha > 0:
        raise RangeError(f"mixup alpha must be positive, got {alpha}")
    lam = float(_generator(rng).beta(alpha, alpha))
    return mixup_with_ratio(x1, y1, x2, y2, lam, source_indices)


def _generator(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def draw_partner(gen: np.random.Generator, index: int, batch_size: int) -> int:
    """Uniform position in ``[0, batch_size)`` other than ``index``."""
    j = int(gen.integers(0, batch_size - 1))
    return j + 1 if j >= index else j


AttentionSource = Callable[[np.ndarray], np.ndarray] | Sequence


def augment_batch(
    images,
    labels,
    config: AugmentConfig,
    attention_source: AttentionSource | None = None,
    rng: RngStream | None = None,
    workers: int = 1,
) -> list[AugmentedSample]:
    """Augment every position of a batch, one output per input position.

    Position ``i`` consumes only the stream ``rng.substream(i)``: first the
    apply-probability draw, then its partner ``j != i``, then whatever the
    method draws. Output is therefore independent of ``workers``. Image ``i``
    is always the receiving canvas: ``x2`` for Attentive CutMix (cells cut
    from ``x1 = image j``) and ``x1`` for CutMix and Mixup.

    ``attention_source`` is either a per-position sequence of grids or a
    callable mapping an image to its grid; it is only used for Attentive CutMix.
    """
    if rng is None:
        rng = RngStream(0)
    images = [as_image(x) for x in images]
    labels = [as_label(y) for y in labels]
    b = len(images)
    if len(labels) != b:
        raise ShapeError(f"{b} images but {len(labels)} labels")
    if b == 0:
        raise RangeError("batch is empty")
    if config.method != "cutout" and b < 2:
        raise RangeError(f"{config.method} needs a batch of at least 2, got {b}")
    cutout_size = None
    if config.method == "cutout":
        cutout_size = config.resolved_cutout_size(*images[0].shape[:2])

    grids = None
    if config.method == "attentive_cutmix":
        grids = _resolve_grids(images, attention_source, workers)

    def one(i: int) -> AugmentedSample:
        gen = rng.substream(i).generator()
        applied = gen.random() < config.apply_prob
        if config.method == "cutout":
            if not applied:
                return _identity(images[i], labels[i], i)
            return cutout_single(images[i], labels[i], gen, cutout_size, index=i)
        j = draw_partner(gen, i, b)
        if not applied:
            return _identity(images[i], labels[i], i)
        if config.method == "attentive_cutmix":
            return attentive_cutmix_pair(
                images[j], labels[j], images[i], labels[i], grids[j], config.n_patches, (j, i)
            )
        if config.method == "cutmix":
            return cutmix_pair(images[i], labels[i], images[j], labels[j], gen, (i, j))
        return mixup_pair(images[i], labels[i], images[j], labels[j], gen, config.mixup_alpha, (i, j))

    return _map(one, range(b), workers)


def _identity(x, y, i) -> AugmentedSample:
    return AugmentedSample(image=x, label=y, lam=1.0, method=IDENTITY, source_indices=(i, i))


def _resolve_grids(images, attention_source, workers):
    if attention_source is None:
        raise RangeError("attentive_cutmix needs an attention source")
    if callable(attention_source):
        return _map(attention_source, images, workers)
    grids = list(attention_source)
    if len(grids) != len(images):
        raise RangeError(f"{len(images)} images but {len(grids)} attention grids")
    missing = [k for k, g in enumerate(grids) if g is None]
    if missing:
        raise RangeError(f"missing attention grid for batch positions {missing}")
    return grids


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
