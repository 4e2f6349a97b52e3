"""Image, label and mask values plus the elementwise mixing primitives.

Images are ``float32`` arrays of shape ``(H, W, C)`` with components in
``[0, 1]``; labels are ``float64`` probability vectors; masks are ``bool``
arrays of shape ``(H, W)`` where ``True`` selects the pixel of the first
image. Every function returns a new read-only array and never mutates its
arguments.
"""

from __future__ import annotations

import numpy as np

from .errors import RangeError, ShapeError

IMAGE_DTYPE = np.float32
LABEL_ATOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_image(data) -> np.ndarray:
    """Validate ``data`` as an image and return a read-only float32 copy.

    A 2-D array is promoted to a single-channel image.
    """
    arr = np.array(data, dtype=IMAGE_DTYPE)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"image must have rank 3 (H, W, C), got rank {arr.ndim}")
    if arr.shape[2] not in (1, 3):
        raise ShapeError(f"image channels must be 1 or 3, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"image must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise RangeError("image components must be finite and within [0, 1]")
    return _frozen(arr)


def as_label(probs) -> np.ndarray:
    arr = np.array(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"label must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
        raise RangeError("label probabilities must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > LABEL_ATOL:
        raise RangeError(f"label probabilities must sum to 1, got {arr.sum()!r}")
    return _frozen(arr)


def one_hot(index: int, classes: int) -> np.ndarray:
    if not 0 <= index < classes:
        raise RangeError(f"class index {index} outside [0, {classes})")
    arr = np.zeros(classes, dtype=np.float64)
    arr[index] = 1.0
    return _frozen(arr)


def as_mask(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 2:
        raise ShapeError(f"mask must have rank 2 (H, W), got rank {arr.ndim}")
    if arr.dtype != np.bool_:
        if not np.all((arr == 0) | (arr == 1)):
            raise RangeError("mask entries must be exactly 0 or 1")
        arr = arr.astype(np.bool_)
    else:
        arr = arr.copy()
    return _frozen(arr)


def as_ratio(lam) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise RangeError(f"mix ratio must lie in [0, 1], got {lam!r}")
    return lam


def complement(mask) -> np.ndarray:
    return _frozen(~as_mask(mask))


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    for axis, name in enumerate(("height", "width", "channels")[: a.ndim]):
        if a.shape[axis] != b.shape[axis]:
            raise ShapeError(f"{what}: {name} mismatch ({a.shape[axis]} vs {b.shape[axis]})")


def combine_masked(x1, x2, mask) -> np.ndarray:
    """Take each pixel from ``x1`` where ``mask`` is set and from ``x2`` elsewhere.

    Pixels are copied, never blended, so the result only ever holds values
    already present in one of the two inputs at the same position.
    """
    x1, x2, mask = as_image(x1), as_image(x2), as_mask(mask)
    _check_same_shape(x1, x2, "combine_masked images")
    _check_same_shape(mask, x1[:, :, 0], "combine_masked mask")
    return _frozen(np.where(mask[:, :, None], x1, x2))


def mix_labels(y1, y2, lam) -> np.ndarray:
    y1, y2, lam = as_label(y1), as_label(y2), as_ratio(lam)
    if y1.shape != y2.shape:
        raise ShapeError(f"mix_labels: class count mismatch ({y1.size} vs {y2.size})")
    if lam == 1.0:
        return y1
    if lam == 0.0:
        return y2
    return _frozen(lam * y1 + (1.0 - lam) * y2)


def lerp_images(x1, x2, lam) -> np.ndarray:
    """Blend two images as ``lam * x1 + (1 - lam) * x2``.

    The blend is evaluated in float64 and rounded once to float32, which keeps
    every component inside the closed interval spanned by its two inputs.
    """
    x1, x2, lam = as_image(x1), as_image(x2), as_ratio(lam)
    _check_same_shape(x1, x2, "lerp_images")
    mixed = lam * x1.astype(np.float64) + (1.0 - lam) * x2.astype(np.float64)
    lo = np.minimum(x1, x2).astype(np.float64)
    hi = np.maximum(x1, x2).astype(np.float64)
    return _frozen(np.clip(mixed, lo, hi).astype(IMAGE_DTYPE))


def mask_area_fraction(mask) -> float:
    """Fraction of mask pixels that are set, from an exact integer count."""
    mask = as_mask(mask)
    return int(np.count_nonzero(mask)) / mask.size
