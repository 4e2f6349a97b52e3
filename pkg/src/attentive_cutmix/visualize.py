"""PNG rendering of augmented batches and attention heatmaps."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .attention import cell_to_span
from .errors import ShapeError
from .tensor import as_image

SEPARATOR = 2
OUTLINE = np.array([1.0, 0.0, 0.0], dtype=np.float32)


def _to_rgb(image: np.ndarray) -> np.ndarray:
    return np.repeat(image, 3, axis=2) if image.shape[2] == 1 else np.array(image)


def _outline(canvas: np.ndarray, r0: int, r1: int, c0: int, c1: int) -> None:
    if r1 <= r0 or c1 <= c0:
        return
    canvas[r0, c0:c1] = OUTLINE
    canvas[r1 - 1, c0:c1] = OUTLINE
    canvas[r0:r1, c0] = OUTLINE
    canvas[r0:r1, c1 - 1] = OUTLINE


def sample_regions(sample) -> list[tuple[int, int, int, int]]:
    h, w = sample.image.shape[:2]
    if sample.patchset is not None:
        return [tuple(cell_to_span(c, sample.patchset.grid_size, h, w)) for c in sample.patchset.cells]
    if sample.box is not None:
        return [tuple(sample.box)]
    return []


def tile_samples(samples, columns: int = 8, outline: bool = True) -> np.ndarray:
    """Tile sample images row by row with white separators between tiles."""
    samples = list(samples)
    if not samples:
        raise ShapeError("nothing to render")
    shape = samples[0].image.shape
    if any(s.image.shape != shape for s in samples):
        raise ShapeError("all samples must share one image shape")
    h, w = shape[:2]
    columns = max(1, min(columns, len(samples)))
    rows = -(-len(samples) // columns)
    canvas = np.ones(
        (rows * h + (rows - 1) * SEPARATOR, columns * w + (columns - 1) * SEPARATOR, 3),
        dtype=np.float32,
    )
    for k, s in enumerate(samples):
        tile = _to_rgb(as_image(s.image))
        if outline:
            for region in sample_regions(s):
                _outline(tile, *region)
        r, c = divmod(k, columns)
        top, left = r * (h + SEPARATOR), c * (w + SEPARATOR)
        canvas[top : top + h, left : left + w] = tile
    return canvas


def encode_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.rint(np.clip(rgb, 0, 1) * 255).astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def render_grid_png(samples, columns: int = 8, outline: bool = True) -> bytes:
    return encode_png(tile_samples(samples, columns, outline))


def heatmap_overlay(image, grid, alpha: float = 0.5) -> np.ndarray:
    """Blend a red heatmap of ``grid`` (upsampled over its cell spans) onto ``image``."""
    image = _to_rgb(as_image(image))
    g = grid.shape[0]
    h, w = image.shape[:2]
    heat = np.zeros((h, w), dtype=np.float64)
    peak = float(np.max(grid))
    norm = grid / peak if peak > 0 else np.zeros_like(grid)
    for r in range(g):
        for c in range(g):
            r0, r1, c0, c1 = cell_to_span((r, c), g, h, w)
            heat[r0:r1, c0:c1] = norm[r, c]
    color = np.stack([heat, np.zeros_like(heat), 1.0 - heat], axis=2)
    return ((1 - alpha) * image + alpha * color).astype(np.float32)

