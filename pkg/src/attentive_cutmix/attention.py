"""Attention grids, top-N cell selection and the grid-to-pixel partition.

An attention grid is a ``(G, G)`` float array of nonnegative scores. Cells
map to pixel spans through the floor partition ``floor(i * dim / G)``, which
tiles any image size with ``G`` near-equal cells per axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import RangeError, ShapeError
from .tensor import as_image

DEFAULT_GRID_SIZE = 7

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class GridCell(NamedTuple):
    row: int
    col: int


class PixelSpan(NamedTuple):
    """Half-open pixel rectangle ``[row_start, row_end) x [col_start, col_end)``."""

    row_start: int
    row_end: int
    col_start: int
    col_end: int

    @property
    def area(self) -> int:
        return max(self.row_end - self.row_start, 0) * max(self.col_end - self.col_start, 0)


@dataclass(frozen=True)
class PatchSet:
    """Selected cells, best first."""

    grid_size: int
    cells: tuple[GridCell, ...] = ()

    def __post_init__(self):
        cells = tuple(GridCell(int(r), int(c)) for r, c in self.cells)
        g = self.grid_size
        if g < 1:
            raise RangeError(f"grid_size must be >= 1, got {g}")
        for r, c in cells:
            if not (0 <= r < g and 0 <= c < g):
                raise RangeError(f"cell ({r}, {c}) outside a {g}x{g} grid")
        if len(set(cells)) != len(cells):
            raise RangeError("patch set cells must be distinct")
        object.__setattr__(self, "cells", cells)

    @property
    def n(self) -> int:
        return len(self.cells)


def as_grid(scores) -> np.ndarray:
    arr = np.array(scores, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ShapeError(f"attention grid must be square and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
        raise RangeError("attention scores must be finite and nonnegative")
    arr.setflags(write=False)
    return arr


def top_n_cells(grid, n: int) -> PatchSet:
    """Return the ``n`` highest-scoring cells.

    Ties are broken by ascending row-major index, so the result for ``n`` is
    always a prefix of the result for ``n + 1``.
    """
    grid = as_grid(grid)
    g = grid.shape[0]
    if not 0 <= n <= g * g:
        raise RangeError(f"n must lie in [0, {g * g}] for a {g}x{g} grid, got {n}")
    order = np.argsort(-grid.ravel(), kind="stable")[:n]
    return PatchSet(g, tuple(GridCell(int(k) // g, int(k) % g) for k in order))


def partition_bounds(dim: int, grid_size: int) -> list[int]:
    """Boundaries ``floor(i * dim / G)`` for ``i = 0..G``."""
    return [i * dim // grid_size for i in range(grid_size + 1)]


def cell_to_span(cell, grid_size: int, image_h: int, image_w: int) -> PixelSpan:
    row, col = cell
    if grid_size < 1:
        raise RangeError(f"grid_size must be >= 1, got {grid_size}")
    if image_h < grid_size or image_w < grid_size:
        raise RangeError(
            f"image {image_h}x{image_w} is smaller than the {grid_size}x{grid_size} grid"
        )
    if not (0 <= row < grid_size and 0 <= col < grid_size):
        raise RangeError(f"cell ({row}, {col}) outside a {grid_size}x{grid_size} grid")
    g = grid_size
    return PixelSpan(
        row * image_h // g, (row + 1) * image_h // g, col * image_w // g, (col + 1) * image_w // g
    )


def mask_from_patchset(patches: PatchSet, image_h: int, image_w: int) -> np.ndarray:
    """Boolean ``(H, W)`` mask set exactly on the spans of the selected cells."""
    mask = np.zeros((image_h, image_w), dtype=np.bool_)
    if image_h < patches.grid_size or image_w < patches.grid_size:
        raise RangeError(
            f"image {image_h}x{image_w} is smaller than the "
            f"{patches.grid_size}x{patches.grid_size} grid"
        )
    for cell in patches.cells:
        r0, r1, c0, c1 = cell_to_span(cell, patches.grid_size, image_h, image_w)
        mask[r0:r1, c0:c1] = True
    mask.setflags(write=False)
    return mask


def pool_to_grid(values: np.ndarray, grid_size: int) -> np.ndarray:
    """Average a ``(H, W)`` or ``(H, W, C)`` map over the floor-partition cells.

    When an axis is shorter than ``grid_size`` the cells along it would be
    empty; each such cell instead averages the single element at its floor
    start, which is nearest-neighbour upsampling.
    """
    h, w = values.shape[:2]
    rows = _pool_spans(h, grid_size)
    cols = _pool_spans(w, grid_size)
    out = np.empty((grid_size, grid_size) + values.shape[2:], dtype=np.float64)
    for i, (r0, r1) in enumerate(rows):
        for j, (c0, c1) in enumerate(cols):
            out[i, j] = values[r0:r1, c0:c1].mean(axis=(0, 1))
    return out


def _pool_spans(dim: int, grid_size: int) -> list[tuple[int, int]]:
    b = partition_bounds(dim, grid_size)
    return [(b[i], max(b[i + 1], b[i] + 1)) for i in range(grid_size)]


def luminance(image: np.ndarray) -> np.ndarray:
    img = image.astype(np.float64)
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img @ _LUMA


def gradient_energy_map(image) -> np.ndarray:
    """Per-pixel squared luminance-gradient magnitude.

    Forward differences everywhere except the last row and column, which use
    the backward difference. A length-1 axis contributes no gradient.
    """
    lum = luminance(as_image(image))
    return _axis_diff(lum, 0) ** 2 + _axis_diff(lum, 1) ** 2


def _axis_diff(lum: np.ndarray, axis: int) -> np.ndarray:
    if lum.shape[axis] < 2:
        return np.zeros_like(lum)
    d = np.diff(lum, axis=axis)
    last = np.take(d, [-1], axis=axis)
    return np.concatenate([d, last], axis=axis)


def gradient_energy_attention(image, grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Weight-free attention: mean gradient energy over each grid cell."""
    image = as_image(image)
    h, w = image.shape[:2]
    if h < grid_size or w < grid_size:
        raise RangeError(f"image {h}x{w} is smaller than the {grid_size}x{grid_size} grid")
    grid = pool_to_grid(gradient_energy_map(image), grid_size)
    grid.setflags(write=False)
    return grid
