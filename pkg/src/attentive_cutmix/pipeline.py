"""Batch-level plumbing shared by the command line and the gallery scripts."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .attention import gradient_energy_attention
from .augment import AugmentConfig, augment_batch
from .errors import RangeError
from .extractor import ExtractorWeights, tiny_cnn_attention
from .rng import RngStream
from .tensor import as_image


def resize_nearest(image, size: int) -> np.ndarray:
    """Nearest-neighbour resize to ``size`` x ``size``; source index ``floor(k * src / size)``."""
    image = as_image(image)
    h, w = image.shape[:2]
    rows = np.arange(size) * h // size
    cols = np.arange(size) * w // size
    out = image[rows][:, cols]
    out.setflags(write=False)
    return out


def attention_source(provider: str, grid_size: int, weights: ExtractorWeights | None = None,
                     grids=None):
    """Build the ``attention_source`` argument of :func:`augment_batch`."""
    if provider == "gradient_energy":
        return lambda image: gradient_energy_attention(image, grid_size)
    if provider == "tiny_cnn":
        if weights is None:
            raise RangeError("the tiny_cnn provider needs extractor weights")
        return lambda image: tiny_cnn_attention(image, weights, grid_size)
    if provider == "file":
        if grids is None:
            raise RangeError("the file provider needs attention grids")
        for g in grids:
            if g.shape != (grid_size, grid_size):
                raise RangeError(f"attention file grid is {g.shape[0]}x{g.shape[1]}, expected {grid_size}x{grid_size}")
        return list(grids)
    raise RangeError(f"unknown attention provider {provider!r}")


@dataclass
class AblationRow:
    n: int
    mean_lambda: float
    min_lambda: float
    max_lambda: float
    mean_masked_pixels: float
    unique_cells: int
    cell_counts: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def ablation_row(samples, n: int, grid_size: int) -> AblationRow:
    """Occlusion statistics of one Attentive CutMix batch.

    The mean is taken over integer pixel counts, so it is the exact batch
    fraction rounded once.
    """
    h, w = samples[0].image.shape[:2]
    counts = [round(s.lam * h * w) for s in samples]
    hist = np.zeros(grid_size * grid_size, dtype=np.int64)
    for s in samples:
        for cell in s.patchset.cells:
            hist[cell.row * grid_size + cell.col] += 1
    lams = [s.lam for s in samples]
    return AblationRow(
        n=n,
        mean_lambda=sum(counts) / (len(samples) * h * w),
        min_lambda=min(lams),
        max_lambda=max(lams),
        mean_masked_pixels=sum(counts) / len(samples),
        unique_cells=int(np.count_nonzero(hist)),
        cell_counts=[int(v) for v in hist],
    )


def run_ablation(images, labels, ns, *, grid_size: int = 7, source=None,
                 rng: RngStream | None = None, workers: int = 1) -> list[AblationRow]:
    """Sweep the patch count over one batch with a fixed pairing."""
    if source is None:
        source = attention_source("gradient_energy", grid_size)
    if callable(source):
        source = [source(x) for x in images]
    rows = []
    for n in ns:
        if not 0 <= n <= grid_size * grid_size:
            raise RangeError(f"n = {n} outside [0, {grid_size * grid_size}]")
        config = AugmentConfig(method="attentive_cutmix", n_patches=n, grid_size=grid_size)
        samples = augment_batch(images, labels, config, source, rng, workers=workers)
        rows.append(ablation_row(samples, n, grid_size))
    return rows


def format_ablation(rows) -> str:
    header = f"{'n':>3}  {'mean_lambda':>12}  {'min_lambda':>10}  {'max_lambda':>10}  {'mean_pixels':>11}  {'cells':>5}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.n:>3}  {r.mean_lambda:>12.8f}  {r.min_lambda:>10.6f}  {r.max_lambda:>10.6f}  "
            f"{r.mean_masked_pixels:>11.2f}  {r.unique_cells:>5}"
        )
    return "\n".join(lines)
