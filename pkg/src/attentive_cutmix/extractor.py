"""A miniature convolutional feature extractor used as an attention provider.

The network is a stack of stride-2 convolutions with zero padding
``k // 2`` and a ReLU after every layer. Its final feature map is average
pooled onto the attention grid and the channels are reduced by sum of
squares. The default architecture is four 3x3 layers ``3 -> 8 -> 16 -> 32 -> 32``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import DEFAULT_GRID_SIZE, pool_to_grid
from .errors import RangeError, ShapeError
from .tensor import as_image

DEFAULT_ARCHITECTURE = ((8, 3, 3, 3), (16, 8, 3, 3), (32, 16, 3, 3), (32, 32, 3, 3))
STRIDE = 2


@dataclass(frozen=True)
class ConvLayer:
    kernel: np.ndarray  # (out, in, kh, kw), float32
    bias: np.ndarray  # (out,), float32

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=np.float32)
        bias = np.array(self.bias, dtype=np.float32)
        if kernel.ndim != 4:
            raise ShapeError(f"kernel must have rank 4 (out, in, kh, kw), got {kernel.shape}")
        if bias.shape != (kernel.shape[0],):
            raise ShapeError(f"bias shape {bias.shape} does not match {kernel.shape[0]} outputs")
        if min(kernel.shape) < 1:
            raise ShapeError(f"kernel dimensions must be positive, got {kernel.shape}")
        kernel.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]


@dataclass(frozen=True)
class ExtractorWeights:
    layers: tuple[ConvLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("extractor needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].in_channels != layers[k - 1].out_channels:
                raise ShapeError(
                    f"layer {k}: expects {layers[k].in_channels} input channels but "
                    f"layer {k - 1} produces {layers[k - 1].out_channels}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    def __eq__(self, other):
        if not isinstance(other, ExtractorWeights) or len(self.layers) != len(other.layers):
            return NotImplemented
        return all(
            np.array_equal(a.kernel, b.kernel) and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    __hash__ = None


def random_weights(seed: int = 0, architecture=DEFAULT_ARCHITECTURE) -> ExtractorWeights:
    """He-normal kernels and small positive biases from a seeded generator."""
    rng = np.random.default_rng(seed)
    layers = []
    for out_c, in_c, kh, kw in architecture:
        std = np.sqrt(2.0 / (in_c * kh * kw))
        layers.append(
            ConvLayer(
                rng.normal(0.0, std, size=(out_c, in_c, kh, kw)),
                rng.uniform(0.0, 0.1, size=out_c),
            )
        )
    return ExtractorWeights(tuple(layers))


def conv2d_relu(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Stride-2 zero-padded convolution of ``(H, W, Cin)`` followed by ReLU."""
    _, cin, kh, kw = layer.kernel.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    if xp.shape[0] < kh or xp.shape[1] < kw:
        raise ShapeError(f"feature map {x.shape[:2]} too small for a {kh}x{kw} kernel")
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    windows = windows[::STRIDE, ::STRIDE]  # (H', W', Cin, kh, kw)
    out = np.einsum("hwcij,ocij->hwo", windows, layer.kernel.astype(np.float64), optimize=True)
    out += layer.bias.astype(np.float64)
    return np.maximum(out, 0.0)


def feature_map(image, weights: ExtractorWeights) -> np.ndarray:
    x = as_image(image).astype(np.float64)
    if x.shape[2] != weights.in_channels:
        raise ShapeError(
            f"layer 0: expects {weights.in_channels} input channels, image has {x.shape[2]}"
        )
    for k, layer in enumerate(weights.layers):
        try:
            x = conv2d_relu(x, layer)
        except ShapeError as exc:
            raise ShapeError(f"layer {k}: {exc}") from None
    return x


def tiny_cnn_attention(
    image, weights: ExtractorWeights, grid_size: int = DEFAULT_GRID_SIZE
) -> np.ndarray:
    h, w = np.shape(image)[:2]
    if h < grid_size or w < grid_size:
        raise RangeError(f"image {h}x{w} is smaller than the {grid_size}x{grid_size} grid")
    pooled = pool_to_grid(feature_map(image, weights), grid_size)
    grid = np.sum(pooled**2, axis=2)
    grid.setflags(write=False)
    return grid
