"""Attention-guided CutMix and the Mixup, Cutout and CutMix baselines."""

from .attention import (
    GridCell,
    PatchSet,
    PixelSpan,
    cell_to_span,
    gradient_energy_attention,
    mask_from_patchset,
    top_n_cells,
)
from .augment import (
    AugmentConfig,
    AugmentedSample,
    attentive_cutmix_pair,
    augment_batch,
    cutmix_pair,
    cutout_single,
    mixup_pair,
)
from .errors import AugmentError, FormatError, RangeError, ShapeError
from .extractor import ExtractorWeights, random_weights, tiny_cnn_attention
from .formats import (
    load_attention_file,
    parse_cifar10,
    parse_cifar100,
    read_batch,
    write_batch,
)
from .rng import RngStream
from .tensor import combine_masked, lerp_images, mask_area_fraction, mix_labels

__version__ = "0.1.0"
