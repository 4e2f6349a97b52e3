"""
Four strategies side by side
============================

Mixup, Cutout, CutMix and Attentive CutMix applied to a batch of synthetic
images, rendered as one PNG with the cut regions outlined.
"""

import os

import numpy as np

from attentive_cutmix import AugmentConfig, RngStream, augment_batch
from attentive_cutmix.pipeline import attention_source
from attentive_cutmix.tensor import one_hot
from attentive_cutmix.visualize import render_grid_png

out_dir = os.environ.get("GALLERY_OUT", "gallery_output")
os.makedirs(out_dir, exist_ok=True)

rng = np.random.default_rng(0)
yy, xx = np.mgrid[0:32, 0:32]
images, labels = [], []
for k in range(4):
    img = np.stack([np.full((32, 32), v) for v in rng.uniform(0.1, 0.5, 3)], axis=2)
    r, c = rng.integers(2, 20, size=2)
    img[r:r + 10, c:c + 10] = rng.uniform(0.7, 1.0, 3)
    images.append(img)
    labels.append(one_hot(k, 10))

###########################################################################
# Every method runs through the same batch entry point. Position ``i`` of the
# output always receives image ``i`` as its canvas.

rows = []
for method in ("mixup", "cutout", "cutmix", "attentive_cutmix"):
    cfg = AugmentConfig(method=method, n_patches=6)
    samples = augment_batch(images, labels, cfg, attention_source("gradient_energy", 7), RngStream(42))
    print(f"{method:>17}: lambdas", [round(s.lam, 3) for s in samples],
          "pairs", [s.source_indices for s in samples])
    rows.extend(samples)

with open(os.path.join(out_dir, "baselines.png"), "wb") as fh:
    fh.write(render_grid_png(rows, columns=4))
