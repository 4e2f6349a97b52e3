"""
Sweeping the number of patches
==============================

Occlusion statistics for N = 1..15 over one fixed batch. With a 224x224
input the mean lambda is exactly N/49; at native 32x32 it depends on which
of the 4- and 5-pixel cells were chosen.
"""

import numpy as np

from attentive_cutmix import RngStream
from attentive_cutmix.pipeline import format_ablation, resize_nearest, run_ablation
from attentive_cutmix.tensor import one_hot

rng = np.random.default_rng(1)
images = [rng.integers(0, 256, size=(32, 32, 3)) / 255.0 for _ in range(16)]
labels = [one_hot(k % 10, 10) for k in range(16)]

###########################################################################
# Native resolution

print(format_ablation(run_ablation(images, labels, range(1, 16), rng=RngStream(0))))

###########################################################################
# Nearest-neighbour upscale to 224

big = [resize_nearest(x, 224) for x in images]
rows = run_ablation(big, labels, range(1, 16), rng=RngStream(0))
print(format_ablation(rows))
print("exact n/49:", all(r.mean_lambda == r.n / 49 for r in rows))
