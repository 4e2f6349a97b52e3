"""
Attentive CutMix on a single pair
=================================

Score the first image on a 7x7 grid, keep the six best cells and paste them
onto the second image at the same coordinates. The label is mixed by the
fraction of pixels that moved.
"""

###########################################################################
# Two toy images: a bright square on a dark ramp, and a flat blue field.

import os

import numpy as np

from attentive_cutmix import attentive_cutmix_pair, gradient_energy_attention, top_n_cells
from attentive_cutmix.pipeline import resize_nearest
from attentive_cutmix.tensor import one_hot
from attentive_cutmix.visualize import render_grid_png

out_dir = os.environ.get("GALLERY_OUT", "gallery_output")
os.makedirs(out_dir, exist_ok=True)

yy, xx = np.mgrid[0:32, 0:32]
x1 = np.stack([(yy + xx) / 124.0] * 3, axis=2)
x1[8:18, 12:24] = [1.0, 0.9, 0.2]
x2 = np.zeros((32, 32, 3))
x2[..., 2] = 0.8

###########################################################################
# The weight-free provider scores each cell by its mean squared luminance
# gradient, so the edges of the square stand out.

grid = gradient_energy_attention(x1, 7)
print(np.array2string(grid, precision=3, suppress_small=True))
print("top 6 cells:", top_n_cells(grid, 6).cells)

###########################################################################
# At native 32x32 the floor partition gives cells of 4 or 5 pixels a side,
# so lambda is the exact pixel fraction rather than 6/49.

native = attentive_cutmix_pair(x1, one_hot(3, 10), x2, one_hot(7, 10), grid, 6)
print("native lambda:", native.lam, "vs 6/49 =", 6 / 49)

###########################################################################
# Upscaled to 224x224 every cell is 32x32 pixels and lambda is exactly 6/49.

big1, big2 = resize_nearest(x1, 224), resize_nearest(x2, 224)
big = attentive_cutmix_pair(big1, one_hot(3, 10), big2, one_hot(7, 10),
                            gradient_energy_attention(big1, 7), 6)
print("224 lambda:", big.lam, big.lam == 6 / 49)
print("label:", big.label)

with open(os.path.join(out_dir, "attentive_pair.png"), "wb") as fh:
    fh.write(render_grid_png([native], columns=1))
