"""
Plugging in attention from elsewhere
====================================

Grids computed by any external network can be stored as ATNG files and fed
back in. The built-in miniature convnet reads its weights from ATNW files.
"""

import os

import numpy as np

from attentive_cutmix import formats, random_weights, tiny_cnn_attention, top_n_cells
from attentive_cutmix.pipeline import resize_nearest

out_dir = os.environ.get("GALLERY_OUT", "gallery_output")
os.makedirs(out_dir, exist_ok=True)

###########################################################################
# A grid from some other model, round-tripped through an ATNG file.

external = np.random.default_rng(3).random((7, 7)).astype(np.float32)
path = os.path.join(out_dir, "external.atng")
with open(path, "wb") as fh:
    fh.write(formats.dump_attention_file(external))
with open(path, "rb") as fh:
    grid = formats.load_attention_file(fh.read())
print("identical after round trip:", grid.astype(np.float32).tobytes() == external.tobytes())
print("top 3:", top_n_cells(grid, 3).cells)

###########################################################################
# The four-layer stride-2 convnet turns 224x224 inputs into a 14x14 map,
# which pools cleanly onto the 7x7 grid.

weights = random_weights(seed=0)
with open(os.path.join(out_dir, "tiny.atnw"), "wb") as fh:
    fh.write(formats.dump_weights_file(weights))

image = np.zeros((32, 32, 3))
image[20:28, 4:12] = 1.0
scores = tiny_cnn_attention(resize_nearest(image, 224), weights, 7)
print(np.array2string(scores, precision=2))
print("best cell:", top_n_cells(scores, 1).cells[0])
