import numpy as np


def random_image(rng, h=32, w=32, c=3):
    # values on the 1/255 lattice, like ingested dataset pixels
    return (rng.integers(0, 256, size=(h, w, c)).astype(np.float32) / np.float32(255))


def random_label(rng, k=10):
    p = rng.random(k)
    return p / p.sum()


def synthetic_cifar_bytes(n, seed=0, classes=10, coarse=False):
    """CIFAR-format records holding a bright rectangle on a smooth background."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:32, 0:32]
    parts = []
    for _ in range(n):
        base = rng.integers(0, 120, size=3)
        img = (base[:, None, None] + (yy + xx)[None] * rng.integers(0, 3)).astype(np.int64)
        r0, c0 = rng.integers(0, 24, size=2)
        hh, ww = rng.integers(4, 9, size=2)
        img[:, r0:r0 + hh, c0:c0 + ww] = rng.integers(180, 256, size=3)[:, None, None]
        label = int(rng.integers(classes))
        head = bytes([label // 5, label]) if coarse else bytes([label])
        parts.append(head + np.clip(img, 0, 255).astype(np.uint8).tobytes())
    return b"".join(parts)
