"""Small procedural background corpus (gradients, stripes, blobs).

Lets tests and demos run without downloading any photo dataset.
"""
from pathlib import Path

import numpy as np

from ..seeding import derive_seed
from .io import save_png

KINDS = ("gradient", "stripes", "blobs")


def _grid(size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return xx / size, yy / size


def gradient(size, rng):
    xx, yy = _grid(size)
    theta = rng.uniform(0, 2 * np.pi)
    t = xx * np.cos(theta) + yy * np.sin(theta)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-12)
    c0, c1 = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
    return c0 + t[:, :, None] * (c1 - c0)


def stripes(size, rng):
    xx, yy = _grid(size)
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(2, 16)
    t = xx * np.cos(theta) + yy * np.sin(theta)
    s = 0.5 + 0.5 * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    c0, c1 = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
    return c0 + s[:, :, None] * (c1 - c0)


def blobs(size, rng):
    xx, yy = _grid(size)
    img = np.tile(rng.uniform(0, 0.5, 3), (size, size, 1))
    for _ in range(rng.integers(3, 12)):
        cx, cy = rng.uniform(0, 1, 2)
        r = rng.uniform(0.03, 0.25)
        g = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
        img += g[:, :, None] * rng.uniform(-0.5, 0.8, 3)
    return img


_MAKERS = {"gradient": gradient, "stripes": stripes, "blobs": blobs}


def texture_image(kind, size, seed) -> np.ndarray:
    """One ``(size, size, 3)`` texture in ``[0, 1]``, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    return np.clip(_MAKERS[kind](size, rng), 0.0, 1.0)


def make_texture_corpus(out_dir, n_images=64, size=256, seed=0):
    """Write ``n_images`` PNG textures cycling through :data:`KINDS`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_images):
        kind = KINDS[i % len(KINDS)]
        img = texture_image(kind, size, derive_seed(seed, i))
        paths.append(save_png(out_dir / f"{i:05d}_{kind}.png", img))
    return paths
