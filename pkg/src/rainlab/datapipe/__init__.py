"""Background ingestion: image I/O, patch pools, procedural textures."""
from .io import load_image, luma, save_png, to_channels
from .pool import (
    PatchPool, PatchRef, build_pool, plan_pool, pool_from_refs, read_manifest, split_pool,
)
from .textures import make_texture_corpus, texture_image

__all__ = [
    "PatchPool", "PatchRef", "build_pool", "load_image", "luma",
    "make_texture_corpus", "plan_pool", "pool_from_refs", "read_manifest", "save_png", "split_pool",
    "texture_image", "to_channels",
]
