"""Deterministic grid-patch pools built from background image folders."""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple

import numpy as np

from ..errors import CapacityError, InputError
from .io import SUPPORTED_SUFFIXES, image_size, load_image, to_channels


class PatchRef(NamedTuple):
    """Source of one patch: file path relative to the pool root, crop offset."""

    file: str
    x: int
    y: int


@dataclass(frozen=True)
class PatchPool:
    """An ordered, read-only stack of equally sized square patches.

    ``patches`` has shape ``(n, patch_size, patch_size, channels)`` and dtype
    float32; ``manifest[i]`` records where ``patches[i]`` was cropped.
    """

    patches: np.ndarray
    manifest: List[PatchRef]
    seed: int
    patch_size: int
    root: str = ""

    def __post_init__(self):
        if len(self.manifest) != len(self.patches):
            raise ValueError("manifest and patch stack differ in length")
        self.patches.setflags(write=False)

    def __len__(self):
        return len(self.manifest)

    def __getitem__(self, i) -> np.ndarray:
        return self.patches[i]

    @property
    def channels(self) -> int:
        return self.patches.shape[3] if self.patches.ndim == 4 else 0

    def take(self, indices) -> "PatchPool":
        indices = np.asarray(indices, dtype=np.int64)
        return PatchPool(
            patches=self.patches[indices].copy(),
            manifest=[self.manifest[i] for i in indices],
            seed=self.seed,
            patch_size=self.patch_size,
            root=self.root,
        )

    def manifest_lines(self):
        return [json.dumps({"file": r.file, "x": r.x, "y": r.y}) for r in self.manifest]

    def write_manifest(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(line + "\n" for line in self.manifest_lines()))
        return path


def read_manifest(path) -> List[PatchRef]:
    refs = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            d = json.loads(line)
            refs.append(PatchRef(d["file"], int(d["x"]), int(d["y"])))
    return refs


def list_images(folder) -> List[Path]:
    """Supported image files under ``folder`` in lexicographic path order."""
    folder = Path(folder)
    if not folder.is_dir():
        raise InputError(f"not a directory: {folder}")
    files = [
        p for p in folder.rglob("*")
        if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES
    ]
    return sorted(files, key=lambda p: p.relative_to(folder).as_posix())


def grid_refs(folder, patch_size) -> List[PatchRef]:
    """Enumerate every non-overlapping grid-aligned patch in the folder."""
    folder = Path(folder)
    files = list_images(folder)
    if not files:
        raise InputError(f"no images found in {folder}")
    refs = []
    for path in files:
        h, w = image_size(path)
        rel = path.relative_to(folder).as_posix()
        for y in range(0, h - patch_size + 1, patch_size):
            for x in range(0, w - patch_size + 1, patch_size):
                refs.append(PatchRef(rel, x, y))
    return refs


def load_patches(folder, refs, patch_size, channels=3) -> np.ndarray:
    """Crop the referenced patches, decoding each source file once."""
    folder = Path(folder)
    out = np.empty((len(refs), patch_size, patch_size, channels), dtype=np.float32)
    by_file = {}
    for i, ref in enumerate(refs):
        by_file.setdefault(ref.file, []).append(i)
    for rel in sorted(by_file):
        img = to_channels(load_image(folder / rel), channels)
        for i in by_file[rel]:
            r = refs[i]
            out[i] = img[r.y:r.y + patch_size, r.x:r.x + patch_size]
    return out


def plan_pool(folder, n, patch_size=128, seed=0) -> List[PatchRef]:
    """Manifest of the pool :func:`build_pool` would return, without pixel data."""
    if n < 0:
        raise InputError(f"pool size must be non-negative, got {n}")
    refs = grid_refs(folder, patch_size)
    if not refs:
        raise InputError(
            f"no image in {folder} is at least {patch_size}x{patch_size}")
    if n > len(refs):
        raise CapacityError(
            f"requested {n} patches but only {len(refs)} are available "
            f"in {folder} at patch size {patch_size}",
            available=len(refs),
        )
    order = np.random.default_rng(seed).permutation(len(refs))[:n]
    return [refs[i] for i in order]


def pool_from_refs(folder, refs, patch_size=128, seed=0, channels=3) -> PatchPool:
    return PatchPool(
        patches=load_patches(folder, refs, patch_size, channels),
        manifest=list(refs),
        seed=seed,
        patch_size=patch_size,
        root=str(folder),
    )


def build_pool(folder, n, patch_size=128, seed=0, channels=3) -> PatchPool:
    """Build a pool of ``n`` patches drawn from ``folder``.

    All grid patches of all images (lexicographic file order) are listed,
    permuted by a generator seeded with ``seed``, and the first ``n`` kept.
    """
    refs = plan_pool(folder, n, patch_size, seed)
    return pool_from_refs(folder, refs, patch_size, seed, channels)


def split_pool(pool: PatchPool, train_n, test_n):
    """First ``train_n`` patches form the train pool, the next ``test_n`` the test pool."""
    if train_n < 0 or test_n < 0:
        raise CapacityError("split sizes must be non-negative", available=len(pool))
    if train_n + test_n > len(pool):
        raise CapacityError(
            f"split {train_n}+{test_n} exceeds pool of {len(pool)}",
            available=len(pool),
        )
    train = pool.take(np.arange(train_n))
    test = pool.take(np.arange(train_n, train_n + test_n))
    return train, test
