"""Multi-scale structural complexity by iterative 2x2 coarse-graining.

Each level halves the resolution by block averaging. Level patterns are
projected back onto the base grid by nearest-neighbour replication, and the
complexity contributed between adjacent scales ``k, k+1`` is

    C_k = |O(k, k+1) - (O(k, k) + O(k+1, k+1)) / 2|

where ``O(m, n)`` is the mean over base pixels of ``f_m * f_n``.
"""
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .datapipe.io import luma
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class ScalePyramid:
    levels: List[np.ndarray]

    @property
    def base(self) -> np.ndarray:
        return self.levels[0]

    def upsampled(self, k) -> np.ndarray:
        """Level ``k`` replicated back to the base resolution."""
        f = 2 ** k
        return np.kron(self.levels[k], np.ones((f, f)))


@dataclass(frozen=True)
class ComplexityReport:
    per_scale: List[float]
    total: float


def _next_pow2(n):
    return 1 << max(0, (n - 1).bit_length())


def _to_gray(img):
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        return a
    if a.ndim == 3 and a.shape[2] in (1, 3):
        return luma(a)
    raise ShapeError(f"expected a gray or RGB image, got shape {a.shape}")


def pad_pow2(gray) -> np.ndarray:
    """Reflect-pad the bottom/right edges up to the next power of two."""
    h, w = gray.shape
    ph, pw = _next_pow2(h) - h, _next_pow2(w) - w
    out = gray
    # np.pad 'reflect' needs at least 2 samples along an axis
    if ph:
        out = np.pad(out, ((0, ph), (0, 0)), mode="reflect" if h > 1 else "edge")
    if pw:
        out = np.pad(out, ((0, 0), (0, pw)), mode="reflect" if w > 1 else "edge")
    return out


def max_supported_levels(img) -> int:
    gray = _to_gray(img)
    return int(math.log2(min(_next_pow2(gray.shape[0]), _next_pow2(gray.shape[1]))))


def default_levels(img) -> int:
    return max(1, max_supported_levels(img) - 1)


def build_pyramid(img, max_levels) -> ScalePyramid:
    """Grayscale, pad to powers of two, then block-average ``max_levels`` times."""
    gray = _to_gray(img)
    if gray.size == 0:
        raise ShapeError("empty image")
    base = pad_pow2(gray)
    limit = int(math.log2(min(base.shape)))
    if max_levels < 0 or max_levels > limit:
        raise ConfigError(
            f"max_levels={max_levels} exceeds log2 of the padded size ({limit})")
    levels = [base]
    for _ in range(max_levels):
        p = levels[-1]
        # pairwise sum keeps constant patterns bit-exact
        levels.append(((p[0::2, 0::2] + p[0::2, 1::2]) + (p[1::2, 0::2] + p[1::2, 1::2])) * 0.25)
    return ScalePyramid(levels)


def complexity(img, max_levels=None, centered=False) -> ComplexityReport:
    """Per-scale and total structural complexity of an image.

    With ``centered=True`` the base pattern's mean is subtracted first.
    """
    if max_levels is None:
        max_levels = default_levels(img)
    pyr = build_pyramid(img, max_levels)
    fields = [pyr.upsampled(k) for k in range(len(pyr.levels))]
    if centered:
        mu = fields[0].mean()
        fields = [f - mu for f in fields]
    self_overlap = [float(np.mean(f * f)) for f in fields]
    per_scale = []
    for k in range(len(fields) - 1):
        cross = float(np.mean(fields[k] * fields[k + 1]))
        per_scale.append(abs(cross - 0.5 * (self_overlap[k] + self_overlap[k + 1])))
    return ComplexityReport(per_scale, float(sum(per_scale)))


def pool_complexity(images, max_levels=None, centered=False):
    """Totals for a sequence of images and their average."""
    totals = [complexity(im, max_levels, centered).total for im in images]
    return totals, float(np.mean(totals)) if totals else float("nan")
