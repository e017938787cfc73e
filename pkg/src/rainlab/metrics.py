"""Decoupled deraining metrics: rain mask, E_R, E_B, PSNR.

E_R and E_B are reported on the 0-255 scale. By default each is a masked
mean (over the pixels of its own region); ``mode="all"`` instead averages
over every pixel with zeros outside the region.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurveError, MetricError, ShapeError

DEFAULT_THRESHOLD = 0.05
MODES = ("masked", "all")


@dataclass(frozen=True)
class BinaryMask:
    grid: np.ndarray  # bool, (H, W)
    threshold: float

    @property
    def count(self) -> int:
        return int(self.grid.sum())


@dataclass(frozen=True)
class EvalTriple:
    e_r: float
    e_b: float
    psnr: float

    def as_dict(self):
        return {"E_R": self.e_r, "E_B": self.e_b, "PSNR": self.psnr}


def make_mask(r, t=DEFAULT_THRESHOLD) -> BinaryMask:
    """1 where the rain layer exceeds ``t``, 0 elsewhere."""
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    layer = np.asarray(getattr(r, "layer", r), dtype=np.float64)
    if layer.ndim == 3:
        layer = layer[:, :, 0]
    return BinaryMask(layer > t, float(t))


def _as_hwc(img):
    a = np.asarray(img, dtype=np.float64)
    return a[:, :, None] if a.ndim == 2 else a


def _region_rms(a, b, region, mode):
    a, b = _as_hwc(a), _as_hwc(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if region.shape != a.shape[:2]:
        raise ShapeError(f"mask {region.shape} does not match image {a.shape}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    sq = (a - b) ** 2
    if mode == "masked":
        mse = sq[region].mean()
    else:
        mse = (sq * region[:, :, None]).mean()
    return 255.0 * math.sqrt(mse)


def rain_removal_score(output, rainy, mask: BinaryMask, mode="masked") -> float:
    """E_R: RMS change the output makes to the rainy input inside the rain mask."""
    if mask.count == 0 and mode == "masked":
        raise MetricError("E_R undefined: the rain mask is empty")
    return _region_rms(output, rainy, mask.grid, mode)


def background_error(output, clean, mask: BinaryMask, mode="masked") -> float:
    """E_B: RMS error against the clean background outside the rain mask."""
    if mask.count == mask.grid.size and mode == "masked":
        raise MetricError("E_B undefined: the rain mask covers every pixel")
    return _region_rms(output, clean, ~mask.grid, mode)


def psnr(output, reference) -> float:
    """PSNR in dB for unit peak; ``inf`` when the images are identical."""
    a, b = _as_hwc(output), _as_hwc(reference)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(((a - b) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def evaluate(output, rainy, clean, mask: BinaryMask, mode="masked") -> EvalTriple:
    return EvalTriple(
        rain_removal_score(output, rainy, mask, mode),
        background_error(output, clean, mask, mode),
        psnr(output, clean),
    )


def normalize_curve(values):
    """Affinely map values onto [0, 1] (min -> 0, max -> 1)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise DegenerateCurveError("need at least two values to normalize")
    lo, hi = v.min(), v.max()
    if hi == lo:
        raise DegenerateCurveError("all values are equal; curve has zero span")
    return ((v - lo) / (hi - lo)).tolist()
