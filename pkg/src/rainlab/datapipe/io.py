"""PNG (and other raster) decode/encode mapped to unit-interval arrays.

Images are ``(H, W, C)`` float64 arrays with values in ``[0, 1]``; channel
order is RGB for colour files. OpenCV does the decoding because it handles
8- and 16-bit PNGs in both grayscale and colour.
"""
from pathlib import Path

import cv2
import numpy as np

from ..errors import FormatError, ShapeError

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

_SCALE = {np.dtype(np.uint8): 255.0, np.dtype(np.uint16): 65535.0}


def load_image(path) -> np.ndarray:
    """Read an image file as an ``(H, W, C)`` array in ``[0, 1]``.

    8-bit codes are divided by 255 and 16-bit codes by 65535. Grayscale
    files give ``C = 1``; an alpha channel, if present, is dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"could not decode image: {path}")
    scale = _SCALE.get(raw.dtype)
    if scale is None:
        raise FormatError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 2:
        raw = raw[:, :, None]
    elif raw.shape[2] == 4:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGRA2RGB)
    elif raw.shape[2] == 3:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    else:
        raise FormatError(f"unsupported channel count {raw.shape[2]} in {path}")
    return raw.astype(np.float64) / scale


def image_size(path):
    """Return ``(height, width)`` without decoding pixel data when possible."""
    from PIL import Image

    try:
        with Image.open(path) as im:
            w, h = im.size
        return h, w
    except Exception:
        img = load_image(path)
        return img.shape[0], img.shape[1]


def to_codes(img, bit_depth=8) -> np.ndarray:
    """Quantize a unit-interval image to integer codes (round half to even)."""
    if bit_depth == 8:
        dtype, peak = np.uint8, 255.0
    elif bit_depth == 16:
        dtype, peak = np.uint16, 65535.0
    else:
        raise FormatError(f"unsupported bit depth {bit_depth}")
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.rint(arr * peak).astype(dtype)


def save_png(path, img, bit_depth=8):
    """Write an ``(H, W)``, ``(H, W, 1)`` or ``(H, W, 3)`` image as PNG."""
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ShapeError(f"cannot encode {arr.shape[2]} channels as PNG")
    if arr.ndim not in (2, 3):
        raise ShapeError(f"expected a 2-D or 3-D image, got shape {arr.shape}")
    codes = to_codes(arr, bit_depth)
    if codes.ndim == 3:
        codes = cv2.cvtColor(codes, cv2.COLOR_RGB2BGR)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ok = cv2.imwrite(str(path), codes, [cv2.IMWRITE_PNG_COMPRESSION, 6])
    if not ok:
        raise OSError(f"could not write {path}")
    return path


def to_channels(img, channels):
    """Adapt an image to 1 or 3 channels (replicate gray, luma for colour)."""
    c = img.shape[2]
    if c == channels:
        return img
    if c == 1 and channels == 3:
        return np.repeat(img, 3, axis=2)
    if c == 3 and channels == 1:
        return luma(img)[:, :, None]
    raise ShapeError(f"cannot convert {c} channels to {channels}")


def luma(img) -> np.ndarray:
    """Rec. 601 luma (0.299, 0.587, 0.114) of an ``(H, W, 3)`` image."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114
