"""Parametric rain-streak layers and additive compositing.

A rain layer is rendered as a sum of anti-aliased capsules: each streak is a
line segment with a Gaussian cross-profile, ``a * exp(-d**2 / (2 sigma**2))``
with ``d`` the distance to the segment and ``sigma = width / 4``.
"""
import math
from dataclasses import dataclass, field
from typing import List, Mapping, NamedTuple, Tuple

import numpy as np

from .errors import ConfigError, ShapeError

# per-streak contributions below this are dropped so rain-free pixels stay 0
CUTOFF = 1e-4


@dataclass(frozen=True)
class RainRangeSpec:
    """Sampling ranges for one rain distribution.

    ``quantity`` and ``length`` are inclusive integer intervals, ``direction``
    is in degrees from vertical, ``intensity`` is the streak peak amplitude.
    """

    quantity: Tuple[int, int]
    widths: Tuple[int, ...]
    length: Tuple[int, int]
    direction: Tuple[float, float]
    intensity: Tuple[float, float] = (0.2, 0.8)
    name: str = "custom"

    def __post_init__(self):
        q_lo, q_hi = self.quantity
        l_lo, l_hi = self.length
        d_lo, d_hi = self.direction
        a_lo, a_hi = self.intensity
        if not (0 <= q_lo <= q_hi):
            raise ConfigError(f"bad quantity interval {self.quantity}")
        if not self.widths:
            raise ConfigError("width set is empty")
        for w in self.widths:
            if w < 1 or w % 2 == 0:
                raise ConfigError(f"streak widths must be odd and positive, got {w}")
        if not (1 <= l_lo <= l_hi):
            raise ConfigError(f"bad length interval {self.length}")
        if d_lo > d_hi:
            raise ConfigError(f"bad direction interval {self.direction}")
        if not (0 < a_lo <= a_hi <= 1):
            raise ConfigError(f"bad intensity interval {self.intensity}")

    def as_dict(self):
        return {
            "name": self.name,
            "quantity": list(self.quantity),
            "widths": list(self.widths),
            "length": list(self.length),
            "direction": list(self.direction),
            "intensity": list(self.intensity),
        }


PRESETS = {
    "small": RainRangeSpec((200, 300), (5,), (30, 31), (-5.0, 5.0), name="small"),
    "medium": RainRangeSpec((200, 300), (5, 7, 9), (20, 40), (-30.0, 30.0), name="medium"),
    "large": RainRangeSpec((200, 300), (1, 3, 5, 7, 9), (5, 60), (-70.0, 70.0), name="large"),
    # held-out test rain, outside the medium preset's support
    "unseen": RainRangeSpec((300, 500), (1, 3), (40, 80), (-10.0, 10.0), (0.4, 0.9), name="unseen"),
}


def _pair(value, key, cast):
    try:
        lo, hi = value
        return cast(lo), cast(hi)
    except (TypeError, ValueError):
        raise ConfigError(f"rain spec field {key!r} must be a [lo, hi] pair, got {value!r}")


def resolve_range(spec) -> RainRangeSpec:
    """Return a preset by name, or validate an explicit mapping / spec."""
    if isinstance(spec, RainRangeSpec):
        return spec
    if isinstance(spec, str):
        try:
            return PRESETS[spec]
        except KeyError:
            raise ConfigError(
                f"unknown rain preset {spec!r}; expected one of {sorted(PRESETS)}")
    if isinstance(spec, Mapping):
        allowed = {"name", "quantity", "widths", "length", "direction", "intensity"}
        unknown = set(spec) - allowed
        if unknown:
            raise ConfigError(f"unknown rain spec key(s): {sorted(unknown)}")
        missing = {"quantity", "widths", "length", "direction"} - set(spec)
        if missing:
            raise ConfigError(f"rain spec missing key(s): {sorted(missing)}")
        widths = spec["widths"]
        if isinstance(widths, (int, float)):
            widths = [widths]
        if any(isinstance(w, float) and not float(w).is_integer() for w in widths):
            raise ConfigError(f"streak widths must be integers, got {widths!r}")
        return RainRangeSpec(
            quantity=_pair(spec["quantity"], "quantity", int),
            widths=tuple(sorted(int(w) for w in widths)),
            length=_pair(spec["length"], "length", int),
            direction=_pair(spec["direction"], "direction", float),
            intensity=_pair(spec.get("intensity", (0.2, 0.8)), "intensity", float),
            name=str(spec.get("name", "custom")),
        )
    raise ConfigError(f"cannot interpret rain spec {spec!r}")


class Streak(NamedTuple):
    cx: float
    cy: float
    length: float
    width: int
    angle: float  # degrees from vertical
    amplitude: float


@dataclass
class RainField:
    """Single-channel additive rain layer plus the streaks that produced it."""

    layer: np.ndarray
    streak_log: List[Streak] = field(default_factory=list)


def streak_contribution(streak: Streak, xs, ys) -> np.ndarray:
    """Capsule profile of one streak at pixel-centre coordinates ``xs, ys``."""
    theta = math.radians(streak.angle)
    dx, dy = math.sin(theta), math.cos(theta)
    half = streak.length / 2.0
    px = xs - streak.cx
    py = ys - streak.cy
    s = np.clip(px * dx + py * dy, -half, half)
    d2 = (px - s * dx) ** 2 + (py - s * dy) ** 2
    sigma = streak.width / 4.0
    val = streak.amplitude * np.exp(-d2 / (2.0 * sigma * sigma))
    val[val < CUTOFF] = 0.0
    return val


def render_streaks(h, w, streaks) -> np.ndarray:
    """Accumulate the given streaks into an ``(h, w)`` layer clamped to [0, 1].

    Pixel ``(i, j)`` has its centre at ``x = j + 0.5``, ``y = i + 0.5``.
    Each streak is evaluated only inside the box where it can exceed the cutoff.
    """
    layer = np.zeros((h, w), dtype=np.float64)
    for st in streaks:
        sigma = st.width / 4.0
        reach = sigma * math.sqrt(2.0 * math.log(st.amplitude / CUTOFF)) if st.amplitude > CUTOFF else 0.0
        theta = math.radians(st.angle)
        ex = abs(math.sin(theta)) * st.length / 2.0 + reach
        ey = abs(math.cos(theta)) * st.length / 2.0 + reach
        j0 = max(0, int(math.floor(st.cx - ex - 0.5)))
        j1 = min(w, int(math.ceil(st.cx + ex + 0.5)) + 1)
        i0 = max(0, int(math.floor(st.cy - ey - 0.5)))
        i1 = min(h, int(math.ceil(st.cy + ey + 0.5)) + 1)
        if j0 >= j1 or i0 >= i1:
            continue
        ys = np.arange(i0, i1, dtype=np.float64)[:, None] + 0.5
        xs = np.arange(j0, j1, dtype=np.float64)[None, :] + 0.5
        layer[i0:i1, j0:j1] += streak_contribution(st, xs, ys)
    np.clip(layer, 0.0, 1.0, out=layer)
    return layer


def sample_streaks(h, w, spec: RainRangeSpec, rng) -> List[Streak]:
    q = int(rng.integers(spec.quantity[0], spec.quantity[1] + 1))
    cx = rng.uniform(0.0, w, q)
    cy = rng.uniform(0.0, h, q)
    lengths = rng.integers(spec.length[0], spec.length[1] + 1, q)
    widths = np.asarray(spec.widths)[rng.integers(0, len(spec.widths), q)]
    angles = rng.uniform(spec.direction[0], spec.direction[1], q)
    amps = rng.uniform(spec.intensity[0], spec.intensity[1], q)
    return [
        Streak(float(cx[k]), float(cy[k]), float(lengths[k]), int(widths[k]),
               float(angles[k]), float(amps[k]))
        for k in range(q)
    ]


def render_rain(h, w, spec, seed, canvas=None) -> RainField:
    """Sample and render a rain layer; deterministic in ``(spec, seed, h, w, canvas)``.

    With ``canvas`` (an int or ``(H, W)`` at least ``(h, w)``) the streaks are
    sampled over the larger canvas and the returned layer is a crop of it at
    a random offset; ``streak_log`` then holds canvas coordinates.
    """
    if h < 8 or w < 8:
        raise ShapeError(f"rain layers need h, w >= 8, got {h}x{w}")
    spec = resolve_range(spec)
    rng = np.random.default_rng(seed)
    if canvas is None:
        ch, cw = h, w
    else:
        ch, cw = (canvas, canvas) if np.isscalar(canvas) else canvas
        ch, cw = max(int(ch), h), max(int(cw), w)
    streaks = sample_streaks(ch, cw, spec, rng)
    if (ch, cw) == (h, w):
        return RainField(render_streaks(h, w, streaks), streaks)
    oy = int(rng.integers(0, ch - h + 1))
    ox = int(rng.integers(0, cw - w + 1))
    local = [s._replace(cx=s.cx - ox, cy=s.cy - oy) for s in streaks]
    return RainField(render_streaks(h, w, local), streaks)


def composite(b, r) -> np.ndarray:
    """Rainy image ``clamp(B + R, 0, 1)``; the layer is added to every channel."""
    layer = np.asarray(getattr(r, "layer", r), dtype=np.float64)
    b = np.asarray(b)
    if layer.ndim == 3 and layer.shape[2] == 1:
        layer = layer[:, :, 0]
    if b.ndim != 3 or layer.shape != b.shape[:2]:
        raise ShapeError(f"rain layer {layer.shape} does not match background {b.shape}")
    return np.clip(b.astype(np.float64) + layer[:, :, None], 0.0, 1.0)
