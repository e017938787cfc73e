"""Adam with bias correction and a cosine-annealed learning rate."""
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    batch_size: int = 16
    lr0: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    lr_min: float = 0.0
    seed: int = 0
    patch_size: int = 128
    log_every: int = 100
    rain_canvas: int = 0  # 0 renders rain at patch resolution

    def __post_init__(self):
        if self.iterations < 0 or self.batch_size < 1:
            raise ConfigError(f"invalid iteration/batch settings in {self}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.lr0 < 0 or self.eps <= 0:
            raise ConfigError("lr0 must be >= 0 and eps > 0")

    def as_dict(self):
        return asdict(self)


def cosine_lr(t, config: TrainConfig) -> float:
    """``lr_min + (lr0 - lr_min) * (1 + cos(pi * t / T)) / 2`` with period T = iterations."""
    T = config.iterations
    if T == 0:
        return config.lr0
    if not 0 <= t <= T:
        raise ValueError(f"step {t} outside [0, {T}]")
    return config.lr_min + 0.5 * (config.lr0 - config.lr_min) * (1.0 + math.cos(math.pi * t / T))


def adam_step(params, state, config: TrainConfig, t, lr=None):
    """Apply Adam update number ``t`` (1-based) in place.

    ``params`` maps names to tensors carrying ``.grad``; a missing gradient
    counts as zero. The learning rate defaults to ``cosine_lr(t - 1)`` so the
    first update uses ``lr0``.
    """
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    if lr is None:
        lr = cosine_lr(t - 1, config)
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + config.eps)).astype(p.data.dtype)
    state.step = t
    return params
