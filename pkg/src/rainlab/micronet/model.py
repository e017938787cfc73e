"""Small residual convolutional restorer with a global input-to-output skip."""
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, ShapeError
from ..seeding import STREAM_INIT, derive_seed
from .engine import Tensor, add, conv2d, no_grad, relu


@dataclass(frozen=True)
class ModelConfig:
    in_channels: int = 3
    features: int = 16
    blocks: int = 3
    out_channels: int = 3
    kernel: int = 3

    def __post_init__(self):
        if self.in_channels != self.out_channels:
            raise ConfigError("global residual needs in_channels == out_channels")
        if min(self.in_channels, self.features) < 1 or self.blocks < 0:
            raise ConfigError(f"invalid model config {self}")

    def as_dict(self):
        return asdict(self)


def parameter_count(cfg: ModelConfig) -> int:
    k2 = cfg.kernel * cfg.kernel
    head = cfg.in_channels * cfg.features * k2 + cfg.features
    block = 2 * (cfg.features * cfg.features * k2 + cfg.features)
    tail = cfg.features * cfg.out_channels * k2 + cfg.out_channels
    return head + cfg.blocks * block + tail


@dataclass
class AdamState:
    """Per-parameter first/second moments and the number of steps taken."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


class ResNetRestorer:
    """head conv -> K pre-activation residual blocks -> tail conv, plus input skip.

    Each block computes ``x + conv2(relu(conv1(relu(x))))``. The tail conv
    starts at zero, so a freshly initialized network is the identity map.
    """

    def __init__(self, config: ModelConfig = ModelConfig(), seed=0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params = OrderedDict()
        rng = np.random.default_rng(derive_seed(seed, STREAM_INIT))
        self._conv("head", config.in_channels, config.features, rng)
        for i in range(config.blocks):
            self._conv(f"block{i}.conv1", config.features, config.features, rng)
            self._conv(f"block{i}.conv2", config.features, config.features, rng)
        self._conv("tail", config.features, config.out_channels, None)
        self.adam = AdamState(
            m={n: np.zeros_like(p.data) for n, p in self.params.items()},
            v={n: np.zeros_like(p.data) for n, p in self.params.items()},
        )

    def _conv(self, name, cin, cout, rng):
        k = self.config.kernel
        if rng is None:
            w = np.zeros((k, k, cin, cout), dtype=self.dtype)
        else:
            std = np.sqrt(2.0 / (cin * k * k))
            w = (rng.standard_normal((k, k, cin, cout)) * std).astype(self.dtype)
        self.params[f"{name}.w"] = Tensor(w, requires_grad=True, name=f"{name}.w")
        self.params[f"{name}.b"] = Tensor(
            np.zeros(cout, dtype=self.dtype), requires_grad=True, name=f"{name}.b")

    def _layer(self, name, x):
        return conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"])

    def residual(self, x: Tensor) -> Tensor:
        """Network correction added to the input by the global skip."""
        if x.shape[-1] != self.config.in_channels:
            raise ShapeError(
                f"model expects {self.config.in_channels} channels, got {x.shape[-1]}")
        h = self._layer("head", x)
        for i in range(self.config.blocks):
            r = self._layer(f"block{i}.conv1", relu(h))
            r = self._layer(f"block{i}.conv2", relu(r))
            h = add(h, r)
        return self._layer("tail", h)

    def forward(self, x: Tensor) -> Tensor:
        return add(x, self.residual(x))

    __call__ = forward

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def state_arrays(self):
        return OrderedDict((n, p.data) for n, p in self.params.items())


def infer_batch(model: ResNetRestorer, batch) -> np.ndarray:
    """Restore a stack of ``(N, H, W, C)`` images; returns float64 in [0, 1]."""
    batch = np.asarray(batch)
    if batch.ndim != 4 or batch.shape[-1] != model.config.in_channels:
        raise ShapeError(
            f"expected (N, H, W, {model.config.in_channels}) input, got {batch.shape}")
    with no_grad():
        delta = model.residual(Tensor(batch.astype(model.dtype))).data
    # skip connection applied at input precision so a zero correction is exact
    return np.clip(batch.astype(np.float64) + delta.astype(np.float64), 0.0, 1.0)


def infer(model: ResNetRestorer, o) -> np.ndarray:
    """Restore one ``(H, W, C)`` image: ``clamp(net(O), 0, 1)``."""
    o = np.asarray(o)
    if o.ndim != 3:
        raise ShapeError(f"expected an (H, W, C) image, got shape {o.shape}")
    return infer_batch(model, o[None])[0]
