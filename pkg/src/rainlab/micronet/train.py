"""Training loop: online rain synthesis, l1 loss, Adam, cosine schedule."""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import InputError, NumericError, ShapeError
from ..rainsynth import render_rain, resolve_range
from ..seeding import STREAM_BATCH, STREAM_RAIN, derive_seed
from .engine import Tensor, backward, l1_loss
from .model import ModelConfig, ResNetRestorer
from .optim import TrainConfig, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: ResNetRestorer
    losses: List[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        """Mean loss over the last logging window (nan if nothing ran)."""
        if not self.losses:
            return float("nan")
        return float(np.mean(self.losses[-100:]))


def make_batch(pool, spec, config: TrainConfig, iteration):
    """Draw a batch of clean patches and their freshly rained copies."""
    rng = np.random.default_rng(derive_seed(config.seed, STREAM_BATCH, iteration))
    idx = rng.integers(0, len(pool), config.batch_size)
    clean = pool.patches[idx]
    _, h, w, _ = clean.shape
    canvas = config.rain_canvas or None
    layers = np.stack([
        render_rain(h, w, spec, derive_seed(config.seed, STREAM_RAIN, iteration, k), canvas).layer
        for k in range(config.batch_size)
    ])
    rainy = np.clip(clean + layers[..., None].astype(clean.dtype), 0.0, 1.0)
    return rainy, clean


def train(train_pool, spec, model_cfg: ModelConfig = ModelConfig(),
          config: TrainConfig = TrainConfig(), model=None, progress=None) -> TrainResult:
    """Train a restorer on ``train_pool`` with rain drawn from ``spec``.

    Deterministic for fixed seeds. ``progress(iteration, loss)`` is called
    every ``config.log_every`` iterations if given.
    """
    if len(train_pool) == 0:
        raise InputError("training pool is empty")
    spec = resolve_range(spec)
    if train_pool.patch_size != config.patch_size:
        raise ShapeError(
            f"pool patch size {train_pool.patch_size} != configured {config.patch_size}")
    if model is None:
        model = ResNetRestorer(model_cfg, seed=config.seed)
    if train_pool.channels != model.config.in_channels:
        raise ShapeError(
            f"pool has {train_pool.channels} channels, model expects {model.config.in_channels}")
    result = TrainResult(model)
    for it in range(config.iterations):
        rainy, clean = make_batch(train_pool, spec, config, it)
        model.zero_grad()
        try:
            loss = l1_loss(model(Tensor(rainy.astype(model.dtype))), Tensor(clean.astype(model.dtype)))
            backward(loss)
        except NumericError as exc:
            raise NumericError(f"iteration {it}: {exc}", iteration=it) from exc
        value = loss.item()
        result.losses.append(value)
        adam_step(model.params, model.adam, config, it + 1)
        if (it + 1) % config.log_every == 0:
            log.info("iter %d loss %.6f", it + 1, value)
            if progress is not None:
                progress(it + 1, value)
    return result
