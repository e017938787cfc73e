"""Autodiff engine, residual restorer and its training loop."""
from .checkpoint import load_checkpoint, save_checkpoint
from .engine import Tensor, backward, conv2d, l1_loss, no_grad, relu
from .model import AdamState, ModelConfig, ResNetRestorer, infer, infer_batch, parameter_count
from .optim import TrainConfig, adam_step, cosine_lr
from .train import TrainResult, train

__all__ = [
    "AdamState", "ModelConfig", "ResNetRestorer", "Tensor", "TrainConfig",
    "TrainResult", "adam_step", "backward", "conv2d", "cosine_lr", "infer",
    "infer_batch", "l1_loss", "load_checkpoint", "no_grad", "parameter_count",
    "relu", "save_checkpoint", "train",
]
