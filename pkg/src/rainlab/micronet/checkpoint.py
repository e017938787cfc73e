"""Checkpoint container: an ``.npz`` archive with a JSON metadata member.

Arrays are stored little-endian at the model's precision (float32 for
trained models); loading reproduces parameters and Adam state bit-exactly.
"""
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import ModelConfig, ResNetRestorer

FORMAT = "rainlab-checkpoint"
VERSION = 1


def save_checkpoint(path, model: ResNetRestorer, train_config=None, rain_spec=None, extra=None):
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "dtype": model.dtype.newbyteorder("<").str,
        "model": model.config.as_dict(),
        "adam_step": model.adam.step,
        "train": None if train_config is None else train_config.as_dict(),
        "rain": None if rain_spec is None else rain_spec.as_dict(),
        "seeds": {"train": None if train_config is None else train_config.seed},
        "shapes": {n: list(p.data.shape) for n, p in model.params.items()},
    }
    if extra:
        meta.update(extra)
    le = model.dtype.newbyteorder("<")
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for name, p in model.params.items():
        arrays[f"param/{name}"] = p.data.astype(le)
        arrays[f"adam_m/{name}"] = model.adam.m[name].astype(le)
        arrays[f"adam_v/{name}"] = model.adam.v[name].astype(le)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_meta(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        if "meta" not in z.files:
            raise FormatError(f"{path} is not a rainlab checkpoint")
        meta = json.loads(z["meta"].tobytes().decode())
    if meta.get("format") != FORMAT:
        raise FormatError(f"{path} is not a rainlab checkpoint")
    if meta.get("version") != VERSION:
        raise FormatError(f"unsupported checkpoint version {meta.get('version')}")
    return meta


def load_checkpoint(path):
    """Return ``(model, meta)`` rebuilt from a checkpoint file."""
    meta = read_meta(path)
    dtype = np.dtype(meta["dtype"])
    model = ResNetRestorer(ModelConfig(**meta["model"]), dtype=dtype.newbyteorder("="))
    with np.load(path, allow_pickle=False) as z:
        for name, p in model.params.items():
            arr = z[f"param/{name}"]
            if arr.shape != p.data.shape:
                raise FormatError(f"parameter {name} has shape {arr.shape}, expected {p.data.shape}")
            p.data = arr.astype(model.dtype)
            model.adam.m[name] = z[f"adam_m/{name}"].astype(model.dtype)
            model.adam.v[name] = z[f"adam_v/{name}"].astype(model.dtype)
    model.adam.step = meta["adam_step"]
    return model, meta
