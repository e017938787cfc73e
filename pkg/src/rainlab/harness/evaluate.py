"""Shared held-out test fixture and model evaluation on unseen rain."""
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datapipe.pool import PatchPool, grid_refs, plan_pool, pool_from_refs
from ..errors import ShapeError
from ..metrics import EvalTriple, background_error, make_mask, psnr, rain_removal_score
from ..micronet.checkpoint import load_checkpoint
from ..micronet.model import infer_batch
from ..rainsynth import composite, render_rain
from ..seeding import STREAM_EVAL_RAIN, STREAM_POOL, derive_seed


@dataclass
class HeldOutSet:
    """Test patches with their unseen-rain layers, identical for every sweep cell."""

    clean: PatchPool
    layers: np.ndarray  # (n, H, W)
    rainy: np.ndarray   # (n, H, W, C) float64

    def __len__(self):
        return len(self.clean)


@dataclass
class DataPlan:
    """Test fixture plus the manifest of patches available for training."""

    cfg: object
    test: HeldOutSet
    remainder: list

    def train_pool(self, n, seed) -> PatchPool:
        """``n`` training patches for a row seed; nested in ``n`` for a fixed seed."""
        d = self.cfg.data
        order = np.random.default_rng(derive_seed(seed, STREAM_POOL)).permutation(len(self.remainder))
        refs = [self.remainder[i] for i in order[:n]]
        return pool_from_refs(d.background_dir, refs, d.patch_size, seed, d.channels)


def make_fixture(test_pool: PatchPool, spec, rain_seed, canvas=None) -> HeldOutSet:
    _, h, w, _ = test_pool.patches.shape
    layers = np.stack([
        render_rain(h, w, spec, derive_seed(rain_seed, STREAM_EVAL_RAIN, i), canvas).layer
        for i in range(len(test_pool))
    ])
    rainy = np.stack([composite(b, r) for b, r in zip(test_pool.patches, layers)])
    return HeldOutSet(test_pool, layers, rainy)


def plan_data(cfg, max_n=None) -> DataPlan:
    """Split the test patches off first so every run shares them."""
    d = cfg.data
    if max_n is None:
        max_n = max(n for n, _ in cfg.cells())
    plan_pool(d.background_dir, max_n + d.test_n, d.patch_size, d.seed)  # capacity check
    # the remainder spans every patch so a (n, seed) pool does not depend on max_n
    total = len(grid_refs(d.background_dir, d.patch_size))
    refs = plan_pool(d.background_dir, total, d.patch_size, d.seed)
    test_pool = pool_from_refs(d.background_dir, refs[:d.test_n], d.patch_size, d.seed, d.channels)
    fixture = make_fixture(test_pool, cfg.unseen_rain(), cfg.eval.rain_seed, d.rain_canvas or None)
    return DataPlan(cfg, fixture, refs[d.test_n:])


def score_outputs(outputs, fixture: HeldOutSet, threshold, mode="masked"):
    """Mean EvalTriple over the fixture and the per-image breakdown."""
    rows = []
    for i in range(len(fixture)):
        mask = make_mask(fixture.layers[i], threshold)
        clean = fixture.clean[i].astype(np.float64)
        ref = fixture.clean.manifest[i]
        rows.append({
            "index": i, "file": ref.file, "x": ref.x, "y": ref.y,
            "E_R": rain_removal_score(outputs[i], fixture.rainy[i], mask, mode),
            "E_B": background_error(outputs[i], clean, mask, mode),
            "PSNR": psnr(outputs[i], clean),
            "PSNR_input": psnr(fixture.rainy[i], clean),
        })
    triple = EvalTriple(
        e_r=float(np.mean([r["E_R"] for r in rows])),
        e_b=float(np.mean([r["E_B"] for r in rows])),
        psnr=_mean_psnr([r["PSNR"] for r in rows]),
    )
    return triple, rows


def _mean_psnr(values):
    if any(math.isinf(v) for v in values):
        return math.inf
    return float(np.mean(values))


def model_outputs(model, rainy, chunk=8) -> np.ndarray:
    return np.concatenate([infer_batch(model, rainy[i:i + chunk])
                           for i in range(0, len(rainy), chunk)])


def oracle_outputs(kind, fixture: HeldOutSet) -> np.ndarray:
    """Synthetic predictions for checking the evaluation path itself."""
    if kind == "clean":
        return np.clip(fixture.clean.patches.astype(np.float64), 0.0, 1.0)
    if kind == "identity":
        return fixture.rainy.copy()
    raise ValueError(f"unknown oracle {kind!r}")


def check_compatible(meta, cfg):
    expected = cfg.model_config().as_dict()
    got = meta["model"]
    diffs = {k: (got.get(k), v) for k, v in expected.items() if got.get(k) != v}
    if diffs:
        detail = ", ".join(f"{k}: checkpoint {a} vs config {b}" for k, (a, b) in sorted(diffs.items()))
        raise ShapeError(f"checkpoint does not match model config ({detail})")


def eval_model(checkpoint, cfg, json_path=None, oracle=None, plan=None):
    """Average E_R, E_B, PSNR of a checkpoint over the shared test fixture."""
    plan = plan or plan_data(cfg)
    if oracle is not None:
        outputs = oracle_outputs(oracle, plan.test)
    else:
        model, meta = load_checkpoint(checkpoint)
        check_compatible(meta, cfg)
        outputs = model_outputs(model, plan.test.rainy)
    triple, rows = score_outputs(outputs, plan.test, cfg.eval.threshold, cfg.eval.mode)
    if json_path is not None:
        payload = {"checkpoint": None if checkpoint is None else str(checkpoint),
                   "oracle": oracle, "mean": triple.as_dict(), "images": rows}
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        Path(json_path).write_text(json.dumps(payload, indent=2) + "\n")
    return triple, rows
