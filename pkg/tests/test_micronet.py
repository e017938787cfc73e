import math

import numpy as np
import pytest

from rainlab.datapipe import PatchPool, PatchRef, build_pool
from rainlab.errors import ConfigError, InputError, NumericError, ShapeError
from rainlab.micronet import (
    AdamState, ModelConfig, ResNetRestorer, Tensor, TrainConfig, adam_step, cosine_lr, infer,
    infer_batch, load_checkpoint, parameter_count, save_checkpoint, train,
)
from rainlab.rainsynth import resolve_range

NO_RAIN = {"quantity": [0, 0], "widths": [1], "length": [1, 1], "direction": [0, 0]}
TINY = ModelConfig(in_channels=3, features=4, blocks=1, out_channels=3)


def tiny_train_config(**kw):
    base = dict(iterations=20, batch_size=2, patch_size=32, seed=3, rain_canvas=128)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def pool32(corpus_dir):
    return build_pool(corpus_dir, 16, patch_size=32, seed=1)


# -- schedule and optimizer ------------------------------------------------------

def test_train_config_defaults():
    c = TrainConfig()
    assert (c.lr0, c.beta1, c.beta2, c.batch_size, c.patch_size, c.iterations) == (2e-4, 0.9, 0.99, 16, 128, 20000)
    with pytest.raises(ConfigError):
        TrainConfig(beta1=1.0)


def test_cosine_schedule():
    c = TrainConfig(iterations=1000)
    assert cosine_lr(0, c) == 2e-4
    assert cosine_lr(1000, c) == pytest.approx(0.0, abs=1e-20)
    assert cosine_lr(500, c) == pytest.approx(1e-4, rel=1e-12)
    lrs = [cosine_lr(t, c) for t in range(0, 1001, 50)]
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))


def _scalar(value):
    return {"w": Tensor(np.array([value], dtype=np.float64), requires_grad=True)}


def test_adam_first_step_is_signed_lr():
    c = TrainConfig(iterations=100, lr0=1e-3)
    for g in (0.37, -2.5):
        p = _scalar(1.0)
        p["w"].grad = np.array([g])
        adam_step(p, AdamState(), c, 1)
        assert p["w"].data[0] == pytest.approx(1.0 - 1e-3 * math.copysign(1, g), abs=1e-10)


def test_adam_zero_gradient():
    c = TrainConfig(iterations=10)
    p = _scalar(0.5)
    state = AdamState(m={"w": np.array([0.2])}, v={"w": np.array([0.04])})
    p["w"].grad = np.zeros(1)
    adam_step(p, state, c, 1)
    # moments decay and the update uses their bias-corrected values
    assert state.m["w"][0] == pytest.approx(0.9 * 0.2)
    assert state.v["w"][0] == pytest.approx(0.99 * 0.04)
    p2 = _scalar(0.5)
    p2["w"].grad = np.zeros(1)
    adam_step(p2, AdamState(), c, 1)
    assert p2["w"].data[0] == 0.5


def test_adam_two_steps_by_hand():
    c = TrainConfig(iterations=10, lr0=1e-2, beta1=0.9, beta2=0.99, eps=1e-8)
    p = _scalar(0.3)
    state = AdamState()
    g1, g2 = 0.8, -0.5
    p["w"].grad = np.array([g1])
    adam_step(p, state, c, 1)
    p["w"].grad = np.array([g2])
    adam_step(p, state, c, 2)
    lr1, lr2 = c.lr0, c.lr0 * 0.5 * (1 + math.cos(math.pi / 10))
    m1, v1 = 0.1 * g1, 0.01 * g1 ** 2
    w1 = 0.3 - lr1 * (m1 / (1 - 0.9)) / (math.sqrt(v1 / (1 - 0.99)) + 1e-8)
    m2, v2 = 0.9 * m1 + 0.1 * g2, 0.99 * v1 + 0.01 * g2 ** 2
    w2 = w1 - lr2 * (m2 / (1 - 0.9 ** 2)) / (math.sqrt(v2 / (1 - 0.99 ** 2)) + 1e-8)
    assert abs(p["w"].data[0] - w2) < 1e-10
    assert state.step == 2


# -- model ---------------------------------------------------------------------

def test_parameter_count_formula():
    for cfg in (TINY, ModelConfig(), ModelConfig(1, 8, 0, 1)):
        assert ResNetRestorer(cfg).num_parameters() == parameter_count(cfg)
    assert parameter_count(ModelConfig(3, 16, 3, 3)) == 3 * 16 * 9 + 16 + 3 * 2 * (16 * 16 * 9 + 16) + 16 * 3 * 9 + 3


def test_identity_at_init(rng):
    model = ResNetRestorer(ModelConfig(), seed=4)
    o = rng.random((32, 32, 3))
    assert infer(model, o).tobytes() == o.tobytes()


def test_infer_any_size_and_deterministic(rng):
    model = ResNetRestorer(TINY, seed=2)
    model.params["tail.w"].data[...] = rng.standard_normal(model.params["tail.w"].shape).astype(np.float32) * 0.1
    for size in (64, 128):
        o = rng.random((size, size, 3))
        a, b = infer(model, o), infer(model, o)
        assert a.shape == o.shape and a.tobytes() == b.tobytes()
        assert a.min() >= 0 and a.max() <= 1


def test_infer_channel_mismatch(rng):
    with pytest.raises(ShapeError):
        infer(ResNetRestorer(TINY), rng.random((16, 16, 1)))


def test_checkpoint_roundtrip(tmp_path, pool32):
    result = train(pool32, "medium", TINY, tiny_train_config(iterations=3))
    path = save_checkpoint(tmp_path / "m.npz", result.model, tiny_train_config(iterations=3), resolve_range("medium"))
    loaded, meta = load_checkpoint(path)
    assert meta["model"] == TINY.as_dict() and meta["adam_step"] == 3
    for name, p in result.model.params.items():
        assert loaded.params[name].data.tobytes() == p.data.tobytes()
        assert loaded.params[name].data.dtype == np.float32
        assert loaded.adam.m[name].tobytes() == result.model.adam.m[name].tobytes()
        assert loaded.adam.v[name].tobytes() == result.model.adam.v[name].tobytes()
    o = np.random.default_rng(0).random((2, 32, 32, 3))
    assert infer_batch(loaded, o).tobytes() == infer_batch(result.model, o).tobytes()


# -- training ------------------------------------------------------------------

def test_zero_iterations_keeps_init(pool32):
    result = train(pool32, "medium", TINY, tiny_train_config(iterations=0))
    fresh = ResNetRestorer(TINY, seed=3)
    for name, p in fresh.params.items():
        assert result.model.params[name].data.tobytes() == p.data.tobytes()
    assert result.losses == []


def test_zero_rain_is_a_fixed_point(pool32):
    one = pool32.take([0])
    result = train(one, NO_RAIN, TINY, tiny_train_config(iterations=50))
    assert result.losses == [0.0] * 50


@pytest.mark.slow
def test_single_patch_loss_decreases(pool32):
    one = pool32.take([0])
    result = train(one, "small", TINY, tiny_train_config(iterations=200, lr0=2e-3))
    first, last = np.mean(result.losses[:20]), np.mean(result.losses[-20:])
    assert last < first


def test_training_is_deterministic(pool32):
    a = train(pool32, "medium", TINY, tiny_train_config())
    b = train(pool32, "medium", TINY, tiny_train_config())
    assert a.losses == b.losses
    for name in a.model.params:
        assert a.model.params[name].data.tobytes() == b.model.params[name].data.tobytes()
    c = train(pool32, "medium", TINY, tiny_train_config(seed=4))
    assert c.losses != a.losses


def test_progress_callback(pool32):
    seen = []
    train(pool32, "small", TINY, tiny_train_config(iterations=10, log_every=5), progress=lambda i, l: seen.append(i))
    assert seen == [5, 10]


def test_nan_loss_reports_iteration():
    bad = np.full((1, 32, 32, 3), np.nan, np.float32)
    pool = PatchPool(bad, [PatchRef("x.png", 0, 0)], 0, 32)
    with np.errstate(invalid="ignore"):
        with pytest.raises(NumericError) as exc:
            train(pool, "small", TINY, tiny_train_config())
    assert exc.value.iteration == 0
    assert "iteration 0" in str(exc.value)


def test_train_input_errors(pool32):
    empty = pool32.take([])
    with pytest.raises(InputError):
        train(empty, "small", TINY, tiny_train_config())
    with pytest.raises(ShapeError):
        train(pool32, "small", TINY, tiny_train_config(patch_size=64))
