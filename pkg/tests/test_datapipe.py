import json

import cv2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rainlab.datapipe import PatchPool, PatchRef, build_pool, load_image, read_manifest, save_png, split_pool
from rainlab.errors import CapacityError, FormatError, InputError


def test_load_peak_and_zero(tmp_path):
    cv2.imwrite(str(tmp_path / "one.png"), np.array([[255]], np.uint8))
    cv2.imwrite(str(tmp_path / "zero.png"), np.array([[0]], np.uint8))
    assert load_image(tmp_path / "one.png").tolist() == [[[1.0]]]
    assert load_image(tmp_path / "zero.png").tolist() == [[[0.0]]]


def test_load_gray_codes(tmp_path):
    cv2.imwrite(str(tmp_path / "g.png"), np.array([[0, 51], [102, 255]], np.uint8))
    img = load_image(tmp_path / "g.png")
    assert img.shape == (2, 2, 1)
    np.testing.assert_allclose(img[:, :, 0], [[0.0, 0.2], [0.4, 1.0]], atol=1e-15)


def test_load_16bit_and_rgb_order(tmp_path):
    codes = np.array([[0, 65535], [32768, 13107]], np.uint16)
    cv2.imwrite(str(tmp_path / "g16.png"), codes)
    np.testing.assert_allclose(load_image(tmp_path / "g16.png")[:, :, 0], codes / 65535.0)
    bgr = np.zeros((1, 1, 3), np.uint8)
    bgr[0, 0] = (10, 20, 30)  # OpenCV stores BGR
    cv2.imwrite(str(tmp_path / "c.png"), bgr)
    np.testing.assert_allclose(load_image(tmp_path / "c.png")[0, 0], np.array([30, 20, 10]) / 255.0)


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "missing.png")
    (tmp_path / "junk.png").write_bytes(b"not a png")
    with pytest.raises(OSError):
        load_image(tmp_path / "junk.png")
    cv2.imwrite(str(tmp_path / "f.tiff"), np.zeros((2, 2), np.float32))
    with pytest.raises(FormatError):
        load_image(tmp_path / "f.tiff")


def test_save_load_roundtrip_16bit(tmp_path, rng):
    img = rng.random((5, 7, 3))
    save_png(tmp_path / "x.png", img, bit_depth=16)
    np.testing.assert_allclose(load_image(tmp_path / "x.png"), img, atol=0.5 / 65535 + 1e-12)


def _one_image(tmp_path, size, name="a.png"):
    img = np.random.default_rng(0).random((size, size, 3))
    save_png(tmp_path / name, img)
    return tmp_path


def test_pool_four_grid_patches(tmp_path):
    folder = _one_image(tmp_path, 256)
    pool = build_pool(folder, 4, patch_size=128, seed=5)
    assert pool.patches.shape == (4, 128, 128, 3)
    assert sorted((r.x, r.y) for r in pool.manifest) == [(0, 0), (0, 128), (128, 0), (128, 128)]
    img = load_image(folder / "a.png").astype(np.float32)
    for patch, ref in zip(pool.patches, pool.manifest):
        np.testing.assert_array_equal(patch, img[ref.y:ref.y + 128, ref.x:ref.x + 128])


def test_pool_deterministic(corpus_dir):
    a = build_pool(corpus_dir, 20, 128, seed=9)
    b = build_pool(corpus_dir, 20, 128, seed=9)
    assert a.manifest == b.manifest
    assert a.patches.tobytes() == b.patches.tobytes()
    c = build_pool(corpus_dir, 20, 128, seed=10)
    assert c.manifest != a.manifest


def test_pool_capacity(tmp_path):
    folder = _one_image(tmp_path, 300)
    assert len(build_pool(folder, 4, 128)) == 4
    with pytest.raises(CapacityError) as exc:
        build_pool(folder, 5, 128)
    assert exc.value.available == 4
    assert "4" in str(exc.value)


def test_pool_empty_folder(tmp_path):
    with pytest.raises(InputError):
        build_pool(tmp_path, 1, 128)


def test_pool_skips_small_images_and_promotes_gray(tmp_path):
    save_png(tmp_path / "big.png", np.full((128, 128), 0.5))
    save_png(tmp_path / "small.png", np.zeros((64, 64, 3)))
    pool = build_pool(tmp_path, 1, 128)
    assert pool.channels == 3
    assert pool.manifest == [PatchRef("big.png", 0, 0)]
    np.testing.assert_array_equal(pool.patches[0, :, :, 0], pool.patches[0, :, :, 2])


def test_pool_range_and_immutability(corpus_dir):
    pool = build_pool(corpus_dir, 16, 128)
    assert pool.patches.min() >= 0.0 and pool.patches.max() <= 1.0
    with pytest.raises(ValueError):
        pool.patches[0, 0, 0, 0] = 0.1


def test_manifest_jsonl_roundtrip(corpus_dir, tmp_path):
    pool = build_pool(corpus_dir, 6, 128)
    path = pool.write_manifest(tmp_path / "m.jsonl")
    lines = path.read_text().splitlines()
    assert set(json.loads(lines[0])) == {"file", "x", "y"}
    assert read_manifest(path) == pool.manifest


def test_split_basic(corpus_dir):
    pool = build_pool(corpus_dir, 12, 128)
    train, test = split_pool(pool, 8, 4)
    assert len(train) == 8 and len(test) == 4
    assert train.manifest == pool.manifest[:8] and test.manifest == pool.manifest[8:]
    assert not set(train.manifest) & set(test.manifest)


def test_split_degenerate_and_overflow(corpus_dir):
    pool = build_pool(corpus_dir, 12, 128)
    train, test = split_pool(pool, 0, 4)
    assert len(train) == 0 and len(test) == 4
    with pytest.raises(CapacityError):
        split_pool(pool, 10, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 96), st.data())
def test_split_disjoint_property(size, data):
    train_n = data.draw(st.integers(0, size))
    test_n = data.draw(st.integers(0, size - train_n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    refs = [PatchRef(f"f{i}.png", 0, 0) for i in range(size)]
    order = np.random.default_rng(seed).permutation(size)
    pool = PatchPool(np.zeros((size, 8, 8, 3), np.float32), [refs[i] for i in order], seed, 8)
    train, test = split_pool(pool, train_n, test_n)
    assert not set(train.manifest) & set(test.manifest)
    assert len(train) == train_n and len(test) == test_n
