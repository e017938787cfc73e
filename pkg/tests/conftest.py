import numpy as np
import pytest

from rainlab.datapipe import make_texture_corpus, save_png


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """24 procedural 256x256 textures -> 96 grid patches at size 128, 384 at 64."""
    d = tmp_path_factory.mktemp("corpus")
    make_texture_corpus(d, n_images=24, size=256, seed=3)
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="c.toml"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return _write


def gray_png(path, codes, bit_depth=8):
    arr = np.asarray(codes, dtype=np.float64) / (255.0 if bit_depth == 8 else 65535.0)
    return save_png(path, arr, bit_depth=bit_depth)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def record():
    """Log one acceptance line; printed together in the terminal summary."""
    def _record(name, status, detail):
        line = f"{status:<4} {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
