"""Experiment configuration: flat TOML (or JSON echo) sections with defaults.

Sections are ``[data]``, ``[sweep]``, ``[model]``, ``[train]`` and ``[eval]``.
Only ``data.background_dir`` is required.
"""
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, List, Optional, Tuple

from ..errors import ConfigError
from ..metrics import DEFAULT_THRESHOLD, MODES
from ..micronet.model import ModelConfig
from ..micronet.optim import TrainConfig
from ..rainsynth import RainRangeSpec, resolve_range

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_COUNTS = [8, 16, 32, 64, 128, 256, 512, 1024]

# named sweeps: explicit (n_backgrounds, rain range) cells balancing data size against rain range
SWEEP_PRESETS = {
    "balance": [(30000, "medium"), (64, "medium"), (512, "large"), (256, "large"), (128, "large")],
}


@dataclass(frozen=True)
class DataSection:
    background_dir: str
    patch_size: int = 128
    seed: int = 0
    test_n: int = 32
    channels: int = 3
    rain_canvas: int = 512


@dataclass(frozen=True)
class SweepSection:
    n_backgrounds: List[int] = field(default_factory=lambda: list(DEFAULT_COUNTS))
    rain_ranges: List[Any] = field(default_factory=lambda: ["medium"])
    preset: Optional[str] = None


@dataclass(frozen=True)
class ModelSection:
    features: int = 16
    blocks: int = 3


@dataclass(frozen=True)
class TrainSection:
    iterations: int = 20000
    batch_size: int = 16
    lr0: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    lr_min: float = 0.0
    seed: int = 0
    log_every: int = 100


@dataclass(frozen=True)
class EvalSection:
    threshold: float = DEFAULT_THRESHOLD
    unseen_rain: Any = "unseen"
    repeats: int = 3
    rain_seed: int = 2024
    mode: str = "masked"


SECTIONS = {
    "data": DataSection,
    "sweep": SweepSection,
    "model": ModelSection,
    "train": TrainSection,
    "eval": EvalSection,
}

_FIELD_TYPES = {
    int: (int,),
    float: (int, float),
    str: (str,),
    Optional[str]: (str, type(None)),
    List[int]: (list,),
    List[Any]: (list,),
    Any: (str, dict),
}


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSection
    sweep: SweepSection = SweepSection()
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()
    eval: EvalSection = EvalSection()
    source: Optional[str] = None

    # -- derived views --------------------------------------------------------
    def model_config(self) -> ModelConfig:
        c = self.data.channels
        return ModelConfig(in_channels=c, features=self.model.features,
                           blocks=self.model.blocks, out_channels=c)

    def train_config(self, seed=None) -> TrainConfig:
        t = self.train
        return TrainConfig(
            iterations=t.iterations, batch_size=t.batch_size, lr0=float(t.lr0),
            beta1=float(t.beta1), beta2=float(t.beta2), eps=float(t.eps),
            lr_min=float(t.lr_min), seed=t.seed if seed is None else seed,
            patch_size=self.data.patch_size, log_every=t.log_every,
            rain_canvas=self.data.rain_canvas,
        )

    def rain_ranges(self) -> List[RainRangeSpec]:
        return [resolve_range(r) for r in self.sweep.rain_ranges]

    def unseen_rain(self) -> RainRangeSpec:
        return resolve_range(self.eval.unseen_rain)

    def seeds(self) -> List[int]:
        return [self.train.seed + r for r in range(self.eval.repeats)]

    def cells(self) -> List[Tuple[int, RainRangeSpec]]:
        """(n_backgrounds, rain spec) pairs in sweep order."""
        if self.sweep.preset is not None:
            return [(n, resolve_range(r)) for n, r in SWEEP_PRESETS[self.sweep.preset]]
        return [(n, spec) for spec in self.rain_ranges() for n in self.sweep.n_backgrounds]

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def write_echo(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def _check_type(section, name, ftype, value):
    allowed = _FIELD_TYPES.get(ftype, (object,))
    if isinstance(value, bool) or not isinstance(value, allowed):
        raise ConfigError(
            f"[{section}] {name}: expected {getattr(ftype, '__name__', ftype)}, "
            f"got {type(value).__name__} ({value!r})")


def _build_section(name, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    for key, value in raw.items():
        _check_type(name, key, known[key].type, value)
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"[{name}]: {exc}")


def validate(cfg: ExperimentConfig, check_paths=True) -> ExperimentConfig:
    d, s, e, t = cfg.data, cfg.sweep, cfg.eval, cfg.train
    if check_paths and not Path(d.background_dir).is_dir():
        raise ConfigError(f"[data] background_dir does not exist: {d.background_dir}")
    if d.patch_size < 8:
        raise ConfigError("[data] patch_size must be >= 8")
    if d.test_n < 1:
        raise ConfigError("[data] test_n must be >= 1")
    if d.rain_canvas and d.rain_canvas < d.patch_size:
        raise ConfigError("[data] rain_canvas must be 0 or >= patch_size")
    if d.channels not in (1, 3):
        raise ConfigError("[data] channels must be 1 or 3")
    if s.preset is not None and s.preset not in SWEEP_PRESETS:
        raise ConfigError(f"[sweep] unknown preset {s.preset!r}; expected one of {sorted(SWEEP_PRESETS)}")
    if not s.n_backgrounds or not s.rain_ranges:
        raise ConfigError("[sweep] n_backgrounds and rain_ranges must be nonempty")
    for n in s.n_backgrounds:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError(f"[sweep] n_backgrounds entries must be positive integers, got {n!r}")
    for r in s.rain_ranges:
        resolve_range(r)
    resolve_range(e.unseen_rain)
    if e.repeats < 1:
        raise ConfigError("[eval] repeats must be >= 1")
    if e.threshold < 0:
        raise ConfigError("[eval] threshold must be >= 0")
    if e.mode not in MODES:
        raise ConfigError(f"[eval] mode must be one of {MODES}")
    if t.log_every < 1:
        raise ConfigError("[train] log_every must be >= 1")
    cfg.train_config()
    cfg.model_config()
    return cfg


def config_from_dict(raw: dict, source=None, check_paths=True) -> ExperimentConfig:
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if "data" not in raw or "background_dir" not in raw.get("data", {}):
        raise ConfigError("[data] background_dir is required")
    sections = {name: _build_section(name, cls, raw[name])
                for name, cls in SECTIONS.items() if name in raw}
    return validate(ExperimentConfig(source=source, **sections), check_paths)


def parse_config(path, check_paths=True) -> ExperimentConfig:
    """Load and validate a ``.toml`` (or ``.json``) experiment config."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text()
    try:
        raw = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    data = raw.get("data")
    if isinstance(data, dict) and isinstance(data.get("background_dir"), str):
        bg = Path(data["background_dir"]).expanduser()
        if not bg.is_absolute():
            data["background_dir"] = str((path.parent / bg).resolve())
    return config_from_dict(raw, source=str(path), check_paths=check_paths)
