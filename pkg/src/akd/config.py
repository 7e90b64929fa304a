"""Flat ``key = value`` experiment configuration with strict validation.

Unknown keys, duplicate keys, bad types and out-of-range values are all
rejected before anything runs, so a typo in ``k`` or ``temperature`` cannot
silently change an experiment.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .errors import ConfigError

METHODS = ("fixed", "learnable", "dynamic", "dynamic+cam")
ALPHA_POLICIES = ("fixed", "learnable", "dynamic")
DATASETS = ("blobs", "rings", "delimited")
OPTIMIZERS = ("adam", "sgd")


def _parse_bool(raw: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ValueError(f"expected true or false, got {raw!r}")


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v.strip(), 10) for v in raw.split(","))


def _parse_str_list(raw: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in raw.split(","))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str | None = None
    dataset_n: int = 1000
    dataset_classes: int = 4
    dataset_features: int = 2
    dataset_spread: float = 0.25
    dataset_noise: float = 0.15
    dataset_path: str | None = None
    dataset_label_column: int | None = None
    dataset_delimiter: str = ","
    dataset_has_header: bool = False
    dataset_seed: int | None = None
    dataset_standardize: bool = False
    teacher_widths: tuple[int, ...] | None = None
    teacher_epochs: int = 20
    student_widths: tuple[int, ...] | None = None
    optimizer: str = "adam"
    lr: float = 0.005
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 128
    temperature: float = 4.0
    method: str | None = None
    alpha0: float = 0.5
    theta0: float = 0.0
    k: float = 10.0
    sign_flip: bool = False
    cam_hidden_multiplier: int = 4
    cam_zero_init_output: bool = True
    cam_alpha_policy: str = "dynamic"
    seed: int = 0
    out: str = "out"
    train_teacher: bool = True
    teacher_checkpoint: str | None = None
    methods: tuple[str, ...] | None = None
    seeds: tuple[int, ...] | None = None

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return dataclasses.replace(self, **kwargs)

    def canonical_text(self) -> str:
        lines = []
        for key, attr, _parser in _KEY_TABLE:
            if key == "out":
                continue  # output location is not part of the experiment identity
            value = getattr(self, attr)
            if value is None:
                continue
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, tuple):
                rendered = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


# file key, dataclass attribute, parser
_KEY_TABLE = [
    ("dataset", "dataset", str),
    ("dataset.n", "dataset_n", _parse_int),
    ("dataset.classes", "dataset_classes", _parse_int),
    ("dataset.features", "dataset_features", _parse_int),
    ("dataset.spread", "dataset_spread", float),
    ("dataset.noise", "dataset_noise", float),
    ("dataset.path", "dataset_path", str),
    ("dataset.label_column", "dataset_label_column", _parse_int),
    ("dataset.delimiter", "dataset_delimiter", str),
    ("dataset.has_header", "dataset_has_header", _parse_bool),
    ("dataset.seed", "dataset_seed", _parse_int),
    ("dataset.standardize", "dataset_standardize", _parse_bool),
    ("teacher.widths", "teacher_widths", _parse_int_list),
    ("teacher.epochs", "teacher_epochs", _parse_int),
    ("student.widths", "student_widths", _parse_int_list),
    ("optimizer", "optimizer", str),
    ("optimizer.lr", "lr", float),
    ("optimizer.momentum", "momentum", float),
    ("optimizer.beta1", "beta1", float),
    ("optimizer.beta2", "beta2", float),
    ("optimizer.eps", "adam_eps", float),
    ("epochs", "epochs", _parse_int),
    ("teacher_checkpoint", "teacher_checkpoint", str),
    ("train_teacher", "train_teacher", _parse_bool),
    ("batch_size", "batch_size", _parse_int),
    ("temperature", "temperature", float),
    ("method", "method", str),
    ("alpha0", "alpha0", float),
    ("theta0", "theta0", float),
    ("k", "k", float),
    ("sign_flip", "sign_flip", _parse_bool),
    ("cam.hidden_multiplier", "cam_hidden_multiplier", _parse_int),
    ("cam.zero_init_output", "cam_zero_init_output", _parse_bool),
    ("cam.alpha_policy", "cam_alpha_policy", str),
    ("seed", "seed", _parse_int),
    ("out", "out", str),
    ("methods", "methods", _parse_str_list),
    ("seeds", "seeds", _parse_int_list),
]

_BY_KEY = {key: (attr, parser) for key, attr, parser in _KEY_TABLE}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict = {}
    seen: set[str] = set()
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {line_no} is not 'key = value'")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _BY_KEY:
            raise ConfigError(f"{source}: line {line_no}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}: line {line_no}: duplicate key {key!r}")
        seen.add(key)
        attr, parser = _BY_KEY[key]
        try:
            values[attr] = parser(raw_value)
        except ValueError as exc:
            raise ConfigError(f"{source}: line {line_no}: bad value for {key!r}: {exc}") from None
    cfg = ExperimentConfig(**values)
    _validate_common(cfg, source)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, source=str(path))


def _validate_common(cfg: ExperimentConfig, source: str) -> None:
    def fail(message: str):
        raise ConfigError(f"{source}: {message}")

    if cfg.dataset is not None and cfg.dataset not in DATASETS:
        fail(f"dataset must be one of {DATASETS}, got {cfg.dataset!r}")
    if cfg.optimizer not in OPTIMIZERS:
        fail(f"optimizer must be one of {OPTIMIZERS}, got {cfg.optimizer!r}")
    if cfg.method is not None and cfg.method not in METHODS:
        fail(f"method must be one of {METHODS}, got {cfg.method!r}")
    if cfg.cam_alpha_policy not in ALPHA_POLICIES:
        fail(f"cam.alpha_policy must be one of {ALPHA_POLICIES}, got {cfg.cam_alpha_policy!r}")
    if cfg.temperature <= 0:
        fail(f"temperature must be positive, got {cfg.temperature}")
    if cfg.epochs < 1:
        fail(f"epochs must be at least 1, got {cfg.epochs}")
    if cfg.teacher_epochs < 0:
        fail(f"teacher.epochs must be non-negative, got {cfg.teacher_epochs}")
    if cfg.batch_size < 1:
        fail(f"batch_size must be at least 1, got {cfg.batch_size}")
    if cfg.lr <= 0:
        fail(f"optimizer.lr must be positive, got {cfg.lr}")
    if not 0.0 <= cfg.alpha0 <= 1.0:
        fail(f"alpha0 must lie in [0, 1], got {cfg.alpha0}")
    if cfg.k <= 0:
        fail(f"k must be positive, got {cfg.k}")
    if cfg.cam_hidden_multiplier < 1:
        fail(f"cam.hidden_multiplier must be at least 1, got {cfg.cam_hidden_multiplier}")
    if cfg.methods is not None:
        unknown = [m for m in cfg.methods if m not in METHODS]
        if unknown:
            fail(f"methods contains unknown entries {unknown}")
        if len(set(cfg.methods)) != len(cfg.methods):
            fail("methods contains duplicates")
    if cfg.seeds is not None and len(set(cfg.seeds)) != len(cfg.seeds):
        fail("seeds contains duplicates")


def validate_for_run(cfg: ExperimentConfig) -> None:
    if cfg.dataset is None:
        raise ConfigError("run needs a dataset")
    if cfg.method is None:
        raise ConfigError("run needs a method")
    _validate_dataset_fields(cfg)


def validate_for_teacher(cfg: ExperimentConfig) -> None:
    if cfg.dataset is None:
        raise ConfigError("train-teacher needs a dataset")
    _validate_dataset_fields(cfg)


def validate_for_compare(cfg: ExperimentConfig) -> None:
    if cfg.dataset is None:
        raise ConfigError("compare needs a dataset")
    if cfg.methods is None or len(cfg.methods) < 2:
        raise ConfigError("compare needs at least 2 methods")
    if cfg.seeds is None or len(cfg.seeds) < 3:
        raise ConfigError("compare needs at least 3 seeds")
    _validate_dataset_fields(cfg)


def _validate_dataset_fields(cfg: ExperimentConfig) -> None:
    if cfg.dataset == "delimited":
        if cfg.dataset_path is None:
            raise ConfigError("delimited dataset needs dataset.path")
        if cfg.dataset_label_column is None:
            raise ConfigError("delimited dataset needs dataset.label_column")
