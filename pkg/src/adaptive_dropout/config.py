"""Flat ``key = value`` experiment configs with dotted section keys.

Example::

    seed = 3
    dataset.kind = spirals
    dataset.n = 2000
    model.kind = mlp1
    controller.variant = adaptive_t
    train.total_epochs = 40

``#`` starts a comment. Unknown keys are rejected so a misspelled
hyperparameter can never fall back to its default silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .core import ConfigError, ControllerConfig

DATASET_KINDS = ("blobs", "spirals", "idx", "csv")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "blobs"
    n: int = 400
    dim: int = 2
    n_classes: int = 2
    noise: float = 1.0
    seed: Optional[int] = None
    images: Optional[str] = None
    labels: Optional[str] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}")
        if self.kind == "idx" and not (self.images and self.labels):
            raise ConfigError("idx datasets need dataset.images and dataset.labels")
        if self.kind == "csv" and not self.path:
            raise ConfigError("csv datasets need dataset.path")
        if self.kind in ("blobs", "spirals"):
            if self.n < self.n_classes or self.n_classes < 2 or self.dim < 1:
                raise ConfigError("need dataset.n >= dataset.n_classes >= 2 and dataset.dim >= 1")
            if self.noise < 0:
                raise ConfigError("dataset.noise must be >= 0")
            if self.kind == "spirals" and (self.dim != 2 or self.n_classes != 2):
                raise ConfigError("spirals need dataset.dim = 2 and dataset.n_classes = 2")
            if self.kind == "blobs" and self.n_classes > 2 * self.dim:
                raise ConfigError("blobs need dataset.n_classes <= 2 * dataset.dim")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "mlp1"
    hidden_dim: int = 32
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in ("softmax_regression", "mlp1"):
            raise ConfigError("model.kind must be softmax_regression or mlp1")
        if self.activation not in ("relu", "tanh"):
            raise ConfigError("model.activation must be relu or tanh")
        if self.kind == "mlp1" and self.hidden_dim < 1:
            raise ConfigError("model.hidden_dim must be >= 1")


@dataclass(frozen=True)
class OptimSpec:
    learning_rate: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0 or not 0 <= self.momentum < 1 or self.weight_decay < 0:
            raise ConfigError("need optim.learning_rate >= 0, 0 <= optim.momentum < 1, optim.weight_decay >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    optim: OptimSpec = field(default_factory=OptimSpec)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    batch_size: int = 32
    master_seed: int = 0
    output_dir: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("train.batch_size must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def total_epochs(self) -> int:
        return self.controller.total_epochs

    @property
    def method(self) -> str:
        return self.name or self.controller.variant

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, master_seed=seed)

    def with_controller(self, **changes) -> "ExperimentConfig":
        return replace(self, controller=replace(self.controller, **changes))


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


_SECTIONS = {
    "dataset": _names(DatasetSpec),
    "model": _names(ModelSpec),
    "optim": _names(OptimSpec),
    "controller": _names(ControllerConfig) - {"total_epochs"},
    "train": {"total_epochs", "batch_size"},
}
_TOP_LEVEL = {"seed", "output_dir", "name"}


def parse_value(text: str) -> Any:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        section, _, leaf = key.partition(".")
        known = key in _TOP_LEVEL if not leaf else leaf in _SECTIONS.get(section, ())
        if not known:
            raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
        values[key] = parse_value(value)
    return values


def _coerce(cls, raw: dict[str, Any], section: str):
    kwargs = {}
    for f in fields(cls):
        if f.name not in raw:
            continue
        value, default = raw[f.name], f.default
        is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
        if isinstance(default, bool):
            ok = isinstance(value, bool)
        elif isinstance(default, float):
            ok = is_number
            value = float(value) if ok else value
        elif isinstance(default, int):
            ok = is_number and isinstance(value, int)
        elif f.name == "seed":
            ok = is_number and isinstance(value, int)
        else:
            ok = True
            value = str(value)
        if not ok:
            raise ConfigError(f"{section}.{f.name}: bad value {raw[f.name]!r}")
        kwargs[f.name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def build_config(values: dict[str, Any], base_dir: Optional[Path] = None) -> ExperimentConfig:
    sections: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    for key, value in values.items():
        section, _, leaf = key.partition(".")
        if leaf:
            sections[section][leaf] = value
    ds = sections["dataset"]
    if base_dir is not None:
        for key in ("images", "labels", "path"):
            if isinstance(ds.get(key), str) and not Path(ds[key]).is_absolute():
                ds[key] = str(base_dir / ds[key])
    ctrl = dict(sections["controller"])
    if "total_epochs" in sections["train"]:
        ctrl["total_epochs"] = sections["train"]["total_epochs"]
    seed = values.get("seed", 0)
    batch = sections["train"].get("batch_size", 32)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    if not isinstance(batch, int) or isinstance(batch, bool):
        raise ConfigError("train.batch_size must be an integer")
    return ExperimentConfig(
        dataset=_coerce(DatasetSpec, ds, "dataset"),
        model=_coerce(ModelSpec, sections["model"], "model"),
        optim=_coerce(OptimSpec, sections["optim"], "optim"),
        controller=_coerce(ControllerConfig, ctrl, "controller"),
        batch_size=batch,
        master_seed=seed,
        output_dir=None if values.get("output_dir") is None else str(values["output_dir"]),
        name=None if values.get("name") is None else str(values["name"]),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text, str(path)), path.parent)


def dump_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`load_config` (paths are written as stored)."""
    lines = [f"seed = {config.master_seed}"]
    if config.name is not None:
        lines.append(f"name = {config.name}")
    if config.output_dir is not None:
        lines.append(f"output_dir = {config.output_dir}")
    for section, obj in (("dataset", config.dataset), ("model", config.model), ("optim", config.optim)):
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is not None:
                lines.append(f"{section}.{f.name} = {_render(value)}")
    for f in fields(config.controller):
        if f.name != "total_epochs":
            lines.append(f"controller.{f.name} = {_render(getattr(config.controller, f.name))}")
    lines.append(f"train.total_epochs = {config.total_epochs}")
    lines.append(f"train.batch_size = {config.batch_size}")
    return "\n".join(lines) + "\n"


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
