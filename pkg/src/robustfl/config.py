"""Experiment configuration: dataclasses plus a TOML loader.

Every field has a default so a config file only lists what it changes.
Unknown keys are rejected. Relative data paths resolve against the config
file's directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .attacks import ATTACK_KINDS, malicious_ids_for
from .errors import ConfigError

DEFENSES = ("robustfl", "fedavg", "median", "trimmed_mean", "multi_krum", "faba")


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "none"
    c: float = 0.8
    z: float = 0.3


@dataclass(frozen=True)
class DefenseConfig:
    name: str = "robustfl"
    alpha: float = 0.8
    beta: int | None = None   # trimmed_mean; default min(f, (K - 1) // 2)
    f: int | None = None      # multi_krum / faba / trimmed_mean; default: true attacker count
    m: int | None = None      # multi_krum; default K - f


@dataclass(frozen=True)
class DataConfig:
    source: str = "blobs"          # "blobs" | "mnist"
    partition: str = "iid"         # "iid" | "noniid"
    q: float = 0.5
    # mnist
    mnist_dir: str | None = None
    train_limit: int | None = None
    test_limit: int | None = None
    # blobs
    num_classes: int = 10
    n_features: int = 20
    n_per_class: int = 100
    test_per_class: int = 50
    spread: float = 0.1


@dataclass(frozen=True)
class GuidingConfig:
    size: int = 10
    epochs: int = 10
    learning_rate: float | None = None   # default: training.learning_rate


@dataclass(frozen=True)
class TrainingConfig:
    local_iterations: int = 3
    batch_size: int = 32
    learning_rate: float = 0.05


@dataclass(frozen=True)
class SimConfig:
    num_clients: int = 30
    attacker_fraction: float = 0.0
    rounds: int = 50
    seed: int = 0
    hidden: tuple = (32,)
    workers: int = 1
    attack: AttackConfig = field(default_factory=AttackConfig)
    defense: DefenseConfig = field(default_factory=DefenseConfig)
    data: DataConfig = field(default_factory=DataConfig)
    guiding: GuidingConfig = field(default_factory=GuidingConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    @property
    def malicious_ids(self) -> frozenset:
        if self.attack.kind == "none":
            return frozenset()
        return malicious_ids_for(self.num_clients, self.attacker_fraction)

    def validate(self) -> "SimConfig":
        K = self.num_clients
        if K < 1:
            raise ConfigError("num_clients must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 <= self.attacker_fraction < 1.0:
            raise ConfigError("attacker_fraction must be in [0, 1)")
        if self.attack.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.attack.kind!r}")
        if self.attack.kind == "none" and self.attacker_fraction > 0:
            raise ConfigError("attacker_fraction > 0 requires an attack kind")
        if not self.attack.c > 0:
            raise ConfigError("attack.c must be > 0")
        if len(self.malicious_ids) >= K:
            raise ConfigError("at least one client must be honest")
        d = self.defense
        if d.name not in DEFENSES:
            raise ConfigError(f"unknown defense {d.name!r}; choose from {DEFENSES}")
        if d.name == "robustfl" and not 0.0 < d.alpha < 1.0:
            raise ConfigError(f"robustfl requires 0 < alpha < 1, got {d.alpha}")
        if self.data.source not in ("blobs", "mnist"):
            raise ConfigError(f"unknown data source {self.data.source!r}")
        if self.data.partition not in ("iid", "noniid"):
            raise ConfigError(f"unknown partition {self.data.partition!r}")
        if self.data.source == "mnist" and not self.data.mnist_dir:
            raise ConfigError("data.mnist_dir is required for MNIST")
        if self.guiding.size < 1 or self.guiding.epochs < 1:
            raise ConfigError("guiding.size and guiding.epochs must be >= 1")
        t = self.training
        if t.local_iterations < 1 or t.batch_size < 1 or not t.learning_rate > 0:
            raise ConfigError("invalid training parameters")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError("hidden must list positive layer widths")
        return self

    def replace(self, **changes) -> "SimConfig":
        """``dataclasses.replace`` that also accepts ``section__field`` keys,
        e.g. ``cfg.replace(defense__alpha=0.5)``."""
        nested: dict = {}
        flat = {}
        for key, value in changes.items():
            if "__" in key:
                section, name = key.split("__", 1)
                nested.setdefault(section, {})[name] = value
            else:
                flat[key] = value
        for section, sub in nested.items():
            flat[section] = dataclasses.replace(getattr(self, section), **sub)
        return dataclasses.replace(self, **flat)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "attack": AttackConfig,
    "defense": DefenseConfig,
    "data": DataConfig,
    "guiding": GuidingConfig,
    "training": TrainingConfig,
}


def _build(cls, raw: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**raw)


def config_from_dict(raw: dict, base_dir=None) -> SimConfig:
    raw = dict(raw)
    sections = {}
    for name, cls in _SECTIONS.items():
        sub = raw.pop(name, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"[{name}] must be a table")
        sections[name] = _build(cls, sub, f"[{name}]")
    if "hidden" in raw:
        raw["hidden"] = tuple(raw["hidden"])
    data = sections["data"]
    if data.mnist_dir and base_dir is not None and not Path(data.mnist_dir).is_absolute():
        sections["data"] = dataclasses.replace(
            data, mnist_dir=str((Path(base_dir) / data.mnist_dir).resolve()))
    return _build(SimConfig, {**raw, **sections}, "top level").validate()


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return config_from_dict(raw, base_dir=path.parent)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
