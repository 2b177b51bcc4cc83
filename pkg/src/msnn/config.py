"""Experiment configuration files (TOML or JSON).

Sections: ``[data]`` (corpus paths, subset sizes and the encoder keys
``T``, ``mfcc_coeffs``, ``fft_window``, ``fft_hop``, ``mel_filters``,
``rng_seed``), ``[model]`` (network keys plus an optional ``[model.neuron]``
table of LIF constants), ``[train]``, ``[noise]``, ``[mcgurk]``, ``[cost]``.
Every key is optional; unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli

from .encoding import EncoderConfig
from .errors import ConfigError
from .network import NetworkConfig
from .neuron import LifParams

ENCODER_KEYS = ("T", "mfcc_coeffs", "fft_window", "fft_hop", "mel_filters", "rng_seed")


def _build(cls, d: dict, section: str):
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


@dataclass
class DataConfig:
    visual_dir: str | None = None
    audio_dir: str | None = None
    n_train: int = 2000
    n_test: int = 500
    audio_test_fraction: float = 0.2

    def __post_init__(self):
        if self.n_train < 0 or self.n_test < 0:
            raise ConfigError("n_train and n_test must be >= 0")
        if not 0.0 < self.audio_test_fraction < 1.0:
            raise ConfigError("audio_test_fraction must lie in (0, 1)")


@dataclass
class TrainConfig:
    rule: str = "bp"
    lr: float = 0.3
    v_win: float = 0.5
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    repeats: int = 3
    pretrain_epochs: int = 10
    binarize: str = "mean-abs"
    grad_clip: float = 5.0  # global gradient-norm cap, 0 disables

    def __post_init__(self):
        if self.rule not in ("bp", "reward"):
            raise ConfigError("rule must be 'bp' or 'reward'")
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("epoch counts must be >= 0")
        if self.batch_size < 1 or self.repeats < 1:
            raise ConfigError("batch_size and repeats must be >= 1")
        if self.lr <= 0 or self.v_win <= 0:
            raise ConfigError("lr and v_win must be positive")
        if self.grad_clip < 0:
            raise ConfigError("grad_clip must be >= 0")

    @property
    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.repeats)]


@dataclass
class NoiseConfig:
    kind: str = "uniform"
    levels: list = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(10)])
    interferer_label: int = 8

    def __post_init__(self):
        if self.kind not in ("uniform", "voice"):
            raise ConfigError("noise kind must be 'uniform' or 'voice'")
        if not self.levels:
            raise ConfigError("noise levels must not be empty")
        if not 0 <= self.interferer_label <= 9:
            raise ConfigError("interferer_label must be a digit")


@dataclass
class McGurkConfig:
    classes: list = field(default_factory=lambda: [2, 3])
    inconsistent: list = field(default_factory=lambda: [[3, 2]])
    epochs: int = 30
    lr_bp: float = 0.3
    lr_reward: float = 0.3

    def __post_init__(self):
        if len(self.classes) != 2:
            raise ConfigError("mcgurk needs exactly two consistent classes")
        for pair in self.inconsistent:
            if len(pair) != 2:
                raise ConfigError("inconsistent pairs are [visual, audio]")


@dataclass
class CostConfig:
    n_levels: int = 20

    def __post_init__(self):
        if self.n_levels < 1:
            raise ConfigError("n_levels must be >= 1")


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    model: NetworkConfig = field(default_factory=NetworkConfig)
    neuron: LifParams = field(default_factory=LifParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    mcgurk: McGurkConfig = field(default_factory=McGurkConfig)
    cost: CostConfig = field(default_factory=CostConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"data", "model", "train", "noise", "mcgurk", "cost"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        data = dict(d.get("data", {}))
        enc = {k: data.pop(k) for k in ENCODER_KEYS if k in data}
        model = dict(d.get("model", {}))
        neuron = model.pop("neuron", {})
        encoder = _build(EncoderConfig, enc, "data")
        if "T" in enc and "T" not in model:
            model["T"] = enc["T"]
        if "mfcc_coeffs" in enc and "audio_coeffs" not in model:
            model["audio_coeffs"] = enc["mfcc_coeffs"]
        try:
            return cls(
                data=_build(DataConfig, data, "data"),
                encoder=encoder,
                model=_build(NetworkConfig, model, "model"),
                neuron=_build(LifParams, neuron, "model.neuron"),
                train=_build(TrainConfig, dict(d.get("train", {})), "train"),
                noise=_build(NoiseConfig, dict(d.get("noise", {})), "noise"),
                mcgurk=_build(McGurkConfig, dict(d.get("mcgurk", {})), "mcgurk"),
                cost=_build(CostConfig, dict(d.get("cost", {})), "cost"),
            )
        except AttributeError as exc:
            raise ConfigError(f"malformed section: {exc}") from None

    def to_dict(self) -> dict:
        data = asdict(self.data)
        data.update(self.encoder.to_dict())
        model = self.model.to_dict()
        model["neuron"] = asdict(self.neuron)
        return {
            "data": data,
            "model": model,
            "train": asdict(self.train),
            "noise": asdict(self.noise),
            "mcgurk": asdict(self.mcgurk),
            "cost": asdict(self.cost),
        }

    def with_model(self, **changes) -> "ExperimentConfig":
        return replace(self, model=replace(self.model, **changes))


def load_config(path) -> ExperimentConfig:
    """Read a ``.toml`` or ``.json`` file; anything else is tried as TOML."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            d = json.loads(raw.decode("utf-8"))
        else:
            d = tomli.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("config root must be a table")
    return ExperimentConfig.from_dict(d)
