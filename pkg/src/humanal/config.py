"""Run configuration for the command-line tools (YAML or JSON files)."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .features import FeatureMask
from .harness import SplitSetting
from .simulator import SimConfig, config_from_dict, config_to_dict
from .zoo import DEFAULT_POOL, ModelSpec, spec_from_dict, spec_to_dict


@dataclass(frozen=True)
class RunConfig:
    corpus: str | None = None  # evaluate/ablate input; simulated from ``simulator`` when unset
    train: str | None = None
    test: str | None = None
    settings: tuple[str, ...] = ("V1", "V2", "V3", "V4")
    runs: int = 20
    seed: int | None = None
    classifiers: tuple[dict, ...] | None = None  # None = default pool
    mask: str = "all"
    simulator: dict = field(default_factory=dict)
    out: str | None = None
    strict: bool = False
    train_frac: float = 0.7
    folds: int = 5
    selection: str = "cv"
    vary_split: bool = True
    vary_model_seed: bool = True
    ablation_mode: str = "drop"
    ablation_setting: str = "V4"
    workers: int | None = None

    # ---- resolved views

    @property
    def split_settings(self) -> list[SplitSetting]:
        return SplitSetting.parse(",".join(self.settings))

    @property
    def feature_mask(self) -> FeatureMask:
        return FeatureMask.parse(self.mask)

    @property
    def specs(self) -> tuple[ModelSpec, ...]:
        if self.classifiers is None:
            return DEFAULT_POOL
        return tuple(spec_from_dict(c) for c in self.classifiers)

    @property
    def sim_config(self) -> SimConfig:
        return config_from_dict(self.simulator)

    def validate(self) -> "RunConfig":
        """Check every field; returns self so calls can be chained."""
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        for name in ("runs", "folds"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool), f"{name} must be an integer")
        need(self.runs >= 1, "runs must be >= 1")
        need(self.folds >= 2, "folds must be >= 2")
        need(self.seed is None or (isinstance(self.seed, int) and self.seed >= 0),
             "seed must be a non-negative integer")
        need(isinstance(self.train_frac, (int, float)) and 0.0 < self.train_frac < 1.0,
             "train_frac must lie strictly between 0 and 1")
        need(self.selection in ("cv", "train"), "selection must be 'cv' or 'train'")
        need(self.ablation_mode in ("isolate", "drop"), "ablation_mode must be 'isolate' or 'drop'")
        need(self.workers is None or (isinstance(self.workers, int) and self.workers >= 1),
             "workers must be a positive integer")
        for name in ("strict", "vary_split", "vary_model_seed"):
            need(isinstance(getattr(self, name), bool), f"{name} must be true or false")
        need(isinstance(self.simulator, dict), "simulator must be a mapping")
        try:
            settings = self.split_settings
            need(len(SplitSetting.parse(self.ablation_setting)) == 1,
                 "ablation_setting must name exactly one setting")
            self.feature_mask
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        need(bool(settings), "settings must name at least one setting")
        if self.classifiers is not None:
            need(len(self.classifiers) > 0, "classifiers must not be empty")
            self.specs
        self.sim_config.validate()
        return self


_FIELDS = {f.name for f in fields(RunConfig)}


def config_from_mapping(data: dict | None) -> RunConfig:
    data = dict(data or {})
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key(s) {unknown}; expected some of {sorted(_FIELDS)}")
    if isinstance(data.get("settings"), str):
        data["settings"] = tuple(s.strip() for s in data["settings"].split(",") if s.strip())
    elif data.get("settings") is not None:
        data["settings"] = tuple(str(s) for s in data["settings"])
    if data.get("classifiers") is not None:
        if not isinstance(data["classifiers"], list) or not all(isinstance(c, dict) for c in data["classifiers"]):
            raise ConfigError("classifiers must be a list of mappings with a 'kind' key")
        data["classifiers"] = tuple(data["classifiers"])
    if data.get("mask") is not None and not isinstance(data["mask"], str):
        data["mask"] = ",".join(data["mask"])
    if data.get("simulator") is None:
        data["simulator"] = {}
    return RunConfig(**data)


def load_config(path: str | Path | None) -> RunConfig:
    """Read a YAML (or JSON, which is valid YAML) config; None gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return config_from_mapping(data)


def effective_config(config: RunConfig) -> dict:
    """Defaults-resolved view written next to every output (the output path excluded)."""
    return {
        "format_version": 1,
        "corpus": config.corpus,
        "train": config.train,
        "test": config.test,
        "settings": [s.name for s in config.split_settings],
        "runs": config.runs,
        "seed": config.seed,
        "classifiers": [spec_to_dict(s) for s in config.specs],
        "mask": list(config.feature_mask.names),
        "simulator": config_to_dict(config.sim_config),
        "strict": config.strict,
        "train_frac": config.train_frac,
        "folds": config.folds,
        "selection": config.selection,
        "vary_split": config.vary_split,
        "vary_model_seed": config.vary_model_seed,
        "ablation_mode": config.ablation_mode,
        "ablation_setting": config.ablation_setting,
    }


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Apply command-line overrides; ``None`` values leave the field untouched."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
