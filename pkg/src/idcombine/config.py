"""Run configuration: validated settings shared by every pipeline command."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .boosting import BoostParams
from .core import ConfigError, Period

__all__ = ["RunConfig"]

_MODES = ("fide", "divide")
_TRAINERS = ("weighted-loss", "best-class")
_POOLINGS = ("none", "islands", "screened", "lasso")
_GAP_MODES = ("gaps", "cumulative")
_SCALE_ROWS = ("none", "maxnorm")
_LAYOUTS = ("wide", "long")


def _parse_loss(loss: str) -> str:
    if loss == "rmsse":
        return loss
    if loss.startswith("spl@"):
        try:
            u = float(loss.split("@", 1)[1])
        except ValueError:
            raise ConfigError(f"bad quantile level in loss {loss!r}") from None
        if not 0.0 < u < 1.0:
            raise ConfigError(f"quantile level must be in (0, 1), got {u}")
        return f"spl@{u:.3f}"
    raise ConfigError(f"unknown loss {loss!r} (expected 'rmsse' or 'spl@<u>')")


@dataclass
class RunConfig:
    data: str | None = None
    layout: str = "wide"
    period: Period = field(default_factory=Period.monthly)
    horizon: int = 12
    mode: str = "fide"
    loss: str = "rmsse"
    trainer: str = "weighted-loss"
    pooling: str = "none"
    islands_gap_mode: str = "gaps"
    scale_rows: str = "maxnorm"
    hyperparams: BoostParams = field(default_factory=BoostParams)
    seed: int = 0
    threads: int = 1
    production: bool = False
    model: str | None = None
    quantile_models: str | None = None
    forecasts: str | None = None
    out: str | None = None
    with_quantiles: bool = False
    per_method: bool = False
    by_class: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.layout not in _LAYOUTS:
            raise ConfigError(f"layout must be one of {_LAYOUTS}, got {self.layout!r}")
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.trainer not in _TRAINERS:
            raise ConfigError(f"trainer must be one of {_TRAINERS}, got {self.trainer!r}")
        if self.pooling not in _POOLINGS:
            raise ConfigError(f"pooling must be one of {_POOLINGS}, got {self.pooling!r}")
        if self.islands_gap_mode not in _GAP_MODES:
            raise ConfigError(f"islands_gap_mode must be one of {_GAP_MODES}")
        if self.scale_rows not in _SCALE_ROWS:
            raise ConfigError(f"scale_rows must be one of {_SCALE_ROWS}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        self.loss = _parse_loss(self.loss)

    @classmethod
    def from_sources(cls, config_path: str | None = None, **overrides) -> "RunConfig":
        """Build from an optional JSON file plus explicit overrides (which win).

        Unknown keys in either source are rejected.
        """
        settings: dict = {}
        if config_path:
            with open(config_path, encoding="utf-8") as fh:
                try:
                    settings = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{config_path}: invalid JSON ({exc})") from None
            if not isinstance(settings, dict):
                raise ConfigError(f"{config_path}: config must be a JSON object")
        settings.update({k: v for k, v in overrides.items() if v is not None})

        known = {f.name for f in fields(cls)}
        unknown = set(settings) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "period" in settings and not isinstance(settings["period"], Period):
            settings["period"] = Period.parse(str(settings["period"]))
        if "hyperparams" in settings and not isinstance(settings["hyperparams"], BoostParams):
            try:
                settings["hyperparams"] = BoostParams.from_dict(settings["hyperparams"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad hyperparams: {exc}") from None
        return cls(**settings)

    def seeded_hyperparams(self) -> BoostParams:
        """Hyperparameters with the run seed threaded in (single-seed rule)."""
        d = self.hyperparams.to_dict()
        d["seed"] = self.seed
        return BoostParams.from_dict(d)
