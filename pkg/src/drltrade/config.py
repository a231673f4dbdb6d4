"""JSON run configuration: one strategy on one asset, every constant explicit."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .agents import AgentSpec
from .errors import ConfigError
from .features import FeatureSpec
from .market import EnvConfig
from .walkforward import ASSET_PRESETS, SelectionPolicy, WalkForwardConfig


@dataclass
class ScheduleConfig:
    train_start: str = "2005-01-01"
    first_val_year: int = 2018
    windows: int = 5


@dataclass
class RunConfig:
    asset: str
    data: str
    agent: AgentSpec = field(default_factory=AgentSpec)
    features: FeatureSpec = field(default_factory=FeatureSpec)
    env: EnvConfig = field(default_factory=EnvConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    walkforward: WalkForwardConfig = field(default_factory=WalkForwardConfig)
    seed: int = 0
    out: Optional[str] = None
    # skip agent training and report only the benchmarks
    benchmark_only: bool = False
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    @property
    def data_path(self) -> Path:
        p = Path(self.data)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def label(self) -> str:
        return "benchmarks" if self.benchmark_only else self.agent.label

    def to_dict(self) -> dict:
        return {
            "asset": self.asset,
            "data": self.data,
            "agent": self.agent.to_dict(),
            "features": self.features.to_dict(),
            "env": asdict(self.env),
            "schedule": asdict(self.schedule),
            "walkforward": self.walkforward.to_dict(),
            "seed": self.seed,
            "out": self.out,
            "benchmark_only": self.benchmark_only,
        }


_KNOWN = {"asset", "data", "preset", "agent", "features", "env", "schedule", "walkforward", "seed", "out",
          "benchmark_only"}


def _build(cls, value, what):
    try:
        return cls(**(value or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    """Validate a config mapping.

    An optional ``preset`` ("fx", "sp500", "btc") supplies the train start,
    periods per year and provision rate unless given explicitly.

    Raises:
        ConfigError: unknown keys, missing fields or out-of-range values.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("asset", "data"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")
    env = dict(raw.get("env") or {})
    schedule = dict(raw.get("schedule") or {})
    wf = dict(raw.get("walkforward") or {})
    preset = raw.get("preset")
    if preset is not None:
        if preset not in ASSET_PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(ASSET_PRESETS)}")
        p = ASSET_PRESETS[preset]
        env.setdefault("provision", p["provision"])
        schedule.setdefault("train_start", p["train_start"])
        wf.setdefault("periods_per_year", p["periods_per_year"])
    if "selection" in wf:
        wf["selection"] = _build(SelectionPolicy, wf["selection"], "walkforward.selection")
    cfg = RunConfig(
        asset=str(raw["asset"]),
        data=str(raw["data"]),
        agent=_build(AgentSpec, raw.get("agent"), "agent"),
        features=_build(FeatureSpec, raw.get("features"), "features"),
        env=_build(EnvConfig, env, "env"),
        schedule=_build(ScheduleConfig, schedule, "schedule"),
        walkforward=_build(WalkForwardConfig, wf, "walkforward"),
        seed=int(raw.get("seed", 0)),
        out=raw.get("out"),
        benchmark_only=bool(raw.get("benchmark_only", False)),
        base_dir=base_dir,
    )
    if cfg.walkforward.periods_per_year <= 0:
        raise ConfigError("walkforward.periods_per_year must be positive")
    if not cfg.data_path.is_file():
        raise ConfigError(f"data file not found: {cfg.data_path}")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(raw, path.parent)
