"""
Scenario configuration.

Config files are UTF-8 ``key=value`` lines; ``#`` starts a comment. Keys are
the :class:`ScenarioConfig` field names, with dotted prefixes for the grouped
settings (``fbs.``, ``geometry.``, ``link.``, ``detector.``). Every key is
optional; omitted keys take the dataclass defaults. ``resolved_banner``
prints the full resolved key set.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

from ..adversary import FbsStrategy, PowerPolicy
from ..errors import ConfigError
from ..geometry import GeometryConfig, RadioLink
from ..phy import Modulation

__all__ = ["FbsConfig", "DetectorConfig", "ScenarioConfig", "DETECTORS", "AXES",
           "parse_config", "parse_overrides", "resolved_banner"]

DETECTORS = ("psd", "rss3sigma", "distance", "region")

# sweep axis name -> config key
AXES = {
    "snr": "snr_db",
    "fbs_power": "fbs.power_dbm",
    "table_length": "table_length",
    "seq_length": "seq_length",
}

_POLICY_ALIASES = {
    "fixed": PowerPolicy.FIXED, "fixeddbm": PowerPolicy.FIXED,
    "match_target": PowerPolicy.MATCH_TARGET, "matchtargetatue": PowerPolicy.MATCH_TARGET,
    "sweep": PowerPolicy.SWEEP, "sweeppoint": PowerPolicy.SWEEP,
}


@dataclass(frozen=True)
class FbsConfig:
    enabled: bool = True
    power_policy: str = "match_target"
    power_dbm: float = 30.0
    max_power_dbm: float = 46.0
    match_margin_db: float = 0.5
    reaction_delay_us: float = 12.0
    oracle_start: bool = False
    # derive the FBS link SNR from its RSS relative to the target's
    snr_from_rss: bool = False

    @property
    def policy(self) -> PowerPolicy:
        try:
            return _POLICY_ALIASES[self.power_policy.lower()]
        except KeyError:
            raise ConfigError(f"unknown power policy {self.power_policy!r}", key="fbs.power_policy") from None

    def strategy(self) -> FbsStrategy:
        return FbsStrategy(
            power_policy=self.policy,
            power_dbm=self.power_dbm,
            reaction_delay_s=self.reaction_delay_us * 1e-6,
            match_margin_db=self.match_margin_db,
            max_power_dbm=self.max_power_dbm,
            oracle_start=self.oracle_start,
        )


@dataclass(frozen=True)
class DetectorConfig:
    history_samples: int = 200
    distance_threshold_m: float = 100.0
    region_alpha: float = 0.05
    # RSS spread the suspicious-region test assumes (measurement + shadowing)
    region_sigma_db: float = 2.0
    ber_accept_threshold: float = 0.25


@dataclass(frozen=True)
class ScenarioConfig:
    modulation_order: int = 16
    table_length: int = 32
    seq_length: int = 8
    block_size: int = 4
    channel_order: int = 2
    snr_db: float = 10.0
    detector: str = "psd"
    trials: int = 10000
    base_seed: int = 2024
    hysteresis_db: float = 3.0
    processing_delay_us: float = 10.0
    slack_us: float = 2.0
    tap_decay_db: float = 6.0
    fbs: FbsConfig = field(default_factory=FbsConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    link: RadioLink = field(default_factory=RadioLink)
    detection: DetectorConfig = field(default_factory=DetectorConfig)

    @property
    def modulation(self) -> Modulation:
        return _modulation(self.modulation_order)

    def validate(self) -> "ScenarioConfig":
        self.modulation  # rejects non-square orders
        if self.block_size < 1:
            raise ConfigError("must be at least 1", key="block_size")
        if self.channel_order < 0:
            raise ConfigError("must be non-negative", key="channel_order")
        if self.table_length < 2:
            raise ConfigError("must be at least 2", key="table_length")
        if not 1 <= self.seq_length <= self.table_length:
            raise ConfigError(f"must lie in [1, table_length={self.table_length}]", key="seq_length")
        if self.seq_length % self.block_size:
            raise ConfigError(f"must be a multiple of block_size={self.block_size}", key="seq_length")
        if self.trials < 1:
            raise ConfigError("must be at least 1", key="trials")
        if self.detector not in DETECTORS:
            raise ConfigError(f"must be one of {', '.join(DETECTORS)}", key="detector")
        if math.isnan(self.snr_db):
            raise ConfigError("must be a number or inf", key="snr_db")
        for key in ("processing_delay_us", "slack_us", "hysteresis_db", "tap_decay_db"):
            if getattr(self, key) < 0:
                raise ConfigError("must be non-negative", key=key)
        self.fbs.strategy()
        self.geometry.validate(self.link.path_loss_exponent)
        d = self.detection
        if d.history_samples < 2:
            raise ConfigError("must be at least 2", key="detector.history_samples")
        if d.distance_threshold_m <= 0:
            raise ConfigError("must be positive", key="detector.distance_threshold_m")
        if not 0 < d.region_alpha < 1:
            raise ConfigError("must lie in (0, 1)", key="detector.region_alpha")
        if d.region_sigma_db < 0:
            raise ConfigError("must be non-negative", key="detector.region_sigma_db")
        return self

    def get(self, key: str):
        group, _, name = key.rpartition(".")
        obj = getattr(self, _GROUPS[group]) if group else self
        return getattr(obj, name)

    def with_values(self, values: dict) -> "ScenarioConfig":
        """Copy with ``{key: value}`` applied; string values are parsed."""
        top, groups = {}, {}
        for key, value in values.items():
            ftype = _key_types().get(key)
            if ftype is None:
                raise ConfigError("unknown key", key=key)
            if isinstance(value, str):
                value = _convert(key, value, ftype)
            group, _, name = key.rpartition(".")
            if group:
                groups.setdefault(_GROUPS[group], {})[name] = value
            else:
                top[name] = value
        for attr, changes in groups.items():
            top[attr] = replace(getattr(self, attr), **changes)
        return replace(self, **top)

    def items(self):
        """All ``(key, value)`` pairs in declaration order."""
        for f in fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                prefix = _PREFIX[f.name]
                for g in fields(value):
                    yield f"{prefix}.{g.name}", getattr(value, g.name)
            else:
                yield f.name, value


@lru_cache(maxsize=None)
def _modulation(order: int) -> Modulation:
    return Modulation(order)


_GROUPS = {"fbs": "fbs", "geometry": "geometry", "link": "link", "detector": "detection"}
_PREFIX = {v: k for k, v in _GROUPS.items()}


def _key_types() -> dict:
    out = {}
    for f in fields(ScenarioConfig):
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            for g in fields(default):
                out[f"{_PREFIX[f.name]}.{g.name}"] = type(getattr(default, g.name))
        else:
            out[f.name] = type(default)
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: str, ftype: type):
    raw = raw.strip()
    if raw == "":
        raise ConfigError("missing value", key=key)
    try:
        if ftype is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"expected {ftype.__name__}, got {raw!r}", key=key) from None


def _parse_lines(text: str, source: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}", key=source)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_overrides(pairs) -> dict:
    """``["k=v", ...]`` -> ``{k: v}``."""
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"expected key=value, got {pair!r}", key="--set")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    """Defaults <- file at ``path`` <- ``overrides``, then validated."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError("config file not found", key=str(path)) from None
        values.update(_parse_lines(text, str(path)))
    values.update(overrides or {})
    return ScenarioConfig().with_values(values).validate()


def resolved_banner(cfg: ScenarioConfig) -> str:
    """Every key with its resolved value, itself a valid config file."""
    lines = ["# resolved config"]
    for key, value in cfg.items():
        if isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    return "\n".join(lines)
