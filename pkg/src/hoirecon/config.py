"""Run configuration: defaults, flat key=value files, CLI overrides."""

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .numerics import AttentionConfig
from .tiat import TiatConfig


class ConfigError(ValueError):
    """A config file or override did not parse or validate."""


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by the CLI commands; defaults mirror the reference setup."""

    crop_size: int = 224          # square crop resolution S
    feat_channels: int = 1024     # backbone channels C
    model_dim: int = 512
    num_heads: int = 8
    ffn_dim: int = 2048
    tiat_layers: int = 12
    window: int = 64
    pad: float = 1.2
    fps: float = 30.0
    seed: int = 0
    rope_base: float = 10000.0

    def __post_init__(self):
        if self.crop_size <= 0 or self.feat_channels <= 0:
            raise ConfigError(f"crop_size/feat_channels must be positive: {self}")
        if self.pad <= 0:
            raise ConfigError(f"pad must be positive, got {self.pad}")
        if self.fps <= 0:
            raise ConfigError(f"fps must be positive, got {self.fps}")
        try:
            self.tiat()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def attention(self) -> AttentionConfig:
        return AttentionConfig(self.model_dim, self.num_heads, self.ffn_dim)

    def tiat(self) -> TiatConfig:
        return TiatConfig(model_dim=self.model_dim, num_heads=self.num_heads,
                          ffn_dim=self.ffn_dim, num_layers=self.tiat_layers,
                          window=self.window, rope_base=self.rope_base)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {raw!r}") from e
    return raw


def parse_config_text(text: str, where: str = "<config>") -> dict:
    """Parse flat key=value lines; '#' starts a comment, blanks are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{where}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw.strip())
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then overrides (e.g. CLI flags)."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(), str(path)))
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config override {key!r}")
            values[key] = val
    return RunConfig(**values)


def with_updates(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
