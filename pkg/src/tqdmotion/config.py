"""Model parameters and their ``key=value`` file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .exceptions import InvalidParameterError

BOUNDARIES = ("replicate", "toroidal")


class ConfigError(ValueError):
    """Malformed or unknown entry in a model configuration file."""


@dataclass(frozen=True)
class ModelConfig:
    """Free parameters of the retina-to-lobula pipeline.

    Times are in seconds, lengths in pixels. The surround width of the
    inhibition kernel is always ``2 * sigma2``. The defaults are plausible
    magnitudes from fly-vision modelling, not fitted values.
    """

    sigma1: float = 1.0
    n1: int = 2
    tau1: float = 0.003
    n2: int = 2
    tau2: float = 0.009
    sigma2: float = 1.5
    alpha1: float = 0.003
    alpha2: float = 0.015
    n3: int = 5
    tau3: float = 0.007
    omega_half: int = 2
    baseline_d: int = 2
    dt: float = 0.001
    renormalize_kernels: bool = False
    boundary: str = "replicate"

    def __post_init__(self):
        for name in ("sigma1", "tau1", "tau2", "sigma2", "alpha1", "alpha2", "tau3", "dt"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("n1", "n2", "n3"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if self.alpha2 <= self.alpha1:
            raise InvalidParameterError("alpha2 must exceed alpha1")
        if self.omega_half < 1:
            raise InvalidParameterError("omega_half must be >= 1")
        if self.baseline_d < 1:
            raise InvalidParameterError("baseline_d must be >= 1")
        if (self.n1, self.tau1) == (self.n2, self.tau2):
            raise InvalidParameterError("highpass components (n1, tau1) and (n2, tau2) coincide")
        if self.boundary not in BOUNDARIES:
            raise InvalidParameterError(f"boundary must be one of {BOUNDARIES}")

    @property
    def sigma3(self) -> float:
        return 2 * self.sigma2

    def replace(self, **changes) -> ModelConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={_format(v)}\n" for k, v in self.to_dict().items())

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> ModelConfig:
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise ConfigError(f"unknown config key: {key}")
            kwargs[key] = _parse(key, types[key], raw)
        try:
            return cls(**kwargs)
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_text(cls, text: str) -> ModelConfig:
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def from_file(cls, path) -> ModelConfig:
        return cls.from_text(Path(path).read_text())


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        out[key] = value
    return out


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _parse(key, typ, raw: str):
    try:
        if typ in ("bool", bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in ("int", int):
            return int(raw)
        if typ in ("float", float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
