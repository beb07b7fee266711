"""Run configuration: clustering, noise and rhythm parameters.

Config files are flat ``key = value`` text, one pair per line, ``#`` starts a
comment.  Keys not listed in :class:`RunConfig` are rejected.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Unknown key, unparsable value or violated parameter invariant."""


@dataclass(frozen=True)
class RunConfig:
    theta_wave_ms: float = 100.0  # max half-width of a QRS wave
    rho_min_uv: float = 50.0  # min deflection considered physiological
    rho_qrs_uv: float = 150.0  # min height of a relevant QRS wave
    delta_band_samples: int = 5  # Sakoe-Chiba band, |x - y| < delta
    lambda_slope: int = 2  # max run of identical non-diagonal steps
    alpha_sigmoid: float = 4.0
    gamma: float = 0.30  # beat assignment threshold
    gamma_prime: float = 0.40  # template merge threshold
    tau_context: int = 15  # temporal context length, beats
    beta_update: float = 0.125  # exponential template update
    mu_transient: int = 10  # beats before a cluster is established
    eta_max_waves: int = 6  # max waves in a noise-free QRS
    kappa_noise_free: int = 3  # clean beats closing a noisy interval
    theta_rr: float = 0.2  # NN smoothing coefficient
    max_groups: int = 25

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{f.name} must be positive, got {value!r}")
        if not self.gamma < self.gamma_prime:
            raise ConfigError(
                f"gamma ({self.gamma}) must be smaller than gamma_prime ({self.gamma_prime})"
            )
        if not self.rho_min_uv < self.rho_qrs_uv:
            raise ConfigError(
                f"rho_min_uv ({self.rho_min_uv}) must be smaller than rho_qrs_uv ({self.rho_qrs_uv})"
            )
        if self.beta_update > 1 or self.theta_rr > 1:
            raise ConfigError("beta_update and theta_rr must lie in (0, 1]")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str, lineno: int):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError
            return int(as_float)
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects {kind}, got {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[key] = _coerce(key, raw, lineno)
    return RunConfig(**overrides)


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load a config file, falling back to the defaults for missing keys.

    With ``path=None`` the defaults are returned unchanged.
    """
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config(config: RunConfig) -> str:
    return "".join(f"{f.name} = {getattr(config, f.name)}\n" for f in fields(config))
