"""Scenario configuration: loading, validation, and dB conversion.

Config files are INI-style key/value sections.  Power-like quantities may
be given either in dB (``P_dB``, ``beta_dB``, ``sigma2_dB``) or linear
(``P``, ``beta``, ``sigma2``); dB values are converted at load time and
all internal math is linear-only.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

from .content import PopularityProfile, zipf_profile
from .geometry import CloudGeometry
from .interference import RadioParams


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """All scalar model parameters, in linear units and meters.

    ``d`` is the distance of the user of interest from its cloud center
    and must not exceed the cloud radius ``D``.
    """

    P: float = 1.0
    alpha_i: float = 2.5
    alpha_o: float = 3.0
    beta: float = 10.0
    lam_p: float = 1e-4
    lam: float = 0.1
    sigma2: float = 1e-3
    D: float = 30.0
    d_g: float = 2.0
    d: float = 10.0
    M: int = 10
    N: int = 20
    N_c: int = 10
    gamma: float = 0.7

    def __post_init__(self):
        problems = []
        try:
            self.radio()
        except ValueError as exc:
            problems.append(str(exc))
        try:
            self.geometry()
        except ValueError as exc:
            problems.append(str(exc))
        if self.d > self.D:
            problems.append(f"user distance d={self.d} outside cloud radius D={self.D}")
        if not 1 <= self.N_c <= self.N:
            problems.append(f"memory size N_c={self.N_c} must lie in [1, N={self.N}]")
        if self.gamma < 0:
            problems.append(f"skewness gamma={self.gamma} must be nonnegative")
        if problems:
            raise ConfigError("; ".join(problems))

    def radio(self) -> RadioParams:
        return RadioParams(
            P=self.P,
            alpha_i=self.alpha_i,
            alpha_o=self.alpha_o,
            sigma2=self.sigma2,
            beta=self.beta,
            lam=self.lam,
            lam_p=self.lam_p,
            M=self.M,
        )

    def geometry(self, x_norm: float | None = None) -> CloudGeometry:
        return CloudGeometry(
            D=self.D, d_g=self.d_g, x_norm=self.d if x_norm is None else x_norm
        )

    def popularity(self) -> PopularityProfile:
        return zipf_profile(self.N, self.gamma)

    def with_updates(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


_DB_KEYS = {"P": "P_dB", "beta": "beta_dB", "sigma2": "sigma2_dB"}
_FLOAT_KEYS = {
    "P",
    "alpha_i",
    "alpha_o",
    "beta",
    "lambda_p",
    "lambda",
    "sigma2",
    "D",
    "d_g",
    "d",
    "gamma",
}
_INT_KEYS = {"M", "N", "N_c"}
_KEY_TO_FIELD = {"lambda": "lam", "lambda_p": "lam_p"}


def load_config(path: str) -> NetworkConfig:
    """Parse an INI scenario file into a validated :class:`NetworkConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    flat: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in flat:
                raise ConfigError(f"{path}: duplicate key {key!r}")
            flat[key] = value

    values: dict[str, float | int] = {}
    for key, db_key in _DB_KEYS.items():
        if key.lower() in flat and db_key.lower() in flat:
            raise ConfigError(f"{path}: give {key} either in dB or linear, not both")
    for key, raw in flat.items():
        base = key
        is_db = False
        for lin, db in _DB_KEYS.items():
            if key == db.lower():
                base, is_db = lin, True
                break
        if base in _FLOAT_KEYS:
            try:
                val = float(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: key {key!r}: {exc}") from exc
            values[_KEY_TO_FIELD.get(base, base)] = (
                db_to_linear(val) if is_db else val
            )
        elif base in _INT_KEYS:
            try:
                values[base] = int(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: key {key!r}: {exc}") from exc
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")

    missing = (
        {_KEY_TO_FIELD.get(k, k) for k in _FLOAT_KEYS | _INT_KEYS}
        - set(values)
    )
    if missing:
        raise ConfigError(f"{path}: missing required keys: {sorted(missing)}")
    try:
        return NetworkConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
