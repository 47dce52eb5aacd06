# mimo/system_model.py
"""
Operating point of the slotted massive-MIMO random access system.

N single-antenna users, an M-antenna base station with maximal ratio combining,
per-slot attempt probability tau, transmit power P, noise variance sigma_w^2 and a
target spectral efficiency rho. The slot length is normalised to 1, so every age is
a slot count. Only the ratio beta = sigma_w^2 / P enters the analysis; P and
sigma_w^2 are carried in watts.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Tuple, Union

from mimo.errors import ConfigError, UnboundedAlphaError
from utils import parse_float_strict, parse_int_strict

CONFIG_KEYS = (
    "n_users",
    "n_antennas",
    "attempt_prob",
    "tx_power",
    "noise_var",
    "spectral_eff",
)
INT_KEYS = {"n_users", "n_antennas"}


# =========================
# Models
# =========================

@dataclass(frozen=True)
class SystemConfig:
    n_users: int
    n_antennas: int
    attempt_prob: float
    tx_power: float
    noise_var: float
    spectral_eff: float

    @property
    def zeta(self) -> float:
        return self.n_antennas / self.n_users

    def with_updates(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    zeta: float
    alpha_rho: float  # math.inf iff spectral_eff == 0, see alpha_unbounded
    beta: float
    alpha_unbounded: bool = False

    def finite_alpha(self) -> float:
        if self.alpha_unbounded:
            raise UnboundedAlphaError(
                "spectral_eff = 0 gives an unbounded alpha_rho; this operation needs spectral_eff > 0"
            )
        return self.alpha_rho


DEFAULT_CONFIG = SystemConfig(
    n_users=8,
    n_antennas=8,
    attempt_prob=0.5,
    tx_power=1.0,
    noise_var=0.1,
    spectral_eff=1.0,
)


# =========================
# Validation rules
# =========================

def _is_int(value) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_real(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool) and math.isfinite(value)


def check_n_users(value) -> Tuple[bool, str]:
    if not _is_int(value) or value < 1:
        return False, "n_users must be ≥ 1"
    return True, ""


def check_n_antennas(value) -> Tuple[bool, str]:
    if not _is_int(value) or value < 1:
        return False, "n_antennas must be ≥ 1"
    return True, ""


def check_attempt_prob(value) -> Tuple[bool, str]:
    if not _is_real(value) or not (0.0 < value <= 1.0):
        return False, "attempt_prob must be in (0,1]"
    return True, ""


def check_tx_power(value) -> Tuple[bool, str]:
    if not _is_real(value) or value <= 0.0:
        return False, "tx_power must be > 0"
    return True, ""


def check_noise_var(value) -> Tuple[bool, str]:
    if not _is_real(value) or value < 0.0:
        return False, "noise_var must be ≥ 0"
    return True, ""


def check_spectral_eff(value) -> Tuple[bool, str]:
    if not _is_real(value) or value < 0.0:
        return False, "spectral_eff must be ≥ 0"
    return True, ""


FIELD_CHECKS = {
    "n_users": check_n_users,
    "n_antennas": check_n_antennas,
    "attempt_prob": check_attempt_prob,
    "tx_power": check_tx_power,
    "noise_var": check_noise_var,
    "spectral_eff": check_spectral_eff,
}


def validate(config: SystemConfig) -> None:
    """Raise ConfigError listing every violated invariant; return None when all hold."""
    problems: List[Tuple[str, str]] = []
    for f in fields(SystemConfig):
        ok, err = FIELD_CHECKS[f.name](getattr(config, f.name))
        if not ok:
            problems.append((f.name, err))
    if problems:
        raise ConfigError(problems)


def derive(config: SystemConfig) -> DerivedParams:
    """zeta = M/N, alpha_rho = 1/(2^rho - 1), beta = sigma_w^2 / P."""
    validate(config)
    zeta = config.zeta
    beta = config.noise_var / config.tx_power
    if config.spectral_eff == 0:
        return DerivedParams(zeta=zeta, alpha_rho=math.inf, beta=beta, alpha_unbounded=True)
    return DerivedParams(zeta=zeta, alpha_rho=alpha_of_rho(config.spectral_eff), beta=beta)


def alpha_of_rho(rho: float) -> float:
    if rho < 0.5:
        # expm1 keeps full precision for small rho
        return 1.0 / math.expm1(rho * math.log(2.0))
    return 1.0 / (2.0 ** rho - 1.0)


def rho_of_alpha(alpha: float) -> float:
    return math.log2(1.0 + 1.0 / alpha)


def noise_var_for_snr(tx_power: float, snr_db: float) -> float:
    return tx_power * 10.0 ** (-snr_db / 10.0)


# =========================
# Config files
# =========================

def parse_config_text(text: str) -> Dict[str, Union[int, float]]:
    """
    Parse flat key=value text into a dict of the keys present.

    Blank lines and '#' comments are skipped. Unknown keys, repeated keys and values
    that are not strict numbers are all reported together.
    """
    values: Dict[str, Union[int, float]] = {}
    problems: List[Tuple[str, str]] = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append((f"line {lineno}", f"line {lineno}: expected key=value"))
            continue
        raw_key, raw_value = line.split("=", 1)
        key = raw_key.strip()
        if key not in CONFIG_KEYS:
            problems.append((key, f"unknown key '{key}'"))
            continue
        if key in values:
            problems.append((key, f"duplicate key '{key}'"))
            continue
        parsed = parse_int_strict(raw_value) if key in INT_KEYS else parse_float_strict(raw_value)
        if parsed is None:
            problems.append((key, f"{key}: cannot parse '{raw_value.strip()}'"))
            continue
        values[key] = float(parsed) if key not in INT_KEYS else parsed

    if problems:
        raise ConfigError(problems)
    return values


def load_config(path: Union[str, Path], base: SystemConfig = DEFAULT_CONFIG) -> SystemConfig:
    text = Path(path).read_text(encoding="utf-8")
    return base.with_updates(**parse_config_text(text))


def format_config(config: SystemConfig) -> str:
    return "".join(f"{key}={getattr(config, key)}\n" for key in CONFIG_KEYS)
