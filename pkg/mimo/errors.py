# mimo/errors.py
from __future__ import annotations

from typing import List, Tuple


class AoiMimoError(Exception):
    """Base class for every error raised by the analysis and simulation code."""


class ConfigError(AoiMimoError, ValueError):
    """
    One or more SystemConfig invariants failed.

    `problems` keeps one (field, message) pair per violated invariant.
    """

    def __init__(self, problems: List[Tuple[str, str]]):
        self.problems = list(problems)
        super().__init__("; ".join(msg for _, msg in self.problems))

    @property
    def fields(self) -> List[str]:
        return [field for field, _ in self.problems]


class UnboundedAlphaError(AoiMimoError, ValueError):
    """spectral_eff = 0 makes alpha_rho infinite; the operation needs it finite."""


class NoValidSolutionError(AoiMimoError, ValueError):
    """zeta <= Q^-1(eps)^2 / N: the error target cannot be met at any rate."""


class BelowMinimumRateError(AoiMimoError, ValueError):
    """rho is below rho_min(eps, N, zeta), so no attempt probability in (0, 1] works."""


class QuadratureError(AoiMimoError, ArithmeticError):
    def __init__(self, message: str, abserr: float):
        self.abserr = abserr
        super().__init__(f"{message} (achieved error estimate {abserr:.3e})")


class InsufficientSamplesError(AoiMimoError, RuntimeError):
    """No trial had the designated user active, so the PEP is undefined."""
