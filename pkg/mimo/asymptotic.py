# mimo/asymptotic.py
"""
Large-system results: N, M -> infinity with zeta = M/N fixed.

The success probability of a transmitting user tends to Q(w) with

    w = sqrt(N) (tau - alpha_rho zeta) / sqrt(alpha_rho^2 zeta + tau),

so p_e = 1 - Q(w) = Q(-w). Every value returned here drops the O(1/sqrt(N)) terms of
the expansion (O(N^-1.5) for the supremum rate); compare against exact values at that
order.

Error targets eps are restricted to (0, 0.5) so that Q^-1(eps) > 0.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from mimo.analytic_pep import Method, PepResult, exact_pep
from mimo.errors import BelowMinimumRateError, NoValidSolutionError
from mimo.system_model import SystemConfig, alpha_of_rho, derive, rho_of_alpha

logger = logging.getLogger(__name__)

INFINITE_USERS = "inf"
UserCount = Union[int, str]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Rational approximation of the standard normal quantile (Acklam); relative error
# below 1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


class AoiSource(str, enum.Enum):
    ANALYTIC_ASYMPTOTIC = "analytic_asymptotic"
    ANALYTIC_EXACT = "analytic_exact"
    SIMULATED = "simulated"


@dataclass(frozen=True)
class AoiEstimate:
    """Average age in slots. `unbounded` flags a success probability that underflowed to 0."""

    delta: float
    source: AoiSource
    per_user: Optional[Tuple[float, ...]] = None
    unbounded: bool = False

    def __post_init__(self):
        if self.unbounded:
            if not math.isinf(self.delta):
                raise ValueError("an unbounded AoI carries delta = inf")
            return
        if not self.delta >= 1.0:
            raise ValueError(f"AoI must be ≥ 1 slot, got {self.delta}")
        if self.per_user is not None:
            if not self.per_user:
                raise ValueError("per_user must be non-empty when present")
            if any(d < 1.0 for d in self.per_user):
                raise ValueError("every per-user AoI must be ≥ 1 slot")
            mean = math.fsum(self.per_user) / len(self.per_user)
            if not math.isclose(mean, self.delta, rel_tol=1e-12):
                raise ValueError("delta must equal the mean of per_user")


@dataclass(frozen=True)
class TradeoffPoint:
    rho: float
    tau_eps: float
    delta: float
    n_users: UserCount

    @property
    def infinite_users(self) -> bool:
        return self.n_users == INFINITE_USERS


# =========================
# Q-function family
# =========================

def q_func(x: float) -> float:
    """Gaussian tail Pr{N(0,1) >= x}."""
    return 0.5 * math.erfc(x / _SQRT2)


def _normal_quantile_guess(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def q_inv(p: float) -> float:
    """Inverse of q_func on (0, 1): rational initial guess plus two Newton steps."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"q_inv needs p in (0,1), got {p}")
    if p == 0.5:
        return 0.0
    # Q^-1(p) = Phi^-1(1 - p) = -Phi^-1(p)
    x = -_normal_quantile_guess(p)
    for _ in range(2):
        density = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
        x += (q_func(x) - p) / density
    return x


# =========================
# Large-system PEP and AoI
# =========================

def w_argument(N: int, zeta: float, tau: float, alpha_rho: float) -> float:
    """Argument of the success probability Q(w); p_e = 1 - Q(w)."""
    return math.sqrt(N) * (tau - alpha_rho * zeta) / math.sqrt(alpha_rho * alpha_rho * zeta + tau)


def _pep_at(N: int, zeta: float, tau: float, alpha_rho: float) -> float:
    # 1 - Q(w) = Q(-w) keeps tiny error probabilities exact
    return q_func(-w_argument(N, zeta, tau, alpha_rho))


def asymptotic_pep(config: SystemConfig) -> PepResult:
    """p_e = 1 - Q(w), up to O(1/sqrt(N))."""
    derived = derive(config)
    alpha = derived.finite_alpha()
    p_e = _pep_at(config.n_users, derived.zeta, config.attempt_prob, alpha)
    return PepResult(p_e=p_e, method=Method.ASYMPTOTIC)


def aoi_from_success(gamma: float, source: AoiSource) -> AoiEstimate:
    """Delta = 1/gamma for a per-slot update probability gamma; 0 is flagged unbounded."""
    if gamma <= 0.0:
        return AoiEstimate(delta=math.inf, source=source, unbounded=True)
    return AoiEstimate(delta=max(1.0 / gamma, 1.0), source=source)


def asymptotic_aoi(config: SystemConfig) -> AoiEstimate:
    """
    Delta = 1 / (tau (1 - Q(sqrt(N)(alpha zeta - tau)/sqrt(alpha^2 zeta + tau)))), up to
    O(1/sqrt(N)). By 1 - Q(-a) = Q(a) the bracket is the success probability Q(w).
    """
    derived = derive(config)
    alpha = derived.finite_alpha()
    w = w_argument(config.n_users, derived.zeta, config.attempt_prob, alpha)
    success = q_func(w)
    if success == 0.0:
        logger.warning(f"asymptotic success probability underflowed at w={w:.3f}; AoI unbounded")
    return aoi_from_success(config.attempt_prob * success, AoiSource.ANALYTIC_ASYMPTOTIC)


def success_probability(config: SystemConfig, pep: PepResult) -> float:
    """Per-slot update probability gamma = tau (1 - p_e)."""
    return config.attempt_prob * (1.0 - pep.p_e)


def exact_aoi(config: SystemConfig, pep: Optional[PepResult] = None) -> AoiEstimate:
    """Finite-system AoI 1/(tau (1 - p_e)) with p_e from the exact analysis, reusing `pep` when given."""
    gamma = success_probability(config, pep if pep is not None else exact_pep(config))
    return aoi_from_success(gamma, AoiSource.ANALYTIC_EXACT)


def clt_pep(config: SystemConfig, nodes: int = 64) -> float:
    """
    Intermediate approximation that keeps the Gaussian spread of the active-user count:
    p_e = 1 - E_s[Q(w(s))] with k = (N-1) tau + s sqrt((N-1) tau (1-tau)), s ~ N(0,1),

        w(s) = (beta - alpha M + k) / sqrt(alpha^2 M + k),

    averaged with probabilists' Gauss-Hermite nodes. Reference only; error O(1/sqrt(N)).
    """
    derived = derive(config)
    alpha = derived.finite_alpha()
    n = config.n_users - 1
    tau = config.attempt_prob
    M = config.n_antennas
    s, weights = np.polynomial.hermite_e.hermegauss(nodes)
    k = np.clip(n * tau + s * math.sqrt(n * tau * (1.0 - tau)), 0.0, None)
    w = (derived.beta - alpha * M + k) / np.sqrt(alpha * alpha * M + k)
    failure = 0.5 * special.erfc(-w / _SQRT2)
    return float(np.clip(np.dot(weights, failure) / math.sqrt(2.0 * math.pi), 0.0, 1.0))


# =========================
# Capacity and supremum rate
# =========================

def _check_eps(eps: float) -> float:
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")
    return q_inv(eps)


def _check_case_one(q2_over_n: float, zeta: float, eps: float, N: int) -> None:
    if zeta <= q2_over_n:
        raise NoValidSolutionError(
            f"no valid solutions: zeta={zeta:g} ≤ Q^-1({eps:g})^2/N={q2_over_n:.6g} for N={N}"
        )


def alpha_rho_plus(eps: float, N: int, zeta: float, tau: float) -> float:
    """
    Positive root alpha_rho^+ of the quadratic that p_e = eps imposes on alpha_rho;
    p_e < eps holds for alpha_rho > alpha_rho^+. Requires zeta > Q^-1(eps)^2 / N.
    """
    q = _check_eps(eps)
    q2n = q * q / N
    _check_case_one(q2n, zeta, eps, N)
    disc = tau * tau - tau * (1.0 - q2n / zeta) * (tau - q2n)
    return (tau + math.sqrt(max(disc, 0.0))) / (zeta - q2n)


def supremum_rho(eps: float, N: int, zeta: float, tau: float) -> float:
    """Largest rate with asymptotic p_e < eps: log2(1 + 1/alpha_rho^+), up to O(N^-1.5)."""
    return rho_of_alpha(alpha_rho_plus(eps, N, zeta, tau))


def age_limited_capacity(tau: float, zeta: float) -> float:
    """C = log2(1 + zeta/tau): below it p_e -> 0 and Delta -> 1/tau as N grows, above it p_e -> 1."""
    return math.log2(1.0 + zeta / tau)


def phi(rho: float, tau: float, zeta: float) -> float:
    """(alpha_rho zeta - tau)/sqrt(alpha_rho^2 zeta + tau); positive below capacity, negative above."""
    alpha = alpha_of_rho(rho)
    return (alpha * zeta - tau) / math.sqrt(alpha * alpha * zeta + tau)


def phi_at_capacity_offset(delta: float, tau: float, zeta: float) -> float:
    """phi(C - delta) in closed form; a negative delta gives phi(C + |delta|)."""
    c = age_limited_capacity(tau, zeta)
    rate = c - delta
    numerator = -(zeta + tau) * math.expm1(-delta * math.log(2.0))
    return numerator / math.sqrt(zeta + tau * (2.0 ** rate - 1.0) ** 2)


# =========================
# Fixed-error trade-off
# =========================

def rho_min(eps: float, N: int, zeta: float) -> float:
    """Smallest rate for which some tau in (0, 1] meets p_e = eps: supremum_rho at tau = 1."""
    return supremum_rho(eps, N, zeta, 1.0)


def tau_for_error(eps: float, rho: float, zeta: float, N: int) -> float:
    """
    Attempt probability at which the asymptotic p_e equals eps (minus-branch root):

        tau_eps = a - sqrt(a^2 - alpha^2 zeta (zeta - Q^-1(eps)^2/N)),  a = alpha zeta + Q^-1(eps)^2/(2N)

    evaluated as a quotient to avoid cancellation. Valid for rho >= rho_min(eps, N, zeta).
    """
    q = _check_eps(eps)
    q2n = q * q / N
    _check_case_one(q2n, zeta, eps, N)
    floor = rho_min(eps, N, zeta)
    if rho < floor:
        raise BelowMinimumRateError(
            f"rho={rho:g} is below minimum spectral efficiency for this ε "
            f"(rho_min={floor:.6g} at eps={eps:g}, N={N})"
        )
    alpha = alpha_of_rho(rho)
    a = alpha * zeta + 0.5 * q2n
    c = alpha * alpha * zeta * (zeta - q2n)
    root = c / (a + math.sqrt(a * a - c))
    return min(root, 1.0)


def aoi_at_fixed_error(eps: float, rho: float, zeta: float, N: UserCount) -> TradeoffPoint:
    """
    AoI on the fixed-error curve: 1/(tau_eps (1 - eps)) for finite N (up to O(1/sqrt(N)));
    for N = "inf" the error vanishes and tau = min(alpha_rho zeta, 1), so Delta = 1/tau.
    """
    if N == INFINITE_USERS:
        if rho <= 0:
            raise ValueError("rho must be > 0")
        tau = min(alpha_of_rho(rho) * zeta, 1.0)
        return TradeoffPoint(rho=rho, tau_eps=tau, delta=1.0 / tau, n_users=INFINITE_USERS)

    tau = tau_for_error(eps, rho, zeta, N)
    return TradeoffPoint(rho=rho, tau_eps=tau, delta=1.0 / (tau * (1.0 - eps)), n_users=N)


def bound_points(pairs: Sequence[Tuple[int, int]]) -> Sequence[Tuple[int, int, float]]:
    """(M, K_a, log2(1 + M/K_a)): the capacity with K_a = N tau active users on average."""
    return [(m, ka, age_limited_capacity(1.0, m / ka)) for m, ka in pairs]
