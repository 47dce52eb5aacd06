# sweeps.py
"""
Command bodies behind the CLI: parameter sweeps, fixed-error AoI curves, capacity
reports, URA bound points and the end-to-end validation run. Everything here returns
rows or plain dicts; app.py owns argument parsing, files and exit codes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from mimo.analytic_pep import exact_pep
from mimo.asymptotic import (
    INFINITE_USERS,
    AoiSource,
    age_limited_capacity,
    aoi_at_fixed_error,
    aoi_from_success,
    asymptotic_aoi,
    asymptotic_pep,
    bound_points,
    exact_aoi,
    rho_min,
    success_probability,
    supremum_rho,
)
from mimo.errors import AoiMimoError
from mimo.monte_carlo import AoiMode, RngSpec, empirical_pep, simulate_aoi
from mimo.system_model import SystemConfig, format_config, noise_var_for_snr, validate
from results import CurveRow
from utils import round_sig

logger = logging.getLogger(__name__)

AXES = ("rho", "tau", "N", "zeta", "snr")
AXIS_COLUMN = {"rho": "rho", "tau": "tau", "N": "n_users", "zeta": "zeta", "snr": "snr_db"}
# M is rounded on these axes
REALISED_AXES = ("N", "zeta")
METHODS = ("exact", "asymptotic", "monte_carlo")

CURVE_POINTS = 200
CURVE_SPAN = 3.0

DEFAULT_USER_COUNTS = (100, 1000, 10000, 100000, math.inf)


# =========================
# Models
# =========================

@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: Tuple[Union[int, float], ...]
    fixed: SystemConfig
    methods: Tuple[str, ...] = ("exact", "asymptotic")
    mc_trials: int = 100_000
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self):
        problems = []
        if self.axis not in AXES:
            problems.append(f"axis must be one of {', '.join(AXES)}")
        if not self.grid:
            problems.append("grid must be non-empty")
        else:
            steps = np.diff(np.asarray(self.grid, dtype=float))
            if not (np.all(steps > 0) or np.all(steps < 0)):
                problems.append("grid must be strictly monotone")
        if not self.methods:
            problems.append("methods must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            problems.append(f"unknown methods: {', '.join(unknown)}")
        if self.mc_trials < 1:
            problems.append("mc_trials must be ≥ 1")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def column(self) -> str:
        return AXIS_COLUMN[self.axis]


def config_at(spec: SweepSpec, value) -> SystemConfig:
    """
    Fixed config with the swept parameter replaced. N and zeta sweeps round M = zeta N to
    an integer; pep rows on those axes carry the n_antennas and zeta actually evaluated.
    """
    base = spec.fixed
    if spec.axis == "rho":
        return base.with_updates(spectral_eff=float(value))
    if spec.axis == "tau":
        return base.with_updates(attempt_prob=float(value))
    if spec.axis == "N":
        n = int(value)
        return base.with_updates(n_users=n, n_antennas=max(1, round(base.zeta * n)))
    if spec.axis == "zeta":
        config = base.with_updates(n_antennas=max(1, round(float(value) * base.n_users)))
        if not math.isclose(config.zeta, float(value), rel_tol=1e-12):
            logger.warning(f"zeta={value} with N={base.n_users} is evaluated at zeta={config.zeta:.6g} (M={config.n_antennas})")
        return config
    return base.with_updates(noise_var=noise_var_for_snr(base.tx_power, float(value)))


# =========================
# pep
# =========================

def _method_point(method: str, config: SystemConfig, spec: SweepSpec, index: int):
    """(p_e, delta, ci) for one method at one grid point."""
    if method == "exact":
        pep = exact_pep(config)
        return pep.p_e, exact_aoi(config, pep).delta, None
    if method == "asymptotic":
        return asymptotic_pep(config).p_e, asymptotic_aoi(config).delta, None
    rng = RngSpec(spec.rng.master_seed, stream_id=index)
    pep = empirical_pep(config, spec.mc_trials, rng)
    delta = aoi_from_success(success_probability(config, pep), AoiSource.SIMULATED).delta
    return pep.p_e, delta, pep.ci_halfwidth


def pep_row(spec: SweepSpec, index: int, value) -> CurveRow:
    pe: Dict[str, Optional[float]] = {}
    aoi: Dict[str, Optional[float]] = {}
    ci = None
    try:
        config = config_at(spec, value)
        validate(config)
    except AoiMimoError as e:
        logger.warning(f"{spec.column}={value}: {e}; row set to NA")
        config = None

    for method in spec.methods:
        pe[method] = aoi[method] = None
        if config is None:
            continue
        try:
            p_e, delta, half = _method_point(method, config, spec, index)
        except AoiMimoError as e:
            logger.warning(f"{spec.column}={value} ({method}): {e}; value set to NA")
            continue
        pe[method], aoi[method] = round_sig(p_e), round_sig(delta)
        if method == "monte_carlo":
            ci = round_sig(half)

    cells: List[Tuple[str, object]] = [(spec.column, value if spec.axis == "N" else round_sig(float(value)))]
    if spec.axis in REALISED_AXES:
        cells.append(("n_antennas", config.n_antennas if config else None))
        cells.append(("zeta_evaluated", round_sig(config.zeta) if config else None))
    cells += [(f"pe_{m}", pe[m]) for m in spec.methods]
    if "monte_carlo" in spec.methods:
        cells.append(("ci_monte_carlo", ci))
    cells += [(f"aoi_{m}", aoi[m]) for m in spec.methods]
    return CurveRow.from_pairs(cells)


def run_pep_sweep(spec: SweepSpec) -> List[CurveRow]:
    """One row per grid point, in grid order. Monte Carlo uses stream_id = grid index."""
    logger.info(f"pep sweep over {spec.column} ({len(spec.grid)} points, methods {', '.join(spec.methods)})")
    return [pep_row(spec, i, value) for i, value in enumerate(spec.grid)]


# =========================
# aoi-curve
# =========================

def _check_eps(eps: float) -> None:
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")


def default_rho_grid(eps: float, zeta: float, n_users) -> List[float]:
    """
    Finite N: CURVE_POINTS rates from rho_min up CURVE_SPAN bits. N = inf: from half of
    log2(1 + zeta) (where tau saturates at 1) to CURVE_SPAN bits past it.
    """
    if math.isinf(n_users):
        top = age_limited_capacity(1.0, zeta)
        start, stop = 0.5 * top, top + CURVE_SPAN
    else:
        start = rho_min(eps, int(n_users), zeta)
        stop = start + CURVE_SPAN
    # unrounded: the first finite-N point must sit exactly on rho_min
    return [float(x) for x in np.linspace(start, stop, CURVE_POINTS)]


def _curve_row(n_users, rho, tau, delta) -> CurveRow:
    return CurveRow.of(n_users=n_users, rho=rho, tau_eps=tau, delta=delta)


def aoi_curve_rows(
    eps: float,
    zeta: float,
    n_list: Sequence = DEFAULT_USER_COUNTS,
    rho_grid: Optional[Sequence[float]] = None,
) -> List[CurveRow]:
    """
    AoI along the fixed-error curve for every N in n_list (math.inf for the
    error-free large-system curve). Rates below rho_min become NA rows.
    """
    _check_eps(eps)
    if zeta <= 0:
        raise ValueError("zeta must be > 0")

    rows: List[CurveRow] = []
    for n in n_list:
        if n == INFINITE_USERS:
            n = math.inf
        key = INFINITE_USERS if math.isinf(n) else int(n)
        label = math.inf if math.isinf(n) else int(n)
        try:
            grid = list(rho_grid) if rho_grid is not None else default_rho_grid(eps, zeta, n)
        except AoiMimoError as e:
            logger.warning(f"N={n}: {e}; curve set to NA")
            rows.append(_curve_row(label, None, None, None))
            continue

        for rho in grid:
            try:
                point = aoi_at_fixed_error(eps, rho, zeta, key)
            except (AoiMimoError, ValueError) as e:
                logger.warning(f"N={n}, rho={rho:g}: {e}; point set to NA")
                rows.append(_curve_row(label, round_sig(rho), None, None))
                continue
            rows.append(_curve_row(label, round_sig(rho), round_sig(point.tau_eps), round_sig(point.delta)))
    return rows


# =========================
# capacity / ura-points
# =========================

def capacity_report(tau: float, zeta: float, eps: Optional[float] = None, n_users: Optional[int] = None) -> Dict[str, float]:
    """
    Age-limited capacity, plus the supremum rate and its gap to capacity when both eps
    and N are given. Case 2 raises NoValidSolutionError.
    """
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must be in (0,1]")
    if zeta <= 0:
        raise ValueError("zeta must be > 0")
    if (eps is None) != (n_users is None):
        raise ValueError("eps and N must be given together")

    report = {"tau": tau, "zeta": zeta, "capacity": round_sig(age_limited_capacity(tau, zeta))}
    if eps is not None:
        _check_eps(eps)
        sup = supremum_rho(eps, n_users, zeta, tau)
        report.update(
            eps=eps,
            n_users=n_users,
            supremum_rho=round_sig(sup),
            gap=round_sig(age_limited_capacity(tau, zeta) - sup),
        )
    return report


def ura_points(m_list: Sequence[int], ka_list: Sequence[int]) -> List[CurveRow]:
    """Bound points (M, K_a, log2(1 + M/K_a))."""
    if len(m_list) != len(ka_list):
        raise ValueError("M and K_a lists must have equal length")
    if any(m < 1 for m in m_list) or any(k < 1 for k in ka_list):
        raise ValueError("M and K_a must be ≥ 1")
    return [CurveRow.of(m=m, ka=ka, bound=round_sig(c)) for m, ka, c in bound_points(list(zip(m_list, ka_list)))]


# =========================
# validate
# =========================

AOI_REL_TOL = 0.02


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float

    @property
    def margin(self) -> float:
        return self.limit - self.value

    def as_dict(self) -> Dict[str, object]:
        # JSON has no inf; an unbounded value is reported as null
        def finite(x: float) -> Optional[float]:
            return round_sig(x) if math.isfinite(x) else None

        return {
            "name": self.name,
            "passed": self.passed,
            "value": finite(self.value),
            "limit": finite(self.limit),
            "margin": finite(self.margin),
        }


def _check(name: str, value: float, limit: float) -> Check:
    return Check(name=name, passed=bool(value <= limit), value=value, limit=limit)


def run_validation(config: SystemConfig, trials: int, rng: RngSpec, ci_scale: float = 1.0) -> Dict[str, object]:
    """
    Cross-checks at one operating point:
      - exact_vs_monte_carlo: |exact - empirical| within ci_scale * CI half-width
      - asymptotic_vs_exact: |asymptotic - exact| within 1/sqrt(N)
      - aoi_physical_vs_exact: simulated AoI within 2% of 1/(tau (1 - exact p_e)),
        over `trials` slots

    Numerical errors (including insufficient samples) propagate to the caller.
    """
    validate(config)
    exact = exact_pep(config)
    mc = empirical_pep(config, trials, rng)
    asym = asymptotic_pep(config)
    expected_aoi = exact_aoi(config, exact)
    simulated = simulate_aoi(config, trials, rng, AoiMode.physical())

    if expected_aoi.unbounded:
        aoi_check = Check("aoi_physical_vs_exact", False, math.inf, AOI_REL_TOL)
    else:
        rel = abs(simulated.delta - expected_aoi.delta) / expected_aoi.delta
        aoi_check = _check("aoi_physical_vs_exact", rel, AOI_REL_TOL)

    checks = [
        _check("exact_vs_monte_carlo", abs(exact.p_e - mc.p_e), ci_scale * mc.ci_halfwidth),
        _check("asymptotic_vs_exact", abs(asym.p_e - exact.p_e), 1.0 / math.sqrt(config.n_users)),
        aoi_check,
    ]
    for c in checks:
        if not c.passed:
            logger.warning(f"check {c.name} failed: {c.value:.4g} > {c.limit:.4g}")

    return {
        "config": format_config(config).strip().splitlines(),
        "trials": trials,
        "seed": rng.master_seed,
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
    }
