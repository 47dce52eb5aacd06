import math

import numpy as np
import pytest

from mimo.analytic_pep import exact_pep
from mimo.asymptotic import (
    INFINITE_USERS,
    AoiEstimate,
    AoiSource,
    age_limited_capacity,
    alpha_rho_plus,
    aoi_at_fixed_error,
    aoi_from_success,
    asymptotic_aoi,
    asymptotic_pep,
    clt_pep,
    exact_aoi,
    phi,
    phi_at_capacity_offset,
    q_func,
    q_inv,
    rho_min,
    supremum_rho,
    tau_for_error,
    w_argument,
)
from mimo.errors import BelowMinimumRateError, NoValidSolutionError
from mimo.system_model import SystemConfig, alpha_of_rho, noise_var_for_snr


def _config(n_users, n_antennas, tau=0.5, rho=1.0, snr_db=10.0):
    return SystemConfig(
        n_users=n_users, n_antennas=n_antennas, attempt_prob=tau, tx_power=1.0,
        noise_var=noise_var_for_snr(1.0, snr_db), spectral_eff=rho,
    )


def _bisect_q_inv(p, lo=-40.0, hi=40.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q_func(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- Q-function family ---

def test_q_func_values():
    assert q_func(0.0) == 0.5
    assert q_func(10.0) < 1e-23
    assert q_func(1.0) == pytest.approx(0.15865525393145705, rel=1e-14)


def test_q_func_reflection_identity():
    for a in np.linspace(-8.0, 8.0, 161):
        assert 1.0 - q_func(-a) == pytest.approx(q_func(a), abs=1e-14)


def test_q_inv_values():
    assert q_inv(0.5) == 0.0
    assert q_inv(0.01) == pytest.approx(2.32634787404084, abs=1e-9)
    assert q_inv(0.01) == pytest.approx(_bisect_q_inv(0.01), abs=1e-12)


def test_q_inv_round_trip():
    for x in np.linspace(-6.0, 6.0, 49):
        density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        # below zero p = Q(x) sits near 1 and carries an absolute error of ~eps
        tol = 1e-12 + 4.0 * np.finfo(float).eps / density if x < 0 else 1e-12
        assert q_inv(q_func(x)) == pytest.approx(x, abs=tol)


@pytest.mark.parametrize("p", [1e-300, 1e-15, 1e-6, 0.01, 0.02425, 0.3, 0.7, 0.9])
def test_q_inv_relative_accuracy(p):
    assert q_func(q_inv(p)) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_q_inv_rejects_out_of_range(p):
    with pytest.raises(ValueError):
        q_inv(p)


# --- large-system PEP and AoI ---

def test_w_argument_example():
    expected = math.sqrt(100) * (0.5 - 0.7) / math.sqrt(0.7 + 0.5)
    assert w_argument(100, 0.7, 0.5, 1.0) == pytest.approx(expected, rel=1e-15)
    assert w_argument(100, 0.7, 0.5, 1.0) == pytest.approx(-1.82574185835, rel=1e-10)


def test_w_argument_sign_and_growth():
    assert w_argument(100, 0.5, 0.5, 1.0) == 0.0
    small = w_argument(100, 0.3, 0.5, 1.0)
    large = w_argument(400, 0.3, 0.5, 1.0)
    assert small > 0
    assert large == pytest.approx(2.0 * small, rel=1e-14)


def test_asymptotic_pep_at_threshold_is_half():
    # tau = alpha_rho * zeta with alpha_rho = 1, zeta = 0.5
    assert asymptotic_pep(_config(10, 5, tau=0.5, rho=1.0)).p_e == 0.5


def test_asymptotic_aoi_example():
    expected = 1.0 / (0.5 * (1.0 - q_func(1.82574185835055)))
    estimate = asymptotic_aoi(_config(100, 70))
    assert estimate.delta == pytest.approx(expected, rel=1e-10)
    assert estimate.source is AoiSource.ANALYTIC_ASYMPTOTIC


def test_asymptotic_aoi_consistent_with_pep():
    for n, m, rho in [(100, 70, 1.0), (1000, 700, 1.5), (64, 16, 0.3)]:
        config = _config(n, m, rho=rho)
        success = q_func(w_argument(n, m / n, 0.5, alpha_of_rho(rho)))
        assert asymptotic_aoi(config).delta == pytest.approx(1.0 / (0.5 * success), rel=1e-12)
        # 1 - p_e cancels when p_e is near 1
        pep = asymptotic_pep(config).p_e
        assert asymptotic_aoi(config).delta == pytest.approx(1.0 / (0.5 * (1.0 - pep)), rel=1e-8)


def test_asymptotic_aoi_tends_to_minimum():
    # rho well below capacity: p_e -> 0, Delta -> 1/tau
    assert asymptotic_aoi(_config(100000, 70000, rho=0.5)).delta == pytest.approx(2.0, rel=1e-12)


def test_asymptotic_aoi_flags_underflow():
    estimate = asymptotic_aoi(_config(10000, 7000, rho=20.0))
    assert estimate.unbounded
    assert math.isinf(estimate.delta)


def test_phase_transition():
    tau, zeta, delta = 0.5, 0.7, 0.05
    capacity = age_limited_capacity(tau, zeta)
    ladder = [100, 1000, 10000, 100000]
    below = [asymptotic_pep(_config(n, round(zeta * n), tau=tau, rho=capacity - delta)).p_e for n in ladder]
    above = [asymptotic_pep(_config(n, round(zeta * n), tau=tau, rho=capacity + delta)).p_e for n in ladder]

    assert all(a > b for a, b in zip(below, below[1:]))
    assert all(a < b for a, b in zip(above, above[1:]))
    assert below[-1] < 1e-3
    assert above[-1] > 1.0 - 1e-3


@pytest.mark.slow
def test_exact_minus_asymptotic_decays_like_inverse_sqrt_n():
    ladder = [64, 256, 1024]
    scaled = []
    for n in ladder:
        config = _config(n, round(0.7 * n), tau=0.5, rho=0.7)
        gap = abs(exact_pep(config).p_e - asymptotic_pep(config).p_e)
        scaled.append(gap * math.sqrt(n))
    assert all(s <= 3.0 * scaled[0] for s in scaled)


def test_clt_reference_near_threshold():
    # tau = alpha_rho * zeta: the activity spread averages out around one half
    config = _config(10000, 5000, tau=0.5, rho=1.0)
    assert clt_pep(config) == pytest.approx(0.5, abs=0.01)
    assert asymptotic_pep(config).p_e == 0.5


def test_clt_reference_in_range():
    for rho in (0.25, 1.0, 2.0):
        value = clt_pep(_config(16, 8, rho=rho))
        assert 0.0 <= value <= 1.0


def test_exact_aoi_matches_success_probability():
    config = _config(8, 8)
    estimate = exact_aoi(config)
    assert estimate.source is AoiSource.ANALYTIC_EXACT
    assert estimate.delta == pytest.approx(1.0 / (0.5 * (1.0 - exact_pep(config).p_e)), rel=1e-14)


def test_aoi_from_success():
    assert aoi_from_success(1.0, AoiSource.SIMULATED).delta == 1.0
    assert aoi_from_success(0.25, AoiSource.SIMULATED).delta == 4.0
    assert aoi_from_success(0.0, AoiSource.SIMULATED).unbounded


# --- capacity and supremum rate ---

def test_alpha_rho_plus_fixed_point():
    eps, n, zeta, tau = 0.01, 10000, 0.7, 0.5
    rho = math.log2(1.0 + 1.0 / alpha_rho_plus(eps, n, zeta, tau))
    assert asymptotic_pep(_config(n, 7000, tau=tau, rho=rho)).p_e == pytest.approx(eps, abs=1e-6)


def test_alpha_rho_plus_case_boundary():
    eps, n = 0.01, 1000
    q = q_inv(eps)
    with pytest.raises(NoValidSolutionError) as exc:
        alpha_rho_plus(eps, n, q * q / n, 0.5)
    assert "no valid solutions" in str(exc.value)


def test_alpha_rho_plus_large_n_limit():
    tau, zeta = 0.5, 0.7
    assert alpha_rho_plus(0.01, 10 ** 12, zeta, tau) == pytest.approx(tau / zeta, rel=1e-5)


@pytest.mark.parametrize("eps", [0.0, 0.5, 0.7])
def test_eps_range_enforced(eps):
    with pytest.raises(ValueError):
        supremum_rho(eps, 1000, 0.7, 0.5)


def test_supremum_rho_is_error_target():
    eps, n, zeta, tau = 0.01, 10000, 0.7, 0.5
    rho = supremum_rho(eps, n, zeta, tau)
    assert asymptotic_pep(_config(n, 7000, tau=tau, rho=rho)).p_e == pytest.approx(eps, abs=1e-9)
    assert asymptotic_pep(_config(n, 7000, tau=tau, rho=rho - 1e-3)).p_e < eps
    assert asymptotic_pep(_config(n, 7000, tau=tau, rho=rho + 1e-3)).p_e > eps


def test_supremum_rho_closed_form():
    for eps, n, zeta, tau in [(0.01, 1000, 0.7, 0.5), (0.1, 100, 1.5, 0.2), (0.001, 10 ** 5, 0.3, 0.9)]:
        q2n = q_inv(eps) ** 2 / n
        closed = math.log2(
            1.0 + (zeta - q2n) / (tau + math.sqrt(tau * tau + tau * (1.0 - q2n / zeta) * (q2n - tau)))
        )
        assert supremum_rho(eps, n, zeta, tau) == pytest.approx(closed, abs=1e-9)


def test_supremum_rho_monotonicity():
    n = 1000
    eps_values = [0.001, 0.01, 0.05, 0.1, 0.3]
    zeta_values = [0.3, 0.5, 0.7, 1.0, 2.0]
    tau_values = [0.1, 0.3, 0.5, 0.8, 1.0]

    by_eps = [supremum_rho(e, n, 0.7, 0.5) for e in eps_values]
    by_zeta = [supremum_rho(0.01, n, z, 0.5) for z in zeta_values]
    by_tau = [supremum_rho(0.01, n, 0.7, t) for t in tau_values]
    assert all(a < b for a, b in zip(by_eps, by_eps[1:]))
    assert all(a < b for a, b in zip(by_zeta, by_zeta[1:]))
    assert all(a > b for a, b in zip(by_tau, by_tau[1:]))


def test_supremum_rho_approaches_capacity():
    capacity = math.log2(1.0 + 1.4)
    gaps = [abs(supremum_rho(0.01, n, 0.7, 0.5) - capacity) for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 5e-3


def test_age_limited_capacity_values():
    assert age_limited_capacity(1.0, 0.7) == pytest.approx(0.76553474636, abs=1e-10)
    assert age_limited_capacity(1.0, 1.0) == 1.0
    # M / K_a = 60 / 100
    assert age_limited_capacity(1.0, 60 / 100) == pytest.approx(0.678071905, abs=1e-9)


def test_phi_signs_around_capacity():
    tau, zeta = 0.5, 0.7
    capacity = age_limited_capacity(tau, zeta)
    assert phi(capacity, tau, zeta) == pytest.approx(0.0, abs=1e-12)
    for delta in (0.01, 0.1, 0.5):
        assert phi(capacity - delta, tau, zeta) > 0
        assert phi(capacity + delta, tau, zeta) < 0


@pytest.mark.parametrize("delta", [0.1, 0.3, -0.1, -0.3])
def test_phi_at_capacity_offset_closed_form(delta):
    tau, zeta = 0.5, 0.7
    capacity = age_limited_capacity(tau, zeta)
    assert phi_at_capacity_offset(delta, tau, zeta) == pytest.approx(phi(capacity - delta, tau, zeta), rel=1e-10)


# --- fixed-error trade-off ---

def test_tau_for_error_round_trip():
    eps, n, zeta = 0.01, 1000, 0.7
    for rho in (rho_min(eps, n, zeta) + 0.1, 1.5, 2.5):
        tau = tau_for_error(eps, rho, zeta, n)
        assert 0.0 < tau <= 1.0
        assert asymptotic_pep(_config(n, 700, tau=tau, rho=rho)).p_e == pytest.approx(eps, abs=1e-9)


def test_tau_for_error_other_root_solves_mirrored_target():
    # the plus branch puts tau above alpha_rho * zeta, where p_e = 1 - eps
    eps, n, zeta, rho = 0.01, 1000, 0.7, 3.0
    alpha = alpha_of_rho(rho)
    q2n = q_inv(eps) ** 2 / n
    a = alpha * zeta + 0.5 * q2n
    plus = a + math.sqrt(a * a - alpha * alpha * zeta * (zeta - q2n))
    assert plus < 1.0
    assert asymptotic_pep(_config(n, 700, tau=plus, rho=rho)).p_e == pytest.approx(1.0 - eps, abs=1e-9)


def test_tau_for_error_large_n_limit():
    rho, zeta = 1.5, 0.7
    assert tau_for_error(0.01, rho, zeta, 10 ** 12) == pytest.approx(alpha_of_rho(rho) * zeta, rel=1e-5)


def test_tau_for_error_at_rho_min_is_one():
    eps, n, zeta = 0.01, 1000, 0.7
    assert tau_for_error(eps, rho_min(eps, n, zeta), zeta, n) == pytest.approx(1.0, abs=1e-9)


def test_tau_for_error_below_minimum_rate():
    eps, n, zeta = 0.01, 1000, 0.7
    with pytest.raises(BelowMinimumRateError) as exc:
        tau_for_error(eps, rho_min(eps, n, zeta) - 0.01, zeta, n)
    assert "below minimum spectral efficiency for this ε" in str(exc.value)


def test_rho_min_properties():
    n = 1000
    by_zeta = [rho_min(0.01, n, z) for z in (0.3, 0.5, 0.7, 1.0)]
    assert all(a < b for a, b in zip(by_zeta, by_zeta[1:]))

    assert rho_min(0.01, 10 ** 10, 0.7) == pytest.approx(math.log2(1.7), abs=1e-3)
    assert rho_min(0.4999999, 10 ** 8, 0.7) == pytest.approx(math.log2(1.7), abs=1e-6)


def test_rho_min_increases_with_n():
    values = [rho_min(0.01, n, 0.7) for n in (100, 1000, 10000, 100000)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_aoi_at_fixed_error_left_endpoint():
    eps, n, zeta = 0.01, 1000, 0.7
    point = aoi_at_fixed_error(eps, rho_min(eps, n, zeta), zeta, n)
    assert point.delta == pytest.approx(1.0 / 0.99, abs=1e-6)
    assert point.n_users == n


def test_aoi_at_fixed_error_infinite_users():
    zeta = 0.7
    for tau in (0.25, 0.5, 1.0):
        point = aoi_at_fixed_error(0.01, age_limited_capacity(tau, zeta), zeta, INFINITE_USERS)
        assert point.delta == pytest.approx(1.0 / tau, abs=1e-9)
        assert point.infinite_users


def test_aoi_non_decreasing_along_curves():
    zeta, eps = 0.7, 0.01
    for n in (100, 10000, INFINITE_USERS):
        start = 0.3 if n == INFINITE_USERS else rho_min(eps, n, zeta)
        deltas = [aoi_at_fixed_error(eps, start + 0.05 * i, zeta, n).delta for i in range(60)]
        assert all(a <= b for a, b in zip(deltas, deltas[1:]))


# --- AoI estimate type ---

def test_aoi_estimate_invariants():
    AoiEstimate(delta=2.0, source=AoiSource.SIMULATED, per_user=(1.0, 3.0))
    with pytest.raises(ValueError):
        AoiEstimate(delta=0.5, source=AoiSource.SIMULATED)
    with pytest.raises(ValueError):
        AoiEstimate(delta=2.5, source=AoiSource.SIMULATED, per_user=(1.0, 3.0))
