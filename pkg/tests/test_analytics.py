import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bonusruin import (
    Exponential,
    ModelParams,
    Pareto,
    adjustment_eigenvector,
    asymptotic_report,
    classical_ruin,
    cramer_upper_constant,
    cramer_upper_constant_series,
    heavy_tail_asymptotic,
    heavy_tail_constant,
    map_kernel_mgf,
    mgf_x1,
    npc_holds,
    principal_eigenpair,
    s_alpha_constant_D,
    solve_kappa,
    steady_state,
    truncated_mean,
)
from bonusruin.analytics import KernelMatrix, mgf_x1_domain_edge, phi_prime
from bonusruin.errors import (
    AsymptoticRangeWarning,
    BoundUndefinedError,
    ConstantUndefinedError,
    InconsistentKappaError,
    MgfDomainError,
    NoAdjustmentCoefficientError,
    WrongRegimeError,
)
from bonusruin.oracle import mc_mgf_x1, sample_cycle_increments
from bonusruin._rng import stream_keys, uniforms

EXAMPLE = ModelParams(1.0, 2.0, 1.0, Exponential(3.0))

rates = st.floats(0.05, 5.0)
windows = st.floats(0.02, 8.0)


def _random_npc_params(rng, heavy=False):
    while True:
        l1, l2 = rng.uniform(0.05, 4.0, 2)
        xi = rng.uniform(0.05, 6.0)
        if heavy:
            alpha = rng.uniform(1.5, 4.0)
            sigma = rng.uniform(0.5, 3.0)
            p = ModelParams(l1, l2, xi, Pareto(alpha, sigma))
        else:
            beta = rng.uniform(0.2, 6.0)
            p = ModelParams(l1, l2, xi, Exponential(beta))
        if npc_holds(p):
            return p


# --- cycle m.g.f. -------------------------------------------------------------

def test_mgf_x1_is_one_at_zero():
    assert mgf_x1(EXAMPLE, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_mgf_x1_variants_agree():
    for theta in (0.1, 0.5, 1.0, 1.5):
        assert mgf_x1(EXAMPLE, theta) == pytest.approx(
            mgf_x1(EXAMPLE, theta, "grouped"), rel=1e-12
        )


def test_mgf_x1_matches_cycle_sampler():
    xs = sample_cycle_increments(EXAMPLE, 400_000, seed=13)
    w = np.exp(0.5 * xs)
    se = w.std(ddof=1) / math.sqrt(len(w))
    assert abs(w.mean() - mgf_x1(EXAMPLE, 0.5)) < 3.0 * se


def test_mgf_x1_unity_at_decay_exponent_of_scanned_window():
    # the window at which the decay exponent equals 1.1439 (located by bisection,
    # since the exponent increases with the window)
    lo, hi = 1e-4, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        k = solve_kappa(ModelParams(1.0, 2.0, mid, Exponential(3.0)))
        if k < 1.1439:
            lo = mid
        else:
            hi = mid
    xi_star = 0.5 * (lo + hi)
    assert xi_star == pytest.approx(0.035404, abs=5e-5)
    p = ModelParams(1.0, 2.0, xi_star, Exponential(3.0))
    assert mgf_x1(p, 1.1439) == pytest.approx(1.0, abs=1e-6)


def test_mgf_x1_domain_errors():
    with pytest.raises(MgfDomainError):
        mgf_x1(EXAMPLE, 3.0)  # claim-rate pole
    edge = mgf_x1_domain_edge(EXAMPLE)
    with pytest.raises(MgfDomainError):
        mgf_x1(EXAMPLE, edge + 0.01)
    with pytest.raises(MgfDomainError):
        mgf_x1(ModelParams(1.0, 2.0, 1.0, Pareto(2.0, 2.0)), 0.3)


@settings(max_examples=200, deadline=None)
@given(l1=rates, l2=rates, xi=windows, beta=st.floats(0.2, 6.0))
def test_mgf_x1_basics_random(l1, l2, xi, beta):
    p = ModelParams(l1, l2, xi, Exponential(beta))
    assert mgf_x1(p, 0.0) == pytest.approx(1.0, abs=1e-12)
    edge = mgf_x1_domain_edge(p)
    t1, t2 = 0.3 * edge, 0.7 * edge
    mid = mgf_x1(p, 0.5 * (t1 + t2))
    assert mid <= 0.5 * (mgf_x1(p, t1) + mgf_x1(p, t2)) + 1e-12


@settings(max_examples=100, deadline=None)
@given(l1=rates, l2=rates, xi=windows, beta=st.floats(0.2, 6.0))
def test_npc_iff_negative_initial_slope(l1, l2, xi, beta):
    p = ModelParams(l1, l2, xi, Exponential(beta))
    slope = (mgf_x1(p, 1e-6) - mgf_x1(p, -1e-6)) / 2e-6
    assume(abs(slope) > 1e-4)  # keep clear of the knife edge
    assert npc_holds(p) == (slope < 0.0)


def test_mgf_x1_reproducible_from_kernel_entries():
    # cycle transform = one long-gap step, then the short-gap geometric run
    for theta in (0.2, 0.8):
        k = map_kernel_mgf(EXAMPLE, theta)
        composed = k.f22 + k.f21 * k.f12 / (1.0 - k.f11)
        assert mgf_x1(EXAMPLE, theta) == pytest.approx(composed, abs=1e-12)


# --- decay exponent -------------------------------------------------------------

def test_solve_kappa_independence_collapse():
    rng = np.random.default_rng(5)
    for _ in range(100):
        lam = rng.uniform(0.05, 3.0)
        beta = lam + rng.uniform(0.05, 3.0)
        xi = rng.uniform(0.02, 8.0)
        p = ModelParams(lam, lam, xi, Exponential(beta))
        assert solve_kappa(p) == pytest.approx(beta - lam, abs=1e-10)


def test_solve_kappa_root_quality_and_mc_consistency():
    p = ModelParams(0.15, 0.45, 3.0, Exponential(0.5))
    k = solve_kappa(p)
    assert abs(mgf_x1(p, k) - 1.0) <= 1e-12
    est = mc_mgf_x1(p, k, 300_000, seed=21)
    assert abs(est.mean - 1.0) < 3.0 * est.std_error


def test_solve_kappa_errors():
    with pytest.raises(WrongRegimeError):
        solve_kappa(ModelParams(1.0, 2.0, 1.0, Pareto(2.0, 2.0)))
    with pytest.raises(NoAdjustmentCoefficientError):
        solve_kappa(ModelParams(3.0, 3.0, 1.0, Exponential(2.0)))  # claims too heavy


# --- classical formula ----------------------------------------------------------

def test_classical_ruin_values():
    assert classical_ruin(0.3, 0.5, 0.0) == pytest.approx(0.6, rel=1e-12)
    assert classical_ruin(0.3, 0.5, 10.0) == pytest.approx(0.6 * math.exp(-2.0), rel=1e-12)
    assert classical_ruin(0.3, 0.5, 10.0) == pytest.approx(0.081201, abs=5e-7)
    assert classical_ruin(1.0, 3.0, 5.0) == pytest.approx(math.exp(-10.0) / 3.0, rel=1e-12)
    with pytest.raises(Exception):
        classical_ruin(3.0, 3.0, 1.0)


# --- prefactor bound ------------------------------------------------------------

def test_cramer_constant_classical_limit():
    # tiny window: the model collapses to the classical one and the bound
    # approaches beta/lambda, the reciprocal of the classical prefactor
    lam, beta = 1.0, 3.0
    p = ModelParams(lam, lam, 1e-9, Exponential(beta))
    k = solve_kappa(p)
    assert cramer_upper_constant(p, k) == pytest.approx(beta / lam, rel=1e-6)


def test_cramer_constant_matches_series_form():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 25:
        p = _random_npc_params(rng)
        k = solve_kappa(p)
        try:
            closed = cramer_upper_constant(p, k)
        except BoundUndefinedError:
            continue
        assert closed == pytest.approx(cramer_upper_constant_series(p, k), rel=1e-10)
        assert closed > 0.0
        checked += 1


def test_cramer_constant_undefined_is_reported():
    k = solve_kappa(EXAMPLE)
    with pytest.raises(BoundUndefinedError):
        cramer_upper_constant(EXAMPLE, k)


# --- heavy-tail constants ---------------------------------------------------------

def test_heavy_tail_constant_independence():
    p = ModelParams(0.7, 0.7, 1.3, Exponential(1.0))
    assert heavy_tail_constant(p) == pytest.approx(math.exp(0.7 * 1.3), rel=1e-12)


def test_heavy_tail_constant_vanishing_window():
    p = ModelParams(0.7, 1.9, 1e-9, Exponential(1.0))
    assert heavy_tail_constant(p) == pytest.approx(1.0, abs=1e-6)


def test_heavy_tail_asymptotic_values_and_regime():
    p = ModelParams(0.15, 0.45, 3.0, Pareto(2.0, 2.0))
    x = 200.0
    val = heavy_tail_asymptotic(p, x)
    # integrated-tail closed form for the Lomax family
    from bonusruin import drift_mu
    expected = heavy_tail_constant(p) / drift_mu(p) * 2.0 / (1.0 + x / 2.0)
    assert val == pytest.approx(expected, rel=1e-12)
    with pytest.raises(WrongRegimeError):
        heavy_tail_asymptotic(EXAMPLE, 10.0)
    with pytest.warns(AsymptoticRangeWarning):
        assert heavy_tail_asymptotic(p, 0.0) == 1.0


def test_heavy_tail_asymptotic_independence_is_classical_subexponential():
    lam, xi = 0.3, 1.0
    p = ModelParams(lam, lam, xi, Pareto(2.0, 2.0))
    x = 150.0
    mean_y = p.claims.mean
    classical = (1.0 / (1.0 / lam - mean_y)) * 2.0 / (1.0 + x / 2.0)
    assert heavy_tail_asymptotic(p, x) == pytest.approx(classical, rel=1e-12)


def test_heavy_tail_asymptotic_log_log_slope():
    p = ModelParams(0.15, 0.45, 3.0, Pareto(2.0, 2.0))
    xs = np.array([200.0, 400.0, 800.0, 1600.0])
    vals = np.array([heavy_tail_asymptotic(p, float(x)) for x in xs])
    slope = np.polyfit(np.log(xs), np.log(vals), 1)[0]
    assert slope == pytest.approx(-(p.claims.alpha - 1.0), abs=0.02)


# --- tail-equivalence constant ------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(l1=rates, l2=rates, xi=windows)
def test_s_alpha_constant_reduces_to_heavy_tail_constant(l1, l2, xi):
    p = ModelParams(l1, l2, xi, Exponential(1.0))
    assert s_alpha_constant_D(p, 0.0) == pytest.approx(heavy_tail_constant(p), abs=1e-12)


def test_s_alpha_constant_matches_mc():
    # oracle: sample the defining expectation term by term
    p = EXAMPLE
    alpha = 0.2
    n = 300_000
    keys = stream_keys(404, 0, n)
    u1, u2, u3, u4, u5 = (uniforms(keys, j) for j in range(5))
    t2 = -np.log1p(-u1) / p.lambda2
    pr = math.exp(-p.lambda1 * p.xi)
    n_geo = np.ceil(np.log1p(-u2) / math.log1p(-pr)).astype(int)  # geometric >= 1
    below = truncated_mean(p.lambda1, p.xi, "below")  # noqa: F841 (indices only)
    # product of N-1 i.i.d. tilted short-step factors, sampled directly
    rng = np.random.default_rng(909)
    prod = np.ones(n)
    cap = int(n_geo.max())
    alive = n_geo - 1
    for _ in range(cap):
        mask = alive > 0
        if not mask.any():
            break
        m = int(mask.sum())
        y = rng.exponential(1.0 / 3.0, m)
        gap = p.xi + 1.0  # placeholder overwritten below
        u = rng.random(m)
        gap = -np.log1p(-u * -math.expm1(-p.lambda1 * p.xi)) / p.lambda1  # short gap
        prod[mask] *= np.exp(alpha * (y - gap))
        alive = alive - mask
    u_below = -np.log1p(-u3 * -math.expm1(-p.lambda1 * p.xi)) / p.lambda1
    u_above = p.xi - np.log1p(-u4) / p.lambda1
    w = (np.exp(-alpha * t2) * (t2 > p.xi)
         + (t2 <= p.xi) * (n_geo * prod * np.exp(-alpha * u_below) + np.exp(-alpha * u_above)))
    se = w.std(ddof=1) / math.sqrt(n)
    assert abs(w.mean() - s_alpha_constant_D(p, alpha)) < 3.0 * se


def test_s_alpha_constant_divergence_boundary():
    beyond = mgf_x1_domain_edge(EXAMPLE) + 0.05
    with pytest.raises(ConstantUndefinedError):
        s_alpha_constant_D(EXAMPLE, beyond)


# --- kernel and eigenstructure ---------------------------------------------------

def test_kernel_rows_stochastic_at_zero():
    k = map_kernel_mgf(EXAMPLE, 0.0)
    assert k.f11 + k.f12 == pytest.approx(1.0, abs=1e-15)
    assert k.f21 + k.f22 == pytest.approx(1.0, abs=1e-15)


def test_kernel_matches_one_step_mc():
    theta = 0.4
    k = map_kernel_mgf(EXAMPLE, theta)
    n = 500_000
    keys = stream_keys(77, 0, n)
    for state, (e_stay, e_leave) in ((1, (k.f11, k.f12)), (2, (k.f21, k.f22))):
        rate = EXAMPLE.lambda1 if state == 1 else EXAMPLE.lambda2
        gap = -np.log1p(-uniforms(keys, 0)) / rate
        y = -np.log1p(-uniforms(keys, 1)) / 3.0
        w = np.exp(theta * (y - gap))
        for val, mask in ((e_stay, gap <= EXAMPLE.xi), (e_leave, gap > EXAMPLE.xi)):
            sample = w * mask
            se = sample.std(ddof=1) / math.sqrt(n)
            assert abs(sample.mean() - val) < 3.5 * se


def test_kernel_spectral_radius_one_at_kappa():
    kappa = solve_kappa(EXAMPLE)
    pair = principal_eigenpair(map_kernel_mgf(EXAMPLE, kappa))
    assert pair.eigenvalue == pytest.approx(1.0, abs=1e-10)


def test_principal_eigenpair_tie_break_and_oracles():
    diag = KernelMatrix(0.7, 0.0, 0.0, 0.7, theta=0.0)
    pair = principal_eigenpair(diag)
    assert pair.eigenvalue == 0.7 and (pair.v1, pair.v2) == (1.0, 0.0)
    rng = np.random.default_rng(23)
    for _ in range(50):
        f = rng.uniform(0.05, 2.0, 4)
        k = KernelMatrix(f[0], f[1], f[2], f[3], theta=0.0)
        pair = principal_eigenpair(k)
        # oracle 1: largest root of the characteristic polynomial
        roots = np.roots([1.0, -(f[0] + f[3]), f[0] * f[3] - f[1] * f[2]])
        assert pair.eigenvalue == pytest.approx(max(roots.real), rel=1e-12)
        # oracle 2: residual of the eigen equation
        mat = np.array([[f[0], f[1]], [f[2], f[3]]])
        v = np.array([pair.v1, pair.v2])
        assert np.max(np.abs(mat @ v - pair.eigenvalue * v)) <= 1e-10
        assert pair.v1 >= 0.0 and pair.v2 >= 0.0
        assert math.hypot(pair.v1, pair.v2) == pytest.approx(1.0, abs=1e-12)


def test_adjustment_eigenvector_consistency():
    kappa = solve_kappa(EXAMPLE)
    ev = adjustment_eigenvector(EXAMPLE, kappa)
    pair = principal_eigenpair(map_kernel_mgf(EXAMPLE, kappa))
    assert ev.eigenvalue == 1.0
    assert ev.v1 == pytest.approx(pair.v1, abs=1e-8)
    assert ev.v2 == pytest.approx(pair.v2, abs=1e-8)
    with pytest.raises(InconsistentKappaError):
        adjustment_eigenvector(EXAMPLE, kappa * 0.9)


def test_adjustment_eigenvector_symmetric_rates():
    p = ModelParams(1.2, 1.2, 0.7, Exponential(3.0))
    ev = adjustment_eigenvector(p, solve_kappa(p))
    # proportional rows force a (1,1)-direction eigenvector
    assert ev.v1 == pytest.approx(ev.v2, rel=1e-10)


def test_adjustment_eigenvector_ratio_formula_random():
    rng = np.random.default_rng(31)
    for _ in range(20):
        p = _random_npc_params(rng)
        kappa = solve_kappa(p)
        ev = adjustment_eigenvector(p, kappa)
        k = map_kernel_mgf(p, kappa)
        assert ev.v1 / ev.v2 == pytest.approx(k.f12 / (1.0 - k.f11), rel=1e-9)


# --- report -----------------------------------------------------------------------

def test_asymptotic_report_cramer():
    p = ModelParams(1.0, 2.0, 0.0354, Exponential(3.0))
    rep = asymptotic_report(p)
    assert rep.kind == "cramer" and rep.npc_ok
    assert rep.kappa == pytest.approx(1.1439, abs=1e-3)
    assert rep.k_tilde is not None and rep.k_tilde > 0.0
    assert rep.m_slope == pytest.approx(phi_prime(p, rep.kappa), rel=1e-9)
    assert rep.m_slope > 0.0


def test_asymptotic_report_heavy():
    p = ModelParams(0.15, 0.45, 3.0, Pareto(2.0, 2.0))
    rep = asymptotic_report(p)
    assert rep.kind == "heavy_tail" and rep.npc_ok
    assert rep.constant_c == pytest.approx(heavy_tail_constant(p), rel=1e-12)
