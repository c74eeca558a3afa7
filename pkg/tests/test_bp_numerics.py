import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize
from scipy.stats import poisson

from rgdiam import bp_numerics as bn

LAMBDAS = [1.001, 1.01, 1.1, 1.5, 2, 5, 20, 100]


def brentq_s(lam):
    if lam <= 1:
        return 0.0
    # bracket away from the trivial root s = 0
    lo = 1e-3 * (lam - 1) / lam
    return optimize.brentq(lambda s: -math.expm1(-lam * s) - s, lo, 1, xtol=1e-16, rtol=1e-15)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_survival_matches_brentq_and_residuals_vanish(lam):
    p = bn.BranchingParams.from_lambda(lam)
    assert p.s == pytest.approx(brentq_s(lam), rel=1e-9, abs=1e-12)
    r1, r2 = p.residuals()
    assert r1 <= 1e-12 and r2 <= 1e-12
    assert p.lam_star < 1 < p.lam


def test_survival_examples():
    assert bn.survival_probability(1.0) == 0.0
    assert bn.survival_probability(0.5) == 0.0
    assert bn.survival_probability(2.0) == pytest.approx(0.796812, abs=1e-6)
    assert bn.survival_probability(1.01) == pytest.approx(0.0197, abs=5e-4)
    with pytest.raises(bn.DomainError):
        bn.survival_probability(-1.0)


def test_dual_parameter_examples():
    assert bn.dual_parameter(2.0) == pytest.approx(0.406376, abs=1e-6)
    eps = 0.01
    assert abs(bn.dual_parameter(1 + eps) - (1 - eps + 2 / 3 * eps**2)) < 1e-5
    assert bn.dual_parameter(1 + eps) == pytest.approx(0.990067, abs=1e-5)
    # fixed point iteration as an independent route at large lambda
    x = 0.0
    for _ in range(50):
        x = 20 * math.exp(-20) * math.exp(x)
    assert bn.dual_parameter(20.0) == pytest.approx(x, rel=1e-10)
    assert bn.dual_parameter(20.0) == pytest.approx(4.1223e-8, rel=0.01)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_dual_is_an_involution(lam):
    assert bn.undual(bn.dual_parameter(lam)) == pytest.approx(lam, abs=1e-8)


def test_finite_survival_examples():
    fs = bn.finite_survival(1.0, 1)
    assert fs.s[1] == pytest.approx(1 - math.exp(-1), abs=1e-12)
    fs = bn.finite_survival(bn.dual_parameter(1.1), 100)
    assert fs.eps == pytest.approx(0.1, abs=1e-9)
    with pytest.raises(bn.DomainError):
        bn.finite_survival(1.5, 10)


@pytest.mark.parametrize("lam", [1.001, 1.05, 1.5, 3.0])
def test_finite_survival_is_decreasing_and_below_two_over_t(lam):
    ls = bn.dual_parameter(lam)
    # s_t ~ c lam_star**t; stop before it underflows a double
    T = min(500, int(-290 / math.log10(ls)))
    s = bn.finite_survival(ls, T).s
    t = np.arange(1, s.size)
    assert np.all(s > 0) and np.all(np.diff(s) < 0)
    assert np.all(s[1:] < 2 / t)


def test_gamma0_positive_and_tiny_dual_gives_unit_product():
    est = bn.gamma0_estimate([0.02, 0.01, 0.005])
    assert 0 < est.gamma0 < math.inf
    assert np.all(est.ratios > 0)
    s = bn.finite_survival(1e-12, 50).s
    assert np.prod(1 - s[1:]) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(bn.PrecisionError):
        bn.gamma0_estimate([0.01], T_cap=100)


@pytest.mark.parametrize("lam, k", [(1, 0), (2, 2), (20, 4), (20, 20), (0.3, 7), (50, 30)])
def test_poisson_cdf_against_scipy(lam, k):
    assert bn.poisson_cdf(lam, k) == pytest.approx(poisson.cdf(k, lam), rel=1e-12)


def test_poisson_cdf_examples():
    assert bn.poisson_cdf(1, 0) == pytest.approx(0.3678794, abs=1e-7)
    assert bn.poisson_cdf(2, 2) == pytest.approx(5 * math.exp(-2), rel=1e-13)
    assert bn.poisson_cdf(20, 4) == pytest.approx(1.6945e-5, rel=1e-4)


def test_g_examples():
    assert 0 < bn.g_function(20, 0.0) < 0.05
    assert bn.g_function(20, 0.5) == pytest.approx(0.646, abs=0.005)
    for lam in (3, 5, 20):
        assert 2 <= bn.g_function(lam, 2.3) <= 3
    with pytest.raises(bn.DomainError):
        bn.GFunction(2.0)


@given(st.sampled_from([3.0, 5.0, 20.0, 100.0]), st.floats(0, 5))
@settings(max_examples=100, deadline=None)
def test_g_monotone_and_periodic(lam, x):
    g = bn.GFunction(lam)
    assert g(x + 1) == pytest.approx(g(x) + 1, abs=1e-12)
    assert g(x + 0.01) >= g(x) - 1e-12
    assert math.floor(x) <= g(x) <= math.floor(x) + 1


def test_conditioned_mean():
    assert bn.conditioned_mean(2.0, 0) == pytest.approx(1.0)
    s = bn.survival_probability(2.0)
    ls = bn.dual_parameter(2.0)
    assert bn.conditioned_mean(2.0, 1) == pytest.approx((2 - (1 - s) * ls) / s, rel=1e-12)
    assert bn.conditioned_mean(2.0, 1) == pytest.approx(2.40634, abs=1e-4)
    r = bn.conditioned_mean(1.05, 200) / (1.05**200 / bn.survival_probability(1.05))
    assert abs(r - 1) < 0.02


def test_prediction_examples():
    p = bn.predict_diameter(10**6, 2.0)
    assert p.regime == "constant"
    ref = math.log(1e6) / math.log(2) + 2 * math.log(1e6) / -math.log(bn.dual_parameter(2))
    assert p.d0 == pytest.approx(ref, rel=1e-12)
    assert p.d0 == pytest.approx(50.62, abs=0.01)
    sub = bn.predict_diameter(10**6, 0.9)
    assert sub.regime == "subcritical"
    assert sub.d0 == pytest.approx(math.log(2000) / -math.log(0.9), rel=1e-9)
    assert sub.d0 == pytest.approx(72.1, abs=0.1)
    g = bn.predict_diameter(10**6, 20.0, "growing_lambda")
    assert g.normal_form == 6
    assert g.t0 == pytest.approx(0.8125, abs=1e-3)


def test_prediction_errors():
    with pytest.raises(bn.WindowError):
        bn.predict_diameter(1000, 1.1)
    with pytest.raises(bn.WindowError):
        bn.predict_diameter(10**4, 0.99)
    with pytest.raises(bn.DomainError):
        bn.predict_diameter(10**6, 1.0)
    with pytest.raises(bn.DomainError):
        bn.predict_diameter(10**6, 2.0, "subcritical")


def test_prediction_continuity_between_regimes():
    n = 10**8
    a = bn.predict_diameter(n, 1.1, "constant").d0
    b = bn.predict_diameter(n, 1.1, "near_critical").d0
    gap = abs(a - b) / a
    assert gap <= 0.15, f"relative gap {gap:.3f} between the two formulas at n=1e8"
