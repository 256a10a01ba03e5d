import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from ising_peel import asymptotics as asy
from ising_peel import generating as gen
from ising_peel.curves import MU, NU_C, DomainError

F = Fraction


def test_phase_exponents():
    e = asy.exponents("critical")
    assert (e.alpha0, e.alpha1, e.alpha2, e.delta) == (F(4, 3), F(1, 3), F(5, 3), F(1, 3))
    assert asy.exponents("low").delta == F(1, 2)
    for ph in asy.PHASES:
        e = asy.exponents(ph)
        assert e.alpha0 + e.alpha1 == e.alpha2
    assert asy.exponents("lowT") == asy.exponents("low")
    with pytest.raises(ValueError):
        asy.exponents("warm")


def test_c_lambda_closed_forms():
    assert asy.c_lambda("low", 2.0) == pytest.approx(2 ** -2.5, rel=1e-15)
    assert asy.c_lambda("high", 1.0) == pytest.approx(2 ** -2.5, rel=1e-15)
    assert asy.c_lambda("critical", 1.0) == pytest.approx(4 / 11, abs=1e-12)


@pytest.mark.parametrize("phase", asy.PHASES)
def test_c_lambda_reflection(phase):
    a2 = float(asy.exponents(phase).alpha2)
    for k in range(-3, 4):
        lam = 2.0 ** k
        assert asy.c_lambda(phase, lam) * lam ** (a2 + 2) == pytest.approx(asy.c_lambda(phase, 1 / lam), rel=1e-8)


@pytest.mark.parametrize("phase", asy.PHASES)
def test_c_lambda_large_lambda_power_law(phase):
    a0 = float(asy.exponents(phase).alpha0)
    vals = [asy.c_lambda(phase, lam) * lam ** (a0 + 1) for lam in (10, 100, 1000)]
    gaps = [abs(b - a) for a, b in zip(vals, vals[1:])]
    assert gaps[1] <= gaps[0] + 1e-12
    assert vals[-1] == pytest.approx(1.0, abs=1e-2)


def test_c_lambda_domain():
    with pytest.raises(DomainError):
        asy.c_lambda("critical", 0.0)
    with pytest.raises(DomainError):
        asy.c_lambda("low", -1.0)


def test_fast_spline_matches_quadrature():
    lams = np.array([1e-3, 0.3, 1.0, 7.0, 1e4])
    exact = np.array([asy.c_lambda("critical", x) for x in lams])
    assert np.allclose(asy.c_critical_fast(lams), exact, rtol=1e-8)


def test_scaling_cdf_values():
    for lam in (0.3, 1.0, 4.0):
        assert asy.scaling_cdf(lam, 0.0) == 1.0
    for t in (0.1, 1.0, 10.0):
        assert asy.scaling_cdf(1.0, t) == pytest.approx((1 + MU * t) ** (-11 / 3), abs=1e-8)


@pytest.mark.parametrize("lam", [0.25, 1.0, 3.0])
def test_scaling_cdf_is_a_survival_function(lam):
    ts = [0, 0.5, 2, 10, 100, 1e4]
    vals = [asy.scaling_cdf(lam, t) for t in ts]
    assert vals[0] == 1.0
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-4


@pytest.mark.parametrize("lam,t", [(1, 0.1), (1, 3), (0.5, 1), (2.5, 10)])
def test_hazard_identity(lam, t):
    assert asy.hazard_residual(lam, t) <= 1e-6


def test_c_infinity_at_one():
    assert asy.c_infinity(1.0) == pytest.approx(11 / 3 * MU, rel=1e-12)
    jumps = []
    for n in (40, 160):
        vals = np.array([asy.c_infinity(x) for x in np.linspace(0.2, 5, n)])
        assert np.all(np.isfinite(vals)) and np.all(vals > 0)
        jumps.append(np.max(np.abs(np.diff(vals))))
    # continuity: refining the grid shrinks the largest step proportionally
    assert jumps[1] < 0.4 * jumps[0]


def test_partial_rates_increase_towards_the_limit():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lam in (0.5, 1.0, 2.0):
            vals = [asy.c_m(lam, m) for m in (0, 1, 2, 5, 20, 100)]
            assert vals[0] == 0
            assert all(a < b for a, b in zip(vals, vals[1:]))
            assert vals[-1] < asy.c_infinity(lam)


def test_gamma_reflection_constant():
    assert math.gamma(7 / 3) * math.gamma(-4 / 3) == pytest.approx(2 * math.pi / math.sqrt(3), rel=1e-12)


def test_low_temperature_kernel_contour():
    r = asy.contour_check("lowT_kernel")
    assert r.closed_form == pytest.approx(-3 / (4 * math.sqrt(math.pi)), rel=1e-14)
    assert r.deviation <= 1e-6


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("which", ["highT_ctilde", "critical_ctilde"])
def test_double_contours(which, lam):
    assert asy.contour_check(which, lam).relative_deviation <= 1e-4


def test_critical_contour_closed_form_at_one():
    r = asy.contour_check("critical_ctilde", 1.0)
    expect = -(math.sqrt(3) * math.gamma(7 / 3) / (2 * math.pi)) ** 2 * 3 / 11
    assert r.closed_form == pytest.approx(expect, rel=1e-10)


def _series(order, entries):
    c = np.zeros((order + 1, order + 1))
    for (i, j), v in entries.items():
        c[i, j] = c[j, i] = v
    return asy.SymmetricBivariateSeries(order, c)


def test_division_small_cases():
    D = _series(4, {(1, 0): 1})
    Q, J = asy.singular_division(_series(4, {(1, 0): 1}), D)
    assert Q.coeffs[0, 0] == 1 and np.count_nonzero(Q.coeffs) == 1 and not J.any()
    Q, J = asy.singular_division(_series(4, {(1, 1): 1}), D)
    assert not Q.coeffs.any() and J[1] == 1 and J[0] == 0 and not J[2:].any()
    Q, J = asy.singular_division(_series(4, {(2, 0): 1}), D)
    assert Q.coeffs[1, 0] == Q.coeffs[0, 1] == 1 and np.count_nonzero(Q.coeffs) == 2
    assert J[1] == -2 and not J[2:].any()


def test_division_random_series():
    rng = np.random.default_rng(5)
    for _ in range(50):
        N = asy.SymmetricBivariateSeries.random(10, rng)
        D = asy.SymmetricBivariateSeries.random(10, rng, simple_zero=True)
        Q, J = asy.singular_division(N, D)
        assert asy.division_error(N, D, Q, J) <= 1e-12


def test_division_rejects_higher_order_zero():
    D = _series(4, {(1, 1): 1, (2, 0): 1})
    with pytest.raises(ValueError, match="higher-order zero unsupported"):
        asy.singular_division(_series(4, {(1, 0): 1}), D)
    with pytest.raises(ValueError):
        asy.singular_division(_series(4, {(1, 0): 1}), _series(4, {(0, 0): 1, (1, 0): 1}))


def test_series_must_be_symmetric():
    with pytest.raises(ValueError):
        asy.SymmetricBivariateSeries(1, np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_tail_fit_recovers_power_law():
    n = np.arange(200)
    coeffs = np.where(n > 0, 3.0 * np.maximum(n, 1) ** -2.5, 0.0)
    fit = asy.fit_coefficient_tail(coeffs)
    assert fit.theta == pytest.approx(2.5, rel=1e-10)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-10)
    assert fit.approx
    total = fit.tail_sum(200)
    assert total == pytest.approx(float(3 * mpmath.zeta(2.5, 200)), rel=1e-12)


def test_tail_fit_flags_growing_coefficients():
    coeffs = [float(k) for k in range(40)]
    with pytest.warns(asy.ModelMismatch):
        asy.fit_coefficient_tail(coeffs)


def test_tail_fit_needs_enough_points():
    with pytest.raises(ValueError):
        asy.fit_coefficient_tail([1.0, 0.5, 0.3])


def test_plateau_and_extrapolation():
    assert asy.plateau([5, 1.0, 1.1, 0.9]) == 1.0
    ns = np.arange(10, 200, 10)
    vals = 2.0 + 0.7 * ns ** (-1 / 3) - 0.2 * ns ** (-2 / 3)
    assert asy.extrapolate_limit(ns, vals, 1 / 3) == pytest.approx(2.0, rel=1e-10)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_one_sided_coefficients_settle(p):
    """Gamma(-4/3) q^{7/3} u_c^{p+q} z_{p,q} approaches the head of A(u) at nu_c."""
    cc = gen.critical_constants(NU_C)
    u = mpmath.mpf(cc.u_c)
    G = gen.z_grid(NU_C, 3, 120, dps=100)
    qs = list(range(40, 121, 10))
    vals = [float(math.gamma(-4 / 3) * q ** (7 / 3) * u ** (p + q) * G[p][q]) for q in qs]
    steps = np.abs(np.diff(vals))
    assert steps[-1] < steps[0]
    limit = asy.extrapolate_limit(qs, vals, 1 / 3)
    assert limit == pytest.approx(cc.A_head[p], rel=0.1)
