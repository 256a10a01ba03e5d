import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from ising_peel import curves as c
from ising_peel.enumeration import build_count_table
from ising_peel.generating import z_grid


def test_constants():
    assert c.R1 == math.sqrt(3)
    assert c.RC == math.sqrt(7)
    assert c.RINF == pytest.approx((1 + 3 * math.sqrt(3)) / 2)
    assert c.NU_C == pytest.approx(1 + 2 * math.sqrt(7))


@pytest.mark.parametrize("nu", [Fraction(3), Fraction(7, 2), Fraction(9)])
def test_t_hat_zeros(nu):
    assert c.eval_That(nu, nu) == 0
    assert c.eval_That(2 - nu, nu) == 0


@pytest.mark.parametrize("S", [Fraction(5, 2), Fraction(3), Fraction(11, 3)])
def test_u_hat_vanishes_at_origin(S):
    assert c.eval_Uhat(0, S, Fraction(2)) == 0


def test_z0_hat_tends_to_one():
    S, nu = Fraction(5, 2), Fraction(2)
    assert c.z0hat_polynomial(S, nu)[0] == 1
    for h in (Fraction(1, 10 ** 6), Fraction(1, 10 ** 12)):
        assert abs(c.eval_Z0hat(h, S, nu) - 1) < 10 * h


def test_pole_names_the_vanishing_factor():
    with pytest.raises(c.ParametrizationPole) as err:
        c.eval_That(0, 2)
    assert err.value.factor == "S"
    with pytest.raises(c.ParametrizationPole):
        c.eval_Uhat(1, 2, 1)


def test_critical_coupling_from_both_branches():
    assert c.nu_of_R(c.RC, "high") == pytest.approx(c.NU_C, abs=1e-13)
    assert c.nu_of_R(c.RC, "low") == pytest.approx(c.NU_C, abs=1e-13)


def test_critical_point_at_nu_c():
    tp = c.critical_point(c.NU_C)
    assert tp.branch == "critical"
    assert tp.S_c == pytest.approx(3, abs=1e-12)
    assert tp.H_c == pytest.approx(2, abs=1e-12)
    assert max(tp.checks["branch_agreement"].values()) < 1e-10
    with mpmath.workdps(40):
        r = mpmath.sqrt(7)
        for br in ("high", "low"):
            assert abs(c.S_of_R(r, br) - 3) < 1e-30
            assert abs(c.Hc_of_R(r, br) - 2) < 1e-15  # square root of a vanishing discriminant
    # both factors of dT/dS vanish at S = 3
    nu = c.NU_C
    assert 2 * 27 - 3 * 9 - nu ** 2 + 2 * nu == pytest.approx(0, abs=1e-12)
    assert 3 * 9 - nu ** 2 + 2 * nu == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("nu", [1.5, 2, 4, 6, 6.5, 8, 20, 1e4])
def test_temperature_point_invariants(nu):
    tp = c.critical_point(nu)
    br = "high" if tp.branch == "high" else "low"
    assert c.nu_of_R(tp.R, br) == pytest.approx(nu, rel=1e-12)
    S = tp.S_c
    if tp.branch == "high":
        assert 2 * S ** 3 - 3 * S ** 2 - nu ** 2 + 2 * nu == pytest.approx(0, abs=1e-9 * nu ** 2)
    else:
        assert 3 * S ** 2 - nu ** 2 + 2 * nu == pytest.approx(0, abs=1e-9 * nu ** 2)
    assert tp.t_c ** 2 == pytest.approx(c.T_of_R(tp.R, br), rel=1e-12)
    U = np.polynomial.Polynomial(c.U_of_R_coeffs(tp.R, br))
    assert tp.t_c * tp.u_c == pytest.approx(U(tp.H_c), rel=1e-12)
    assert U.deriv()(tp.H_c) == pytest.approx(0, abs=1e-10 * abs(U.deriv().coef).max())
    assert c.dT_dS(S, nu) == pytest.approx(0, abs=1e-10)


@pytest.mark.parametrize("nu", [1.0, 0.5, -3])
def test_domain_error_below_one(nu):
    with pytest.raises(c.DomainError):
        c.critical_point(nu)


def test_branch_of_r_range():
    with pytest.raises(c.DomainError):
        c.from_R(1.5)
    assert c.from_R(2.0).branch == "high"
    assert c.from_R(2.8).branch == "low"


def test_derivative_vanishes_along_both_branches():
    for lo, hi, br in ((c.R1, c.RC, "high"), (c.RC, c.RINF, "low")):
        for R in np.linspace(lo, hi, 102)[1:-1]:
            assert abs(c.dT_dS(c.S_of_R(R, br), c.nu_of_R(R, br))) < 1e-10


def test_series_against_enumeration():
    ser = c.series_z_p0(2, 6, 10)
    tab = build_count_table(6, 0, 10)
    assert ser[0][0] == 1
    assert all(x == 0 for x in ser[0][1:])
    for p in range(7):
        exact = tab.poly(p, 0, Fraction(2))
        for n in range(11):
            if exact[n] == 0:
                assert ser[p][n] == 0
            else:
                assert float(ser[p][n] / exact[n]) == pytest.approx(1, rel=1e-9)


def test_j1_positive_and_vanishing_at_rc():
    Rs = np.linspace(c.R1, c.RC, 52)[1:-1]
    assert all(c.eval_J1(R) > 0 for R in Rs)
    vals = [c.eval_J1(c.RC - d) for d in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-8
    with pytest.raises(c.DomainError):
        c.eval_J1(2.7)


def test_j3_value():
    assert c.J3() == pytest.approx(27 / 20 * 1.5 ** (2 / 3), rel=1e-15)
    assert c.J3() == pytest.approx(1.7689, abs=1e-3)


@pytest.mark.parametrize("R", [2.0, 2.5, c.RC, 2.7, 2.9, 3.0])
def test_x_check_normalization(R):
    p, Hc = c.x_check_poly(R)
    x = np.polynomial.Polynomial(p)
    assert x(0) == 0
    assert x(Hc) == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("R", np.linspace(c.RC, c.RINF, 12)[:-1])
def test_derivative_zeros_real_and_positive(R):
    z = c.x_check_critical_zeros(R)
    # at R_c two zeros merge, so rounding leaves an imaginary part near sqrt(eps)
    assert np.all(np.abs(z.imag) < 1e-6)
    assert np.all(z.real > 0)


@pytest.mark.parametrize("nu", [2.0, 8.0])
def test_partial_sums_converge_only_inside_the_disc(nu):
    tp = c.critical_point(nu)
    N = 60
    G = z_grid(nu, N, N, dps=80)

    def shell(u, n):
        u = mpmath.mpf(u)
        return float(sum(G[p][n - p] * u ** n for p in range(n + 1) if G[p][n - p] is not None))

    at = [shell(tp.u_c, n) for n in (10, 20, 30, 40, 50, 60)]
    beyond = [shell(1.05 * tp.u_c, n) for n in (10, 20, 30, 40, 50, 60)]
    # shells of Z(u, u) shrink at u_c (bounded increasing partial sums) ...
    assert all(a > b > 0 for a, b in zip(at, at[1:]))
    # ... and turn around and grow just outside the disc
    assert beyond[-1] > beyond[-2]
    assert beyond[-1] / at[-1] > 5
