"""Rational parametrizations of the disk partition functions and the critical line.

The generating function Z_0(u) = sum_p z_{p,0} u^p is parametrized by
(S, H) through t^2 = T(S, nu), t u = U(H; S, nu), Z_0 = Z0(H; S, nu).  On the
critical line t = t_c(nu) the pair (S, nu) is itself parametrized by a single
real R, piecewise on the high-temperature interval (sqrt 3, sqrt 7] and the
low-temperature interval [sqrt 7, (1 + 3 sqrt 3)/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import series as ser

R1 = math.sqrt(3)
RC = math.sqrt(7)
RINF = (1 + 3 * math.sqrt(3)) / 2
NU_C = 1 + 2 * math.sqrt(7)
MU = 1 / (4 * math.sqrt(7))


class ParametrizationPole(ZeroDivisionError):
    def __init__(self, factor):
        super().__init__(f"parametrization pole: {factor} vanishes")
        self.factor = factor


class DomainError(ValueError):
    pass


def _check(value, name):
    if value == 0:
        raise ParametrizationPole(name)


# ---------------------------------------------------------------------------
# general (S, nu) parametrization


def _quartic(S, nu):
    return 4 * S**3 - S**2 - 2 * S + nu**2 - 2 * nu


def eval_That(S, nu):
    """t^2 as a rational function of (S, nu)."""
    _check(S, "S")
    _check(1 - nu**2, "1 - nu^2")
    return (S - nu) * (S + nu - 2) * _quartic(S, nu) / (32 * (1 - nu**2) ** 3 * S**2)


def _u_poly(S, nu):
    """Coefficients of U(H)/H in powers of H (before the common prefactor)."""
    return [2 * _quartic(S, nu), -4 * (S + 1) * S**2, 4 * S**2, -S]


def eval_Uhat(H, S, nu):
    """t u as a function of H; vanishes at H = 0."""
    _check(S, "S")
    _check(1 - nu**2, "1 - nu^2")
    c = _u_poly(S, nu)
    return H * (c[0] + c[1] * H + c[2] * H**2 + c[3] * H**3) / (16 * (1 - nu**2) ** 2 * S)


def _z0_factor(S, nu):
    return [(S - nu) * (S + nu - 2), 2 * (S - nu) * S, -2 * S**2, S]


def z0hat_polynomial(S, nu):
    """Z_0 as a polynomial of degree 6 in H (coefficients, lowest first).

    The H in the denominator of the displayed formula cancels against the
    factor H of U, so the H -> 0 limit needs no special treatment.
    """
    T = eval_That(S, nu)
    _check(T, "T(S, nu)")
    pre = 1 / (16 * (1 - nu**2) ** 2 * S) / T / (4 * (1 - nu**2) * S)
    a, b = _u_poly(S, nu), _z0_factor(S, nu)
    out = [0] * 7
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return [pre * c for c in out]


def eval_Z0hat(H, S, nu):
    coeffs = z0hat_polynomial(S, nu)
    return sum(c * H**k for k, c in enumerate(coeffs))


def eval_z10hat(S, nu):
    """t^3 z_{1,0} as a function of (S, nu)."""
    _check(S, "S")
    return (nu - S) ** 2 * (S + nu - 2) * (3 * S**3 - nu * S**2 - nu * S + nu**2 - 2 * nu) / (
        64 * (nu**2 - 1) ** 4 * S**2)


def eval_z30hat(S, nu):
    """t^9 z_{3,0} as a function of (S, nu)."""
    _check(S, "S")
    poly = (160 * S**10 - 128 * S**9 - 16 * (2 * nu**2 - 4 * nu + 3) * S**8
            + 32 * (2 * nu**2 - 4 * nu + 3) * S**7 - 7 * (16 * nu**2 - 32 * nu + 27) * S**6
            - 2 * (32 * nu**2 - 64 * nu + 57) * S**5
            + (32 * nu**4 - 128 * nu**3 + 183 * nu**2 - 110 * nu + 20) * S**4
            - 4 * (7 * nu**2 - 14 * nu - 2) * S**3 + nu * (nu - 2) * (9 * nu**2 - 18 * nu - 20) * S**2
            + 14 * nu**2 * (nu - 2) ** 2 * S - 3 * nu**3 * (nu - 2) ** 3)
    return (nu - S) ** 5 * (S + nu - 2) ** 5 / (2**22 * (nu**2 - 1) ** 12 * S**8) * poly


def dT_dS(S, nu, h=None):
    """Derivative of T(S, nu) in S, exact through the quotient rule."""
    q = _quartic(S, nu)
    dq = 12 * S**2 - 2 * S - 2
    num = (S - nu) * (S + nu - 2) * q
    dnum = (S + nu - 2) * q + (S - nu) * q + (S - nu) * (S + nu - 2) * dq
    den = 32 * (1 - nu**2) ** 3 * S**2
    dden = 64 * (1 - nu**2) ** 3 * S
    return (dnum * den - num * dden) / den**2


# ---------------------------------------------------------------------------
# critical line


def nu_of_R(R, branch):
    if branch == "high":
        return (2 - 3 * R + R**3) / 2
    return 27 / (13 + 2 * R - 2 * R**2)


def S_of_R(R, branch):
    if branch == "high":
        return (R**2 - 1) / 2
    return 3 * (2 * R - 1) / (13 + 2 * R - 2 * R**2)


def T_of_R(R, branch):
    if branch == "high":
        return (3 * R**2 - 1) / (2 * R**3 * (4 - 3 * R + R**3) ** 3)
    return ((1 + R) ** 2 * (13 + 2 * R - 2 * R**2) ** 3 * (19 - 10 * R - 2 * R**2)) / (
        128 * (R - 5) * (4 + R) ** 3 * (7 - R + R**2) ** 3)


def U_of_R_coeffs(R, branch):
    """Coefficients of U_R(H) in powers of H (degree 4, no constant term)."""
    if branch == "high":
        den = R**2 * (3 - R**2) ** 2 * (4 - 3 * R + R**3) ** 2
        return [0, (3 - 10 * R**2 + 3 * R**4) / den, (1 - R**4) / den, -2 * (1 - R**2) / den, -1 / den]
    w = 13 + 2 * R - 2 * R**2
    pre = -(w**2) / (256 * (5 - R) ** 2 * (4 + R) ** 2 * (7 - R + R**2) ** 2)
    c0 = 8 * (1 + R) * (5 - R) * (19 - 10 * R - 2 * R**2)
    c1 = -8 * (1 + R) * (5 - R) * 3 * (1 - 2 * R)
    c2 = 12 * (1 - 2 * R) * w
    c3 = w**2
    return [0, pre * c0, pre * c1, pre * c2, pre * c3]


def Hc_of_R(R, branch):
    if branch == "high":
        return (R**2 - 3) / 2
    disc = 3 * (5 - R) * (1 + R) * (R**2 - 7)
    root = mpmath.sqrt(max(disc, 0)) if isinstance(R, mpmath.mpf) else math.sqrt(max(disc, 0.0))
    return (5 + 4 * R - R**2 - root) / (13 + 2 * R - 2 * R**2)


def branch_of_R(R):
    if not R1 < R < RINF:
        raise DomainError(f"R={R} outside ({R1}, {RINF})")
    if abs(R - RC) < 1e-14:
        return "critical"
    return "high" if R < RC else "low"


@dataclass(frozen=True)
class TemperaturePoint:
    nu: float
    R: float
    branch: str
    S_c: float
    t_c: float
    u_c: float
    H_c: float
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def phase(self):
        return self.branch


def _point(R, branch_name, formula_branch):
    nu = nu_of_R(R, formula_branch)
    S = S_of_R(R, formula_branch)
    T = T_of_R(R, formula_branch)
    tc = mpmath.sqrt(T) if isinstance(T, mpmath.mpf) else math.sqrt(T)
    Hc = Hc_of_R(R, formula_branch)
    U = U_of_R_coeffs(R, formula_branch)
    uc = sum(c * Hc**k for k, c in enumerate(U)) / tc
    return TemperaturePoint(nu, R, branch_name, S, tc, uc, Hc)


def from_R(R) -> TemperaturePoint:
    """Temperature point parametrized by R; at R_c both formulas are compared."""
    branch = branch_of_R(R)
    if branch == "critical":
        # both branch formulas at R = sqrt 7, compared in extended precision
        with mpmath.workdps(40):
            r = mpmath.sqrt(7)
            hi = _point(r, "critical", "high")
            lo = _point(r, "critical", "low")
            keys = ("nu", "S_c", "t_c", "u_c", "H_c")
            diffs = {k: float(abs(getattr(hi, k) - getattr(lo, k))) for k in keys}
            vals = {k: float(getattr(hi, k)) for k in keys}
        return TemperaturePoint(R=RC, branch="critical", checks={"branch_agreement": diffs}, **vals)
    return _point(R, branch, branch)


def R_of_nu(nu):
    if nu <= 1:
        raise DomainError(f"nu={nu} must exceed 1")
    if abs(nu - NU_C) < 1e-13 * NU_C:
        return RC
    if nu < NU_C:
        # R^3 - 3R = 2(nu - 1) has the single real root given by Cardano
        c = nu - 1
        if c < 1:
            # three real roots; the one above sqrt 3 is the trigonometric one
            return 2 * math.cos(math.acos(c) / 3)
        r = math.sqrt(c * c - 1)
        return (c + r) ** (1 / 3) + (c - r) ** (1 / 3)
    return (1 + math.sqrt(27 - 54 / nu)) / 2


def critical_point(nu) -> TemperaturePoint:
    """The point (S_c, t_c, u_c, H_c) on the critical line at coupling nu."""
    nu = float(nu)
    if nu <= 1:
        raise DomainError(f"nu={nu} must exceed 1")
    return from_R(R_of_nu(nu))


def x_check_poly(R, branch=None):
    """x_R(H) = U_R(H)/U_R(H_c) as numpy coefficients (lowest first)."""
    branch = branch or branch_of_R(R)
    fb = "high" if branch in ("high", "critical") else "low"
    U = np.array(U_of_R_coeffs(R, fb), dtype=float)
    Hc = Hc_of_R(R, fb)
    return U / np.polynomial.polynomial.polyval(Hc, U), Hc


def x_check_taylor(R, branch=None):
    """Coefficients x_n of 1 - x_R(H_c - h) = sum_n x_n h^n."""
    p, Hc = x_check_poly(R, branch)
    shifted = np.polynomial.polynomial.Polynomial(p)(np.polynomial.polynomial.Polynomial([Hc, -1]))
    c = -shifted.coef
    c[0] += 1
    return c


def x_check_critical_zeros(R):
    """Zeros of x_R' (a cubic) as a sorted complex array."""
    p, _ = x_check_poly(R)
    return np.sort_complex(np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polyder(p)))


# ---------------------------------------------------------------------------
# J constants


def eval_J1(R):
    if not R1 < R < RC:
        raise DomainError(f"J1 is defined for R in ({R1}, {RC}); got {R}")
    num = math.sqrt((1 + R**2) * (7 - R**2) ** 3 * (14 * R**2 - 1 - R**4) ** 5)
    return num / (math.sqrt(2) * (3 * R**2 - 1) * (29 + 75 * R**2 - 17 * R**4 + R**6) ** 2)


def J3():
    return 27 / 20 * (3 / 2) ** (2 / 3)


# ---------------------------------------------------------------------------
# double series of Z_0 in (t, u)


def _exact(nu):
    if isinstance(nu, (int, Fraction)):
        return Fraction(nu)
    if isinstance(nu, str):
        return Fraction(nu)
    return nu


def series_z_p0(nu, p_max, n_max):
    """Coefficients [t^n u^p] Z_0 for p <= p_max, n <= n_max.

    The parametrization is expanded around S = nu (t = 0): first S as a series
    in tau = t^2, then H as a series in w = t u by reversing U, finally Z_0.
    Returns a dict p -> list of coefficients indexed by n.  Exact for
    rational nu.
    """
    nu = _exact(nu)
    if nu == 1 or nu == -1:
        raise ParametrizationPole("1 - nu^2")
    ni = n_max // 2 + 3          # tau orders
    nj = p_max + 2               # w orders
    # S = nu - sigma(tau): tau = -sigma * g(nu - sigma)
    g_num = lambda S: (S + nu - 2) * _quartic(S, nu)  # noqa: E731
    den = lambda S: 32 * (1 - nu**2) ** 3 * S**2      # noqa: E731
    one = Fraction(1) if isinstance(nu, Fraction) else 1.0
    sigma = [0 * one] * ni
    for _ in range(ni + 1):
        S = [nu - s if k == 0 else -s for k, s in enumerate(sigma)]
        S[0] = nu - sigma[0]
        g = ser.mul(_series_apply(g_num, S, ni), ser.inverse(_series_apply(den, S, ni), ni), ni)
        # sigma = -tau / g
        ginv = ser.inverse(g, ni)
        sigma = [0 * one] + [-c for c in ginv[: ni - 1]]
    S = [nu - sigma[0]] + [-c for c in sigma[1:]]
    if S[0] == 0:
        raise ParametrizationPole("S")
    Sb = ser.from_tau(S, ni, nj)
    # H from w = H * P(H) / (16 (1-nu^2)^2 S):  H = w * 16 (1-nu^2)^2 S / P(H)
    upoly = [ser.from_tau(_series_apply(lambda s, k=k: _u_poly(s, nu)[k], S, ni), ni, nj) for k in range(4)]
    pref = ser.bscale(Sb, 16 * (1 - nu**2) ** 2)
    w = ser.bzero(ni, nj)
    w[0][1] = one
    H = ser.bzero(ni, nj)
    for _ in range(nj + 1):
        P = ser.bpoly_eval(upoly, H, ni, nj)
        H = ser.bmul(ser.bmul(w, pref, ni, nj), ser.binverse(P, ni, nj), ni, nj)
    # tau Z_0 = w/(4 (1-nu^2) S) * [ (S-nu)(S+nu-2) (w/H)/w ... ]
    # write w/H as a series: H = w * G  => w/H = 1/G
    G = [row[1:] + [0] for row in H]
    winvH = ser.binverse(G, ni, nj)
    f = [ser.from_tau(_series_apply(lambda s, k=k: _z0_factor(s, nu)[k], S, ni), ni, nj) for k in range(4)]
    # Q(H)/H * w = f0 * (w/H) + w * (f1 + f2 H + f3 H^2)
    inner = ser.bpoly_eval([f[1], f[2], f[3]], H, ni, nj)
    bracket = ser.badd(ser.bmul(f[0], winvH, ni, nj), ser.bmul(w, inner, ni, nj))
    Sinv = ser.from_tau(ser.inverse(S, ni), ni, nj)
    tauZ = ser.bscale(ser.bmul(bracket, Sinv, ni, nj), 1 / (4 * (1 - nu**2)))
    # tau Z_0 = sum c[i][p] tau^i w^p  =>  [t^n u^p] Z_0 = c[i][p] with n = 2i + p - 2
    out = {p: [0 * one] * (n_max + 1) for p in range(p_max + 1)}
    for i in range(ni):
        for p in range(min(nj, p_max + 1)):
            n = 2 * i + p - 2
            if 0 <= n <= n_max:
                out[p][n] = tauZ[i][p]
            elif n < 0 and tauZ[i][p] != 0 and not (p == 0 and i == 1):
                raise ArithmeticError(f"unexpected negative t-power at p={p}, i={i}")
    return out


def _series_apply(fn, S, n):
    """Apply a polynomial function fn (written with + - * and powers) to a series."""
    # evaluate by interpolating the polynomial: fn is polynomial of degree <= 4 in S
    deg = 6
    xs = list(range(deg + 1))
    ys = [fn(Fraction(x) if isinstance(S[0], Fraction) else float(x)) for x in xs]
    coeffs = _interp(xs, ys)
    return ser.poly_eval_series(coeffs, S, n)


def _interp(xs, ys):
    """Monomial coefficients of the interpolating polynomial (exact if Fractions)."""
    n = len(xs)
    coeffs = [0] * n
    for i in range(n):
        basis = [1]
        denom = 1
        for j in range(n):
            if j == i:
                continue
            basis = [0] + basis
            for k in range(len(basis) - 1):
                basis[k] -= xs[j] * basis[k + 1]
            denom *= xs[i] - xs[j]
        for k in range(n):
            coeffs[k] += ys[i] * basis[k] / denom
    return coeffs
