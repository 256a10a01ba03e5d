"""Phase exponents, scaling functions and the hitting-time limit law.

Also hosts three numerical tools used elsewhere: contour-integral
quadrature for the Hankel-type integrals behind c(lambda), the division of a
symmetric bivariate series by one with a simple zero at the origin, and
power-law fits of coefficient tails.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate, interpolate

from .curves import MU, DomainError

PHASES = ("low", "critical", "high")


class ModelMismatch(UserWarning):
    pass


# ---------------------------------------------------------------------------
# exponents and c(lambda)


@dataclass(frozen=True)
class PhaseExponents:
    phase: str
    alpha0: Fraction
    alpha1: Fraction
    alpha2: Fraction
    delta: Fraction


_EXPONENTS = {
    "low": (Fraction(3, 2), Fraction(3, 2), Fraction(3), Fraction(1, 2)),
    "critical": (Fraction(4, 3), Fraction(1, 3), Fraction(5, 3), Fraction(1, 3)),
    "high": (Fraction(3, 2), Fraction(-1), Fraction(1, 2), Fraction(1, 2)),
}


def _phase_name(phase):
    aliases = {"lowT": "low", "highT": "high", "crit": "critical", "c": "critical"}
    phase = aliases.get(phase, phase)
    if phase not in _EXPONENTS:
        raise ValueError(f"unknown phase {phase!r}; expected one of {PHASES}")
    return phase


def exponents(phase) -> PhaseExponents:
    phase = _phase_name(phase)
    return PhaseExponents(phase, *_EXPONENTS[phase])


def _critical_integral(lam, lower=0.0):
    """int_lower^inf (1+r)^{-7/3} (lam+r)^{-7/3} dr by adaptive quadrature.

    The range is cut at the two scales min(1, lam) and max(1, lam); the last
    piece uses r = b + x/(1-x) to map it onto [0, 1).
    """
    def g(r):
        return ((1 + r) * (lam + r)) ** (-7 / 3)

    def tail(x, b):
        if x >= 1.0:
            return 0.0
        return g(b + x / (1 - x)) / (1 - x) ** 2

    small, big = min(1.0, lam), max(1.0, lam)
    scales = np.geomspace(small, big, max(2, int(math.log10(big / small)) + 2))
    cuts = sorted({lower} | {max(lower, float(x)) for x in scales})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        # rescaled to [0, 1] so the tolerance is relative to this piece's scale
        piece = integrate.quad(lambda y: g(a + (b - a) * y), 0.0, 1.0, epsabs=0, epsrel=1e-12, limit=400)[0]
        total += (b - a) * piece
    total += integrate.quad(tail, 0.0, 1.0, args=(cuts[-1],), epsabs=0, epsrel=1e-12, limit=400)[0]
    return total


def c_lambda(phase, lam):
    """The diagonal scaling function c(lambda) of the given phase."""
    phase = _phase_name(phase)
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if phase == "low":
        return lam ** -2.5
    if phase == "high":
        return (1 + lam) ** -2.5
    if lam > 1:
        # reflection c(lam) lam^{11/3} = c(1/lam) keeps the quadrature on lam <= 1
        return 4 / 3 * _critical_integral(1 / lam) * lam ** (-11 / 3)
    return 4 / 3 * _critical_integral(lam)


_SPLINE_LO, _SPLINE_HI = 1e-6, 1e6


@functools.lru_cache(maxsize=1)
def _critical_log_spline():
    """Cubic spline of log c(lambda) in log lambda, for vectorized use in simulations."""
    xs = np.linspace(math.log(_SPLINE_LO), math.log(_SPLINE_HI), 2801)
    ys = np.array([math.log(c_lambda("critical", math.exp(x))) for x in xs])
    return interpolate.CubicSpline(xs, ys)


def c_critical_fast(lam):
    """Vectorized c(lambda) at criticality (spline, relative error below 1e-9).

    Outside [1e-6, 1e6] the leading power laws lambda^{-7/3} and
    lambda^{-4/3} continue the spline.
    """
    lam = np.asarray(lam, dtype=float)
    x = np.log(lam)
    lo_x, hi_x = math.log(_SPLINE_LO), math.log(_SPLINE_HI)
    out = np.exp(_critical_log_spline()(np.clip(x, lo_x, hi_x)))
    out = np.where(x > hi_x, out * np.exp(-7 / 3 * (x - hi_x)), out)
    out = np.where(x < lo_x, out * np.exp(-4 / 3 * (x - lo_x)), out)
    return out


# ---------------------------------------------------------------------------
# hitting-time law


def scaling_cdf(lam, t):
    """Limit of Prob(T_m > t p) along q/p -> lambda at criticality.

    Normalized form: the tail integral from mu t divided by the full one.
    """
    if lam <= 0 or t < 0:
        raise DomainError(f"need lambda > 0 and t >= 0, got lambda={lam}, t={t}")
    if t == 0:
        return 1.0
    return _critical_integral(lam, MU * t) / _critical_integral(lam)


def c_infinity(lam):
    """Rate of the one-jump-to-zero event in the diagonal limit."""
    return 4 / 3 * MU / (c_lambda("critical", lam) * lam ** (7 / 3))


def hazard_residual(lam, t, h=1e-4):
    """|d/dt log scaling_cdf + c_inf((lam+mu t)/(1+mu t))/(1+mu t)| by central differences."""
    lo, hi = max(t - h, 0.0), t + h
    deriv = (math.log(scaling_cdf(lam, hi)) - math.log(scaling_cdf(lam, lo))) / (hi - lo)
    lam_t = (lam + MU * t) / (1 + MU * t)
    return abs(deriv + c_infinity(lam_t) / (1 + MU * t))


def c_m(lam, m, consts=None):
    """Partial rate c_m(lambda) built from the head a_1..a_m of A(u) at nu_c.

    Returns (value, approx=True): the a_k come from the numerical providers.
    """
    from . import curves, generating

    if consts is None:
        consts = generating.critical_constants(curves.NU_C)
    t, u = consts.t_c, consts.u_c
    head = consts.A_head
    if m >= len(head):
        raise ValueError(f"m={m} beyond the computed head ({len(head) - 1})")
    s = float(np.sum(head[1: m + 1]))
    pref = -(4 / 3) * t / (consts.b * lam ** (7 / 3) * c_lambda("critical", lam))
    return pref * (1 + curves.NU_C) * (consts.a0 / u + consts.a1) * s


# ---------------------------------------------------------------------------
# contour integrals


def _ray_integral(f, phi):
    """(1/2 pi i) int over the clockwise keyhole made of the rays arg = +-phi.

    The contour comes in from infinity along arg = phi and leaves along
    arg = -phi, which is the orientation giving
    int_0^inf f(-r+i0) - f(-r-i0) dr as phi -> pi.
    """
    up, down = np.exp(1j * phi), np.exp(-1j * phi)

    def integrand(r, part):
        val = -f(r * up) * up + f(r * down) * down
        return val.real if part == 0 else val.imag

    re, _ = integrate.quad(integrand, 0, np.inf, args=(0,), epsabs=1e-13, limit=400)
    im, _ = integrate.quad(integrand, 0, np.inf, args=(1,), epsabs=1e-13, limit=400)
    return complex(re, im) / (2j * np.pi)


def _double_ray_integral(f, lam, phi_s, phi_t, n=160):
    """(1/2 pi i)^2 double keyhole integral of f(s,t) e^{s + lam t}.

    Each ray is integrated with Gauss-Laguerre-type nodes after the substitution
    r = x^2 (which removes the square-root behaviour at the origin).
    """
    x, w = np.polynomial.legendre.leggauss(n)
    # map [-1,1] -> [0, inf) via r = ((1+x)/(1-x))^2 * scale
    y = (1 + x) / (1 - x)
    dr_dx = 2 / (1 - x) ** 2

    def nodes(scale):
        r = scale * y**2
        jac = scale * 2 * y * dr_dx
        return r, w * jac

    rs, ws = nodes(1.0)
    rt, wt = nodes(1.0 / lam)
    total = 0j
    for sgn_s in (1, -1):
        es = np.exp(1j * sgn_s * phi_s)
        for sgn_t in (1, -1):
            et = np.exp(1j * sgn_t * phi_t)
            S = rs[:, None] * es
            T = rt[None, :] * et
            val = f(S, T) * np.exp(S + lam * T) * es * et
            # clockwise keyhole: the arg=+phi ray is traversed inwards
            total += (-sgn_s) * (-sgn_t) * np.sum(ws[:, None] * wt[None, :] * val)
    return total / (2j * np.pi) ** 2


@dataclass
class ContourResult:
    which: str
    lam: float | None
    numeric: float
    closed_form: float

    @property
    def deviation(self):
        return abs(self.numeric - self.closed_form)

    @property
    def relative_deviation(self):
        return self.deviation / abs(self.closed_form)


def contour_check(which, lam=1.0):
    """Evaluate a contour integral by quadrature and pair it with its closed form."""
    if which == "lowT_kernel":
        num = _ray_integral(lambda s: s**1.5 * np.exp(s), 2 * np.pi / 3)
        return ContourResult(which, None, num.real, -math.gamma(2.5) / math.pi)
    if which == "highT_ctilde":
        f = lambda s, t: np.sqrt(s) * np.sqrt(t) / (np.sqrt(s) + np.sqrt(t))  # noqa: E731
        num = _double_ray_integral(f, lam, 2 * np.pi / 3, 2 * np.pi / 3 + np.pi / 12)
        return ContourResult(which, lam, num.real, math.gamma(2.5) / math.pi * (1 + lam) ** -2.5)
    if which == "critical_ctilde":
        f = lambda s, t: -s * t / (s ** (1 / 3) + t ** (1 / 3))  # noqa: E731
        num = _double_ray_integral(f, lam, 2 * np.pi / 3, 2 * np.pi / 3)
        closed = -(math.sqrt(3) * math.gamma(7 / 3) / (2 * math.pi)) ** 2 * _critical_integral(lam)
        return ContourResult(which, lam, num.real, closed)
    raise ValueError(f"unknown contour {which!r}")


# ---------------------------------------------------------------------------
# division by a symmetric series with a simple zero


@dataclass
class SymmetricBivariateSeries:
    """Truncated series sum c[m][n] h^m k^n over m + n <= order, with c[m][n] = c[n][m]."""
    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (self.order + 1, self.order + 1):
            raise ValueError("coefficient array must be (order+1) x (order+1)")
        if not np.allclose(self.coeffs, self.coeffs.T, rtol=0, atol=0):
            raise ValueError("coefficients are not symmetric")

    @classmethod
    def random(cls, order, rng, zero_constant=False, simple_zero=False):
        c = rng.standard_normal((order + 1, order + 1))
        c = (c + c.T) / 2
        mask = np.add.outer(np.arange(order + 1), np.arange(order + 1)) <= order
        c = np.where(mask, c, 0.0)
        if zero_constant or simple_zero:
            c[0, 0] = 0.0
        if simple_zero:
            # keep the linear coefficient away from zero so the division is well conditioned
            c[1, 0] = c[0, 1] = math.copysign(1.0 + abs(c[1, 0]), c[1, 0])
        return cls(order, c)

    def degree_part(self, n):
        """Coefficients p_i of the homogeneous part sum_i p_i h^i k^(n-i)."""
        return np.array([self.coeffs[i, n - i] for i in range(n + 1)])


def _homogeneous_mul(a, b):
    return np.convolve(a, b)


def singular_division(N: SymmetricBivariateSeries, D: SymmetricBivariateSeries, order=None):
    """Q and J with N = Q D + J(hk) up to total degree `order`.

    Degree by degree: N~_n = N_n - sum_{j>=2} D_j Q_{n-j} must equal
    d (h + k) Q_{n-1} + J_l (hk)^l; J_l is read off at h = -k and Q_{n-1}
    follows by exact division by (h + k).
    """
    order = min(N.order, D.order) if order is None else order
    if D.coeffs[0, 0] != 0:
        raise ValueError("D must vanish at the origin")
    d = D.coeffs[1, 0]
    if d == 0:
        raise ValueError("higher-order zero unsupported: D has no linear term at the origin")
    Q = {}
    J = np.zeros(order // 2 + 1)
    for n in range(order + 1):
        rest = N.degree_part(n).astype(float)
        for j in range(2, n + 1):
            if n - j in Q:
                rest = rest - _homogeneous_mul(D.degree_part(j), Q[n - j])
        # rest(h,k) at (h,k) = (-1, 1): sum_i p_i (-1)^i
        at_minus = float(np.sum(rest * (-1.0) ** np.arange(n + 1)))
        if n % 2 == 0:
            l = n // 2
            J[l] = at_minus * (-1) ** l
            rest = rest.copy()
            rest[l] -= J[l]
        if n == 0:
            continue
        # (h + k) sum_i q_i h^i k^(n-1-i) = rest  <=>  q_{i-1} + q_i = p_i
        q = np.zeros(n)
        q[0] = rest[0]
        for i in range(1, n):
            q[i] = rest[i] - q[i - 1]
        Q[n - 1] = q / d
    Qc = np.zeros((order + 1, order + 1))
    for deg, part in Q.items():
        if deg <= order:
            for i, x in enumerate(part):
                Qc[i, deg - i] = x
    Qc = (Qc + Qc.T) / 2
    return SymmetricBivariateSeries(order, Qc), J


def division_error(N, D, Q, J, order=None):
    """Backward error of N = Q D + J(hk): max |residual| over the size of the terms."""
    order = N.order if order is None else order
    R = reconstruct(Q, D, J, order)
    mag = reconstruct(SymmetricBivariateSeries(Q.order, np.abs(Q.coeffs)),
                      SymmetricBivariateSeries(D.order, np.abs(D.coeffs)), np.abs(J), order)
    mask = np.add.outer(np.arange(order + 1), np.arange(order + 1)) <= order
    scale = np.where(mask, mag + np.abs(N.coeffs[: order + 1, : order + 1]), 1.0)
    return float(np.max(np.abs(R - N.coeffs[: order + 1, : order + 1])[mask] / scale[mask]))


def reconstruct(Q, D, J, order):
    """Q*D + J(hk) truncated at total degree `order`, as a coefficient matrix."""
    full = np.zeros((order + 1, order + 1))
    prod = np.zeros((2 * order + 1, 2 * order + 1))
    for i in range(order + 1):
        for j in range(order + 1 - i):
            if Q.coeffs[i, j]:
                prod[i: i + order + 1, j: j + order + 1] += Q.coeffs[i, j] * D.coeffs
    full[:, :] = prod[: order + 1, : order + 1]
    for l, x in enumerate(J):
        if 2 * l <= order:
            full[l, l] += x
    mask = np.add.outer(np.arange(order + 1), np.arange(order + 1)) <= order
    return np.where(mask, full, 0.0)


# ---------------------------------------------------------------------------
# power-law tail fits


@dataclass
class TailFit:
    """c_n ~ C n^{-theta} over n in the window, n of the given parity."""
    theta: float
    amplitude: float
    window: tuple
    residual: float
    target: str = "coefficients"
    parity: int | None = None
    approx: bool = field(default=True, init=False)

    def value(self, n):
        return self.amplitude * n ** (-self.theta)

    def tail_sum(self, n_start, r=1.0):
        """sum over n >= n_start (with the fit's parity) of C n^{-theta} r^n."""
        step = 2 if self.parity is not None else 1
        n0 = n_start
        if self.parity is not None and n0 % 2 != self.parity:
            n0 += 1
        if r >= 1.0:
            if self.theta <= 1:
                return math.inf
            return float(self.amplitude * step ** (-self.theta) * mpmath.zeta(self.theta, n0 / step))
        # geometric damping: direct summation until negligible
        total, n = 0.0, n0
        while True:
            term = self.amplitude * n ** (-self.theta) * r**n
            total += term
            if term < 1e-18 * max(total, 1e-300):
                return total
            n += step


def fit_coefficient_tail(coeffs, parity=None, window=None, target="coefficients"):
    """Least-squares fit of log c_n = log C - theta log n on the tail window."""
    idx = [n for n, c in enumerate(coeffs) if n > 0 and c > 0 and (parity is None or n % 2 == parity)]
    if window is not None:
        idx = [n for n in idx if window[0] <= n <= window[1]]
    else:
        idx = idx[len(idx) // 2:]
    if len(idx) < 8:
        raise ValueError(f"need at least 8 coefficients in the fit window, got {len(idx)}")
    x = np.log(np.array(idx, dtype=float))
    y = np.log(np.array([coeffs[n] for n in idx], dtype=float))
    A = np.vstack([np.ones_like(x), -x]).T
    sol, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    logC, theta = sol
    resid = float(np.sqrt(np.mean((A @ sol - y) ** 2)))
    if theta <= 0 or not np.isfinite(theta):
        warnings.warn(f"model mismatch: fitted exponent {theta}", ModelMismatch, stacklevel=2)
    return TailFit(float(theta), float(math.exp(logC)), (idx[0], idx[-1]), resid, target, parity)


def plateau(values):
    """Median of the last three window estimates (plateau detection)."""
    vals = list(values)[-3:]
    return float(np.median(vals))


def extrapolate_limit(ns, values, delta):
    """Richardson-style extrapolation of values(n) = L + c1 n^-delta + c2 n^-2delta."""
    ns = np.asarray(ns, dtype=float)
    A = np.vstack([np.ones_like(ns), ns ** (-delta), ns ** (-2 * delta)]).T
    sol, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(sol[0])
