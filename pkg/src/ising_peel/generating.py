"""Numerical providers for partition functions on and below the critical line.

* ``zero_row`` / ``one_row``: long float arrays of z_{k,0} rho^k and
  z_{k,1} rho^k, where rho is the radius of convergence in u at the given t.
* ``z_grid``: z_{p,q}(t, nu) for small perimeters in extended precision,
  propagated from the first two rows by the loop equation.
* ``CriticalConstants``: singular amplitudes a_0, a_1, b, the value A(u_c)
  and the head of A(u) = sum_p a_p u^p.

A(u) is obtained from the linear form of the loop equation,
K(u,v) Z(u,v) = N(u,v), by differentiating N/K with respect to Z_0(v) at
v = u_c.  Everything here is derived from the parametrization of Z_0 and the
loop equation; nothing is fitted unless a ``TailFit`` is returned.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import curves
from . import series as ser


class ProviderRangeError(LookupError):
    pass


# ---------------------------------------------------------------------------
# S(t) and the radius in u


def solve_S(nu, t, ctx=float):
    """The S in [S_c, nu] with T(S, nu) = t^2."""
    tp = curves.critical_point(nu)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > tp.t_c * (1 + 1e-12):
        raise curves.DomainError(f"inadmissible point: t={t} exceeds t_c={tp.t_c}")
    if ctx is float:
        if t >= tp.t_c * (1 - 1e-15):
            return tp.S_c
        lo, hi = tp.S_c, float(nu)
        f = lambda S: curves.eval_That(S, float(nu)) - t * t  # noqa: E731
        for _ in range(200):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2
    nu_m = mpmath.mpf(nu)
    t = mpmath.mpf(t)
    Sc = _mp_Sc(nu_m)
    tc2 = curves.eval_That(Sc, nu_m)
    if t * t >= tc2 * (1 - mpmath.mpf(10) ** (-mpmath.mp.dps + 5)):
        return Sc
    f = lambda S: curves.eval_That(S, nu_m) - t * t  # noqa: E731
    lo, hi = Sc, nu_m
    for _ in range(int(mpmath.mp.prec) + 10):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def mp_R_of_nu(nu):
    """R(nu) in working precision (same closed forms as the float version)."""
    nu = mpmath.mpf(nu)
    nuc = 1 + 2 * mpmath.sqrt(7)
    if abs(nu - nuc) < mpmath.mpf(10) ** (-12):
        return mpmath.sqrt(7), "critical"
    if nu < nuc:
        c = nu - 1
        r = mpmath.sqrt(c * c - 1)
        return mpmath.cbrt(c + r) + mpmath.cbrt(c - r), "high"
    return (1 + mpmath.sqrt(27 - 54 / nu)) / 2, "low"


def _mp_Sc(nu):
    R, branch = mp_R_of_nu(nu)
    return curves.S_of_R(R, "high" if branch == "critical" else branch)


def _mp_Hc(nu):
    R, branch = mp_R_of_nu(nu)
    return curves.Hc_of_R(R, "high" if branch == "critical" else branch)


def mp_t_c(nu):
    nu = mpmath.mpf(nu)
    return mpmath.sqrt(curves.eval_That(_mp_Sc(nu), nu))


def _u_coeffs(S, nu, t):
    """Coefficients of u(H) = U(H)/t, lowest first (index 0 is the H^1 term)."""
    c = curves._u_poly(S, nu)
    pre = 1 / (16 * (1 - nu**2) ** 2 * S * t)
    return [pre * x for x in c]


def radius_H(S, nu, t):
    """Smallest positive zero of dU/dH: the H that parametrizes the radius in u."""
    c = [float(x) for x in curves._u_poly(S, nu)]
    # d/dH [c0 H + c1 H^2 + c2 H^3 + c3 H^4]
    roots = np.roots([4 * c[3], 3 * c[2], 2 * c[1], c[0]])
    pos = sorted(r.real for r in roots if abs(r.imag) < 1e-9 * max(1, abs(r)) and r.real > 0)
    if not pos:
        raise ArithmeticError("no positive critical point of U")
    return pos[0]


# ---------------------------------------------------------------------------
# long float rows at t (default t_c)


@dataclass
class Rows:
    nu: float
    t: float
    rho: float          # radius of convergence in u
    H_star: float
    S: float
    z0: np.ndarray      # z_{k,0} rho^k
    z1: np.ndarray      # z_{k,1} rho^k


@functools.lru_cache(maxsize=16)
def rows(nu, order=10000, t=None) -> Rows:
    """z_{k,0} rho^k and z_{k,1} rho^k for k <= order, float64.

    Z_0 is a degree-6 polynomial in H, and H(x) (x = u/rho) is obtained by
    reverting the quartic u(H) order by order.
    """
    nu = float(nu)
    tp = curves.critical_point(nu)
    if t is None:
        t = tp.t_c
        S, Hs, rho = tp.S_c, tp.H_c, tp.u_c
    else:
        S = solve_S(nu, t)
        Hs = radius_H(S, nu, t)
        rho = sum(c * Hs ** (k + 1) for k, c in enumerate(_u_coeffs(S, nu, t)))
    uc = _u_coeffs(S, nu, t)
    # x = u/rho = sum_k (uc[k]/rho) H^(k+1)
    h, _ = ser.revert_polynomial([c / rho for c in uc], 1.0, order + 2)
    z0poly = curves.z0hat_polynomial(S, nu)
    z0 = ser.compose_polynomial(z0poly, h, order + 2)
    z0[0] = 1.0
    z1 = one_row_from_zero_row(z0, nu, t, rho)[: order + 1]
    return Rows(nu, t, rho, Hs, S, z0[: order + 1], z1)


def one_row_from_zero_row(z0, nu, t, rho):
    """z_{p,1} rho^p from z_{p,0} rho^p (arrays indexed by p).

    Coefficient form of Z_1(u) = (1-nu^2)[u + t(Z_0-1-z_{1,0}u)/u^2 + t((Z_0-1)/u)^2] + nu(Z_0-1)/u.
    """
    n = len(z0)
    out = np.zeros(n)
    zm = np.array(z0, dtype=float)
    zm[0] = 0.0
    sq = np.convolve(zm, zm)[: n + 2]
    for_p = np.arange(n - 2)
    out[: n - 2] = (1 - nu**2) * (t / rho**2) * (zm[for_p + 2] + sq[for_p + 2]) + nu / rho * zm[for_p + 1]
    out[1] += (1 - nu**2) * rho
    out[n - 2:] = np.nan
    return out


# ---------------------------------------------------------------------------
# extended-precision finite grid


def _mp_zero_row(nu, t, pmax):
    """z_{p,0}(t, nu) for p <= pmax in the current mpmath precision."""
    nu = mpmath.mpf(nu)
    t = mpmath.mpf(t)
    S = solve_S(nu, t, ctx="mp")
    uc = _u_coeffs(S, nu, t)
    # revert u = sum_k uc[k] H^{k+1} (no scaling: exact rational recursion)
    K = pmax + 1
    h = [mpmath.mpf(0)] * (K + 1)
    pw = [[mpmath.mpf(0)] * (K + 1) for _ in range(4)]
    for k in range(1, K + 1):
        for j in range(1, 4):
            prev = pw[j - 1] if j > 1 else h
            pw[j][k] = mpmath.fsum(h[i] * prev[k - i] for i in range(1, k))
        rhs = (1 if k == 1 else 0) - mpmath.fsum(uc[j] * pw[j][k] for j in range(1, 4))
        h[k] = rhs / uc[0]
        pw[0][k] = h[k]
    coeffs = curves.z0hat_polynomial(S, nu)
    out = [mpmath.mpf(0)] * (K + 1)
    power = [mpmath.mpf(1)] + [mpmath.mpf(0)] * K
    for j, c in enumerate(coeffs):
        if j > 0:
            power = [mpmath.fsum(power[i] * h[k - i] for i in range(0, k)) for k in range(K + 1)]
        for k in range(K + 1):
            out[k] += c * power[k]
    out[0] = mpmath.mpf(1)
    return out[: pmax + 1]


def z_grid(nu, pmax, qmax, t=None, dps=60):
    """z_{p,q}(t, nu) for p <= pmax, q <= qmax as nested lists of mpf.

    Rows q = 0, 1 come from the parametrization; rows q >= 2 are solved from
    the loop equation for its C- term.  The recursion amplifies rounding,
    so it runs at `dps` digits; callers compare two precisions when in doubt.
    """
    with mpmath.workdps(dps):
        nu_m = mpmath.mpf(nu)
        t_m = mp_t_c(nu_m) if t is None else mpmath.mpf(t)
        P0 = pmax + qmax + 3
        z0 = _mp_zero_row(nu_m, t_m, P0 + 2)
        z1 = []
        for p in range(P0 + 1):
            conv = mpmath.fsum(z0[k + 1] * z0[p + 1 - k] for k in range(p + 1))
            val = (1 - nu_m**2) * ((1 if p == 1 else 0) + t_m * z0[p + 2] + t_m * conv) + nu_m * z0[p + 1]
            z1.append(val)
        z = {0: z0[: P0 + 1], 1: z1}
        for q in range(0, qmax - 1):
            # row q+2 from rows q and q+1, valid for p <= len(row q) - 3
            rq, rq1 = z[q], z[q + 1]
            top = min(len(rq) - 3, len(rq1) - 1)
            row = []
            for p in range(top + 1):
                edge = 1 if (p, q) == (1, 0) else (nu_m if (p, q) == (0, 1) else 0)
                s = rq1[p] - edge - t_m * rq[p + 2]
                for k in range(q):
                    s -= t_m * z[q - k][p + 1] * z[k][1]
                    s -= nu_m * t_m * z[q - k + 1][p] * z[k + 1][0]
                for k in range(p + 1):
                    s -= t_m * z[0][k + 1] * rq[p - k + 1]
                    s -= nu_m * t_m * z[1][k] * rq1[p - k]
                row.append(s / (nu_m * t_m))
            z[q + 2] = row
        out = []
        for p in range(pmax + 1):
            out.append([z[q][p] if p < len(z[q]) else None for q in range(qmax + 1)])
    return out


def z_value(nu, p, q, t=None, dps=60):
    p, q = max(p, q), min(p, q)
    g = z_grid(nu, q, p, t=t, dps=dps)
    return g[q][p]


# ---------------------------------------------------------------------------
# the linear loop equation K Z = N


def kernel(u, v, Z0u, Z0v, Z1u, Z1v, t, nu):
    return u * u * v - t * v * v * Z0u - nu * t * u * u * Z0v - t * u * v * v * Z1v - nu * t * u * u * v * Z1u


def numerator(u, v, Z0u, Z0v, Z1u, Z1v, t, nu):
    return (u * u * v * Z0u + u * u * v * v * (u + nu * v)
            - t * v * v * (Z0v + u * Z1v) - nu * t * u * u * (Z0u + v * Z1u)
            - t * u * v * v * Z1v * (Z0u + Z0v - 1)
            - nu * t * u * u * (Z0v - 1) * (Z0u + v * Z1u)
            - t * v * v * Z0v * (Z0u - 1)
            - nu * t * u * u * v * Z1u * Z0u)


def z1_from_z0(Z0, u, t, nu, z10):
    return (1 - nu**2) * (u + t * (Z0 - 1 - z10 * u) / u**2 + t * ((Z0 - 1) / u) ** 2) + nu * (Z0 - 1) / u


def dz1_dz0(Z0, u, t, nu):
    return (1 - nu**2) * (t / u**2 + 2 * t * (Z0 - 1) / u**2) + nu / u


# ---------------------------------------------------------------------------
# singular expansions on the critical line


@dataclass
class CriticalConstants:
    nu: float
    phase: str
    t_c: float
    u_c: float
    H_c: float
    Z0_uc: float
    Z1_uc: float
    dZ0_uc: float
    dZ1_uc: float
    a0: float
    a1: float
    b: float
    A_uc: float
    A_head: np.ndarray      # a_p u_c^p
    x_taylor: list
    z0_puiseux: list
    A_puiseux: list         # coefficients of A(u_c x)/a0 in powers of s = (1-x)^delta
    delta: float
    approx: bool = False


def _mp_poly_shift(coeffs, Hc, n):
    """Coefficients in h of P(Hc - h), P given lowest first."""
    out = [mpmath.mpf(0)] * n
    for j, c in enumerate(coeffs):
        for i in range(j + 1):
            if i < n:
                out[i] += c * mpmath.binomial(j, i) * Hc ** (j - i) * (-1) ** i
    return out


def _lmul(a, b, n):
    return [mpmath.fsum(a[i] * b[k - i] for i in range(k + 1) if i < len(a) and k - i < len(b)) for k in range(n)]


def _linv(a, n):
    out = [mpmath.mpf(0)] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -mpmath.fsum(a[i] * out[k - i] for i in range(1, min(k, len(a) - 1) + 1)) / a[0]
    return out


class Laurent:
    """Truncated Laurent series sum_{k>=val} c_k h^k with mpf coefficients."""

    def __init__(self, coeffs, val=0, n=None):
        self.c = list(coeffs)
        self.val = val
        self.n = n or len(self.c)

    @classmethod
    def const(cls, x, n):
        return cls([mpmath.mpf(x)] + [mpmath.mpf(0)] * (n - 1), 0, n)

    def _norm(self):
        c, v = list(self.c), self.val
        eps = mpmath.mpf(10) ** (-(mpmath.mp.dps - 12))
        scale = max((abs(x) for x in c), default=0)
        while c and abs(c[0]) <= eps * max(scale, 1e-300):
            c.pop(0)
            v += 1
        return Laurent(c, v, self.n)

    def __add__(self, o):
        if not isinstance(o, Laurent):
            o = Laurent.const(o, self.n)
        v = min(self.val, o.val)
        n = min(self.val + len(self.c), o.val + len(o.c)) - v
        out = [mpmath.mpf(0)] * n
        for L in (self, o):
            for i, x in enumerate(L.c):
                k = L.val + i - v
                if k < n:
                    out[k] += x
        return Laurent(out, v, self.n)

    __radd__ = __add__

    def __neg__(self):
        return Laurent([-x for x in self.c], self.val, self.n)

    def __sub__(self, o):
        return self + (-o if isinstance(o, Laurent) else -mpmath.mpf(o))

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Laurent):
            return Laurent([x * o for x in self.c], self.val, self.n)
        n = min(len(self.c), len(o.c))
        return Laurent(_lmul(self.c, o.c, n), self.val + o.val, self.n)

    __rmul__ = __mul__

    def inv(self):
        s = self._norm()
        if not s.c:
            raise ZeroDivisionError("Laurent series vanishes to working precision")
        return Laurent(_linv(s.c, len(s.c)), -s.val, self.n)

    def __truediv__(self, o):
        if not isinstance(o, Laurent):
            return self * (1 / mpmath.mpf(o))
        return self * o.inv()

    def __rtruediv__(self, o):
        return self.inv() * o

    def __pow__(self, k):
        out = Laurent.const(1, self.n)
        for _ in range(k):
            out = out * self
        return out

    def coeff(self, k):
        i = k - self.val
        return self.c[i] if 0 <= i < len(self.c) else mpmath.mpf(0)


def _compose_laurent(f, psi, delta_order, n):
    """f(h) with h = psi(s) (psi has zero constant term), as a Laurent series in s."""
    # f = sum_k f_k h^k, k >= f.val; h = s * g(s) with g(0) != 0
    g = psi.c[1:] if psi.val == 0 else psi.c
    G = Laurent(g, 0, n)
    out = Laurent([mpmath.mpf(0)] * n, 0, n)
    hp = Laurent.const(1, n)
    Ginv = G.inv()
    for k in range(len(f.c)):
        e = f.val + k
        if e >= 0:
            term = G ** e if e > 0 else Laurent.const(1, n)
        else:
            term = Ginv ** (-e)
        term = Laurent(term.c, term.val + e, n)
        out = out + term * f.c[k]
    del hp
    return out


@functools.lru_cache(maxsize=32)
def critical_constants(nu, head=4000, dps=50) -> CriticalConstants:
    """Singular amplitudes and A(u) on the critical line t = t_c(nu)."""
    nu_f = float(nu)
    tp = curves.critical_point(nu_f)
    phase = tp.branch
    n = 16
    with mpmath.workdps(dps):
        nu_m = mpmath.mpf(nu_f) if phase != "critical" else 1 + 2 * mpmath.sqrt(7)
        S = _mp_Sc(nu_m)
        t = mpmath.sqrt(curves.eval_That(S, nu_m))
        uco = _u_coeffs(S, nu_m, t)
        ucoef = [mpmath.mpf(0)] + uco
        # H_c: smallest positive zero of u'(H), polished in extended precision
        Hc = _mp_Hc(nu_m)
        uc = mpmath.fsum(c * Hc**k for k, c in enumerate(ucoef))
        z0coef = curves.z0hat_polynomial(S, nu_m)
        # series in h = Hc - H
        u_h = Laurent(_mp_poly_shift(ucoef, Hc, n), 0, n)
        Z0_h = Laurent(_mp_poly_shift(z0coef, Hc, n), 0, n)
        x_h = u_h * (1 / uc)
        one_minus_x = (1 - x_h)._norm()
        m = one_minus_x.val          # 2 off criticality, 3 at criticality
        delta = mpmath.mpf(1) / m
        # psi: s = (1-x)^delta = h * (xm + ...)^delta  ->  h = psi(s)
        w = Laurent(one_minus_x.c, 0, n)
        lead = w.c[0]
        # (w/lead)^delta via log/exp of series
        wn = [c / lead for c in w.c]
        root = _series_pow(wn, delta, n)
        sh = Laurent([mpmath.mpf(0)] + [c * lead**delta for c in root[: n - 1]], 0, n)  # s(h)
        psi = _revert(sh, n)
        # Z_1 via its closed form in terms of Z_0 and u
        z10 = z0coef_val = None  # noqa: F841
        z10 = _z10_mp(S, nu_m, t)
        Z0c = Z0_h.coeff(0)
        Z1_h = (1 - nu_m**2) * (u_h + t * (Z0_h - 1 - u_h * z10) / (u_h * u_h) + t * ((Z0_h - 1) / u_h) ** 2) \
            + nu_m * (Z0_h - 1) / u_h
        Z1c = Z1_h.coeff(0)
        # expansions in s
        Z0_s = _compose_laurent(Z0_h, psi, m, n)
        Z1_s = _compose_laurent(Z1_h, psi, m, n)
        alpha0_pow = 3 if m == 2 else 4
        a0 = Z0_s.coeff(alpha0_pow)
        a1 = Z1_s.coeff(alpha0_pow)
        # derivative in u at u_c: dZ/du = (dZ/dh)/(du/dh), limits at h=0
        dZ0 = _ratio_limit(_deriv(Z0_h), _deriv(u_h))
        dZ1 = _ratio_limit(_deriv(Z1_h), _deriv(u_h))
        # G(u) = d(N/K)/dZ0(v) at v = u_c, as a function of h
        v = uc
        F1 = dz1_dz0(Z0c, v, t, nu_m)
        Kh = kernel(u_h, v, Z0_h, Z0c, Z1_h, Z1c, t, nu_m)
        Nh = numerator(u_h, v, Z0_h, Z0c, Z1_h, Z1c, t, nu_m)
        dK = -nu_m * t * u_h * u_h + (-t * u_h * v * v) * F1
        dN = (-t * v * v - t * u_h * v * v * Z1c - nu_m * t * u_h * u_h * (Z0_h + v * Z1_h)
              - t * v * v * (Z0_h - 1)
              + F1 * (-t * u_h * v * v - t * u_h * v * v * (Z0_h + Z0c - 1)))
        G_h = (dN * Kh - Nh * dK) / (Kh * Kh)
        G_s = _compose_laurent(G_h._norm(), psi, m, n)
        if phase == "low":
            b = a0 * G_s.coeff(3)
        elif phase == "critical":
            b = a0 * G_s.coeff(1)
        else:
            b = a0 * G_s.coeff(-2)
        A_uc = a0 * G_s.coeff(0) if phase != "high" else mpmath.inf
        consts = dict(
            t_c=float(t), u_c=float(uc), H_c=float(Hc), Z0_uc=float(Z0c), Z1_uc=float(Z1c),
            dZ0_uc=float(dZ0), dZ1_uc=float(dZ1), a0=float(a0), a1=float(a1), b=float(b),
            A_uc=float(A_uc), x_taylor=[float(c) for c in one_minus_x.c],
            z0_puiseux=[float(Z0_s.coeff(k)) for k in range(8)],
            A_puiseux=[float(G_s.coeff(k)) for k in range(G_s.val, G_s.val + 8)], delta=float(delta))
    A_head = a_series(nu_f, head) * consts["a0"]
    return CriticalConstants(nu=nu_f, phase=phase, A_head=A_head, **consts)


def _z10_mp(S, nu, t):
    return curves.eval_z10hat(S, nu) / t**3


def _deriv(L):
    c = [(L.val + i) * x for i, x in enumerate(L.c)]
    return Laurent(c[1:] if L.val == 0 else c, L.val - 1 if L.val != 0 else 0, L.n)


def _ratio_limit(a, b):
    """lim_{h->0} a(h)/b(h) in h; the derivatives in u are taken w.r.t. -h."""
    q = (a._norm() / b._norm())
    return q.coeff(0)


def _series_pow(c, e, n):
    """(1 + c_1 x + ...)^e for c[0] = 1."""
    out = [mpmath.mpf(0)] * n
    out[0] = mpmath.mpf(1)
    # J. C. P. Miller recurrence
    for k in range(1, n):
        s = mpmath.mpf(0)
        for i in range(1, min(k, len(c) - 1) + 1):
            s += ((e + 1) * i - k) * c[i] * out[k - i]
        out[k] = s / k
    return out


def _revert(sh, n):
    """Inverse series of s(h) = s1 h + s2 h^2 + ... as h(s)."""
    s = sh.c
    h = [mpmath.mpf(0)] * n
    h[1] = 1 / s[1]
    for k in range(2, n):
        # coefficient k of s(h(x)) must vanish
        comp = [mpmath.mpf(0)] * n
        power = [mpmath.mpf(0)] * n
        power[0] = mpmath.mpf(1)
        for j in range(1, n):
            power = _lmul(power, h, n)
            if j < len(s):
                for i in range(n):
                    comp[i] += s[j] * power[i]
        h[k] = -comp[k] / s[1]
    return Laurent(h, 0, n)


# ---------------------------------------------------------------------------
# A(u)/a_0 as a power series in x = u/u_c


def _H_on_circle(S, nu, t, rho, xs):
    """H(x) for complex x (|x| < 1) continued from H(0) = 0 along the given path."""
    uc = [complex(c) / rho for c in _u_coeffs(S, nu, t)]
    H = np.empty(len(xs), dtype=complex)
    # start from the series root at the first point
    prev = 0j
    first = xs[0]
    for step in np.linspace(0, 1, 200)[1:]:
        roots = np.roots([uc[3], uc[2], uc[1], uc[0], -first * step])
        prev = roots[np.argmin(abs(roots - prev))]
    # all roots at once via companion matrices, then track by continuity
    n = len(xs)
    comp = np.zeros((n, 4, 4), dtype=complex)
    comp[:, 0, :] = -np.array([uc[2], uc[1], uc[0], 0]) / uc[3]
    comp[:, 0, 3] = xs / uc[3]
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1
    allroots = np.linalg.eigvals(comp)
    for i in range(n):
        r = allroots[i]
        prev = r[np.argmin(abs(r - prev))]
        H[i] = prev
    return H


def _poly(coeffs, x):
    out = np.zeros_like(x)
    for c in reversed(list(coeffs)):
        out = out * x + c
    return out


@functools.lru_cache(maxsize=16)
def a_series(nu, order=2000):
    """a_p u_c^p / a_0 for p <= order (float64).

    G(u) = d(N/K)/dZ_0(v) at v = u_c is evaluated exactly on a circle
    |u| = r u_c through the parametrization and its Taylor coefficients are
    recovered by FFT.  (For nu > nu_c the kernel vanishes inside the disk and
    the pole of N/K there is removable, which makes direct series division
    numerically useless.)
    """
    nu = float(nu)
    tp = curves.critical_point(nu)
    S, t, uc = tp.S_c, tp.t_c, tp.u_c
    cc = critical_constants_scalar(nu)
    Z0c, Z1c, z10 = cc["Z0_uc"], cc["Z1_uc"], cc["z10"]
    nfft = 1 << int(math.ceil(math.log2(16 * (order + 1))))
    radius = math.exp(-2.0 / (order + 1))
    theta = 2 * np.pi * np.arange(nfft) / nfft
    xs = radius * np.exp(1j * theta)
    H = _H_on_circle(S, nu, t, uc, xs)
    Z0 = _poly(curves.z0hat_polynomial(S, nu), H)
    u = uc * xs
    Z1 = z1_from_z0(Z0, u, t, nu, z10)
    v = uc
    F1 = dz1_dz0(Z0c, v, t, nu)
    K = kernel(u, v, Z0, Z0c, Z1, Z1c, t, nu)
    N = numerator(u, v, Z0, Z0c, Z1, Z1c, t, nu)
    dK = -nu * t * u * u - t * u * v * v * F1
    dN = (-t * v * v - t * u * v * v * Z1c - nu * t * u * u * (Z0 + v * Z1)
          - t * v * v * (Z0 - 1)
          + F1 * (-t * u * v * v - t * u * v * v * (Z0 + Z0c - 1)))
    G = (dN * K - N * dK) / (K * K)
    coeffs = np.fft.fft(G) / nfft
    k = np.arange(order + 1)
    return (coeffs[: order + 1] * radius ** (-k)).real


@functools.lru_cache(maxsize=32)
def critical_constants_scalar(nu):
    """Z_0(u_c), Z_1(u_c) from the closed forms (cheap)."""
    tp = curves.critical_point(nu)
    S, t, uc, Hc = tp.S_c, tp.t_c, tp.u_c, tp.H_c
    Z0 = curves.eval_Z0hat(Hc, S, tp.nu)
    z10 = curves.eval_z10hat(S, tp.nu) / t**3
    Z1 = z1_from_z0(Z0, uc, t, tp.nu, z10)
    return {"Z0_uc": Z0, "Z1_uc": Z1, "z10": z10}
