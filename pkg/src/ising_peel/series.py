"""Truncated power series helpers.

Univariate series are plain lists (exact) or numpy arrays (float).  The
bivariate ones used for the double expansion in (t^2, t u) are lists of
lists indexed [i][j] for tau^i w^j.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if not x:
            continue
        for j in range(min(len(b), n - i)):
            out[i + j] += x * b[j]
    return out


def inverse(a, n):
    """1/a for a series with a[0] != 0."""
    if not a or a[0] == 0:
        raise ZeroDivisionError("series with vanishing constant term is not invertible")
    out = [0] * n
    inv0 = 1 / a[0] if not isinstance(a[0], int) else Fraction(1, a[0])
    out[0] = inv0
    for k in range(1, n):
        s = 0
        for i in range(1, min(k, len(a) - 1) + 1):
            s += a[i] * out[k - i]
        out[k] = -s * inv0
    return out


def poly_eval_series(coeffs, x, n):
    """sum_j coeffs[j] * x**j as a series, Horner style."""
    out = [0] * n
    for c in reversed(coeffs):
        out = mul(out, x, n)
        out[0] += c
    return out


# bivariate helpers: entry [i][j] multiplies tau^i w^j


def bzero(ni, nj):
    return [[0] * nj for _ in range(ni)]


def bmul(a, b, ni, nj):
    out = bzero(ni, nj)
    for i1, row1 in enumerate(a[:ni]):
        for j1, x in enumerate(row1[:nj]):
            if not x:
                continue
            for i2 in range(min(len(b), ni - i1)):
                row2 = b[i2]
                oi = out[i1 + i2]
                for j2 in range(min(len(row2), nj - j1)):
                    y = row2[j2]
                    if y:
                        oi[j1 + j2] += x * y
    return out


def badd(*terms):
    ni = max(len(t) for t in terms)
    nj = max(len(t[0]) for t in terms)
    out = bzero(ni, nj)
    for t in terms:
        for i, row in enumerate(t):
            for j, x in enumerate(row):
                out[i][j] += x
    return out


def bscale(a, c):
    return [[c * x for x in row] for row in a]


def from_tau(series, ni, nj):
    """Embed a univariate tau-series as a bivariate one."""
    out = bzero(ni, nj)
    for i, c in enumerate(series[:ni]):
        out[i][0] = c
    return out


def binverse(a, ni, nj):
    """Inverse of a bivariate series whose constant term is nonzero."""
    c0 = a[0][0]
    if c0 == 0:
        raise ZeroDivisionError("bivariate series with zero constant term")
    rest = [row[:] for row in a]
    rest[0][0] = 0
    inv0 = c0 ** -1 if not isinstance(c0, int) else Fraction(1, c0)
    # 1/(c0 + r) = inv0 * sum (-r*inv0)^k ; r has no constant term
    x = bscale(rest, -inv0)
    out = bzero(ni, nj)
    out[0][0] = inv0
    power = bzero(ni, nj)
    power[0][0] = 1
    for _ in range(ni + nj):
        power = bmul(power, x, ni, nj)
        if not any(any(v for v in row) for row in power):
            break
        out = badd(out, bscale(power, inv0))
    return out


def bpoly_eval(coeffs, x, ni, nj):
    """sum_j coeffs[j] x^j with bivariate coefficients and argument."""
    out = bzero(ni, nj)
    for c in reversed(coeffs):
        out = badd(bmul(out, x, ni, nj), c)
    return out


# float series reversion, O(K^2) via dot products


def revert_polynomial(poly, target, order):
    """Coefficients h_1..h_K of h(x) with poly(h(x)) = target * x.

    `poly` lists the coefficients c_1..c_d of a polynomial without constant
    term (poly[0] multiplies h).  Works in float64; each new coefficient is
    solved from the lower ones since h has no constant term.
    """
    d = len(poly)
    c1 = poly[0]
    if c1 == 0:
        raise ZeroDivisionError("reversion needs a nonzero linear coefficient")
    K = order
    h = np.zeros(K + 1)
    powers = [h] + [np.zeros(K + 1) for _ in range(d - 1)]
    for k in range(1, K + 1):
        # coefficient k of h^j (j >= 2) only involves h_1..h_{k-1}
        for j in range(1, d):
            prev = powers[j - 1]
            # [x^k] h^{j+1} = sum_{i=1}^{k-1} h_i [x^{k-i}] h^j
            powers[j][k] = np.dot(h[1:k], prev[k - 1:0:-1]) if k > 1 else 0.0
        rhs = (target if k == 1 else 0.0) - sum(poly[j] * powers[j][k] for j in range(1, d))
        h[k] = rhs / c1
    return h, powers


def compose_polynomial(coeffs, h, order):
    """sum_j coeffs[j] h^j as a float series of length order+1."""
    out = np.zeros(order + 1)
    for c in reversed(list(coeffs)):
        out = np.convolve(out, h)[: order + 1]
        out[0] += c
    return out
