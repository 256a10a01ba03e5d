"""Acceptance checks with pinned tolerances.

Each check returns an `Outcome`; `run` executes a selection of them.  The
quick selection covers the exact-equality and closed-form identity checks,
which finish in seconds; the rest are Monte Carlo or slow numerics.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    approx: bool = False
    values: dict = field(default_factory=dict)

    def line(self):
        flag = " [approx]" if self.approx else ""
        verdict = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {verdict}{flag}  {self.title}: {self.detail} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class _Check:
    number: int
    title: str
    func: object
    quick: bool
    approx: bool


CHECKS: dict[int, _Check] = {}


def _check(number, title, quick=False, approx=False):
    def register(func):
        CHECKS[number] = _Check(number, title, func, quick, approx)
        return func
    return register


def run_one(number) -> Outcome:
    chk = CHECKS[number]
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        passed, detail, values = chk.func()
    return Outcome(number, chk.title, bool(passed), detail, time.perf_counter() - t0, chk.approx, values)


def run(numbers=None, quick=False, report=None) -> list[Outcome]:
    if numbers is None:
        numbers = [n for n, c in sorted(CHECKS.items()) if c.quick or not quick]
    out = []
    for n in numbers:
        o = run_one(n)
        if report is not None:
            report(o)
        out.append(o)
    return out


# ---------------------------------------------------------------------------


@_check(1, "recursion table equals brute force", quick=True)
def oracle_equality():
    from .enumeration import brute_force_count, build_count_table

    t0 = time.perf_counter()
    tab = build_count_table(5, 0, 7)
    bad, total = [], 0
    for L in range(6):
        for p in range(L + 1):
            q = L - p
            for n in range(8):
                total += 1
                rec = {m: c for m, c in tab.get(p, q, n).items() if c}
                if rec != brute_force_count(p, q, n):
                    bad.append((p, q, n))
    sec = time.perf_counter() - t0
    return (not bad and sec < 60,
            f"{total - len(bad)}/{total} entries equal, {sec:.1f}s (limit 60s)",
            {"mismatches": bad, "seconds": sec})


@_check(2, "parametrized Z0 series equals enumeration", quick=True)
def series_vs_enumeration():
    from .curves import series_z_p0
    from .enumeration import build_count_table

    t0 = time.perf_counter()
    ser = series_z_p0(2, 6, 10)
    tab = build_count_table(6, 0, 10)
    worst = 0.0
    for p in range(7):
        exact = tab.poly(p, 0, Fraction(2))
        for n, c in enumerate(exact[:11]):
            s = ser[p][n]
            if c == 0:
                worst = max(worst, abs(float(s)))
            else:
                worst = max(worst, abs(float(Fraction(s) / c - 1) if isinstance(s, (int, Fraction))
                                       else float(s) / float(c) - 1))
    sec = time.perf_counter() - t0
    return (worst <= 1e-9 and sec < 30, f"max relative deviation {worst:.2e} (tol 1e-9), {sec:.1f}s",
            {"max_rel": worst})


@_check(3, "critical line and branch agreement", quick=True)
def critical_line():
    from . import curves

    worst = 0.0
    for lo, hi, br in ((curves.R1, curves.RC, "high"), (curves.RC, curves.RINF, "low")):
        pad = (hi - lo) * 1e-3
        for R in np.linspace(lo + pad, hi - pad, 100):
            S, nu = curves.S_of_R(R, br), curves.nu_of_R(R, br)
            worst = max(worst, abs(curves.dT_dS(S, nu)))
    crit = curves.from_R(curves.RC)
    agree = max(crit.checks["branch_agreement"].values())
    s_err = abs(crit.S_c - 3)
    h_err = abs(crit.H_c - 2)
    ok = worst <= 1e-10 and agree <= 1e-10 and s_err <= 1e-10 and h_err <= 1e-10
    return ok, (f"max |dT/dS| {worst:.1e}, branch gap {agree:.1e}, "
                f"|S_c-3| {s_err:.1e}, |H_c-2| {h_err:.1e} (tol 1e-10)"), {"dTdS": worst, "branch_gap": agree}


@_check(4, "scaling function symmetry and c(1) = 4/11", quick=True)
def scaling_symmetry():
    from . import asymptotics as asy

    lams = [2.0 ** k for k in range(-3, 4)]
    worst = 0.0
    for ph in asy.PHASES:
        a2 = float(asy.exponents(ph).alpha2)
        for lam in lams:
            lhs = asy.c_lambda(ph, lam) * lam ** (a2 + 2)
            rhs = asy.c_lambda(ph, 1 / lam)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    c1 = abs(asy.c_lambda("critical", 1.0) - 4 / 11)
    return worst <= 1e-8 and c1 <= 1e-8, f"symmetry deviation {worst:.1e}, |c(1)-4/11| {c1:.1e} (tol 1e-8)", {}


@_check(5, "contour integrals against closed forms", quick=True)
def contours():
    from . import asymptotics as asy

    low = asy.contour_check("lowT_kernel")
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for which in ("highT_ctilde", "critical_ctilde"):
            worst = max(worst, asy.contour_check(which, lam).relative_deviation)
    ok = low.deviation <= 1e-6 and worst <= 1e-4
    return ok, f"kernel deviation {low.deviation:.1e} (tol 1e-6), c~ relative deviation {worst:.1e} (tol 1e-4)", {}


@_check(6, "hitting-time limit law", quick=True)
def limit_law():
    from . import asymptotics as asy
    from .curves import MU

    cdf = max(abs(asy.scaling_cdf(1.0, t) - (1 + MU * t) ** (-11 / 3)) for t in (0.1, 1.0, 10.0))
    haz = max(asy.hazard_residual(lam, t) for lam in (0.5, 1.0, 2.0) for t in (0.1, 1.0, 10.0))
    return cdf <= 1e-8 and haz <= 1e-6, f"cdf deviation {cdf:.1e} (tol 1e-8), hazard residual {haz:.1e} (tol 1e-6)", {}


@_check(7, "drift of the half-perimeter at criticality")
def critical_drift():
    from .curves import MU, NU_C
    from .peeling import simulate

    t0 = time.perf_counter()
    path = simulate("P_inf", NU_C, n_steps=10 ** 6, seed=7)
    inc = (np.diff(path.X) + np.diff(path.Y)) / 2
    mean, se = float(inc.mean()), float(inc.std(ddof=1) / math.sqrt(inc.size))
    sec = time.perf_counter() - t0
    z = (mean - MU) / se
    return abs(z) <= 3 and sec < 60, f"drift {mean:.5f} vs {MU:.6f}, {z:+.2f} SE, {sec:.1f}s", {"mean": mean, "se": se}


@_check(8, "zero-temperature aggregates")
def zero_temperature():
    from .peeling import ZERO_TEMPERATURE_LIMITS, zero_temperature_aggregates

    agg = zero_temperature_aggregates(1e4)
    dev = {k: abs(agg[k] - v) for k, v in ZERO_TEMPERATURE_LIMITS.items()}
    worst = max(dev.values())
    return worst <= 2e-2, f"max deviation {worst:.2e} (tol 2e-2)", {"aggregates": agg}


@_check(9, "order parameter across phases", approx=True)
def order_parameter_phases():
    from .curves import NU_C
    from .peeling import order_parameter

    high = max(abs(order_parameter(nu).value) for nu in (2, 4))
    crit = order_parameter(NU_C).value
    crit_err = abs(crit - 1 / (2 * math.sqrt(7)))
    low = [order_parameter(nu).value for nu in (7, 10, 100, 1e4)]
    cap = 1 / (2 * math.sqrt(3)) + 1e-2
    mono = all(a < b for a, b in zip(low, low[1:])) and low[-1] < cap
    ok = high <= 5e-3 and crit_err <= 1e-2 and mono
    return ok, (f"high-T max {high:.1e}, critical error {crit_err:.1e}, "
                f"low-T {', '.join(f'{v:.4f}' for v in low)} increasing below {cap:.4f}: {mono}"), {"low": low}


@_check(10, "geometric law of T_0 at low temperature", approx=True)
def geometric_t0():
    from scipy import stats

    from .peeling import geometric_rate, sample_stop_times

    r = geometric_rate(8, 0).value
    T = sample_stop_times(8, 0, 10 ** 5, seed=1)
    kmax = int(np.quantile(T, 0.999))
    ks = np.arange(1, kmax + 1)
    obs = np.append(np.bincount(T.astype(np.int64), minlength=kmax + 1)[1: kmax + 1], (T > kmax).sum())
    exp = np.append(r * (1 - r) ** (ks - 1), (1 - r) ** kmax) * T.size
    pval = float(stats.chisquare(obs, exp).pvalue)
    return pval >= 0.01, f"r0 = {r:.6f}, chi-square p-value {pval:.3f} (level 0.01)", {"pvalue": pval}


@_check(11, "sampler frequencies against Boltzmann weights")
def sampler_exactness(n_samples=10 ** 5):
    from . import curves, enumeration as en, maps

    nu = 2.0
    t = 0.7 * curves.critical_point(nu).t_c
    z11 = en.eval_z(1, 1, t, 2, n_terms=40).value
    weights = {}
    for n in range(4):
        for tree in en.peeling_trees(1, 1, n):
            m = maps.assemble_tree(tree, 1, 1)
            weights[maps.canonical_code(m)] = nu ** m.monochromatic_edges() * t ** n / z11
    sampler = maps.get_sampler(nu, t)
    rng = np.random.Generator(np.random.Philox(11))
    counts = dict.fromkeys(weights, 0)
    invalid = 0
    for _ in range(n_samples):
        m = sampler.sample(1, 1, rng)
        if not maps.validate_map(m).ok:
            invalid += 1
        code = maps.canonical_code(m)
        if code in counts:
            counts[code] += 1
    z = [abs(counts[c] - n_samples * w) / math.sqrt(n_samples * w * (1 - w)) for c, w in weights.items()]
    worst = max(z)
    return worst <= 3 and invalid == 0, (f"{len(weights)} configurations, max |z| {worst:.2f} (tol 3), "
                                         f"{invalid} invalid maps"), {"z": z}


@_check(12, "division by a series with a simple zero", quick=True)
def singular_division():
    from . import asymptotics as asy

    rng = np.random.default_rng(12)
    worst = naive = 0.0
    mask = np.add.outer(np.arange(11), np.arange(11)) <= 10
    for _ in range(50):
        N = asy.SymmetricBivariateSeries.random(10, rng)
        D = asy.SymmetricBivariateSeries.random(10, rng, simple_zero=True)
        Q, J = asy.singular_division(N, D)
        # residual relative to the size of the terms that cancel in Q*D + J
        worst = max(worst, asy.division_error(N, D, Q, J))
        R = asy.reconstruct(Q, D, J, 10)
        naive = max(naive, float(np.max(np.abs(R - N.coeffs)[mask]) / np.max(np.abs(N.coeffs))))
    return worst <= 1e-12, (f"max relative residual {worst:.1e} (tol 1e-12); "
                            f"against max|N| alone {naive:.1e}"), {"naive": naive}


@_check(13, "diagonal z-ratios against c(lambda) scaling", approx=True)
def diagonal_ratios():
    from .peeling import diagonal_ratio_check

    rows = [diagonal_ratio_check(p, k, kp) for p in (6, 8, 10) for k in range(3) for kp in range(3)]
    worst = max(rows, key=lambda r: r["relative_error"])
    over = [(r["p"], r["k"], r["k'"]) for r in rows if r["relative_error"] > 0.15]
    where = "p={p}, k={k}, k'={k'}".format_map(worst)
    return not over, (f"max relative error {worst['relative_error']:.3f} at {where} (tol 0.15); "
                      f"beyond tolerance: {over or 'none'}"), {"rows": rows}


@_check(14, "empirical survival of T_m", approx=True)
def survival_curve():
    from .survival import tm_survival

    res = tm_survival(2000, 2000, 20000, seed=14)
    rows = res.table((0.5, 1.0, 2.0), lam=1.0)
    worst = max(abs(e - m) for _, e, m in rows)
    ok = worst <= 5e-2 and res.seconds < 600
    body = ", ".join(f"t={t:g}: {e:.4f} vs {m:.4f}" for t, e, m in rows)
    return ok, f"{body}; max gap {worst:.3f} (tol 5e-2), {res.seconds:.0f}s", {"rows": rows}
