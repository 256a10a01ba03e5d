"""Peeling step laws and the perimeter processes they drive.

A step law is a list of event families.  Each family covers one event type
(C, L or R with a face spin, possibly an infinite-jump variant) for a range
of positions k, with the exact probability of every position in a head and,
for families that are unbounded in k, a power-law tail carrying the missing
mass.  Perimeter paths are sampled from these laws, either i.i.d. (half-plane
laws) or as a Markov chain over boundary lengths.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import interpolate, special

from . import asymptotics as asy
from . import curves
from . import generating as gen
from .curves import MU, NU_C, DomainError
from .generating import ProviderRangeError

LAWS = ("P_pq", "P_pq_target", "P_p", "P_inf", "Phat_pq", "Phat_p", "Phat_inf")
_LAW_ALIASES = {
    "P_{p,q}": "P_pq", "Ppq": "P_pq", "pq": "P_pq",
    "P_{p,q}^target": "P_pq_target", "target": "P_pq_target", "P_pq^target": "P_pq_target",
    "P_{p}": "P_p", "p": "P_p",
    "P_inf": "P_inf", "P_∞": "P_inf", "inf": "P_inf", "Pinf": "P_inf",
    "P̂_{p,q}": "Phat_pq", "hat_pq": "Phat_pq",
    "P̂_p": "Phat_p", "hat_p": "Phat_p",
    "P̂_∞": "Phat_inf", "hat_inf": "Phat_inf", "Phatinf": "Phat_inf",
}
DEFAULT_HEAD = 10_000
DEFAULT_EPS = 1e-3
EXACT_COLUMN_MAX = 48          # P_p / P̂_p use exact z_{p,k} columns up to this p
COLUMN_HEAD = 200              # exact positions kept for the R_{p+k} families
FINITE_GRID_MAX = 60           # largest perimeter the exact finite route accepts
K_CAP = float(2 ** 53)         # largest tail position the sampler will return


class RelationBreakdown(ValueError):
    """The half-plane comparison relation does not cover this jump."""


def law_name(law: str) -> str:
    name = _LAW_ALIASES.get(law, law)
    if name not in LAWS:
        raise ValueError(f"unknown law {law!r}; expected one of {LAWS}")
    return name


def _phase(nu):
    if abs(nu - NU_C) < 1e-9:
        return "critical"
    return "low" if nu > NU_C else "high"


def _check_nu(nu):
    nu = float(nu)
    if not nu > 1:
        raise DomainError("nu must exceed 1")
    return NU_C if abs(nu - NU_C) < 1e-9 else nu


def philox(seed) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True, order=True)
class PeelEvent:
    """One peeling event.

    `kind` is C, L or R, plus E for the terminal step that reveals the edge
    map.  `infinity` is 0 for ordinary positions, -1 for R_{inf-k} and +1 for
    R_{inf+k}.
    """

    kind: str
    spin: str
    k: int = 0
    infinity: int = 0

    def __post_init__(self):
        if self.kind not in ("C", "L", "R", "E"):
            raise ValueError(f"bad event kind {self.kind!r}")
        if self.spin not in ("+", "-"):
            raise ValueError(f"bad spin {self.spin!r}")
        if self.k < 0 or self.infinity not in (-1, 0, 1):
            raise ValueError("position must be k >= 0 with infinity in {-1, 0, 1}")
        if self.infinity and self.kind != "R":
            raise ValueError("infinite positions are stored on R events; use PeelEvent.make")

    @classmethod
    def make(cls, kind, spin, k=0, infinity=0, p=None, q=None):
        """Build an event and reduce it to its canonical label.

        L_{inf-k} is R_{inf+k}, L_{inf+k} is R_{inf-k}, and R_{inf+0} is
        R_{inf-0}.  With finite (p, q) (plus and minus edges left once the
        peeled edge is removed) R_{p+j} becomes L_{q-j} and L_{q+j} becomes
        R_{p-j}.
        """
        spin = {"−": "-"}.get(spin, spin)
        if infinity:
            if kind == "L":
                kind, infinity = "R", -infinity
            if infinity == 1 and k == 0:
                infinity = -1
            return cls(kind, spin, k, infinity)
        if p is not None and q is not None:
            if kind == "R" and k > p:
                kind, k = "L", q - (k - p)
            elif kind == "L" and k >= q:
                kind, k = "R", p - (k - q)
            if k < 0:
                raise ValueError("position beyond the boundary")
        return cls(kind, spin, k, infinity)

    @property
    def label(self):
        if self.kind in ("C", "E"):
            return f"{self.kind}{self.spin}"
        if self.infinity:
            return f"R{self.spin}_inf{'-' if self.infinity < 0 else '+'}{self.k}"
        return f"{self.kind}{self.spin}_{self.k}"

    def __str__(self):
        return self.label


# ---------------------------------------------------------------------------
# step distributions


@dataclass
class EventFamily:
    """Events of one type over a contiguous range of positions.

    `dx`, `dy` hold the perimeter increments of the head positions; jump
    families have dx = -inf and a finite `landing` (the new P).  Unbounded
    families continue past the head with probability amp * k^(-gamma); their
    increments there follow the linear rule `tail_inc` = (ax, bx, ay, by).
    """

    kind: str
    spin: str
    infinity: int
    k_start: int
    head: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    landing: np.ndarray | None = None
    unbounded: bool = False
    tail_inc: tuple | None = None
    tail_land: tuple | None = None
    tail_exp: float = 0.0
    tail_amp: float = 0.0
    tail_mass: float = 0.0

    @property
    def k_stop(self):
        return self.k_start + len(self.head)

    @property
    def jump(self):
        return self.landing is not None

    @property
    def mass(self):
        return float(self.head.sum()) + self.tail_mass

    def event(self, k):
        return PeelEvent(self.kind, self.spin, int(k), self.infinity)

    def increment(self, k):
        """(dX, dY) at position k, using the tail rule beyond the head."""
        i = k - self.k_start
        if 0 <= i < len(self.head):
            return float(self.dx[i]), float(self.dy[i])
        if not self.unbounded or i < 0:
            raise KeyError(f"position {k} outside family {self.kind}{self.spin}")
        ax, bx, ay, by = self.tail_inc
        return ax + bx * k, ay + by * k


def _family(kind, spin, ks, probs, dx, dy, *, infinity=0, landing=None, unbounded=False,
            tail_inc=None, tail_land=None):
    ks = np.asarray(ks, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    if len(ks) and np.any(np.diff(ks) != 1):
        raise ValueError("family positions must be contiguous")
    k0 = int(ks[0]) if len(ks) else 0
    dx = np.broadcast_to(np.asarray(dx, dtype=float), ks.shape).copy()
    dy = np.broadcast_to(np.asarray(dy, dtype=float), ks.shape).copy()
    land = None if landing is None else np.broadcast_to(np.asarray(landing, dtype=float), ks.shape).copy()
    return EventFamily(kind, spin, infinity, k0, probs, dx, dy, land, unbounded, tail_inc, tail_land)


def _linear(a, b, ks):
    return a + b * np.asarray(ks, dtype=float)


@dataclass
class StepSample:
    family: np.ndarray
    k: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    landing: np.ndarray


@dataclass
class StepDistribution:
    """Law of one peeling step (immutable once built, apart from counters)."""

    law: str
    nu: float
    t: float
    p: int | None
    q: int | None
    families: list
    mass_defect: float
    tail_model_error: float
    approx: bool
    eps: float = DEFAULT_EPS
    terminal: float = 0.0          # probability of the edge-map step
    resamples: int = 0
    _flat: tuple | None = field(default=None, repr=False)

    # -- masses and expectations

    @property
    def head_mass(self):
        return float(sum(f.head.sum() for f in self.families)) + self.terminal

    @property
    def tail_mass(self):
        return float(sum(f.tail_mass for f in self.families))

    @property
    def total_mass(self):
        return self.head_mass + self.tail_mass

    @property
    def within_eps(self):
        return self.mass_defect <= self.eps

    def families_of(self, kind=None, spin=None, infinity=None):
        return [f for f in self.families
                if (kind is None or f.kind == kind) and (spin is None or f.spin == spin)
                and (infinity is None or f.infinity == infinity)]

    def family_mass(self, kind=None, spin=None, infinity=None):
        return float(sum(f.mass for f in self.families_of(kind, spin, infinity)))

    def prob(self, event: PeelEvent) -> float:
        total = 0.0
        if event.kind == "E":
            return self.terminal if event.spin == "+" else 0.0
        for f in self.families_of(event.kind, event.spin, event.infinity):
            i = event.k - f.k_start
            if 0 <= i < len(f.head):
                total += f.head[i]
            elif i >= len(f.head) and f.unbounded and f.tail_mass > 0:
                total += f.tail_amp * event.k ** -f.tail_exp
        return float(total)

    def mean_increment(self):
        """E(dX), E(dY) over the finite events (infinite jumps excluded)."""
        ex = ey = 0.0
        for f in self.families:
            if not f.jump:
                ex += float(np.dot(f.head, f.dx))
            ey += float(np.dot(f.head, f.dy))
            if f.tail_mass > 0:
                k0, g, amp = f.k_stop, f.tail_exp, f.tail_amp
                s0 = amp * special.zeta(g, k0)
                s1 = amp * special.zeta(g - 1, k0)
                ax, bx, ay, by = f.tail_inc
                if not f.jump:
                    ex += ax * s0 + bx * s1
                ey += ay * s0 + by * s1
        return ex, ey

    def rows(self, max_k=None):
        """Flat table of events for printing: label, probability, increments."""
        out = []
        for f in self.families:
            for i, pr in enumerate(f.head):
                k = f.k_start + i
                if max_k is not None and k > max_k:
                    break
                out.append({"event": f.event(k).label, "kind": f.kind, "spin": f.spin, "k": k,
                            "infinity": f.infinity, "prob": float(pr), "dx": float(f.dx[i]),
                            "dy": float(f.dy[i])})
            if f.tail_mass > 0:
                out.append({"event": f"{f.kind}{f.spin}_tail>={f.k_stop}", "kind": f.kind,
                            "spin": f.spin, "k": f.k_stop, "infinity": f.infinity,
                            "prob": f.tail_mass, "dx": float("nan"), "dy": float("nan")})
        if self.terminal:
            out.append({"event": "E", "kind": "E", "spin": "+", "k": 0, "infinity": 0,
                        "prob": self.terminal, "dx": -float(self.p), "dy": -float(self.q)})
        return out

    # -- sampling

    def _flatten(self):
        if self._flat is None:
            probs, fam, ks, dx, dy, land = [], [], [], [], [], []
            for i, f in enumerate(self.families):
                n = len(f.head)
                probs.append(f.head)
                fam.append(np.full(n, i))
                ks.append(np.arange(f.k_start, f.k_start + n))
                dx.append(f.dx)
                dy.append(f.dy)
                land.append(f.landing if f.jump else np.full(n, np.nan))
            tails = [i for i, f in enumerate(self.families) if f.tail_mass > 0]
            for i in tails:
                probs.append(np.array([self.families[i].tail_mass]))
                fam.append(np.array([i]))
                ks.append(np.array([-1]))           # marks a tail draw
                dx.append(np.array([np.nan]))
                dy.append(np.array([np.nan]))
                land.append(np.array([np.nan]))
            if self.terminal:
                probs.append(np.array([self.terminal]))
                fam.append(np.array([-1]))
                ks.append(np.array([0]))
                dx.append(np.array([-float(self.p)]))
                dy.append(np.array([-float(self.q)]))
                land.append(np.array([np.nan]))
            p = np.concatenate(probs)
            cdf = np.cumsum(p)
            cdf /= cdf[-1]
            self._flat = (cdf, np.concatenate(fam), np.concatenate(ks), np.concatenate(dx),
                          np.concatenate(dy), np.concatenate(land))
        return self._flat

    def _tail_positions(self, f, n, rng):
        """Pareto draws on [k_stop - 1/2, inf) rounded to integers; huge ones redrawn."""
        lo = f.k_stop - 0.5
        shape = f.tail_exp - 1.0
        out = np.empty(n, dtype=np.int64)
        todo = np.arange(n)
        while todo.size:
            x = lo * rng.random(todo.size) ** (-1.0 / shape)
            ok = x < K_CAP
            out[todo[ok]] = np.maximum(np.floor(x[ok] + 0.5), f.k_stop).astype(np.int64)
            self.resamples += int((~ok).sum())
            todo = todo[~ok]
        return out

    def sample(self, rng, size) -> StepSample:
        cdf, fam, ks, dx, dy, land = self._flatten()
        idx = np.searchsorted(cdf, rng.random(size), side="right")
        idx = np.minimum(idx, len(cdf) - 1)
        out = StepSample(fam[idx].copy(), ks[idx].copy(), dx[idx].copy(), dy[idx].copy(), land[idx].copy())
        tail = np.flatnonzero(out.k < 0)
        if tail.size:
            for i in np.unique(out.family[tail]):
                f = self.families[i]
                sel = tail[out.family[tail] == i]
                k = self._tail_positions(f, sel.size, rng)
                ax, bx, ay, by = f.tail_inc
                out.k[sel] = k
                out.dx[sel] = -np.inf if f.jump else ax + bx * k
                out.dy[sel] = ay + by * k
                if f.jump:
                    la, lb = f.tail_land
                    out.landing[sel] = la + lb * k
        return out

    def event_of(self, family, k) -> PeelEvent:
        if family < 0:
            return PeelEvent("E", "+")
        return self.families[family].event(k)


def _finish(law, nu, t, p, q, families, *, approx, eps, terminal=0.0, gamma=None):
    """Attach power-law tails so that the total mass is one, and report defects."""
    head = float(sum(f.head.sum() for f in families)) + terminal
    defect = 1.0 - head
    raw = []
    for f in families:
        if f.unbounded and len(f.head) and f.head[-1] > 0 and gamma is not None:
            k_last = f.k_stop - 1
            amp = f.head[-1] * k_last ** gamma
            raw.append(amp * special.zeta(gamma, f.k_stop))
            f.tail_amp, f.tail_exp = amp, gamma
        else:
            raw.append(0.0)
    total_raw = sum(raw)
    model_error = abs(total_raw - defect)
    if total_raw > 0 and defect > 0:
        scale = defect / total_raw
        for f, r in zip(families, raw):
            f.tail_amp *= scale
            f.tail_mass = r * scale
    elif abs(defect) > 0 and head > 0:
        # no tail can absorb the defect: renormalize the head instead
        for f in families:
            f.head = f.head / head
            f.tail_amp = f.tail_mass = 0.0
        terminal /= head
    dist = StepDistribution(law, nu, t, p, q, families, abs(defect), model_error, approx, eps, terminal)
    if dist.mass_defect > eps:
        warnings.warn(f"{law} at nu={nu:.6g}: head mass defect {dist.mass_defect:.3g} exceeds {eps:g}",
                      asy.ModelMismatch, stacklevel=3)
    return dist


# ---------------------------------------------------------------------------
# numeric providers shared by the laws


@functools.lru_cache(maxsize=16)
def _half_plane_data(nu, head):
    r = gen.rows(nu, head + 2)
    cc = gen.critical_constants(nu, head=head + 2)
    return r, cc


def _tail_exponent(nu):
    ex = asy.exponents(_phase(nu))
    return float(ex.alpha0) + 1.0


@functools.lru_cache(maxsize=8)
def _exact_columns(nu, n, top):
    """z_{p,k} u_c^{p+k} for p <= top, k <= n at t = t_c, from one extended-precision grid."""
    grid = gen.z_grid(nu, n, top, dps=60 + 2 * top)
    u = mpmath.mpf(_half_plane_data(nu, 64)[1].u_c)
    return np.array([[float(grid[k][p] * u ** (p + k)) for k in range(n + 1)] for p in range(top + 1)])


def _exact_column(nu, p, n):
    # one grid serves every column up to the next power of two
    top = max(p, min(EXACT_COLUMN_MAX, 1 << max(1, p.bit_length())))
    return _exact_columns(nu, max(n, COLUMN_HEAD + 2), top)[p, :n + 1]


def _column(nu, p, n, A):
    """z_{p,k} u^{p+k}, k <= n: exact for small p, two-step asymptotics otherwise.

    Beyond the exact range the smaller index plays the role of the fixed
    one: A[min(k, p)] max(k, p)^(-alpha0 - 1) / Gamma(-alpha0).
    """
    if p <= EXACT_COLUMN_MAX:
        return _exact_column(nu, p, n), False
    a0 = float(asy.exponents(_phase(nu)).alpha0)
    ks = np.arange(n + 1)
    return A[np.minimum(ks, p)] * np.maximum(ks, p).astype(float) ** (-a0 - 1) / math.gamma(-a0), True


def _A(cc, n):
    if n >= len(cc.A_head):
        raise ProviderRangeError(f"a_p needed up to {n}, provider has {len(cc.A_head) - 1}")
    return cc.A_head


def _half_plane(nu, head, hat, eps):
    r, cc = _half_plane_data(nu, head)
    t, u = cc.t_c, cc.u_c
    K = head
    k = np.arange(K + 1)
    z0, z1 = r.z0, r.z1
    fam = []
    if not hat:
        fam.append(_family("C", "+", [0], [t / u], 2, -1))
        fam.append(_family("C", "-", [0], [nu * t / u], 0, 1))
        fam.append(_family("L", "+", k, t * z1[k], 1, -1 - k, unbounded=True, tail_inc=(1, 0, -1, -1)))
        fam.append(_family("L", "-", k, nu * t * z0[k + 1] / u, 0, -k, unbounded=True, tail_inc=(0, 0, 0, -1)))
        fam.append(_family("R", "+", k, t * z0[k + 1] / u, 1 - k, -1, unbounded=True, tail_inc=(1, -1, -1, 0)))
        fam.append(_family("R", "-", k, nu * t * z1[k], -k, 0, unbounded=True, tail_inc=(0, -1, 0, 0)))
        if nu > NU_C:
            A = _A(cc, K + 1)
            a0, a1, b = cc.a0, cc.a1, cc.b
            inf = -np.inf
            fam.append(_family("R", "+", k, t * a0 / (b * u) * A[k + 1], inf, -1, infinity=-1,
                               landing=k + 1, unbounded=True, tail_inc=(inf, 0, -1, 0), tail_land=(1, 1)))
            fam.append(_family("R", "-", k, nu * t * a1 / b * A[k], inf, 0, infinity=-1,
                               landing=k, unbounded=True, tail_inc=(inf, 0, 0, 0), tail_land=(0, 1)))
            k1 = k[1:]
            fam.append(_family("R", "+", k1, t * a1 / b * A[k1], inf, -1 - k1, infinity=1,
                               landing=1, unbounded=True, tail_inc=(inf, 0, -1, -1), tail_land=(1, 0)))
            fam.append(_family("R", "-", k1, nu * t * a0 / (b * u) * A[k1 + 1], inf, -k1, infinity=1,
                               landing=0, unbounded=True, tail_inc=(inf, 0, 0, -1), tail_land=(0, 0)))
        law = "P_inf"
    else:
        if nu > NU_C:
            raise DomainError("the flipped half-plane law is only used for nu <= nu_c")
        fam.append(_family("C", "+", [0], [nu * t / u], 1, 0))
        fam.append(_family("C", "-", [0], [t / u], -1, 2))
        fam.append(_family("L", "+", k, nu * t * z1[k], 0, -k, unbounded=True, tail_inc=(0, 0, 0, -1)))
        fam.append(_family("L", "-", k, t * z0[k + 1] / u, -1, 1 - k, unbounded=True, tail_inc=(-1, 0, 1, -1)))
        fam.append(_family("R", "+", k, nu * t * z0[k + 1] / u, -k, 0, unbounded=True, tail_inc=(0, -1, 0, 0)))
        fam.append(_family("R", "-", k, t * z1[k], -1 - k, 1, unbounded=True, tail_inc=(-1, -1, 1, 0)))
        law = "Phat_inf"
    return _finish(law, nu, t, None, None, fam, approx=nu >= NU_C, eps=eps, gamma=_tail_exponent(nu))


def _one_sided(nu, p, head, hat, eps):
    """P_p (Table of the q -> infinity limit) or its flipped version P̂_p."""
    r, cc = _half_plane_data(nu, head)
    t, u = cc.t_c, cc.u_c
    z0, z1 = r.z0, r.z1
    K = head
    k = np.arange(K + 1)
    n = min(COLUMN_HEAD, K)
    A = _A(cc, p + 3)
    fam = []
    if not hat:
        W1, ap1 = _column(nu, p + 1, n + 1, A)
        W0, ap0 = _column(nu, p, n + 2, A)
        Ap = A[p]
        kr = np.arange(p + 1)
        fam.append(_family("C", "+", [0], [t * A[p + 2] / (Ap * u)], 2, -1))
        fam.append(_family("C", "-", [0], [nu * t / u], 0, 1))
        fam.append(_family("L", "+", k, t * A[p + 1] / Ap * z1[k], 1, -1 - k, unbounded=True, tail_inc=(1, 0, -1, -1)))
        fam.append(_family("L", "-", k, nu * t * z0[k + 1] / u, 0, -k, unbounded=True, tail_inc=(0, 0, 0, -1)))
        fam.append(_family("R", "+", kr, t * z0[kr + 1] / u * A[p - kr + 1] / Ap, 1 - kr, -1))
        fam.append(_family("R", "-", kr, nu * t * z1[kr] * A[p - kr] / Ap, -kr, 0))
        j = np.arange(1, n + 1)
        fam.append(_family("R", "+", p + j, t * W1[j] * A[1] / (Ap * u), 1 - p, -1 - j,
                           unbounded=True, tail_inc=(1 - p, 0, p - 1, -1)))
        fam.append(_family("R", "-", p + j, nu * t * W0[j + 1] * A[0] / (Ap * u), -p, -j,
                           unbounded=True, tail_inc=(-p, 0, p, -1)))
        law = "P_p"
        approx = ap0 or ap1
    else:
        if p == 0:
            # no + edge to peel: the algorithm falls back to a - edge
            return _one_sided(nu, 0, head, False, eps)
        pp = p - 1
        W1, ap1 = _column(nu, pp + 1, n + 1, A)
        W0, ap0 = _column(nu, pp, n + 2, A)
        Ap1 = A[pp + 1]
        kr = np.arange(pp + 1)
        fam.append(_family("C", "+", [0], [nu * t * A[pp + 2] / (Ap1 * u)], 1, 0))
        fam.append(_family("C", "-", [0], [t * A[pp] / (Ap1 * u)], -1, 2))
        fam.append(_family("L", "+", k, nu * t * z1[k], 0, -k, unbounded=True, tail_inc=(0, 0, 0, -1)))
        fam.append(_family("L", "-", k, t * z0[k + 1] * A[pp] / (Ap1 * u), -1, 1 - k,
                           unbounded=True, tail_inc=(-1, 0, 1, -1)))
        fam.append(_family("R", "+", kr, nu * t * z0[kr + 1] * A[pp - kr + 1] / (Ap1 * u), -kr, 0))
        fam.append(_family("R", "-", kr, t * z1[kr] * A[pp - kr] / Ap1, -1 - kr, 1))
        j = np.arange(1, n + 1)
        fam.append(_family("R", "+", pp + j, nu * t * W1[j] * A[1] / (Ap1 * u), -pp, -j,
                           unbounded=True, tail_inc=(-pp, 0, pp, -1)))
        fam.append(_family("R", "-", pp + j, t * W0[j + 1] * A[0] / (Ap1 * u), -pp - 1, 1 - j,
                           unbounded=True, tail_inc=(-pp - 1, 0, pp + 1, -1)))
        law = "Phat_p"
        approx = ap0 or ap1
    return _finish(law, nu, t, p, None, fam, approx=approx or nu >= NU_C, eps=eps,
                   gamma=_tail_exponent(nu))


# ---------------------------------------------------------------------------
# b-free harmonic function at criticality


class CriticalHarmonic:
    """h(P, Q), proportional to z_{P,Q} u_c^{P+Q} at nu_c.

    Normalized by Gamma(-4/3) Gamma(-1/3) / b so that the diagonal regime
    reads c(Q/P) P^{-11/3} with no fitted constant.  Small perimeters use
    the exact grid; the rows P in {0, 1} (and Q in {0, 1}) are exact for all
    lengths; for 2 <= min(P, Q) < `diag_min` the two-step form
    Gamma(-1/3) a_P u^P / b * Q^{-7/3} is corrected by a Q^{-1/3} term
    matched to the exact grid.
    """

    def __init__(self, exact_size=48, diag_min=12, head=DEFAULT_HEAD):
        r, cc = _half_plane_data(NU_C, head)
        self.t, self.u, self.nu = cc.t_c, cc.u_c, NU_C
        self.b = cc.b
        self.A = cc.A_head
        self.norm = math.gamma(-4 / 3) * math.gamma(-1 / 3) / cc.b
        self.exact_size = exact_size
        self.diag_min = diag_min
        self.z0 = np.asarray(r.z0[: head + 2], dtype=float)
        self.z1 = np.asarray(r.z1[: head + 1], dtype=float)
        self.row0 = self.z0 * self.norm                      # h(k, 0)
        self.row1 = self.z1 * self.u * self.norm             # h(k, 1)
        N = exact_size
        grid = gen.z_grid(NU_C, N, N, dps=40 + 2 * N)
        um = mpmath.mpf(self.u)
        ex = np.full((N + 1, N + 1), np.nan)
        for P in range(N + 1):
            for Q in range(N + 1 - P):
                ex[P, Q] = float(grid[P][Q] * um ** (P + Q)) * self.norm
        self.exact = ex
        self.kappa = np.zeros(diag_min)
        for P in range(2, diag_min):
            Q0 = N - P
            two = self._two_step(np.array([P]), np.array([Q0]))[0]
            self.kappa[P] = (ex[P, Q0] / two - 1.0) * Q0 ** (1 / 3)

    def _two_step(self, P, Q):
        return math.gamma(-1 / 3) * self.A[P] / self.b * Q.astype(float) ** (-7 / 3)

    def _row(self, row, Q):
        """Exact row values, continued by the k^{-7/3} law past the stored head."""
        n = len(row) - 1
        Qc = np.minimum(Q, n)
        out = row[Qc]
        far = Q > n
        if np.any(far):
            out = np.where(far, row[n] * (n / np.maximum(Q, 1)) ** (7 / 3), out)
        return out

    def __call__(self, P, Q):
        P = np.asarray(P, dtype=np.int64)
        Q = np.asarray(Q, dtype=np.int64)
        P, Q = np.broadcast_arrays(P, Q)
        lo, hi = np.minimum(P, Q), np.maximum(P, Q)
        out = np.empty(P.shape, dtype=float)
        N = self.exact_size
        sel = lo + hi <= N
        if np.any(sel):
            out[sel] = self.exact[lo[sel], hi[sel]]
        for r, row in ((0, self.row0), (1, self.row1)):
            s = (~sel) & (lo == r)
            if np.any(s):
                out[s] = self._row(row, hi[s])
        s = (~sel) & (lo >= 2) & (lo < self.diag_min)
        if np.any(s):
            L, H = lo[s], hi[s]
            out[s] = self._two_step(L, H) * (1.0 + self.kappa[L] * H.astype(float) ** (-1 / 3))
        s = (~sel) & (lo >= self.diag_min)
        if np.any(s):
            Pf, Qf = P[s].astype(float), Q[s].astype(float)
            out[s] = asy.c_critical_fast(Qf / Pf) * Pf ** (-11 / 3)
        return out

    def inner0(self, k):
        return self._row(self.row0, np.asarray(k)) / self.norm

    def inner1(self, k):
        return self._row(self.row1, np.asarray(k)) / self.norm


@functools.lru_cache(maxsize=4)
def critical_harmonic(exact_size=48, diag_min=12) -> CriticalHarmonic:
    return CriticalHarmonic(exact_size, diag_min)


# ---------------------------------------------------------------------------
# finite boundaries (Tables for P_{p,q}, P̂_{p,q} and the targeted variant)


class _ExactZ:
    """z_{P,Q}(t) on a grid, with u = 1 so that h = z."""

    def __init__(self, nu, t, size):
        grid = gen.z_grid(nu, size, size, t=t, dps=60 + 2 * size)
        self.z = np.array([[float(x) if x is not None else np.nan for x in row] for row in grid])
        self.pref = t
        self.size = size

    def H(self, P, Q):
        return self.z[P, Q]

    def inner(self, P, Q):
        return self.z[P, Q]


class _AsymptoticZ:
    def __init__(self, harmonic: CriticalHarmonic):
        self.h = harmonic
        self.pref = harmonic.t / harmonic.u

    def H(self, P, Q):
        return self.h(P, Q)

    def inner(self, P, Q):
        P = np.asarray(P)
        Q = np.asarray(Q)
        lo, hi = np.minimum(P, Q), np.maximum(P, Q)
        return np.where(lo == 0, self.h.inner0(hi), self.h.inner1(hi))


@functools.lru_cache(maxsize=8)
def _exact_source(nu, t, size):
    return _ExactZ(nu, t, size)


def _finite_source(nu, t, p, q, crossover):
    size = max(p, q) + 3
    tc = curves.critical_point(nu).t_c
    at_critical_line = abs(t - tc) <= 1e-12 * tc
    if p + q <= crossover or size <= FINITE_GRID_MAX and not (at_critical_line and nu == NU_C):
        # round the grid up so that nearby states share one cached computation
        size = max(8, -(-size // 8) * 8)
        return _exact_source(nu, t, size), at_critical_line
    if at_critical_line and nu == NU_C:
        return _AsymptoticZ(critical_harmonic()), True
    raise ProviderRangeError(
        f"finite law at (p, q) = ({p}, {q}) needs z beyond the exact range and no asymptotic route at nu={nu}")


def finite_event_arrays(src, p_rem, q_rem, peeled, *, nu):
    """All events of a finite hole, as (spin, kind, k, weight, outer, inner) arrays.

    `p_rem`, `q_rem` count the + and - boundary edges left after removing the
    peeled edge; the hole is (p_rem, q_rem + 1) when a - edge is peeled and
    (p_rem + 1, q_rem) otherwise.
    """
    start = (p_rem, q_rem + 1) if peeled == "-" else (p_rem + 1, q_rem)
    Hs = float(src.H(*start))
    pref = src.pref

    def mono(face_spin):
        return nu if face_spin == peeled else 1.0

    out = []
    kl = np.arange(q_rem)
    kr = np.arange(p_rem + 1)
    for spin in ("+", "-"):
        m = mono(spin)
        if spin == "+":
            o = (np.array([p_rem + 2]), np.array([q_rem]))
        else:
            o = (np.array([p_rem]), np.array([q_rem + 2]))
        w = pref * m * src.H(*o) / Hs
        out.append((spin, "C", np.array([0]), np.atleast_1d(w), o, None))
        if spin == "+":
            o = (np.full_like(kl, p_rem + 1), q_rem - kl)
            i = (np.ones_like(kl), kl)
        else:
            o = (np.full_like(kl, p_rem), q_rem - kl + 1)
            i = (np.zeros_like(kl), kl + 1)
        w = pref * m * src.inner(*i) * src.H(*o) / Hs if kl.size else np.zeros(0)
        out.append((spin, "L", kl, w, o, i))
        if spin == "+":
            o = (p_rem - kr + 1, np.full_like(kr, q_rem))
            i = (kr + 1, np.zeros_like(kr))
        else:
            o = (p_rem - kr, np.full_like(kr, q_rem + 1))
            i = (kr, np.ones_like(kr))
        w = pref * m * src.inner(*i) * src.H(*o) / Hs
        out.append((spin, "R", kr, w, o, i))
    return start, out


def _finite(nu, t, p, q, hat, targeted, eps, crossover):
    if hat and p == 0:
        return _finite(nu, t, 0, q, False, targeted, eps, crossover)
    if not hat and q < 1:
        raise ValueError("peeling a - edge needs q >= 1")
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError("need p, q >= 0 with p + q >= 1")
    src, approx = _finite_source(nu, t, p, q, crossover)
    peeled = "+" if hat else "-"
    p_rem, q_rem = (p - 1, q) if hat else (p, q - 1)
    start, events = finite_event_arrays(src, p_rem, q_rem, peeled, nu=nu)
    fam = []
    for spin, kind, ks, w, o, i in events:
        dxo = o[0] - start[0]
        dyo = o[1] - start[1]
        if kind == "L" and not targeted and ks.size:
            inner_kept = i[1] > o[1]
            keep = ~inner_kept
            if keep.any():
                fam.append(_family(spin=spin, kind="L", ks=ks[keep], probs=w[keep], dx=dxo[keep], dy=dyo[keep]))
            if inner_kept.any():
                # reversed so positions increase: L_{q-j} is labelled R_{p+j}
                j = (q_rem - ks[inner_kept])[::-1]
                fam.append(_family(spin=spin, kind="R", ks=p_rem + j, probs=w[inner_kept][::-1],
                                   dx=(i[0] - start[0])[inner_kept][::-1],
                                   dy=(i[1] - start[1])[inner_kept][::-1]))
        elif ks.size:
            fam.append(_family(spin=spin, kind=kind, ks=ks, probs=w, dx=dxo, dy=dyo))
    terminal = 0.0
    if start == (1, 1):
        terminal = 1.0 / float(src.H(1, 1)) if isinstance(src, _ExactZ) else 0.0
    elif start in ((0, 2), (2, 0)):
        # a monochromatic 2-gon closes with one monochromatic edge
        terminal = nu / float(src.H(*start)) if isinstance(src, _ExactZ) else 0.0
    name = ("Phat_pq" if hat else "P_pq_target" if targeted else "P_pq")
    return _finish(name, nu, t, p, q, fam, approx=approx, eps=eps, terminal=terminal)


# ---------------------------------------------------------------------------
# public constructor


def step_law(law, nu, p=None, q=None, targeted=False, t=None, *, head=DEFAULT_HEAD,
             eps=DEFAULT_EPS, crossover=24) -> StepDistribution:
    """Law of the first peeling step.

    Finite laws take the boundary (p, q) of the map before the step; P_p and
    P̂_p take the finite side p.  Half-plane and one-sided laws live on the
    critical line t = t_c(nu); finite ones default to it.
    """
    name = law_name(law)
    nu = _check_nu(nu)
    if targeted and name == "P_pq":
        name = "P_pq_target"
    if name in ("P_inf", "Phat_inf"):
        return _law_cache(name, nu, None, None, None, head, eps, crossover)
    if name in ("P_p", "Phat_p"):
        if p is None or p < 0:
            raise ValueError(f"{name} needs p >= 0")
        return _law_cache(name, nu, int(p), None, None, head, eps, crossover)
    if p is None or q is None:
        raise ValueError(f"{name} needs both p and q")
    tc = curves.critical_point(nu).t_c
    t = tc if t is None else float(t)
    if not 0 < t <= tc * (1 + 1e-12):
        raise DomainError(f"t must lie in (0, t_c]; got {t}")
    return _law_cache(name, nu, int(p), int(q), min(t, tc), head, eps, crossover)


@functools.lru_cache(maxsize=256)
def _law_cache(name, nu, p, q, t, head, eps, crossover):
    if name == "P_inf":
        return _half_plane(nu, head, False, eps)
    if name == "Phat_inf":
        return _half_plane(nu, head, True, eps)
    if name == "P_p":
        return _one_sided(nu, p, head, False, eps)
    if name == "Phat_p":
        return _one_sided(nu, p, head, True, eps)
    return _finite(nu, t, p, q, name == "Phat_pq", name == "P_pq_target", eps, crossover)


# ---------------------------------------------------------------------------
# half-plane aggregates, order parameters


@dataclass(frozen=True)
class Estimate:
    value: float
    approx: bool

    def __float__(self):
        return float(self.value)


def order_parameter(nu) -> Estimate:
    """Mean total perimeter increment under the half-plane law, jumps excluded."""
    nu = _check_nu(nu)
    cc = gen.critical_constants(nu)
    val = (nu + 1) * cc.t_c * (cc.Z0_uc / cc.u_c - cc.dZ0_uc - cc.u_c * cc.dZ1_uc)
    return Estimate(float(val), approx=nu >= NU_C)


def bottleneck_parameter(nu) -> Estimate:
    """Total probability of an infinite jump in one half-plane step (zero unless nu > nu_c)."""
    nu = _check_nu(nu)
    if nu <= NU_C:
        return Estimate(0.0, approx=False)
    cc = gen.critical_constants(nu)
    val = (nu + 1) * cc.t_c * (cc.a0 / cc.u_c + cc.a1) / cc.b * (cc.A_uc - cc.a0)
    return Estimate(float(val), approx=True)


def half_plane_mass(nu) -> Estimate:
    """Closed-form total mass of the half-plane law (one when the providers agree)."""
    nu = _check_nu(nu)
    cc = gen.critical_constants(nu)
    extra = 0.0
    if nu > NU_C:
        extra = (cc.a0 / cc.u_c + cc.a1) / cc.b * (cc.A_uc - cc.a0)
    val = cc.t_c * (nu + 1) * (cc.Z0_uc / cc.u_c + cc.Z1_uc + extra)
    return Estimate(float(val), approx=nu > NU_C)


def geometric_rate(nu, m=0) -> Estimate:
    """Closed-form Prob(T_m = 1) under the half-plane law for nu > nu_c."""
    nu = _check_nu(nu)
    if nu <= NU_C:
        return Estimate(0.0, approx=False)
    cc = gen.critical_constants(nu)
    t, u, a0, a1, b, A = cc.t_c, cc.u_c, cc.a0, cc.a1, cc.b, cc.A_uc
    head = cc.A_head
    s2 = float(np.sum(head[2: m + 1])) if m >= 2 else 0.0
    s1 = float(np.sum(head[1: m + 1])) if m >= 1 else 0.0
    val = t * (a0 / (b * u) * (nu * (A - a0) + s2) + a1 / b * (A + nu * s1))
    return Estimate(float(val), approx=True)


def zero_temperature_aggregates(nu, head=DEFAULT_HEAD) -> dict:
    """The four half-plane aggregates whose nu -> infinity limits are explicit.

    Keys: C- probability, total L-, total R- over finite positions, and the
    total of L-_{inf-k} over k >= 0, stored as R-_{inf-0} plus R-_{inf+k}.
    """
    d = step_law("P_inf", nu, head=head)
    at_zero = sum(float(f.head[0]) for f in d.families_of("R", "-", -1) if f.k_start == 0)
    return {
        "C-": d.family_mass("C", "-"),
        "L-": d.family_mass("L", "-", 0),
        "R-": d.family_mass("R", "-", 0),
        "L-_inf": d.family_mass("R", "-", 1) + at_zero,
    }


ZERO_TEMPERATURE_LIMITS = {
    "C-": 1 / math.sqrt(3),
    "L-": 0.5 - 1 / (2 * math.sqrt(3)),
    "R-": 0.5 - math.sqrt(3) / 4,
    "L-_inf": math.sqrt(3) / 12,
}


def half_plane_increment_prob(nu, dx, dy, head=DEFAULT_HEAD) -> float:
    """Probability that one half-plane step changes (P, Q) by (dx, dy)."""
    d = step_law("P_inf", nu, head=head)
    return _increment_table(d).get((int(dx), int(dy)), 0.0)


def _increment_table(d: StepDistribution) -> dict:
    tab = getattr(d, "_increments", None)
    if tab is None:
        tab = {}
        for f in d.families:
            if f.jump:
                continue
            for pr, x, y in zip(f.head, f.dx, f.dy):
                kk = (int(x), int(y))
                tab[kk] = tab.get(kk, 0.0) + float(pr)
        d._increments = tab
    return tab


# ---------------------------------------------------------------------------
# comparison with the half-plane law


def doob_transition(p, q, k, kp, nu=NU_C, crossover=24) -> float:
    """Prob_{p,q}(-(X_1, Y_1) = (k, k')) through the half-plane comparison relation.

    The half-plane probability of the increment (-k, -k') is reweighted by
    z_{p-k, q-k'} / (z_{p,q} u^{k+k'}); the z-ratio is exact when p + q is at
    most `crossover` and otherwise comes from c(lambda) and the p^{-11/3} law.
    """
    if k > p - 2 or kp > q - 1:
        raise RelationBreakdown(
            f"relation breaks down: jump ({k}, {kp}) from ({p}, {q}) needs k <= p-2 and k' <= q-1")
    nu = _check_nu(nu)
    base = half_plane_increment_prob(nu, -k, -kp)
    if base == 0.0:
        return 0.0
    if p + q <= crossover:
        cc = _half_plane_data(nu, 64)[1]
        src = _exact_source(nu, cc.t_c, max(8, -(-(max(p, q) + 3) // 8) * 8))
        ratio = src.H(p - k, q - kp) / (src.H(p, q) * cc.u_c ** (k + kp))
    else:
        if nu != NU_C:
            raise ProviderRangeError("asymptotic z-ratios are only available at nu_c")
        h = critical_harmonic()
        ratio = float(h(p - k, q - kp) / h(p, q))
    return float(base * ratio)


def diagonal_ratio_check(p, k, kp, nu=NU_C) -> dict:
    """Exact z-ratio at p = q against the c(lambda) (p'/p)^{-11/3} prediction."""
    cc = _half_plane_data(nu, 64)[1]
    src = _exact_source(nu, cc.t_c, max(8, -(-(p + 3) // 8) * 8))
    exact = src.H(p - k, p - kp) / (src.H(p, p) * cc.u_c ** (k + kp))
    lam0, lam1 = 1.0, (p - kp) / (p - k)
    pred = (asy.c_lambda("critical", lam1) / asy.c_lambda("critical", lam0)) * ((p - k) / p) ** (-11 / 3)
    return {"p": p, "k": k, "k'": kp, "exact": float(exact), "predicted": float(pred),
            "relative_error": float(abs(pred / exact - 1))}


# ---------------------------------------------------------------------------
# perimeter paths


@dataclass
class PerimeterPath:
    nu: float
    law: str
    X: np.ndarray
    Y: np.ndarray
    families: np.ndarray
    positions: np.ndarray
    seed: int
    p0: float = math.inf
    q0: float = math.inf
    stop_time: int | None = None
    stop_level: int | None = None
    truncated: bool = False
    jumps: int = 0
    approx: bool = False
    dist: StepDistribution | None = field(default=None, repr=False)

    @property
    def n_steps(self):
        return len(self.X) - 1

    def events(self):
        if self.dist is None:
            raise ValueError("event labels need the step law of the path")
        return [self.dist.event_of(int(f), int(k)) for f, k in zip(self.families, self.positions)]


def _stop_mask(d: StepDistribution, sample: StepSample, m):
    """Steps whose event ends T_m under a half-plane law (the jump-to-near-infinity events)."""
    stop = np.zeros(len(sample.k), dtype=bool)
    for i, f in enumerate(d.families):
        if not f.jump:
            continue
        sel = sample.family == i
        if not sel.any():
            continue
        ks = sample.k[sel]
        if f.infinity == 1:
            stop[sel] = True
        elif f.infinity == -1:
            hi = m - 1 if f.spin == "+" else m
            stop[sel] = (ks == 0) | ((ks >= 1) & (ks <= hi))
    return stop


def simulate(law, nu, n_steps=None, until=None, seed=0, p=None, q=None, *, head=DEFAULT_HEAD,
             max_steps=10 ** 6, t=None, block=4096) -> PerimeterPath:
    """Sample a perimeter path.

    `until` = m runs up to T_m (and at most `max_steps`); otherwise exactly
    `n_steps` steps are drawn.  Half-plane laws draw i.i.d. steps in blocks;
    the other laws follow the boundary lengths as a Markov chain.
    """
    name = law_name(law)
    nu = _check_nu(nu)
    if n_steps is None and until is None:
        raise ValueError("give n_steps or until")
    rng = philox(seed)
    limit = int(n_steps) if until is None else int(max_steps)
    if name in ("P_inf", "Phat_inf"):
        d = step_law(name, nu, head=head)
        xs, ys, fs, ks = [], [], [], []
        done = 0
        stop_time = None
        jumps = 0
        while done < limit:
            n = min(block, limit - done)
            s = d.sample(rng, n)
            if until is not None:
                st = _stop_mask(d, s, int(until))
                hit = np.flatnonzero(st)
                if hit.size:
                    n = int(hit[0]) + 1
                    stop_time = done + n
                    s = StepSample(s.family[:n], s.k[:n], s.dx[:n], s.dy[:n], s.landing[:n])
            jumps += int(np.isinf(s.dx).sum())
            xs.append(s.dx)
            ys.append(s.dy)
            fs.append(s.family)
            ks.append(s.k)
            done += n
            if stop_time is not None:
                break
        dx = np.concatenate(xs) if xs else np.zeros(0)
        dy = np.concatenate(ys) if ys else np.zeros(0)
        X = np.concatenate([[0.0], np.cumsum(dx)])
        Y = np.concatenate([[0.0], np.cumsum(dy)])
        return PerimeterPath(nu, name, X, Y, np.concatenate(fs) if fs else np.zeros(0, int),
                             np.concatenate(ks) if ks else np.zeros(0, int), int(seed),
                             stop_time=stop_time, stop_level=until,
                             truncated=until is not None and stop_time is None, jumps=jumps,
                             approx=d.approx, dist=d)
    return _simulate_markov(name, nu, limit, until, rng, seed, p, q, t, min(head, 2000))


def sample_stop_times(nu, m=0, runs=10 ** 5, seed=0, *, head=DEFAULT_HEAD, block=1 << 18) -> np.ndarray:
    """Independent copies of T_m under the half-plane law.

    Steps are i.i.d., so one long stream of steps cut at every stop event is
    a sequence of independent T_m samples (the renewal decomposition).
    """
    nu = _check_nu(nu)
    if nu <= NU_C:
        raise DomainError("T_m is finite under the half-plane law only for nu > nu_c")
    d = step_law("P_inf", nu, head=head)
    rng = philox(seed)
    out, carry, seen = [], 0, 0
    while seen < runs:
        hits = np.flatnonzero(_stop_mask(d, d.sample(rng, block), int(m)))
        if hits.size == 0:
            carry += block
            continue
        gaps = np.diff(hits, prepend=-1)
        gaps[0] += carry
        carry = block - 1 - int(hits[-1])
        out.append(gaps)
        seen += gaps.size
    return np.concatenate(out)[:runs].astype(np.int64)


def _simulate_markov(name, nu, limit, until, rng, seed, p, q, t, head):
    one_sided = name in ("P_p", "Phat_p")
    if p is None or (not one_sided and q is None):
        raise ValueError(f"{name} needs the starting boundary")
    P, Q = int(p), (math.inf if one_sided else int(q))
    X, Y, fam, pos = [0.0], [0.0], [], []
    stop_time, approx = None, False
    m = until
    for n in range(limit):
        if one_sided:
            d = step_law(name, nu, P, head=head)
        else:
            if Q == 0:
                # monochromatic + boundary: the exploration ends here
                stop_time = stop_time or n
                break
            d = step_law(name, nu, P, Q, t=t, head=head)
        approx |= d.approx
        s = d.sample(rng, 1)
        f, k = int(s.family[0]), int(s.k[0])
        dx, dy = float(s.dx[0]), float(s.dy[0])
        P += int(dx)
        Q = Q + int(dy) if Q != math.inf else Q
        X.append(X[-1] + dx)
        Y.append(Y[-1] + dy)
        fam.append(f)
        pos.append(k)
        if f < 0:
            stop_time = n + 1
            break
        if m is not None and min(P, Q) <= m:
            stop_time = n + 1
            break
    return PerimeterPath(nu, name, np.array(X), np.array(Y), np.array(fam, dtype=int),
                         np.array(pos, dtype=int), int(seed), p0=float(p),
                         q0=float(q) if q is not None else math.inf, stop_time=stop_time,
                         stop_level=m, truncated=m is not None and stop_time is None, approx=approx)


# ---------------------------------------------------------------------------
# barrier diagnostic


def f_eps(n, eps):
    """((n+2) (log(n+2))^{1+eps})^{3/4}."""
    n = np.asarray(n, dtype=float)
    return ((n + 2) * np.log(n + 2) ** (1 + eps)) ** 0.75


@dataclass(frozen=True)
class BarrierResult:
    tau: int | None          # None: the path never left the barrier
    before_stop: bool | None


def barrier_diagnostic(path, eps, x, stop_time=None) -> BarrierResult:
    """First n with max(|X_n - mu n|, |Y_n - mu n|) > x f_eps(n), and whether it precedes T_m.

    `path` is a PerimeterPath or a pair of arrays (X, Y) starting at 0.
    """
    if eps <= 0 or x < 1:
        raise ValueError("need eps > 0 and x >= 1")
    if isinstance(path, PerimeterPath):
        X, Y = path.X, path.Y
        if stop_time is None:
            stop_time = path.stop_time
    else:
        X, Y = (np.asarray(a, dtype=float) for a in path)
    n = np.arange(len(X))
    dev = np.maximum(np.abs(X - MU * n), np.abs(Y - MU * n))
    out = np.flatnonzero(dev > x * f_eps(n, eps))
    tau = int(out[0]) if out.size else None
    if tau is None:
        return BarrierResult(None, False if stop_time is not None else None)
    return BarrierResult(tau, None if stop_time is None else tau < stop_time)


# ---------------------------------------------------------------------------
# mixed algorithm schedule


class MixedSchedule:
    """Alternation between the - edge and + edge algorithms for nu < nu_c.

    Feed the running position with `update(x, y)`; the return value is the
    algorithm to use for the next step ("-" or "+").  Switching times are
    kept in `tau_l` (end of a - phase) and `tau_r` (end of a + phase).

    Each phase restarts the perimeter coordinates at its switching time, so
    a + phase started at tau ends once X_n - X_tau < -X_tau - 1 + min X over
    the previous window, i.e. once X falls below that minimum.  With
    `restart=False` the inequality is applied to the running X_n instead.
    """

    def __init__(self, restart=True):
        self.n = 0
        self.active = "-"
        self.restart = restart
        self.tau_l: list[int] = []
        self.tau_r: list[int] = [0]
        self.xs = [0.0]
        self.ys = [0.0]
        self._threshold = -1.0        # level the active coordinate must drop below

    def _next_threshold(self, arr, lo, n):
        level = -arr[n] - 1 + min(arr[lo: n + 1])
        return level + arr[n] if self.restart else level

    def threshold(self):
        return self._threshold

    def update(self, x, y):
        self.n += 1
        self.xs.append(float(x))
        self.ys.append(float(y))
        n = self.n
        if self.active == "-":
            if y < self._threshold:
                self.tau_l.append(n)
                self._threshold = self._next_threshold(self.xs, self.tau_r[-1], n)
                self.active = "+"
        elif x < self._threshold:
            self.tau_r.append(n)
            self._threshold = self._next_threshold(self.ys, self.tau_l[-1], n)
            self.active = "-"
        return self.active

    @property
    def alternations(self):
        return len(self.tau_r) - 1


@dataclass
class MixedRun:
    tau_l: list
    tau_r: list
    steps: int
    truncated: bool
    X: np.ndarray
    Y: np.ndarray


def run_mixed(nu, alternations=5, max_steps=10 ** 5, seed=0, head=DEFAULT_HEAD, block=64,
              restart=True) -> MixedRun:
    """Simulate the mixed schedule on half-plane laws until enough alternations."""
    nu = _check_nu(nu)
    if nu >= NU_C:
        raise DomainError("the mixed schedule is used for nu < nu_c")
    rng = philox(seed)
    laws = {"-": step_law("P_inf", nu, head=head), "+": step_law("Phat_inf", nu, head=head)}
    sched = MixedSchedule(restart)
    x = y = 0.0
    xs, ys = [0.0], [0.0]
    while sched.alternations < alternations and sched.n < max_steps:
        d = laws[sched.active]
        s = d.sample(rng, min(block, max_steps - sched.n))
        # the phase may end inside the block; replay the block step by step
        cx = x + np.cumsum(s.dx)
        cy = y + np.cumsum(s.dy)
        active = sched.active
        for i in range(len(cx)):
            sched.update(cx[i], cy[i])
            xs.append(cx[i])
            ys.append(cy[i])
            if sched.active != active or sched.alternations >= alternations:
                x, y = cx[i], cy[i]
                break
        else:
            x, y = cx[-1], cy[-1]
    return MixedRun(sched.tau_l, sched.tau_r[1:], sched.n, sched.alternations < alternations,
                    np.array(xs), np.array(ys))
