"""Survival of T_m for targeted peeling at criticality, by thinning.

The targeted finite-boundary chain at nu_c is the half-plane law reweighted
by h(new) / h(old), with h(P, Q) proportional to z_{P,Q} u_c^{P+Q}.  Running
that chain directly costs O(P + Q) per step, so steps are split into three
classes:

* J_R: R-type events swallowing more than a fraction `theta` of the + side,
* J_L: L-type events swallowing more than `theta` of the - side,
* N: everything else.

Class masses are tabulated once on a log-spaced (P, Q) grid and
interpolated.  Given the class, N-steps are drawn by rejection from the
half-plane law (the weight ratio is bounded there) and J-steps exactly, which
is cheap because big jumps are rare.  Small boundaries use the exact
weights throughout.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import asymptotics as asy
from .curves import MU, NU_C
from .peeling import critical_harmonic, f_eps, philox, step_law

EXACT_PERIMETER = 256
GRID_DENSE = 64
GRID_RATIO = 1.06
BOUND_SLACK = 1.02


@dataclass
class SurvivalResult:
    p: int
    q: int
    m: int
    replicas: int
    times: np.ndarray               # T_m, or n_steps + 1 when not reached
    n_steps: int
    bound: float
    bound_violations: int
    proposals: int
    seconds: float
    approx: bool = True
    grid_shape: tuple = field(default=(0, 0))
    barrier_eps: float | None = None
    barrier_hits: dict = field(default_factory=dict)   # x -> crossed strictly before T_m, per replica

    def survival(self, t):
        """Empirical Prob(T_m > t p)."""
        return float(np.mean(self.times > t * self.p))

    def barrier_probability(self, x):
        """Empirical Prob(tau_x^eps < T_m)."""
        return float(np.mean(self.barrier_hits[x]))

    def table(self, ts, lam=None):
        lam = self.q / self.p if lam is None else lam
        return [(float(t), self.survival(t), asy.scaling_cdf(lam, t)) for t in ts]


class _TargetedKernel:
    """Exact weights of the targeted chain at one state, split by class."""

    CLASSES = ("N", "JR", "JL")

    def __init__(self, theta, head):
        self.d = step_law("P_inf", NU_C, head=head)
        if any(f.jump for f in self.d.families):
            raise RuntimeError("no jump events are expected at nu_c")
        self.h = critical_harmonic()
        self.theta = theta
        self.kind = np.array([f.kind for f in self.d.families])
        # every head event flattened into parallel arrays
        cols = [(np.full(len(f.head), f.kind), np.arange(f.k_start, f.k_stop), f.head, f.dx, f.dy)
                for f in self.d.families]
        kinds, self.k, self.prob, dx, dy = (np.concatenate(c) for c in zip(*cols))
        self.is_l, self.is_r = kinds == "L", kinds == "R"
        self.dx, self.dy = dx.astype(np.int64), dy.astype(np.int64)
        sizes = [len(f.head) for f in self.d.families]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.sizes = np.array(sizes)
        self.starts = np.array([f.k_start for f in self.d.families])

    def _feasible(self, P, Q):
        # positions are contiguous per family, so feasibility is a prefix of each
        top = np.where(self.kind == "L", Q - 2, np.where(self.kind == "R", P, self.starts))
        count = np.clip(top - self.starts + 1, 0, self.sizes)
        return np.concatenate([np.arange(o, o + c) for o, c in zip(self.offsets, count)])

    def events(self, P, Q, classes=CLASSES):
        """(ratio, prob, newP, newQ, class) over the feasible events at (P, Q)."""
        sel = self._feasible(P, Q)
        k = self.k[sel]
        cls = np.zeros(len(sel), dtype=np.int8)
        cls[self.is_r[sel] & (k > self.theta * P)] = 1
        cls[self.is_l[sel] & (k > self.theta * Q)] = 2
        if len(classes) < 3:
            keep = np.isin(cls, [self.CLASSES.index(c) for c in classes])
            sel, cls = sel[keep], cls[keep]
        nP, nQ = P + self.dx[sel], Q + self.dy[sel]
        ratio = self.h(nP, nQ) / float(self.h(P, Q))
        return ratio, self.prob[sel], nP, nQ, cls

    def masses(self, P, Q):
        ratio, prob, _, _, cls = self.events(P, Q)
        w = ratio * prob
        n = cls == 0
        return (float(w[n].sum()), float(w[cls == 1].sum()), float(w[cls == 2].sum()),
                float(ratio[n].max()) if n.any() else 0.0)

    def draw(self, P, Q, rng, classes=CLASSES):
        ratio, prob, nP, nQ, _ = self.events(P, Q, classes)
        w = np.cumsum(ratio * prob)
        i = min(int(np.searchsorted(w, rng.random() * w[-1], side="right")), len(w) - 1)
        return int(nP[i]), int(nQ[i])


def _axis(top):
    dense = np.arange(1, GRID_DENSE)
    n = max(2, math.ceil(math.log(top / GRID_DENSE) / math.log(GRID_RATIO)) + 1)
    geo = np.unique(np.round(GRID_DENSE * GRID_RATIO ** np.arange(n)).astype(np.int64))
    return np.concatenate([dense, geo[geo >= GRID_DENSE]])


def _class_grid(kernel, top):
    axis = _axis(top)
    shape = (len(axis), len(axis))
    mN, mR, mL, rmax = (np.zeros(shape) for _ in range(4))
    for a, P in enumerate(axis):
        for b, Q in enumerate(axis):
            mN[a, b], mR[a, b], mL[a, b], rmax[a, b] = kernel.masses(int(P), int(Q))
    la = np.log(axis.astype(float))
    interp = RegularGridInterpolator((la, la), np.stack([mN, mR, mL], axis=-1))
    # rejection bound per cell: the largest N-ratio over its four corners
    cell = np.maximum.reduce([rmax[:-1, :-1], rmax[1:, :-1], rmax[:-1, 1:], rmax[1:, 1:]])
    return axis, interp, cell


def _cell_bound(axis, cell, P, Q):
    i = np.clip(np.searchsorted(axis, P, side="right") - 1, 0, len(axis) - 2)
    j = np.clip(np.searchsorted(axis, Q, side="right") - 1, 0, len(axis) - 2)
    return cell[i, j] * BOUND_SLACK


def tm_survival(p=2000, q=None, replicas=20000, *, m=0, n_steps=None, theta=0.05, seed=0,
                head=10000, progress=None, barrier=None) -> SurvivalResult:
    """Simulate T_m for the targeted chain started from (p, q) at nu_c.

    Replicas still alive after `n_steps` (default 2p) are censored and
    reported with T = n_steps + 1.  `barrier=(eps, xs)` also records, for
    each x, whether max(|X_n - mu n|, |Y_n - mu n|) exceeds x f_eps(n)
    strictly before T_m.
    """
    q = p if q is None else q
    n_steps = 2 * p if n_steps is None else int(n_steps)
    t0 = time.perf_counter()
    rng = philox(seed)
    ker = _TargetedKernel(theta, head)
    top = max(p, q) + 2 * n_steps // 5 + GRID_DENSE
    axis, interp, cell = _class_grid(ker, top)
    hi_ax = float(axis[-1])
    fam_kind = ker.kind

    P = np.full(replicas, p, dtype=np.int64)
    Q = np.full(replicas, q, dtype=np.int64)
    T = np.full(replicas, n_steps + 1, dtype=np.int64)
    alive = np.minimum(P, Q) > m
    T[~alive] = 0
    violations = proposals = 0
    eps, xs = barrier if barrier is not None else (None, ())
    hits = {x: np.zeros(replicas, dtype=bool) for x in xs}

    for step in range(1, n_steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        Pi, Qi = P[idx], Q[idx]
        small = (Pi + Qi <= EXACT_PERIMETER) | (np.maximum(Pi, Qi) > hi_ax)
        for j in idx[small]:
            P[j], Q[j] = ker.draw(int(P[j]), int(Q[j]), rng)
        big = idx[~small]
        if big.size:
            pts = np.column_stack([np.log(P[big].astype(float)), np.log(Q[big].astype(float))])
            mass = np.clip(interp(pts), 0.0, None)
            cum = np.cumsum(mass, axis=1)
            u = rng.random(big.size) * cum[:, -1]
            cls = (u[:, None] >= cum).sum(axis=1)
            for c, name in ((1, "JR"), (2, "JL")):
                for j in big[cls == c]:
                    P[j], Q[j] = ker.draw(int(P[j]), int(Q[j]), rng, classes=(name,))
            todo = big[cls == 0]
            while todo.size:
                s = ker.d.sample(rng, todo.size)
                proposals += todo.size
                kind = fam_kind[s.family]
                Pt, Qt = P[todo], Q[todo]
                ok = np.where(kind == "R", (s.k <= Pt) & (s.k <= ker.theta * Pt),
                              np.where(kind == "L", (s.k <= Qt - 2) & (s.k <= ker.theta * Qt), True))
                nP = Pt + np.where(ok, s.dx, 0).astype(np.int64)
                nQ = Qt + np.where(ok, s.dy, 0).astype(np.int64)
                M = _cell_bound(axis, cell, Pt, Qt)
                ratio = np.zeros(todo.size)
                if ok.any():
                    ratio[ok] = ker.h(nP[ok], nQ[ok]) / ker.h(Pt[ok], Qt[ok])
                violations += int((ratio > M).sum())
                acc = ok & (rng.random(todo.size) * M < ratio)
                P[todo[acc]], Q[todo[acc]] = nP[acc], nQ[acc]
                todo = todo[~acc]
        stopped = np.minimum(P[idx], Q[idx]) <= m
        done = idx[stopped]
        if hits:
            live = idx[~stopped]
            dev = np.maximum(np.abs(P[live] - p - MU * step), np.abs(Q[live] - q - MU * step))
            level = f_eps(step, eps)
            for x, h in hits.items():
                h[live[dev > x * level]] = True
        T[done] = step
        alive[done] = False
        if progress is not None and step % 500 == 0:
            progress(step, int(alive.sum()))
    return SurvivalResult(p, q, m, replicas, T, n_steps, float(cell.max() * BOUND_SLACK), violations, proposals,
                          time.perf_counter() - t0, grid_shape=(len(axis), len(axis)),
                          barrier_eps=eps, barrier_hits=hits)
