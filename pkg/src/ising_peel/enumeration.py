"""Exact enumeration of Ising-triangulations with a Dobrushin boundary.

Counts are indexed by perimeters (p, q), the number n of internal faces and
the number m of monochromatic edges, so that

    z_{p,q}(t, nu) = sum_{n,m} count(p,q,n,m) * nu**m * t**n.

The main route is the loop equation obtained by peeling the edge to the left
of the root.  Two brute-force generators serve as oracles: an exhaustive
peeling tree that builds explicit maps, and a direct gluing enumerator for
very small face counts.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

BRUTE_FORCE_CAP = 7


class OracleLimitError(ValueError):
    """Raised when a brute-force request exceeds the configured face cap."""


class RecursionMismatch(AssertionError):
    def __init__(self, p, q, n, m, got, want):
        super().__init__(
            f"recursion/brute-force mismatch at (p,q,n,m)=({p},{q},{n},{m}): "
            f"recursion={got} brute_force={want}"
        )
        self.where = (p, q, n, m)


# ---------------------------------------------------------------------------
# packed polynomials in nu
#
# A polynomial sum_m c_m nu^m with nonnegative integer coefficients is stored
# as the integer sum_m c_m 2^(B m).  Products of packed integers are products
# of polynomials as long as no slot overflows, which holds because every
# intermediate quantity in the loop equation is a partial sum of a final
# count (all terms are nonnegative).


def _unpack(value: int, bits: int) -> dict[int, int]:
    out = {}
    mask = (1 << bits) - 1
    m = 0
    while value:
        c = value & mask
        if c:
            out[m] = c
        value >>= bits
        m += 1
    return out


def _pack(poly: dict[int, int], bits: int) -> int:
    return sum(c << (bits * m) for m, c in poly.items())


@dataclass
class CountTable:
    """Sparse table (p, q, n) -> {m: count} with provenance per entry."""

    n_max: int
    entries: dict[tuple[int, int, int], dict[int, int]] = field(default_factory=dict)
    provenance: dict[tuple[int, int, int], str] = field(default_factory=dict)
    p_max: int = 0
    q_max: int = 0

    def get(self, p: int, q: int, n: int) -> dict[int, int]:
        if n > self.n_max:
            raise KeyError(f"face count {n} beyond table bound {self.n_max}")
        if p + q > self.p_max + self.q_max + (self.n_max - n):
            raise KeyError(f"perimeter ({p},{q}) outside table range at n={n}")
        return dict(self.entries.get((p, q, n), {}))

    def covers(self, p: int, q: int, n: int) -> bool:
        return n <= self.n_max and p + q <= self.p_max + self.q_max + self.n_max - n

    def poly(self, p: int, q: int, nu) -> list:
        """Coefficients [t^n] z_{p,q} evaluated at nu, for n = 0..n_max."""
        out = []
        for n in range(self.n_max + 1):
            if not self.covers(p, q, n):
                break
            out.append(sum(c * nu**m for m, c in self.entries.get((p, q, n), {}).items()))
        return out

    def total(self, p: int, q: int, n: int) -> int:
        return sum(self.entries.get((p, q, n), {}).values())

    def to_rows(self, p_max: int | None = None, q_max: int | None = None) -> list[dict]:
        rows = []
        for (p, q, n), counts in sorted(self.entries.items()):
            if p_max is not None and p > p_max:
                continue
            if q_max is not None and q > q_max:
                continue
            for m, c in sorted(counts.items()):
                rows.append({"p": p, "q": q, "n": n, "m": m, "count": str(c)})
        return rows

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_rows(**kw))


def build_count_table(p_max: int, q_max: int, n_max: int, bits: int | None = None) -> CountTable:
    """Fill every entry with p <= p_max + slack, q <= q_max + slack, n <= n_max.

    Layer n needs layer n-1 at perimeter one larger, so the perimeter bound at
    layer n is L + (n_max - n) with L = p_max + q_max.
    """
    if n_max < 0 or p_max < 0 or q_max < 0:
        raise ValueError("bounds must be nonnegative")
    if n_max > 60:
        raise MemoryError("n_max beyond the exact-table memory budget (60)")
    base = p_max + q_max
    if bits is None:
        bits = 48 + 5 * n_max
    layers: list[dict[tuple[int, int], int]] = []
    for n in range(n_max + 1):
        top = base + n_max - n
        cur: dict[tuple[int, int], int] = {}
        if n == 0:
            cur[(0, 0)] = 1
            cur[(1, 1)] = 1
            cur[(2, 0)] = cur[(0, 2)] = 1 << bits
            layers.append({k: v for k, v in cur.items() if sum(k) <= top})
            continue
        prev = layers[n - 1]

        def z(i, a, b):
            return layers[i].get((a, b), 0)

        def conv(x, y):
            # [t^(n-1)] of z_x * z_y
            s = 0
            for i in range(n):
                a = layers[i].get(x, 0)
                if a:
                    b = layers[n - 1 - i].get(y, 0)
                    if b:
                        s += a * b
            return s

        for total in range(1, top + 1):
            if (total - n) % 2:
                continue
            for p in range(0, total):
                qq = total - p
                q = qq - 1
                val = prev.get((p + 2, q), 0) + (prev.get((p, q + 2), 0) << bits)
                for k in range(q):
                    val += conv((p + 1, q - k), (1, k))
                    val += conv((p, q - k + 1), (0, k + 1)) << bits
                for k in range(p + 1):
                    val += conv((k + 1, 0), (p - k + 1, q))
                    val += conv((k, 1), (p - k, q + 1)) << bits
                if val:
                    cur[(p, qq)] = val
            if (0, total) in cur:
                cur[(total, 0)] = cur[(0, total)]
        layers.append(cur)

    table = CountTable(n_max=n_max, p_max=p_max, q_max=q_max)
    limit = 1 << (bits - 1)
    for n, layer in enumerate(layers):
        for (p, q), packed in layer.items():
            poly = _unpack(packed, bits)
            if any(c >= limit for c in poly.values()):
                return build_count_table(p_max, q_max, n_max, bits=2 * bits)
            table.entries[(p, q, n)] = poly
            table.provenance[(p, q, n)] = "recursion"
    return table


# ---------------------------------------------------------------------------
# oracle 1: explicit maps with exhaustive spin assignments
#
# Uncoloured triangulations are generated by the spin-free peeling
# decomposition and built as half-edge maps; m is then read off every map
# for all 2^n face colourings at once.  Nothing here uses nu or the loop
# equation, so agreement with the recursion is a genuine cross-check.


def brute_force_count(p: int, q: int, n: int, cap: int = BRUTE_FORCE_CAP) -> dict[int, int]:
    """Count maps of the (p,q)-gon with n faces by building all of them.

    Every uncoloured map is assembled explicitly, validated, and checked
    for uniqueness; the monochromatic-edge histogram over all spin
    assignments is accumulated per map.
    """
    if n > cap:
        raise OracleLimitError(f"oracle limit: n={n} exceeds brute-force cap {cap}")
    if p < 0 or q < 0 or (p + q == 0 and n != 0):
        return {}
    if (n - p - q) % 2:
        return {}
    hist = _colour_histograms(p + q, n)
    return dict(hist.get(p, {}))


def self_check(table: CountTable, max_perimeter: int = 5, n_max: int = BRUTE_FORCE_CAP) -> int:
    """Compare every covered entry with p + q <= max_perimeter against brute force.

    Raises RecursionMismatch at the first disagreeing (p, q, n, m); returns
    the number of entries checked and marks them in the provenance.
    """
    checked = 0
    for L in range(max_perimeter + 1):
        for p in range(L + 1):
            q = L - p
            for n in range(min(n_max, table.n_max) + 1):
                if not table.covers(p, q, n):
                    continue
                got = {m: c for m, c in table.get(p, q, n).items() if c}
                want = brute_force_count(p, q, n)
                for m in sorted(set(got) | set(want)):
                    if got.get(m, 0) != want.get(m, 0):
                        raise RecursionMismatch(p, q, n, m, got.get(m, 0), want.get(m, 0))
                if (p, q, n) in table.entries:
                    table.provenance[(p, q, n)] = "recursion+brute_force"
                checked += 1
    return checked


@functools.lru_cache(maxsize=None)
def _colour_histograms(L: int, n: int) -> dict[int, dict[int, int]]:
    """{p: {m: count}} over all maps of perimeter L with n faces and words +^p -^(L-p)."""
    import numpy as np

    from .maps import assemble_plain, canonical_code, validate_map

    spins = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(np.int8)
    out: dict[int, dict[int, int]] = {p: {} for p in range(L + 1)}
    seen = set()
    for tree in plain_trees(L, n):
        m_ = assemble_plain(tree, L)
        report = validate_map(m_)
        if not report.ok:
            raise AssertionError(f"generated invalid map: {report.failures}")
        code = canonical_code(m_)
        if code in seen:
            raise AssertionError("peeling decomposition generated a duplicate map")
        seen.add(code)
        pairs = m_.edge_sides()
        for p in range(L + 1):
            word = np.array([0] * p + [1] * (L - p), dtype=np.int8)
            mono = np.zeros(2**n, dtype=np.int64)
            for a, b in pairs:
                sa = spins[:, a[1]] if a[0] == "face" else word[a[1]]
                sb = spins[:, b[1]] if b[0] == "face" else word[b[1]]
                mono += np.asarray(sa == sb, dtype=np.int64)
            for m, c in enumerate(np.bincount(mono)):
                if c:
                    out[p][m] = out[p].get(m, 0) + int(c)
    return out


def plain_trees(L: int, n: int) -> Iterator[tuple]:
    """Spin-free peeling decompositions of triangulations of the L-gon.

    A tree is ("empty",), ("edge",), ("C", child) or ("S", j, first, second)
    where the new vertex is the start of hole dart j.
    """
    if L == 0:
        if n == 0:
            yield ("empty",)
        return
    if n < 0 or (n - L) % 2 or (n == 0 and L != 2):
        return
    if n == 0:
        yield ("edge",)
        return
    for t in plain_trees(L + 1, n - 1):
        yield ("C", t)
    for j in range(L):
        for n1 in range(n):
            firsts = list(plain_trees(j + 1, n1))
            if not firsts:
                continue
            for t2 in plain_trees(L - j, n - 1 - n1):
                for t1 in firsts:
                    yield ("S", j, t1, t2)


# ---------------------------------------------------------------------------
# coloured peeling trees (used to list small maps explicitly)


def _faces_ok(p, q, n):
    return n >= 0 and (n - p - q) % 2 == 0 and (n > 0 or p + q in (0, 2))


def peeling_trees(p: int, q: int, n: int) -> Iterator[tuple]:
    """Yield every peeling decomposition of a map of the (p,q)-gon with n faces.

    A tree is ("empty",), ("edge",) or (event, spin, k, children...) where
    the children are trees of the holes.  Monochromatic boundaries are
    peeled on the edge to the left of the root, with the same event set.
    """
    if p + q == 0:
        if n == 0:
            yield ("empty",)
        return
    if not _faces_ok(p, q, n):
        return
    if q == 0:
        # mirror: a (p,0) map is a (0,p) map with all spins flipped
        for tree in peeling_trees(0, p, n):
            yield ("flip", tree)
        return
    if n == 0:
        if p + q == 2:
            yield ("edge",)
        return
    # boundary +^p -^{q'+1}, peel the minus edge left of the root
    qq = q - 1
    for spin in "+-":
        # C event: new internal vertex
        a, b = (p + 2, qq) if spin == "+" else (p, qq + 2)
        for t in peeling_trees(a, b, n - 1):
            yield ("C", spin, 0, t)
        # L_k: third vertex on the minus segment, k edges left, 0<=k<=qq-1
        for k in range(qq):
            if spin == "+":
                outer, inner = (p + 1, qq - k), (1, k)
            else:
                outer, inner = (p, qq - k + 1), (0, k + 1)
            yield from _split("L", spin, k, outer, inner, n - 1)
        # R_k: third vertex on the plus segment (or at rho+), 0<=k<=p
        for k in range(p + 1):
            if spin == "+":
                outer, inner = (p - k + 1, qq), (k + 1, 0)
            else:
                outer, inner = (p - k, qq + 1), (k, 1)
            yield from _split("R", spin, k, outer, inner, n - 1)


def _split(kind, spin, k, outer, inner, rest):
    for n1 in range(rest + 1):
        n2 = rest - n1
        if not _faces_ok(*outer, n1) or not _faces_ok(*inner, n2):
            continue
        inner_trees = list(peeling_trees(*inner, n2))
        if not inner_trees:
            continue
        for t1 in peeling_trees(*outer, n1):
            for t2 in inner_trees:
                yield (kind, spin, k, t1, t2)


# ---------------------------------------------------------------------------
# oracle 2: direct gluing of labelled triangles


def gluing_count(p: int, q: int, n: int, cap: int = 3) -> dict[int, int]:
    """Count by gluing n labelled, rotatable triangles onto a (p+q)-gon.

    Each rooted map arises from exactly n! 3^n labelled gluings.
    """
    if n > cap:
        raise OracleLimitError(f"oracle limit: n={n} exceeds gluing cap {cap}")
    ell = p + q
    if ell == 0:
        return {0: 1} if n == 0 else {}
    darts = 3 * n + ell
    if darts % 2:
        return {}
    # faces: outer polygon darts 0..ell-1, triangle j darts ell+3j..ell+3j+2
    phi = [0] * darts
    for i in range(ell):
        phi[i] = (i + 1) % ell
    for j in range(n):
        b = ell + 3 * j
        for r in range(3):
            phi[b + r] = b + (r + 1) % 3
    side_spin_outer = ["+"] * p + ["-"] * q
    counts: dict[int, int] = {}
    for alpha in _matchings(list(range(darts))):
        if ell != 2 and any(alpha[i] < ell for i in range(ell)):
            continue
        if ell == 2 and n > 0 and alpha[0] == 1:
            continue
        # vertices: cycles of phi o alpha
        vert = [-1] * darts
        nv = 0
        for d in range(darts):
            if vert[d] < 0:
                x = d
                while vert[x] < 0:
                    vert[x] = nv
                    x = phi[alpha[x]]
                nv += 1
        edges = darts // 2
        if nv - edges + (n + 1) != 2:
            continue
        if len({vert[i] for i in range(ell)}) != ell:
            continue
        if not _connected(darts, phi, alpha):
            continue
        for spins in itertools.product("+-", repeat=n):
            def sp(d):
                return side_spin_outer[d] if d < ell else spins[(d - ell) // 3]
            mono = sum(1 for d in range(darts) if d < alpha[d] and sp(d) == sp(alpha[d]))
            counts[mono] = counts.get(mono, 0) + 1
    norm = math.factorial(n) * 3**n
    out = {}
    for m, c in counts.items():
        if c % norm:
            raise AssertionError("gluing count not divisible by the labelling factor")
        out[m] = c // norm
    return out


def _matchings(items):
    if not items:
        yield {}
        return
    first = items[0]
    for j in range(1, len(items)):
        other = items[j]
        rest = items[1:j] + items[j + 1:]
        for sub in _matchings(rest):
            sub = dict(sub)
            sub[first] = other
            sub[other] = first
            yield sub


def _connected(darts, phi, alpha):
    seen = {0}
    stack = [0]
    while stack:
        d = stack.pop()
        for e in (phi[d], alpha[d]):
            if e not in seen:
                seen.add(e)
                stack.append(e)
    return len(seen) == darts


# ---------------------------------------------------------------------------
# evaluation at a point


@dataclass
class EvalPoint:
    p: int
    q: int
    t: float
    nu: object
    value: float
    partial_sums: list
    error: float
    certified: bool
    approx: bool = False


def eval_z(p, q, t, nu, mode="truncate", n_terms=None, table=None, zc=None):
    """Evaluate z_{p,q}(t, nu) from exact counts.

    mode "truncate": partial sum up to n_terms with the certified bound
    z(t_c) r^(N+1) / (1-r), r = t/t_c, using z(t_c) from the numerical
    provider.  mode "tail_extrapolate": adds a fitted power-law tail; the
    result is flagged approximate.
    """
    from . import curves

    if p == 0 and q == 0:
        return EvalPoint(0, 0, t, nu, 1.0, [1.0], 0.0, True)
    nu_f = float(nu)
    tc = curves.critical_point(nu_f).t_c
    if t > tc * (1 + 1e-12):
        raise ValueError(f"inadmissible point: t={t} exceeds t_c={tc}")
    if n_terms is None:
        n_terms = 24
    if table is None or table.n_max < n_terms or not table.covers(p, q, n_terms):
        table = build_count_table(p, q, n_terms)
    nu_exact = Fraction(nu) if isinstance(nu, (int, Fraction, str)) else nu_f
    coeffs = table.poly(p, q, nu_exact)
    partial, s = [], 0.0
    for n, c in enumerate(coeffs):
        s += float(c) * t**n
        partial.append(s)
    r = t / tc
    if mode == "truncate":
        if r >= 1:
            raise ValueError("truncate mode needs t < t_c for a certified bound")
        if zc is None:
            from .generating import z_grid
            zc = float(z_grid(nu_f, p, q, t=tc)[p][q])
        err = zc * r ** (len(coeffs)) / (1 - r)
        return EvalPoint(p, q, t, nu, s, partial, err, True)
    if mode == "tail_extrapolate":
        from .asymptotics import fit_coefficient_tail
        fit = fit_coefficient_tail([float(c) * tc**n for n, c in enumerate(coeffs)], parity=(p + q) % 2)
        tail = fit.tail_sum(len(coeffs), r)
        return EvalPoint(p, q, t, nu, s + tail, partial, abs(fit.residual) * abs(tail) + abs(tail) * 0.05,
                         False, approx=True)
    raise ValueError(f"unknown mode {mode!r}")
