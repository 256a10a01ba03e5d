"""Half-edge Ising-triangulations: assembly, validation, sampling, interfaces.

Darts carry two permutations.  ``nxt`` walks around the face on the left of
a dart and ``opp`` swaps the two darts of an edge.  Every dart also stores
the spin seen on its left: the face spin for internal faces and the
boundary condition for darts of the external face.

A map is grown by filling *holes*.  A hole is a cyclic list of darts in
face order whose first ``p`` entries carry the label ``+`` and the last
``q`` the label ``-``; its origin is the start of the first dart.  Filling
peels the last dart (the ``-`` edge left of the origin): that dart becomes
one side of a new triangle and the two other sides hand their opposite
darts to the remaining hole(s).
"""

from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import curves
from . import generating as gen


class NoInterface(ValueError):
    """Raised when an interface is requested on a monochromatic boundary."""


class SamplerCapWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# data model


@dataclass
class IsingMap:
    nxt: list[int]
    opp: list[int]
    spin: list[str]          # spin on the left of each dart
    root: int | None         # outer dart whose end is the origin rho
    boundary: str            # "+" * p + "-" * q
    n_faces: int = 0
    mono: int | None = None  # stored monochromatic-edge count

    @property
    def p(self):
        return self.boundary.count("+")

    @property
    def q(self):
        return self.boundary.count("-")

    def __len__(self):
        return len(self.nxt)

    # -- derived structure --------------------------------------------------

    def outer_darts(self):
        """Outer darts ext_0..ext_{L-1}; ext_i carries boundary[i]."""
        if self.root is None:
            return []
        L = len(self.boundary)
        orbit = [self.root]
        d = self.nxt[self.root]
        while d != self.root:
            orbit.append(d)
            d = self.nxt[d]
        # nxt[ext_i] = ext_{i-1}
        return [orbit[(-i) % len(orbit)] for i in range(L)] if len(orbit) == L else orbit

    def faces(self):
        seen = [False] * len(self.nxt)
        out = []
        for d in range(len(self.nxt)):
            if seen[d]:
                continue
            orbit = []
            x = d
            while not seen[x]:
                seen[x] = True
                orbit.append(x)
                x = self.nxt[x]
            out.append(orbit)
        return out

    def vertex_ids(self):
        """Vertex label of every dart (the vertex the dart starts from)."""
        vid = [-1] * len(self.nxt)
        nv = 0
        for d in range(len(self.nxt)):
            if vid[d] >= 0:
                continue
            x = d
            while vid[x] < 0:
                vid[x] = nv
                x = self.nxt[self.opp[x]]
            nv += 1
        return vid, nv

    def n_vertices(self):
        if not self.nxt:
            return 1
        return self.vertex_ids()[1]

    def internal_vertices(self):
        return self.n_vertices() - len(self.boundary)

    def monochromatic_edges(self):
        return sum(1 for d, e in enumerate(self.opp) if d < e and self.spin[d] == self.spin[e])

    def edge_sides(self):
        """For every edge, its two sides as ("face", i) or ("boundary", i).

        Internal faces are numbered in order of their smallest dart;
        boundary sides use the position in the boundary word.
        """
        ext = self.outer_darts()
        where = {}
        for i, d in enumerate(ext):
            where[d] = ("boundary", i)
        k = 0
        for orbit in self.faces():
            if orbit[0] in where:
                continue
            for d in orbit:
                where[d] = ("face", k)
            k += 1
        return [(where[d], where[e]) for d, e in enumerate(self.opp) if d < e]

    def triangles(self):
        """Internal faces as ((v0, v1, v2), spin) plus the boundary cycle.

        The boundary cycle lists the vertices B_0 = rho, B_1, ... so that
        boundary edge i joins B_i and B_{i+1} and carries boundary[i].
        """
        vid, _ = self.vertex_ids()
        outer = set(self.outer_darts())
        tris = []
        for orbit in self.faces():
            if orbit[0] in outer:
                continue
            tris.append((tuple(vid[d] for d in orbit), self.spin[orbit[0]]))
        ext = self.outer_darts()
        cycle = [vid[self.nxt[e]] for e in ext]
        return tris, cycle

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        outer = set(self.outer_darts())
        spins = []
        for orbit in self.faces():
            if orbit[0] not in outer:
                spins.append(self.spin[orbit[0]])
        return json.dumps({
            "half_edges": [{"next": a, "opp": b} for a, b in zip(self.nxt, self.opp)],
            "face_spins": spins,
            "root": self.root,
            "boundary": self.boundary,
        })

    @classmethod
    def from_json(cls, text: str) -> "IsingMap":
        data = json.loads(text)
        nxt = [h["next"] for h in data["half_edges"]]
        opp = [h["opp"] for h in data["half_edges"]]
        m = cls(nxt, opp, [""] * len(nxt), data["root"], data["boundary"])
        outer = m.outer_darts()
        for i, d in enumerate(outer):
            m.spin[d] = m.boundary[i]
        outer_set = set(outer)
        spins = iter(data["face_spins"])
        for orbit in m.faces():
            if orbit[0] in outer_set:
                continue
            s = next(spins)
            for d in orbit:
                m.spin[d] = s
        m.n_faces = len(data["face_spins"])
        m.mono = m.monochromatic_edges()
        return m

    def __eq__(self, other):
        return isinstance(other, IsingMap) and canonical_code(self) == canonical_code(other)

    def __hash__(self):
        return hash(canonical_code(self))


def canonical_code(m: IsingMap) -> tuple:
    """Relabel darts in BFS order from the root; equal codes mean equal maps."""
    if m.root is None:
        return (m.boundary,)
    order = {m.root: 0}
    queue = deque([m.root])
    seq = [m.root]
    while queue:
        d = queue.popleft()
        for e in (m.nxt[d], m.opp[d]):
            if e not in order:
                order[e] = len(seq)
                seq.append(e)
                queue.append(e)
    return (
        m.boundary,
        tuple(order[m.nxt[d]] for d in seq),
        tuple(order[m.opp[d]] for d in seq),
        "".join(m.spin[d] for d in seq),
    )


def edge_map(p: int, q: int) -> IsingMap:
    if p + q != 2:
        raise ValueError("the edge map has perimeter 2")
    return assemble_tree(("flip", ("edge",)) if q == 0 else ("edge",), p, q)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def fail(self, msg):
        self.failures.append(msg)

    def __bool__(self):
        return self.ok


def validate_map(m: IsingMap) -> ValidationReport:
    rep = ValidationReport()
    D = len(m.nxt)
    L = len(m.boundary)
    word = m.boundary
    if word != "+" * word.count("+") + "-" * word.count("-"):
        rep.fail(f"boundary word {word!r} is not of Dobrushin form")
    if D == 0:
        if L != 0 or m.n_faces:
            rep.fail("empty dart set but nonempty boundary")
        return rep
    if len(m.opp) != D or len(m.spin) != D:
        rep.fail("permutation arrays have different lengths")
        return rep
    if sorted(m.nxt) != list(range(D)):
        rep.fail("next is not a permutation")
        return rep
    for d in range(D):
        e = m.opp[d]
        if not 0 <= e < D or e == d or m.opp[e] != d:
            rep.fail(f"opposite is not a fixed-point-free involution at dart {d}")
            return rep
    if m.root is None or not 0 <= m.root < D:
        rep.fail("root dart missing")
        return rep
    outer = m.outer_darts()
    if len(outer) != L:
        rep.fail(f"external face has degree {len(outer)}, expected {L}")
        return rep
    for i, d in enumerate(outer):
        if m.spin[d] != word[i]:
            rep.fail(f"outer dart {d} carries {m.spin[d]!r}, boundary says {word[i]!r}")
    outer_set = set(outer)
    n_inner = 0
    for orbit in m.faces():
        if orbit[0] in outer_set:
            continue
        n_inner += 1
        if len(orbit) != 3:
            rep.fail(f"internal face at dart {orbit[0]} has degree {len(orbit)}")
        if len({m.spin[d] for d in orbit}) != 1 or m.spin[orbit[0]] not in "+-":
            rep.fail(f"face at dart {orbit[0]} has inconsistent spin")
    if n_inner != m.n_faces:
        rep.fail(f"stored face count {m.n_faces} differs from {n_inner}")
    vid, nv = m.vertex_ids()
    if len({vid[d] for d in outer}) != L:
        rep.fail("boundary not simple")
    # connectivity
    seen = {0}
    stack = [0]
    while stack:
        d = stack.pop()
        for e in (m.nxt[d], m.opp[d]):
            if e not in seen:
                seen.add(e)
                stack.append(e)
    if len(seen) != D:
        rep.fail("map is not connected")
    if nv - D // 2 + (n_inner + 1) != 2:
        rep.fail("Euler characteristic is not 2")
    twice_i = n_inner - L + 2
    if twice_i < 0 or twice_i % 2 or nv - L != twice_i // 2:
        rep.fail("internal vertex count violates i = (n - (p+q) + 2)/2")
    if m.mono is not None and m.mono != m.monochromatic_edges():
        rep.fail("stored monochromatic edge count is stale")
    return rep


# ---------------------------------------------------------------------------
# assembly by hole filling


def _canonical(hole):
    """Rotate so that the hole starts with the + run that follows the - run."""
    n = len(hole)
    labels = [lab for _, lab in hole]
    if "+" not in labels or "-" not in labels:
        return hole
    for i in range(n):
        if labels[i] == "+" and labels[i - 1] == "-":
            return hole[i:] + hole[:i]
    raise AssertionError("unreachable")


def _flip(s):
    return "+" if s == "-" else "-"


class _Builder:
    """Mutable dart store used while holes are being filled."""

    def __init__(self, p, q):
        self.nxt: list[int] = []
        self.opp: list[int] = []
        self.spin: list[str] = []
        self.alive: list[bool] = []
        self.faces = 0
        word = "+" * p + "-" * q
        self.word = word
        L = len(word)
        ext = [self._new(word[i]) for i in range(L)]
        holes = [self._new("") for _ in range(L)]
        for i in range(L):
            self.opp[ext[i]] = holes[i]
            self.opp[holes[i]] = ext[i]
            self.nxt[ext[i]] = ext[i - 1]
        self.root = ext[0] if L else None
        self.top = [(holes[i], word[i]) for i in range(L)]

    def _new(self, s):
        self.nxt.append(-1)
        self.opp.append(-1)
        self.spin.append(s)
        self.alive.append(True)
        return len(self.nxt) - 1

    def peel(self, hole, flip, event, rotate=True):
        """Place one triangle in `hole`; return the child holes.

        `event` is ("C", s, 0), ("L", s, k) or ("R", s, k) with s the
        spin as seen from the hole (real spin = s xor flip).  C returns one
        hole; L and R return (outer, inner).
        """
        kind, s, k = event
        L = len(hole)
        e, elab = hole[-1]
        if elab != "-":
            raise ValueError("peeled edge must carry -")
        real = _flip(s) if flip else s
        a, b = self._new(real), self._new(real)
        a2, b2 = self._new(""), self._new("")
        self.spin[e] = real
        self.nxt[e], self.nxt[a], self.nxt[b] = a, b, e
        self.opp[a], self.opp[a2] = a2, a
        self.opp[b], self.opp[b2] = b2, b
        self.faces += 1
        body = hole[:-1]
        canon = _canonical if rotate else (lambda h: h)
        if kind == "C":
            return (canon(body + [(b2, s), (a2, s)]),)
        j = L - 1 - k if kind == "L" else k
        first = canon(body[:j] + [(a2, s)])
        second = canon(body[j:] + [(b2, s)])
        if kind == "S":
            return first, second
        return (second, first) if kind == "R" else (first, second)

    def close_edge(self, hole):
        (h0, _), (h1, _) = hole
        x, y = self.opp[h0], self.opp[h1]
        self.opp[x], self.opp[y] = y, x
        self.alive[h0] = self.alive[h1] = False

    def finish(self) -> IsingMap:
        keep = [d for d in range(len(self.nxt)) if self.alive[d]]
        index = {d: i for i, d in enumerate(keep)}
        m = IsingMap(
            [index[self.nxt[d]] for d in keep],
            [index[self.opp[d]] for d in keep],
            [self.spin[d] for d in keep],
            None if self.root is None else index[self.root],
            self.word,
            self.faces,
        )
        m.mono = m.monochromatic_edges()
        return m


def assemble_plain(tree, L: int) -> IsingMap:
    """Build an uncoloured triangulation of the L-gon from a spin-free tree.

    Faces get the placeholder spin + and the boundary word is +^L; the
    hole origin is always the start of its first dart.
    """
    B = _Builder(L, 0)
    stack = [(tree, [d for d, _ in B.top])]
    while stack:
        node, hole = stack.pop()
        tag = node[0]
        if tag == "empty":
            continue
        if tag == "edge":
            B.close_edge([(h, "") for h in hole])
            continue
        labelled = [(h, "-") for h in hole]
        if tag == "C":
            (kid,) = B.peel(labelled, False, ("C", "+", 0), rotate=False)
            stack.append((node[1], [d for d, _ in kid]))
        else:
            j = node[1]
            first, second = B.peel(labelled, False, ("S", "+", j), rotate=False)
            stack.append((node[2], [d for d, _ in first]))
            stack.append((node[3], [d for d, _ in second]))
    return B.finish()


def _hole_pq(hole):
    p = sum(1 for _, lab in hole if lab == "+")
    return p, len(hole) - p


def _flipped(hole):
    return [(d, _flip(lab)) for d, lab in hole]


def assemble_tree(tree, p: int, q: int) -> IsingMap:
    """Build the map described by a peeling tree of the (p,q)-gon."""
    B = _Builder(p, q)
    stack = [(tree, B.top, False)]
    while stack:
        node, hole, flip = stack.pop()
        tag = node[0]
        if tag == "empty":
            if hole:
                raise ValueError("empty tree for a nonempty hole")
        elif tag == "flip":
            stack.append((node[1], _flipped(hole), not flip))
        elif tag == "edge":
            if len(hole) != 2:
                raise ValueError("edge tree needs a 2-gon")
            B.close_edge(hole)
        else:
            kind, s, k = node[:3]
            kids = B.peel(hole, flip, (kind, s, k))
            for sub, h in zip(node[3:], kids):
                stack.append((sub, h, flip))
    return B.finish()


# ---------------------------------------------------------------------------
# Boltzmann sampling


@dataclass
class SamplerStats:
    draws: int = 0
    rejected_faces: int = 0
    rejected_perimeter: int = 0

    @property
    def rejection_rate(self):
        tries = self.draws + self.rejected_faces + self.rejected_perimeter
        return (tries - self.draws) / tries if tries else 0.0


class BoltzmannSampler:
    """Exact sampler of the Boltzmann law at a subcritical t.

    Every hole is filled by drawing its first peeling event with the
    probabilities of the loop equation, evaluated from z-values computed at
    `dps` digits.  Draws exceeding `n_cap` faces or a hole perimeter beyond
    the z-grid are rejected, so the output law is the Boltzmann law
    conditioned on those events; the measured rejection rate is kept in
    `stats`.
    """

    def __init__(self, nu, t, perimeter_cap=40, n_cap=5000, dps=None):
        nu = float(nu)
        if nu <= 1:
            raise curves.DomainError("nu must exceed 1")
        tc = curves.critical_point(nu).t_c
        if not 0 <= t < tc:
            raise curves.DomainError(f"sampling needs 0 <= t < t_c = {tc:.12g}")
        self.nu, self.t, self.t_c = nu, float(t), tc
        self.cap = int(perimeter_cap)
        self.n_cap = int(n_cap)
        self.stats = SamplerStats()
        G = self.cap + 2
        if t == 0:
            z = np.zeros((G + 1, G + 1))
            z[0, 0] = 1.0
            z[1, 1] = 1.0
            z[0, 2] = z[2, 0] = nu
        else:
            grid = gen.z_grid(nu, G, G, t=t, dps=dps or 60 + 2 * G)
            z = np.array([[float(x) if x is not None else np.nan for x in row] for row in grid])
        self.z = z
        self._tables: dict = {}

    def event_table(self, p, q1):
        """Events and probabilities for a hole with boundary +^p -^q1, q1 >= 1."""
        key = (p, q1)
        tab = self._tables.get(key)
        if tab is not None:
            return tab
        z, t, nu = self.z, self.t, self.nu
        q = q1 - 1
        total = z[p, q1]
        events, w = [], []
        if (p, q1) == (1, 1):
            events.append(("edge",))
            w.append(1.0)
        elif (p, q1) == (0, 2):
            events.append(("edge",))
            w.append(nu)
        events.append(("C", "+", 0))
        w.append(t * z[p + 2, q])
        events.append(("C", "-", 0))
        w.append(nu * t * z[p, q + 2])
        for k in range(q):
            events.append(("L", "+", k))
            w.append(t * z[p + 1, q - k] * z[1, k])
            events.append(("L", "-", k))
            w.append(nu * t * z[p, q - k + 1] * z[0, k + 1])
        for k in range(p + 1):
            events.append(("R", "+", k))
            w.append(t * z[k + 1, 0] * z[p - k + 1, q])
            events.append(("R", "-", k))
            w.append(nu * t * z[k, 1] * z[p - k, q + 1])
        w = np.array(w) / total
        tab = (events, np.cumsum(w), float(abs(w.sum() - 1.0)))
        self._tables[key] = tab
        return tab

    def _draw_tree_into(self, B, rng):
        stack = [(B.top, False)]
        while stack:
            hole, flip = stack.pop()
            if not hole:
                continue
            p, q = _hole_pq(hole)
            if q == 0:
                hole, flip = _flipped(hole), not flip
                p, q = q, p
            if p + q + 2 > self.cap:
                self.stats.rejected_perimeter += 1
                return False
            events, cdf, _ = self.event_table(p, q)
            i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            ev = events[min(i, len(events) - 1)]
            if ev[0] == "edge":
                B.close_edge(hole)
                continue
            for h in B.peel(hole, flip, ev):
                stack.append((h, flip))
            if B.faces > self.n_cap:
                self.stats.rejected_faces += 1
                return False
        return True

    def sample(self, p, q, rng, max_tries=10_000) -> IsingMap:
        if p < 0 or q < 0 or p + q < 1:
            raise ValueError("need p, q >= 0 and p + q >= 1")
        if p < self.z.shape[0] and q < self.z.shape[1] and not self.z[p, q] > 0:
            raise ValueError(f"z_{{{p},{q}}} vanishes at t={self.t:g}: no map to sample")
        for _ in range(max_tries):
            B = _Builder(p, q)
            if self._draw_tree_into(B, rng):
                self.stats.draws += 1
                return B.finish()
        raise RuntimeError("sampler rejected every attempt; raise the caps")


_SAMPLERS: dict = {}


def get_sampler(nu, t, perimeter_cap=40, n_cap=5000) -> BoltzmannSampler:
    key = (float(nu), float(t), int(perimeter_cap), int(n_cap))
    s = _SAMPLERS.get(key)
    if s is None:
        s = _SAMPLERS[key] = BoltzmannSampler(nu, t, perimeter_cap, n_cap)
    return s


def sample_boltzmann(p, q, t, nu, seed=None, *, rng=None, perimeter_cap=40, n_cap=5000,
                     warn_rate=0.01) -> IsingMap:
    """One Boltzmann Ising-triangulation of the (p,q)-gon at weight t."""
    sampler = get_sampler(nu, t, perimeter_cap, n_cap)
    if rng is None:
        rng = np.random.Generator(np.random.Philox(seed))
    m = sampler.sample(p, q, rng)
    if sampler.stats.draws >= 100 and sampler.stats.rejection_rate > warn_rate:
        warnings.warn(f"cap rejection rate {sampler.stats.rejection_rate:.3g}", SamplerCapWarning)
    return m


# ---------------------------------------------------------------------------
# leftmost interface


@dataclass
class InterfaceStats:
    length: int | None
    vertices: int = 0
    boundary_touches: int = 0
    reason: str = ""

    @property
    def eta(self):
        return self.length


def interface_stats(m: IsingMap) -> InterfaceStats:
    """Trace the leftmost spin interface from the origin to the far junction.

    An interface dart has spin - on its left and + on its right; at each
    vertex the walk takes the first such dart met when turning from the
    edge it arrived by.
    """
    if m.p == 0 or m.q == 0:
        return InterfaceStats(None, reason="no interface")
    vid, _ = m.vertex_ids()
    ext = m.outer_darts()
    L = len(ext)
    origin = vid[m.nxt[ext[0]]]
    target = vid[m.nxt[ext[m.p]]]
    boundary = {vid[m.nxt[e]] for e in ext}
    opp, nxt, spin = m.opp, m.nxt, m.spin

    def is_interface(d):
        return spin[d] == "-" and spin[opp[d]] == "+"

    d = ext[L - 1]            # the - boundary edge leaving rho
    length = touches = 0
    visited = {origin}
    limit = len(m.nxt)
    while True:
        start = d
        while not is_interface(d):
            d = nxt[opp[d]]
            if d == start:
                raise AssertionError("interface lost at a vertex")
        length += 1
        w = vid[opp[d]]
        visited.add(w)
        if w == target:
            break
        if w in boundary:
            touches += 1
        if length > limit:
            raise AssertionError("interface walk does not terminate")
        d = nxt[d]            # first dart out of w after the incoming edge
    return InterfaceStats(length, len(visited), touches)


# ---------------------------------------------------------------------------
# local-limit balls

SURROGATE_GAP = 1e-3
BALL_WINDOW = 400


class _Region(_Builder):
    """A builder that also tracks vertices, for explorations of a half-plane.

    The infinite boundary is replaced by a (W, W) window whose far junction
    sits W edges away from the root vertex 0 on both sides.
    """

    def __init__(self, window):
        self.tail: list[int] = []
        super().__init__(window, window)
        L = 2 * window
        for i, (h, _) in enumerate(self.top):
            self.tail[h] = i
            self.tail[self.opp[h]] = (i + 1) % L
        self.n_vertices = L
        self.adj = [set() for _ in range(L)]
        for i in range(L):
            self._link(i, (i + 1) % L)
        self.anchor = window
        self.far = {v for v in range(L) if min(v, L - v) > window // 2}

    def _new(self, s):
        self.tail.append(-1)
        return super()._new(s)

    def _vertex(self):
        self.adj.append(set())
        self.n_vertices += 1
        return self.n_vertices - 1

    def _link(self, a, b):
        if a != b:
            self.adj[a].add(b)
            self.adj[b].add(a)

    def distances(self):
        dist = [-1] * self.n_vertices
        dist[0] = 0
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def peel_at(self, hole, i, kind, spin, k):
        """Place a triangle on hole[i]; None when the third vertex leaves the window.

        L_k puts the third vertex k edges before the start of the peeled
        edge, R_k puts it k edges after its end.  Returns the holes as
        (new,) for C and (outer, inner) otherwise.
        """
        L = len(hole)
        rot = hole[i + 1:] + hole[: i + 1]
        e = rot[-1][0]
        body = rot[:-1]
        u, v = self.tail[e], self.tail[rot[0][0]] if L > 1 else self.tail[e]
        if kind == "C":
            w, j = self._vertex(), None
        else:
            j = L - 1 - k if kind == "L" else k
            if not 0 <= j <= L - 1:
                return None
            w = self.tail[body[j][0]] if j < L - 1 else u
            if w in self.far:
                return None
        a, b = self._new(spin), self._new(spin)
        a2, b2 = self._new(""), self._new("")
        self.spin[e] = spin
        self.nxt[e], self.nxt[a], self.nxt[b] = a, b, e
        self.opp[a], self.opp[a2] = a2, a
        self.opp[b], self.opp[b2] = b2, b
        self.tail[a], self.tail[b], self.tail[a2], self.tail[b2] = v, w, w, u
        self._link(v, w)
        self._link(w, u)
        self.faces += 1
        if kind == "C":
            return (body + [(b2, spin), (a2, spin)],)
        first = body[:j] + [(a2, spin)]
        second = body[j:] + [(b2, spin)]
        return (first, second) if kind == "L" else (second, first)

    def fill(self, hole, sampler, rng, max_tries=200):
        """Glue a Boltzmann map into a finite hole; False when the sampler declines."""
        hole = _canonical(hole)
        p, q = _hole_pq(hole)
        if p + q + 2 > sampler.cap:
            return False
        try:
            m = sampler.sample(p, q, rng, max_tries=max_tries)
        except RuntimeError:
            return False
        L = len(hole)
        ext = m.outer_darts()
        ext_index = {d: i for i, d in enumerate(ext)}
        vid, _ = m.vertex_ids()
        vmap = {vid[x]: self.tail[hole[(i + 1) % L][0]] for i, x in enumerate(ext)}
        dmap = {x: self.opp[hole[i][0]] for i, x in enumerate(ext)}
        for d in range(len(m.nxt)):
            if d not in ext_index:
                dmap[d] = self._new(m.spin[d])
        for d in range(len(m.nxt)):
            if vid[d] not in vmap:
                vmap[vid[d]] = self._vertex()
        for d in range(len(m.nxt)):
            nd = dmap[d]
            if d in ext_index:
                self.opp[nd] = dmap[m.opp[d]]
                continue
            self.nxt[nd] = dmap[m.nxt[d]]
            self.opp[nd] = dmap[m.opp[d]]
            self.tail[nd] = vmap[vid[d]]
            self._link(vmap[vid[d]], vmap[vid[m.opp[d]]])
        for h, _ in hole:
            self.alive[h] = False
        self.faces += m.n_faces
        return True

    def triangles(self):
        seen, out = set(), []
        for d in range(len(self.nxt)):
            if d in seen or not self.alive[d] or self.nxt[d] < 0:
                continue
            orbit = [d, self.nxt[d], self.nxt[self.nxt[d]]]
            if self.nxt[orbit[2]] != d or not self.spin[d]:
                continue
            seen.update(orbit)
            out.append((tuple(self.tail[x] for x in orbit), self.spin[d]))
        return out


@dataclass
class BallExploration:
    """Ball of radius r around the root vertex of a local-limit sample.

    `vertices` maps vertex ids to graph distances (at most r); `triangles`
    lists every explored face with a vertex at distance below r.  `theta`
    is the step at which no unexplored face touches a vertex closer than r.
    """

    nu: float
    law: str
    radius: int
    seed: int
    steps: int
    theta: int | None
    vertices: dict
    triangles: list
    events: list = field(default_factory=list)
    bottleneck_step: int | None = None
    second: "BallExploration | None" = None
    filled_holes: int = 0
    unfilled_holes: int = 0
    truncated: bool = False
    incomplete: bool = False
    surrogate_t: float = 0.0
    approx: bool = True

    @property
    def infinite_jumps(self):
        return sum(1 for e in self.events if "inf" in e)


def _junction(hole):
    """Index of the - to + junction when the hole reads -...- +...+ from somewhere, else None."""
    labels = [lab for _, lab in hole]
    ups = [i for i in range(len(labels)) if labels[i] == "+" and labels[i - 1] == "-"]
    return ups[0] if len(ups) == 1 else None


def _leftmost(region, hole, dist):
    """Hole index of the leftmost frontier vertex at minimal distance."""
    L = len(hole)
    start = next((i for i, (h, _) in enumerate(hole) if region.tail[h] == region.anchor), 0)
    best, arg = None, None
    for s in range(L):
        i = (start + s) % L
        d = dist[region.tail[hole[i][0]]]
        if best is None or d < best:
            best, arg = d, i
    return arg


def explore_ball(nu, law="auto", radius=2, seed=0, *, max_steps=4000, window=BALL_WINDOW,
                 surrogate_gap=SURROGATE_GAP, perimeter_cap=40, spawn=True) -> BallExploration:
    """Explore the ball of radius `radius` of the local limit at weight nu.

    The Dobrushin algorithm (- edge at the junction; the mixed schedule for
    nu < nu_c) runs while the junction is closer than `radius`; afterwards
    the edge left of the leftmost closest frontier vertex is peeled with the
    monochromatic half-plane law.  Swallowed finite holes are filled with
    Boltzmann maps at t = (1 - surrogate_gap) t_c.  A jump to infinity ends
    the exploration of this component and, with `spawn`, starts the second
    one.
    """
    from . import peeling as pl

    nu = pl._check_nu(nu)
    radius = int(radius)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if law == "auto":
        law = "mixed" if nu < curves.NU_C else "P_inf"
    if law == "mixed" and nu >= curves.NU_C or law not in ("mixed", "P_inf"):
        raise curves.DomainError(f"law {law!r} does not apply at nu={nu}")
    t_s = (1 - surrogate_gap) * curves.critical_point(nu).t_c
    out = BallExploration(nu, law, radius, int(seed), 0, None, {0: 0}, [], surrogate_t=t_s)
    if radius == 0:
        out.theta = 0
        return out
    rng = pl.philox(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", pl.asy.ModelMismatch)
        dash = pl.step_law("P_inf", nu)
        hat = pl.step_law("Phat_inf", nu) if law == "mixed" else None
        mono = pl.step_law("P_p", nu, 0)
    sched = pl.MixedSchedule() if law == "mixed" else None
    sampler = get_sampler(nu, t_s, perimeter_cap)
    region = _Region(window)
    hole = list(region.top)
    X = Y = 0.0
    for n in range(max_steps):
        dist = region.distances()
        if min(dist[region.tail[h]] for h, _ in hole) >= radius:
            out.theta = n
            break
        J = _junction(hole)
        if J is not None and dist[region.tail[hole[J][0]]] < radius:
            plus = sched is not None and sched.active == "+"
            d, i, flip = (hat, J, False) if plus else (dash, (J - 1) % len(hole), False)
        else:
            i = (_leftmost(region, hole, dist) - 1) % len(hole)
            d, flip = mono, hole[i][1] == "+"
        s = d.sample(rng, 1)
        fam = d.families[int(s.family[0])]
        k = int(s.k[0])
        label = d.event_of(int(s.family[0]), k).label
        out.events.append(label)
        out.steps = n + 1
        if fam.jump:
            out.bottleneck_step = n + 1
            if spawn:
                child = int(rng.integers(2 ** 62))
                out.second = explore_ball(nu, law, radius, child, max_steps=max_steps, window=window,
                                          surrogate_gap=surrogate_gap, perimeter_cap=perimeter_cap,
                                          spawn=False)
            break
        spin = ("+" if fam.spin == "-" else "-") if flip else fam.spin
        pieces = region.peel_at(hole, i, fam.kind, spin, k)
        if pieces is None:
            out.truncated = True
            break
        if d is not mono:
            X += float(s.dx[0])
            Y += float(s.dy[0])
            if sched is not None:
                sched.update(X, Y)
        hole = pieces[0]
        if len(pieces) == 2:
            if region.fill(pieces[1], sampler, rng):
                out.filled_holes += 1
            else:
                out.unfilled_holes += 1
                inner = {region.tail[h] for h, _ in pieces[1]}
                if min(dist[v] if dist[v] >= 0 else radius for v in inner) < radius:
                    out.incomplete = True
    else:
        out.truncated = True
    dist = region.distances()
    out.vertices = {v: dv for v, dv in enumerate(dist) if 0 <= dv <= radius}
    out.triangles = [(tri, s) for tri, s in region.triangles()
                     if min(dist[v] for v in tri) < radius]
    return out
