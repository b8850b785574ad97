"""Loop decompositions of link configurations.

Each site carries maximal vertical intervals: the arcs of its time circle
between consecutive incident links.  A link at ({x,y}, t) connects the four
intervals meeting it, with the two reconnection rules:

  * cross:      the part of x above t joins the part of y below t, and vice
                versa (travel passes straight through, keeping direction);
  * double bar: the parts above t join each other and the parts below t join
                each other (travel is reflected, reversing time direction).

Loops are the connected components of the intervals under these rules.
Components are counted by union-find over intervals; each link contributes
exactly two interval-end pairings, so the structure is a disjoint union of
cycles.

Two boundary conditions are supported: the periodic one (time circle intact)
and pairing boundary conditions, where the circle is cut at 0/beta and the
loose strand ends are rewired by perfect matchings of the vertex set, one at
each cut level.  The pairing sweep (revealing links bottom to top and
rewiring the running matching) identifies the links that close a loop: a
double bar landing on an edge whose endpoints are currently matched to each
other.  The number of closing links L equals the number of pairing-boundary
loops that never reach the top cut.

`delta_loops` computes the loop-count change of a single insert/remove/flip
without a full recount: the four interval ends meeting the affected location
are paired by the rest of the configuration in one of three patterns (both
x-ends together, bar-like, or cross-like), found by walking the loop from the
cut; the count change follows from comparing that external pattern with the
old and new local pairings.  Either side of the comparison yields two local
cycles when the patterns agree and one when they differ, so the change is
always in {-1, 0, +1}.
"""

import bisect

from .linkconfig import CROSS, DBAR, ConfigurationError


class LoopStructureError(RuntimeError):
    """Internal invariant of the loop structure violated (implementation bug)."""


class _DSU:
    def __init__(self, size):
        self.parent = list(range(size))
        self.n_components = size

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
            self.n_components -= 1


# ---------------------------------------------------------------------------
# periodic decomposition


class LoopDecomposition:
    """Immutable snapshot of the loop partition under periodic time."""

    def __init__(self, config):
        geom = config.geom
        self.geom = geom
        self.site_times = [list(v) for v in config.site_times]
        self._offsets = []
        total = 0
        for v in range(geom.n_vertices):
            self._offsets.append(total)
            m = len(self.site_times[v])
            total += m if m > 0 else 1
        self.n_intervals = total
        dsu = _DSU(total)
        for eid, t, kind in config.links():
            x, y = geom.edge_endpoints[eid]
            xb, xa = self._link_ends(x, t)
            yb, ya = self._link_ends(y, t)
            if kind == CROSS:
                dsu.union(xb, ya)
                dsu.union(xa, yb)
            else:
                dsu.union(xb, yb)
                dsu.union(xa, ya)
        self._dsu = dsu
        self.loop_count = dsu.n_components

    def _link_ends(self, v, t):
        """(interval ending at t, interval starting at t) at site v."""
        times = self.site_times[v]
        m = len(times)
        idx = bisect.bisect_left(times, t)
        if idx >= m or times[idx] != t:
            raise LoopStructureError(f"no incident link at site {v}, t={t!r}")
        off = self._offsets[v]
        return off + idx, off + (idx + 1) % m

    def interval_at(self, v, s):
        """Global id of the interval containing the space-time point (v, s)."""
        times = self.site_times[v]
        m = len(times)
        if m == 0:
            return self._offsets[v]
        return self._offsets[v] + bisect.bisect_left(times, s) % m

    def loop_at(self, point):
        v, s = point
        return self._dsu.find(self.interval_at(v, s % self.geom.beta))

    def connected(self, a, b):
        return self.loop_at(a) == self.loop_at(b)


def decompose_periodic(config):
    return LoopDecomposition(config)


def connected(config, a, b):
    return LoopDecomposition(config).connected(a, b)


# ---------------------------------------------------------------------------
# pairings and pairing boundary conditions


class Pairing:
    """Perfect matching of the torus vertices (boundary condition at a cut)."""

    def __init__(self, partner):
        self.partner = list(partner)
        n = len(self.partner)
        if n % 2 != 0:
            raise ValueError("pairing needs an even number of vertices")
        for v, w in enumerate(self.partner):
            if w == v or not (0 <= w < n) or self.partner[w] != v:
                raise ValueError(f"not a perfect matching at vertex {v}")

    def __len__(self):
        return len(self.partner)

    def __getitem__(self, v):
        return self.partner[v]

    def pairs(self):
        for v, w in enumerate(self.partner):
            if v < w:
                yield v, w

    def __eq__(self, other):
        return isinstance(other, Pairing) and self.partner == other.partner


def dimer_cover(geom):
    """Pair each vertex with its axis-0 neighbour (x_0 even <-> x_0 + 1)."""
    partner = [0] * geom.n_vertices
    for v in range(geom.n_vertices):
        c = list(geom.coords(v))
        c[0] = c[0] + 1 if c[0] % 2 == 0 else c[0] - 1
        partner[v] = geom.vertex(c)
    return Pairing(partner)


def random_pairing(geom, rng):
    order = list(range(geom.n_vertices))
    rng.shuffle(order)
    partner = [0] * geom.n_vertices
    for i in range(0, len(order), 2):
        a, b = order[i], order[i + 1]
        partner[a] = b
        partner[b] = a
    return Pairing(partner)


def evolve_pairing(xi, x, y, kind):
    """Reveal one link on edge {x, y}: returns (new pairing, closed?).

    A double bar on a matched pair closes a loop and leaves the matching
    unchanged (the strands above the bar re-form the same pair).  Otherwise
    the matching is rewired: a double bar pairs x with y and hands their old
    partners to each other; a cross swaps the partners of x and y.  Crosses
    never close a loop.
    """
    partner = list(xi.partner)
    closed = _evolve_inplace(partner, x, y, kind)
    return Pairing(partner), closed


def _evolve_inplace(partner, x, y, kind):
    w, z = partner[x], partner[y]
    if kind == DBAR:
        if w == y:
            return True
        partner[x], partner[y] = y, x
        partner[w], partner[z] = z, w
        return False
    if w != y:
        partner[x], partner[z] = z, x
        partner[y], partner[w] = w, y
    return False


def count_closing_links(config, xi0):
    """Number of closing links L: sweep in time order, evolving the pairing."""
    return len(closing_links(config, xi0))


def closing_links(config, xi0):
    partner = list(xi0.partner)
    out = []
    for eid, t, kind in config.links_time_ordered():
        x, y = config.geom.edge_endpoints[eid]
        if _evolve_inplace(partner, x, y, kind):
            out.append((eid, t))
    return out


def minimal_pair_count(xi, geom):
    """Pairs of the matching whose vertices are torus neighbours."""
    return sum(1 for v, w in xi.pairs() if geom.are_adjacent(v, w))


class PairedDecomposition:
    """Loop partition with the time circle cut at 0/beta and matchings applied.

    Strands are closed at the bottom cut by xi0 and at the top cut by xi1.
    A link exactly at time 0 would sit on the cut itself and is rejected.
    """

    def __init__(self, config, xi0, xi1):
        geom = config.geom
        self.geom = geom
        self.site_times = [list(v) for v in config.site_times]
        offsets = []
        total = 0
        for v in range(geom.n_vertices):
            if self.site_times[v] and self.site_times[v][0] == 0.0:
                raise ConfigurationError(
                    "link at t=0 coincides with the boundary cut")
            offsets.append(total)
            total += len(self.site_times[v]) + 1
        self._offsets = offsets
        dsu = _DSU(total)
        for eid, t, kind in config.links():
            x, y = geom.edge_endpoints[eid]
            xb, xa = self._link_ends(x, t)
            yb, ya = self._link_ends(y, t)
            if kind == CROSS:
                dsu.union(xb, ya)
                dsu.union(xa, yb)
            else:
                dsu.union(xb, yb)
                dsu.union(xa, ya)
        for v, w in xi0.pairs():
            dsu.union(offsets[v], offsets[w])
        for v, w in xi1.pairs():
            dsu.union(offsets[v] + len(self.site_times[v]),
                      offsets[w] + len(self.site_times[w]))
        self._dsu = dsu
        self.loop_count = dsu.n_components
        top_roots = {dsu.find(offsets[v] + len(self.site_times[v]))
                     for v in range(geom.n_vertices)}
        self.loops_not_reaching_top = self.loop_count - len(top_roots)

    def _link_ends(self, v, t):
        times = self.site_times[v]
        idx = bisect.bisect_left(times, t)
        if idx >= len(times) or times[idx] != t:
            raise LoopStructureError(f"no incident link at site {v}, t={t!r}")
        off = self._offsets[v]
        return off + idx, off + idx + 1


def decompose_with_pairings(config, xi0, xi1):
    return PairedDecomposition(config, xi0, xi1)


# ---------------------------------------------------------------------------
# loop walking and incremental counting


def next_incident_link(config, v, tau, direction):
    """The first incident link at site v strictly past tau, cyclically.

    Returns (eid, t, kind, wrapped) or None when the site carries no links.
    direction +1 scans upward in time, -1 downward.
    """
    times = config.site_times[v]
    m = len(times)
    if m == 0:
        return None
    if direction > 0:
        idx = bisect.bisect_right(times, tau)
        wrapped = idx >= m
        idx %= m
    else:
        idx = bisect.bisect_left(times, tau) - 1
        wrapped = idx < 0
        idx %= m
    eid = config.site_edges[v][idx]
    t = times[idx]
    i = bisect.bisect_left(config.edge_times[eid], t)
    return eid, t, config.edge_kinds[eid][i], wrapped


def _segment_contains(a, b, x, direction):
    """Is x inside the arc from a (exclusive) to b (inclusive) in `direction`?"""
    if direction > 0:
        if a < b:
            return a < x <= b
        return x > a or x <= b
    if b < a:
        return b <= x < a
    return x < a or x >= b


def _walk_to_cut(config, start_site, cut_time, cut_x, cut_y, step_cap):
    """Follow the loop upward from (start_site, cut_time) to the cut.

    The cut is the pair of points (cut_x, cut_time), (cut_y, cut_time); the
    walk reports which of the four cut sides the strand leaving start_site
    upward attaches to: (site, 'below'|'above').  A link located exactly at
    the cut (the removed/flipped one) is never traversed, because reaching
    its time means reaching the cut.
    """
    v, tau, direction = start_site, cut_time, +1
    for _ in range(step_cap):
        nxt = next_incident_link(config, v, tau, direction)
        if nxt is None:
            if v == cut_x or v == cut_y:
                return v, ("below" if direction > 0 else "above")
            raise LoopStructureError("walk strayed onto a linkless site")
        eid, t, kind, _ = nxt
        if (v == cut_x or v == cut_y) and _segment_contains(tau, t, cut_time, direction):
            return v, ("below" if direction > 0 else "above")
        v = config.geom.other_endpoint(eid, v)
        tau = t
        if kind == DBAR:
            direction = -direction
    raise LoopStructureError("loop walk exceeded step cap")


def _external_pattern(config, eid, t):
    """How the rest of the configuration pairs the four cut ends at (eid, t).

    'self'  : each site's two ends rejoin through the outside,
    'bar'   : above joins above and below joins below across the edge,
    'cross' : above joins the opposite below.
    """
    x, y = config.geom.edge_endpoints[eid]
    cap = 4 * config.n_links + 16
    site, side = _walk_to_cut(config, x, t, x, y, cap)
    if site == x:
        if side == "below":
            return "self"
        raise LoopStructureError("walk returned to its own starting end")
    return "bar" if side == "above" else "cross"


_KIND_PATTERN = {CROSS: "cross", DBAR: "bar"}


def _local_cycles(p, q):
    return 2 if p == q else 1


def delta_loops(config, move):
    """Loop-count change of a move, from local traversal only.

    move is ("insert", eid, t, kind), ("remove", eid, t) or ("flip", eid, t).
    Exact: always equals the full-recount difference.
    """
    op = move[0]
    if op == "insert":
        _, eid, t, kind = move
        if config.has_link(eid, t):
            raise ConfigurationError(f"link already present at edge {eid}, t={t!r}")
        for v in config.geom.edge_endpoints[eid]:
            times = config.site_times[v]
            i = bisect.bisect_left(times, t)
            if i < len(times) and times[i] == t:
                raise ConfigurationError(f"time collision at site {v}, t={t!r}")
        p = _external_pattern(config, eid, t)
        return _local_cycles(p, _KIND_PATTERN[kind]) - _local_cycles(p, "self")
    if op == "remove":
        _, eid, t = move
        kind = config.kind_at(eid, t)
        p = _external_pattern(config, eid, t)
        return _local_cycles(p, "self") - _local_cycles(p, _KIND_PATTERN[kind])
    if op == "flip":
        _, eid, t = move
        kind = config.kind_at(eid, t)
        p = _external_pattern(config, eid, t)
        return (_local_cycles(p, _KIND_PATTERN[kind ^ 1])
                - _local_cycles(p, _KIND_PATTERN[kind]))
    raise ValueError(f"unknown move {op!r}")


# ---------------------------------------------------------------------------
# compatible-coloring oracle


def count_colorings(config, n, max_intervals=40):
    """Count colorings of the maximal intervals constant across every link.

    Independent oracle for the loop count: re-derives the intervals and the
    equality constraints from the raw configuration and counts solutions by
    label propagation to a fixpoint (never consulting the loop counter).
    The result must equal n ** loop_count; returned as an exact integer.
    """
    geom = config.geom
    # intervals per site, rebuilt from scratch
    incident = [[] for _ in range(geom.n_vertices)]
    for eid, t, kind in config.links():
        for v in geom.edge_endpoints[eid]:
            incident[v].append(t)
    for v in range(geom.n_vertices):
        incident[v].sort()
    ids = {}
    for v in range(geom.n_vertices):
        m = len(incident[v])
        for j in range(max(m, 1)):
            ids[(v, j)] = len(ids)
    if len(ids) > max_intervals:
        raise ConfigurationError(
            f"{len(ids)} intervals exceed the oracle guard ({max_intervals})")

    constraints = []
    for eid, t, kind in config.links():
        x, y = geom.edge_endpoints[eid]
        jx = incident[x].index(t)
        jy = incident[y].index(t)
        x_below, x_above = (x, jx), (x, (jx + 1) % len(incident[x]))
        y_below, y_above = (y, jy), (y, (jy + 1) % len(incident[y]))
        if kind == CROSS:
            constraints.append((ids[x_below], ids[y_above]))
            constraints.append((ids[x_above], ids[y_below]))
        else:
            constraints.append((ids[x_below], ids[y_below]))
            constraints.append((ids[x_above], ids[y_above]))

    labels = list(range(len(ids)))
    changed = True
    while changed:
        changed = False
        for a, b in constraints:
            la, lb = labels[a], labels[b]
            if la != lb:
                lo = min(la, lb)
                for i, l in enumerate(labels):
                    if l == la or l == lb:
                        labels[i] = lo
                changed = True
    classes = len(set(labels))
    return n ** classes
