"""Block events and the path machinery of the Peierls argument.

Bad events on a (closed) big cube:

  * crowded (C): two distinct edges sharing exactly one endpoint, each
    carrying at least one link positioned inside the cube;
  * empty (E): one of the 2^(d+1) constituent small cubes contains no links;
  * transposition (T): a cross positioned in the open interior of the cube.

All three depend only on link positions on the cube boundary, never on the
kind of a boundary link (T looks at interior links only), which is what the
chessboard machinery requires of them.

A switch is a pair of links (z1, z2) on distinct edges sharing a vertex,
where t2 is the first time after t1 at which any edge incident or equal to
e1 carries a link.  At most one of the two links of a switch can close a
loop; when the lower link is a double bar the upper one is never closing
(the bar freshly pairs the endpoints of e1, nothing incident may intervene
before t2, so e2 cannot be a matched pair at t2).

`extract_path` turns a loop connection between two space-time points into a
loop-erased walk on small cubes: follow the loop upward from the source
until it first reaches the target, and take the last-exit loop erasure of
the cube-visit sequence (cube k+1 is the cube entered when the walk leaves
cube k for the last time), which is self-avoiding and face-adjacent.  Every
interior cube of the walk lies in a bad big cube of one of the 2^(d+1)
half-period translates: a crowded or empty cube witnesses itself, and a cube
passed straight through (entered across an edge and left through a time
face, or vice versa) forces a bad event among its neighbours, which a short
case split names.  The recorded segments group consecutive cubes sharing a
witness, one to three cubes each; the group ending at the target carries no
guarantee, since the walk stops there.
"""

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import BigCube, SmallCube
from .linkconfig import CROSS, DBAR, LinkConfiguration
from .loops import (LoopDecomposition, LoopStructureError, count_closing_links,
                    next_incident_link, _segment_contains)


class AlgorithmInvariantError(RuntimeError):
    """The exploration reached a state the construction excludes: a bug."""


# ---------------------------------------------------------------------------
# bad events on cubes


@dataclass
class BadEventReport:
    cube: BigCube
    crowded: bool
    empty: bool
    transposition: bool
    crowded_witness: tuple = None
    empty_witness: object = None
    transposition_witness: tuple = None

    @property
    def bad(self):
        return self.crowded or self.empty or self.transposition


def _edge_links_in_big(config, complex, eid, big):
    out = []
    for t in config.edge_times[eid]:
        if complex.link_in_big(eid, t, big):
            out.append(t)
    return out


def detect_bad_events(config, complex, cube, J=None):
    """Evaluate the three bad events for a big cube (C, E, T).

    `cube` is either a BigCube or a base-tiling index I (with J given).
    """
    big = cube if isinstance(cube, BigCube) else complex.big_cube(cube, J)
    geom = config.geom

    linked = []
    for eid in complex.edges_in_big(big):
        if _edge_links_in_big(config, complex, eid, big):
            linked.append(eid)
    crowded = False
    crowded_witness = None
    for i in range(len(linked)):
        for j in range(i + 1, len(linked)):
            a, b = linked[i], linked[j]
            shared = set(geom.edge_endpoints[a]) & set(geom.edge_endpoints[b])
            if len(shared) == 1:
                crowded = True
                crowded_witness = (a, b)
                break
        if crowded:
            break

    empty = False
    empty_witness = None
    for small in complex.small_cubes_of(big):
        if not any(config.edge_times[eid] and _edge_has_link_in_small(config, complex, eid, small)
                   for eid in complex.edges_in_small(small)):
            empty = True
            empty_witness = small
            break

    transposition = False
    transposition_witness = None
    for eid in complex.edges_in_big(big):
        for t, kind in zip(config.edge_times[eid], config.edge_kinds[eid]):
            if kind == CROSS and complex.link_in_big_interior(eid, t, big):
                transposition = True
                transposition_witness = (eid, t)
                break
        if transposition:
            break

    return BadEventReport(big, crowded, empty, transposition,
                          crowded_witness, empty_witness, transposition_witness)


def _edge_has_link_in_small(config, complex, eid, small):
    for t in config.edge_times[eid]:
        if complex.link_in_small(eid, t, small):
            return True
    return False


def small_empty(config, complex, small):
    return not any(_edge_has_link_in_small(config, complex, eid, small)
                   for eid in complex.edges_in_small(small))


def small_crowded(config, complex, small):
    # all edges of a small cube share its centre vertex, so crowded just
    # means two distinct edges are linked inside it
    linked = sum(1 for eid in complex.edges_in_small(small)
                 if _edge_has_link_in_small(config, complex, eid, small))
    return linked >= 2


def stacked_union_crowded(config, complex, lower, upper):
    """Crowdedness of a union of two small cubes stacked in time."""
    if lower.column != upper.column:
        raise AlgorithmInvariantError("union cubes must share a column")
    linked = 0
    for eid in complex.edges_in_small(lower):
        if (_edge_has_link_in_small(config, complex, eid, lower)
                or _edge_has_link_in_small(config, complex, eid, upper)):
            linked += 1
    return linked >= 2


def empty_event(config, complex, big):
    """Fast E detector: some constituent small cube carries no links."""
    h = complex.cell_height
    for small in complex.small_cubes_of(big):
        lo, hi = small.cell * h, (small.cell + 1) * h
        found = False
        for eid in complex.edges_in_small(small):
            times = config.edge_times[eid]
            if bisect.bisect_right(times, hi) > bisect.bisect_left(times, lo):
                found = True
                break
        if not found:
            return True
    return False


# ---------------------------------------------------------------------------
# switches and non-closing links


@dataclass(frozen=True)
class Switch:
    lower: tuple   # (edge, time, kind)
    upper: tuple


def detect_switches(config, geom):
    """All switches of the configuration, in lower-time order.

    Ties between candidate upper links at equal times (possible only across
    sites, a measure-zero event) are broken by edge order.
    """
    out = []
    for e1, t1, k1 in config.links_time_ordered():
        neighborhood = set()
        for v in geom.edge_endpoints[e1]:
            neighborhood.update(geom.incident_edges[v])
        best = None
        for e2 in sorted(neighborhood):
            times = config.edge_times[e2]
            idx = bisect.bisect_right(times, t1)
            if idx < len(times):
                t2 = times[idx]
                if best is None or (t2, e2) < (best[1], best[0]):
                    best = (e2, t2, config.edge_kinds[e2][idx])
        if best is not None and best[0] != e1:
            out.append(Switch((e1, t1, k1), best))
    return out


def count_nonclosing(config, xi):
    """Links that do not close a loop under the sweep from pairing xi."""
    return config.n_links - count_closing_links(config, xi)


# ---------------------------------------------------------------------------
# closed-form constants and bounds


def peierls_fraction(d):
    """Guaranteed fraction of bad cubes along an extracted path."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return Fraction(1, 2 * (d + 1) ** 2 + 1)


def near_translate_count(d):
    """Cubes reachable by shifting +-1 in at most two coordinates (d+1 axes)."""
    return 1 + 2 * (d + 1) + 4 * math.comb(d + 1, 2)


def crowded_pair_count(d):
    """Adjacent edge pairs in a big cube: a vertex and two of its 2d edges."""
    return 2 ** d * math.comb(2 * d, 2)


def default_bound_constant(d, R):
    return math.e ** 3 * d * d * 2 ** (d + 3) * R


def bad_event_bounds(d, u, R, n, C1=None, beta=None, Kprime=None):
    """Closed-form upper bounds for the distributed bad-event probabilities.

    Returns the three per-cube bounds (after the 1/K_{d+1} root) together
    with the auxiliary quantities of the argument: the non-closing threshold
    m0, the link-count ceiling M, the cube-hop distance Delta, and the
    partition-function exponent lower bound (the last three only when beta
    and K' are supplied).
    """
    if d < 1 or R <= 0 or n < 1:
        raise ValueError("need d >= 1, R > 0, n >= 1")
    if not (0.0 <= u <= 0.5):
        raise ValueError("bounds hold for u in [0, 1/2]")
    if C1 is None:
        C1 = default_bound_constant(d, R)
    bound_empty = 2 ** (d + 2) * math.exp(-(1.0 - u) * R / 4.0)
    tail = math.exp(-d * 2 ** d * R) + (C1 * (1.0 - u) * n) ** (-0.2)
    out = {
        "bound_empty": bound_empty,
        "bound_transposition": tail,
        "bound_crowded": crowded_pair_count(d) * tail,
        "C1": C1,
        "delta": 3 * d + R / n,
    }
    if beta is not None and Kprime is not None:
        K = Kprime / 2 ** d
        out["m0"] = n * beta * K / (4.0 * R)
        out["link_ceiling"] = math.e ** 2 * d * n * beta * Kprime
        out["logZ_lower"] = (n * (1.0 - u) / 2.0 - d) * beta * Kprime
    return out


# ---------------------------------------------------------------------------
# deterministic distributed-crowded witness configurations


def distributed_crowded_edges(complex, e1, e2):
    """The reflected copies of {e1, e2} over all spatial blocks."""
    geom = complex.geom
    edges = set()
    for I in _spatial_indices(complex):
        edges.add(complex.reflect_edge(I, 0, e1))
        edges.add(complex.reflect_edge(I, 0, e2))
    return sorted(edges)


def build_distributed_crowded_config(complex, e1, e2):
    """A configuration realizing the crowded event in every big cube.

    Places one double bar per reflected edge per big-cube row, with staggered
    times strictly inside the row (double bars are the hard case: crosses
    never close a loop).
    """
    geom = complex.geom
    edges = distributed_crowded_edges(complex, e1, e2)
    config = LinkConfiguration(geom)
    H = complex.big_height
    golden = 0.6180339887498949
    for row in range(complex.n_rows):
        for idx, eid in enumerate(edges):
            frac = ((idx + 1) * golden) % 1.0
            t = (row + 0.02 + 0.96 * frac) * H
            config.insert(eid, t % geom.beta, DBAR)
    return config


def distributed_crowded_occurs(config, complex, e1, e2):
    """Does the crowded pair event hold in every big cube of the base tiling?"""
    for I, J in complex.big_indices():
        big = complex.big_cube(I, J)
        ra = complex.reflect_edge(I, 0, e1)
        rb = complex.reflect_edge(I, 0, e2)
        if not (_edge_links_in_big(config, complex, ra, big)
                and _edge_links_in_big(config, complex, rb, big)):
            return False
    return True


def _spatial_indices(complex):
    def rec(sizes):
        if not sizes:
            yield ()
            return
        for head in range(sizes[0]):
            for tail in rec(sizes[1:]):
                yield (head,) + tail
    return rec(complex.spatial_blocks)


# ---------------------------------------------------------------------------
# path extraction


@dataclass
class Visit:
    cube: SmallCube
    enter_mode: str            # start | spatial | temporal
    exit_mode: str = None      # spatial | temporal | end
    enter_link: tuple = None   # (edge, time, kind) for spatial entries
    exit_link: tuple = None


@dataclass
class PathSegment:
    cubes: list
    case: str                 # crowded | empty | pass-up | pass-side | ...
    witness_translate: tuple = None
    witness_cube: BigCube = None
    witness_report: BadEventReport = None


@dataclass
class ExtractedPath:
    small_cubes: list
    segments: list
    visits: list

    def segment_lengths(self):
        return [len(s.cubes) for s in self.segments
                if s.case not in ("start", "target")]


def trace_loop_leg(config, complex, source, target):
    """Small-cube visits of the loop leg from source to target (upward start).

    Requires generic positions: neither endpoint on a link time or cell
    boundary, and no link exactly on a cell boundary along the way.
    """
    geom = config.geom
    v, tau = source
    target_site, target_time = target
    for (site, t) in (source, target):
        times = config.site_times[site]
        i = bisect.bisect_left(times, t)
        if i < len(times) and times[i] == t:
            raise AlgorithmInvariantError("endpoint coincides with a link time")
    dirn = +1
    cell = complex.cell_of(tau)
    visits = [Visit(SmallCube(geom.coords(v), cell), "start")]
    cap = 4 * config.n_links + 2 * complex.n_cells + 16
    for _ in range(cap):
        nxt = next_incident_link(config, v, tau, dirn)
        hit = False
        if v == target_site:
            if nxt is None:
                hit = True
            elif _segment_contains(tau, nxt[1], target_time, dirn):
                hit = True
        if nxt is None and not hit:
            raise LoopStructureError("leg strayed onto a linkless site")
        end_time = target_time if hit else nxt[1]
        try:
            end_cell = complex.cell_of(end_time)
        except Exception as exc:
            raise AlgorithmInvariantError(f"event exactly on a cell boundary: {exc}")
        step = 1 if dirn > 0 else -1
        crossings = (end_cell - cell) % complex.n_cells if dirn > 0 \
            else (cell - end_cell) % complex.n_cells
        if end_time == tau and crossings == 0:
            crossings = complex.n_cells      # full wrap around the circle
        for _ in range(crossings):
            cell = (cell + step) % complex.n_cells
            visits[-1].exit_mode = "temporal"
            visits.append(Visit(SmallCube(geom.coords(v), cell), "temporal"))
        if hit:
            visits[-1].exit_mode = "end"
            return visits
        eid, t, kind, _ = nxt
        w = geom.other_endpoint(eid, v)
        visits[-1].exit_mode = "spatial"
        visits[-1].exit_link = (eid, t, kind)
        visits.append(Visit(SmallCube(geom.coords(w), cell), "spatial",
                            enter_link=(eid, t, kind)))
        v, tau = w, t
        if kind == DBAR:
            dirn = -dirn
    raise LoopStructureError("loop leg exceeded the step cap")


def _small_contains_point(complex, small, point):
    vertex, t = point
    return complex.point_in_small(vertex, t, small)


def _last_visit(visits, cubes, start):
    """Last index >= start whose cube lies in `cubes` (a set)."""
    out = None
    for i in range(start, len(visits)):
        if visits[i].cube in cubes:
            out = i
    return out


def _cell_shift(complex, small, delta):
    return SmallCube(small.column, (small.cell + delta) % complex.n_cells)


def _cross_between(config, complex, eid, cell):
    """A cross on `eid` with time in the given small-cell row."""
    h = complex.cell_height
    lo, hi = cell * h, (cell + 1) * h
    times = config.edge_times[eid]
    kinds = config.edge_kinds[eid]
    for i in range(bisect.bisect_left(times, lo), bisect.bisect_right(times, hi)):
        if kinds[i] == CROSS:
            return True
    return False


def extract_path(config, source, target, complex):
    """Loop-erased small-cube path from source to target with bookkeeping.

    The walk follows the loop from the source in the positive time direction
    until it first reaches the target; the path is the last-exit loop erasure
    of the visited cube sequence (cube k+1 is the cube entered when the walk
    leaves cube k for the last time), which is always self-avoiding and
    face-adjacent.

    Every interior path cube is classified: crowded or empty cubes stand on
    their own; a cube that is neither is passed straight through (entered
    across an edge and left through a time face or vice versa, judging the
    entry by the arrival from the previous path cube and the exit by the last
    departure) and the surrounding case split is checked.  Each interior cube
    must lie in a bad big cube of at least one of the translates; that
    witness is recorded, and its absence raises, since the construction
    guarantees one exists.  Consecutive cubes sharing a witness are grouped
    into one reported segment (lengths 1 to 3).
    """
    decomp = LoopDecomposition(config)
    if not decomp.connected(source, target):
        raise ValueError("source and target are not on the same loop")
    visits = trace_loop_leg(config, complex, source, target)

    # last-exit loop erasure: cubes plus their arrival / last-visit indices
    cubes = [visits[0].cube]
    arrive = [0]
    last = [_last_visit(visits, {visits[0].cube}, 0)]
    seen = {visits[0].cube}
    while not _small_contains_point(complex, cubes[-1], target):
        p = last[-1]
        if p + 1 >= len(visits):
            raise AlgorithmInvariantError("walk ended before reaching the target cube")
        nxt = visits[p + 1].cube
        if nxt in seen:
            raise AlgorithmInvariantError(f"loop erasure revisited {nxt}")
        cubes.append(nxt)
        seen.add(nxt)
        arrive.append(p + 1)
        last.append(_last_visit(visits, {nxt}, p + 1))

    segments = []
    for i, sk in enumerate(cubes):
        if i == 0:
            segments.append(PathSegment([sk], "start"))
            continue
        if i == len(cubes) - 1:
            segments.append(PathSegment([sk], "target"))
            continue
        case = _classify_interior_cube(config, complex, visits, cubes, arrive,
                                       last, i, is_tail=(i >= len(cubes) - 3))
        witness = _witness_for_segment(config, complex, [sk])
        if witness is None:
            # the group of up to three cubes ending at the target carries no
            # bad-cube guarantee (the walk stops before forcing one)
            if i >= len(cubes) - 3:
                segments.append(PathSegment([sk], case + "-tail"))
                continue
            raise AlgorithmInvariantError(
                f"no bad big cube contains path cube {sk} ({case})")
        seg = PathSegment([sk], case)
        seg.witness_translate, seg.witness_cube, seg.witness_report = witness
        segments.append(seg)

    return ExtractedPath(cubes, _merge_segments(segments), visits)


def _classify_interior_cube(config, complex, visits, cubes, arrive, last, i,
                            is_tail=False):
    """Name the bookkeeping case for path cube i and check its invariants.

    A pass-through cube away from the path tail must satisfy one of the
    case-split predicates (the walk's continuation forces a bad event
    nearby); within the final three cubes the walk may stop before forcing
    one, so exhausted predicates are tolerated there.
    """
    sk = cubes[i]
    if small_crowded(config, complex, sk):
        return "crowded"
    if small_empty(config, complex, sk):
        return "empty"
    enter = visits[arrive[i]].enter_mode
    exit_visit = visits[last[i]]
    exit_mode = exit_visit.exit_mode
    if exit_mode == "end":
        raise AlgorithmInvariantError("interior cube holds the trace end")
    if enter == "spatial" and exit_mode == "temporal":
        # entered across an edge from the previous cube, leaves upward or
        # downward; the cube above/below must carry the bad event
        nxt = visits[last[i] + 1].cube
        delta = +1 if (nxt.cell - sk.cell) % complex.n_cells == 1 else -1
        sk1 = _cell_shift(complex, sk, delta)
        sk2 = _cell_shift(complex, cubes[i - 1], delta)
        if stacked_union_crowded(config, complex, sk, sk1) \
                or small_empty(config, complex, sk1):
            return "pass-up"
        eid = visits[arrive[i]].enter_link[0]
        if _cross_between(config, complex, eid, sk1.cell) \
                or small_crowded(config, complex, sk2):
            return "pass-up-far"
        if is_tail:
            return "pass-up-open"
        raise AlgorithmInvariantError("pass-through case split exhausted (up)")
    if enter == "temporal" and exit_mode == "spatial":
        delta = +1 if (sk.cell - cubes[i - 1].cell) % complex.n_cells == 1 else -1
        link = exit_visit.exit_link
        sk1 = visits[last[i] + 1].cube
        if link[2] == CROSS:
            return "pass-side-cross"
        sk2 = _cell_shift(complex, sk1, -delta)
        if stacked_union_crowded(config, complex, sk1, sk2):
            return "pass-side-far"
        if small_empty(config, complex, sk2):
            return "pass-side-empty"
        if is_tail:
            return "pass-side-open"
        raise AlgorithmInvariantError("pass-through case split exhausted (side)")
    if enter == "temporal" and exit_mode == "temporal":
        # multi-visit weave: the walk left through an edge, wandered, and
        # came back through the same edge before continuing vertically
        return "pass-weave"
    raise AlgorithmInvariantError(
        f"pass-through cube entered and left across edges ({enter}/{exit_mode})")


def _merge_segments(segments):
    """Group consecutive interior cubes sharing one witness big cube."""
    out = []
    for seg in segments:
        if (out and seg.witness_cube is not None
                and out[-1].witness_cube == seg.witness_cube
                and len(out[-1].cubes) < 3):
            out[-1].cubes.extend(seg.cubes)
            if out[-1].case != seg.case:
                out[-1].case = f"{out[-1].case}+{seg.case}"
        else:
            out.append(seg)
    return out


def _witness_for_segment(config, complex, cubes):
    for tau in complex.translates:
        big = complex.big_containing_small(cubes[0], tau)
        if all(_big_contains_small(complex, big, c) for c in cubes):
            report = detect_bad_events(config, complex, big)
            if report.bad:
                return tau, big, report
    return None


def _big_contains_small(complex, big, small):
    for r in range(complex.geom.d):
        if (small.column[r] - big.corner[r]) % complex.geom.dims[r] not in (0, 1):
            return False
    return (small.cell - big.cell0) % complex.n_cells in (0, 1)


def path_is_valid(complex, path):
    """Face adjacency of consecutive cubes and pairwise distinctness."""
    cubes = path.small_cubes
    if len(set(cubes)) != len(cubes):
        return False
    for a, b in zip(cubes, cubes[1:]):
        if not complex.small_adjacent(a, b):
            return False
    return True


def translate_bad_fractions(config, complex, path):
    """Bad-big-cube fraction of the induced cube set, per translate."""
    out = {}
    for tau in complex.translates:
        bigs = {complex.big_containing_small(s, tau) for s in path.small_cubes}
        n_bad = sum(1 for b in bigs if detect_bad_events(config, complex, b).bad)
        out[tau] = (n_bad, len(bigs))
    return out


def best_translate_fraction(config, complex, path):
    fracs = translate_bad_fractions(config, complex, path)
    return max(Fraction(nb, nt) for nb, nt in fracs.values())
