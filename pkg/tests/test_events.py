import math
import random
from fractions import Fraction

import pytest

from loopmodel import build_geometry
from loopmodel.geometry import build_cube_complex
from loopmodel.linkconfig import CROSS, DBAR, LinkConfiguration, sample_poisson
from loopmodel.loops import (LoopDecomposition, closing_links, dimer_cover,
                             random_pairing)
from loopmodel.events import (bad_event_bounds,
                              best_translate_fraction,
                              build_distributed_crowded_config,
                              count_nonclosing, crowded_pair_count,
                              default_bound_constant, detect_bad_events,
                              detect_switches, distributed_crowded_occurs,
                              empty_event, extract_path, near_translate_count,
                              path_is_valid, peierls_fraction, trace_loop_leg)

from conftest import random_config


@pytest.fixture
def ring_complex(ring4):
    return build_cube_complex(ring4, 1.0, 8)


# ---- bad events ----------------------------------------------------------


def test_empty_config_events(ring4, ring_complex):
    rep = detect_bad_events(LinkConfiguration(ring4), ring_complex, (0,), 0)
    assert rep.empty and not rep.crowded and not rep.transposition
    assert rep.bad


def test_crowded_needs_adjacent_pair(ring4, ring_complex):
    h = ring_complex.cell_height
    c = LinkConfiguration(ring4)
    c.insert(ring4.edge_between(0, 1), 0.3 * h, DBAR)
    c.insert(ring4.edge_between(1, 2), 0.8 * h, DBAR)
    rep = detect_bad_events(c, ring_complex, (0,), 0)
    assert rep.crowded
    # two links on the same edge never crowd a cube
    c2 = LinkConfiguration(ring4)
    c2.insert(ring4.edge_between(0, 1), 0.3 * h, DBAR)
    c2.insert(ring4.edge_between(0, 1), 0.8 * h, DBAR)
    assert not detect_bad_events(c2, ring_complex, (0,), 0).crowded


def test_transposition_interiority(ring4, ring_complex):
    h = ring_complex.cell_height
    interior = ring4.edge_between(0, 1)       # midpoint 1/2, inside [-1/2, 3/2]
    boundary = ring4.edge_between(1, 2)       # midpoint 3/2, on the face
    c = LinkConfiguration(ring4)
    c.insert(interior, 0.5 * h, CROSS)
    assert detect_bad_events(c, ring_complex, (0,), 0).transposition
    c2 = LinkConfiguration(ring4)
    c2.insert(boundary, 0.5 * h, CROSS)
    assert not detect_bad_events(c2, ring_complex, (0,), 0).transposition


def test_events_ignore_boundary_link_kind(rng):
    # flipping any boundary link never changes the report: crowded and empty
    # read positions only, transposition reads interior links only
    for _ in range(25):
        geom, config = random_config(rng, beta=1.0)
        try:
            cx = build_cube_complex(geom, 0.4, 5)
        except Exception:
            continue
        for (I, J) in list(cx.big_indices())[::4]:
            big = cx.big_cube(I, J)
            base = detect_bad_events(config, cx, big)
            for eid, t, kind in list(config.links()):
                if cx.link_in_big(eid, t, big) \
                        and not cx.link_in_big_interior(eid, t, big):
                    config.flip(eid, t)
                    rep = detect_bad_events(config, cx, big)
                    assert (rep.crowded, rep.empty, rep.transposition) == \
                        (base.crowded, base.empty, base.transposition)
                    config.flip(eid, t)


def test_events_reflection_covariance(rng):
    # report for cube q on the configuration equals the report for the
    # reference cube on the pulled-back configuration
    for _ in range(15):
        geom, config = random_config(rng, beta=1.0)
        try:
            cx = build_cube_complex(geom, 0.4, 5)
        except Exception:
            continue
        for (I, J) in list(cx.big_indices())[::3]:
            pulled = LinkConfiguration(geom)
            for eid, t, kind in config.links():
                e2, t2 = cx.reflect_link(I, J, eid, t, inverse=True)
                pulled.insert(e2, t2, kind)
            a = detect_bad_events(config, cx, I, J)
            b = detect_bad_events(pulled, cx, (0,) * geom.d, 0)
            assert (a.crowded, a.empty, a.transposition) == \
                (b.crowded, b.empty, b.transposition)


def test_fast_empty_event_agrees(rng):
    for _ in range(30):
        geom, config = random_config(rng, beta=1.0)
        try:
            cx = build_cube_complex(geom, 0.4, 5)
        except Exception:
            continue
        for (I, J) in list(cx.big_indices())[::4]:
            big = cx.big_cube(I, J)
            assert empty_event(config, cx, big) == \
                detect_bad_events(config, cx, big).empty


# ---- switches --------------------------------------------------------------


def test_switch_example(ring4):
    c = LinkConfiguration(ring4)
    c.insert(ring4.edge_between(0, 1), 0.2, DBAR)
    c.insert(ring4.edge_between(1, 2), 0.4, DBAR)
    switches = detect_switches(c, ring4)
    assert len(switches) == 1
    assert switches[0].lower[1] == 0.2 and switches[0].upper[1] == 0.4


def test_single_link_no_switch(ring4):
    c = LinkConfiguration(ring4)
    c.insert(0, 0.3, DBAR)
    assert detect_switches(c, ring4) == []


def test_intervening_link_breaks_switch(ring4):
    c = LinkConfiguration(ring4)
    c.insert(ring4.edge_between(0, 1), 0.2, DBAR)
    c.insert(ring4.edge_between(0, 1), 0.3, DBAR)   # same edge intervenes
    c.insert(ring4.edge_between(1, 2), 0.4, DBAR)
    switches = detect_switches(c, ring4)
    lowers = {s.lower[1] for s in switches}
    assert 0.2 not in lowers
    assert 0.3 in lowers


def test_switches_never_both_close(rng):
    n_checked = 0
    for _ in range(300):
        geom, config = random_config(rng)
        xi = random_pairing(geom, rng)
        closing = set(closing_links(config, xi))
        for sw in detect_switches(config, geom):
            n_checked += 1
            lo = (sw.lower[0], sw.lower[1]) in closing
            up = (sw.upper[0], sw.upper[1]) in closing
            assert not (lo and up)
            if sw.lower[2] == DBAR:
                assert not up
    assert n_checked > 500


def test_upper_link_can_close_after_cross(ring4):
    # the lower link being a cross rewires the matching so the upper double
    # bar can land on a matched pair: the blanket non-closing claim needs
    # cross-free configurations
    from loopmodel.loops import Pairing
    c = LinkConfiguration(ring4)
    c.insert(ring4.edge_between(1, 2), 0.3, CROSS)
    c.insert(ring4.edge_between(2, 3), 0.5, DBAR)
    xi = Pairing([2, 3, 0, 1])
    closing = set(closing_links(c, xi))
    switches = detect_switches(c, ring4)
    assert any((s.upper[0], s.upper[1]) in closing for s in switches)


def test_at_most_two_switches_share_upper(rng):
    for _ in range(200):
        geom, config = random_config(rng)
        uppers = {}
        for sw in detect_switches(config, geom):
            key = (sw.upper[0], sw.upper[1])
            uppers[key] = uppers.get(key, 0) + 1
        assert all(v <= 2 for v in uppers.values())


def test_all_cross_nonclosing_count(ring4, rng):
    config = sample_poisson(ring4, 1.0, 1.5, rng)
    xi = random_pairing(ring4, rng)
    assert count_nonclosing(config, xi) == config.n_links


# ---- bounds and constants ------------------------------------------------


def test_peierls_fraction_values():
    assert peierls_fraction(1) == Fraction(1, 9)
    assert peierls_fraction(2) == Fraction(1, 19)
    for d in range(1, 7):
        assert near_translate_count(d) == 1 / peierls_fraction(d)


def test_crowded_pair_count_matches_enumeration():
    for d in (1, 2):
        geom = build_geometry(d, (2,) * d, 1.0)
        cx = build_cube_complex(geom, 0.4, 5)
        big = cx.big_cube((0,) * d, 0)
        edges = cx.edges_in_big(big)
        pairs = 0
        for i in range(len(edges)):
            for j in range(i + 1, len(edges)):
                shared = set(geom.edge_endpoints[edges[i]]) \
                    & set(geom.edge_endpoints[edges[j]])
                if len(shared) == 1 and shared <= set(cx.vertices_in_big(big)):
                    pairs += 1
        assert pairs == crowded_pair_count(d)


def test_bound_values():
    b = bad_event_bounds(1, 0.0, 40.0, 10)
    assert math.isclose(b["bound_empty"], 8 * math.exp(-10.0))
    assert math.isclose(b["bound_crowded"] / b["bound_transposition"],
                        crowded_pair_count(1))
    assert b["delta"] == 3 + 4.0
    full = bad_event_bounds(1, 0.0, 2.0, 2, beta=1.0, Kprime=4)
    assert math.isclose(full["logZ_lower"], 0.0)    # (n(1-u)/2 - d) beta K' = 0
    full = bad_event_bounds(1, 0.25, 2.0, 10, beta=1.0, Kprime=4)
    assert math.isclose(full["logZ_lower"], 11.0)
    assert math.isclose(full["link_ceiling"], math.e ** 2 * 10 * 4)
    assert math.isclose(full["m0"], 10 * 1.0 * 2 / 8.0)
    assert math.isclose(default_bound_constant(1, 2.0),
                        math.e ** 3 * 16 * 2.0)
    with pytest.raises(ValueError):
        bad_event_bounds(1, 0.7, 2.0, 10)


# ---- distributed crowded construction ------------------------------------


def test_distributed_crowded_all_three_cases():
    geom = build_geometry(2, (1, 1), 2.0)
    cx = build_cube_complex(geom, 1.0, 4)
    K = 1
    for b in cx.spatial_blocks:
        K *= b
    m0 = cx.n * geom.beta * K / (4 * cx.R)
    v00 = geom.vertex((0, 0))
    cases = {
        "both-boundary": (geom.edge_between(v00, geom.vertex((0, 3))),
                          geom.edge_between(v00, geom.vertex((3, 0)))),
        "one-boundary": (geom.edge_between(v00, geom.vertex((0, 3))),
                         geom.edge_between(v00, geom.vertex((0, 1)))),
        "both-interior": (geom.edge_between(v00, geom.vertex((0, 1))),
                          geom.edge_between(v00, geom.vertex((1, 0)))),
    }
    rng = random.Random(3)
    for name, (e1, e2) in cases.items():
        config = build_distributed_crowded_config(cx, e1, e2)
        assert distributed_crowded_occurs(config, cx, e1, e2), name
        for I, J in cx.big_indices():
            assert detect_bad_events(config, cx, I, J).crowded
        for xi in (dimer_cover(geom), random_pairing(geom, rng)):
            assert count_nonclosing(config, xi) >= m0, name


# ---- path extraction -------------------------------------------------------


def test_path_same_cube(ring4, ring_complex):
    h = ring_complex.cell_height
    path = extract_path(LinkConfiguration(ring4), (0, 0.3 * h), (0, 0.7 * h),
                        ring_complex)
    assert len(path.small_cubes) == 1
    assert path_is_valid(ring_complex, path)


def test_path_single_bar(ring4, ring_complex):
    h = ring_complex.cell_height
    c = LinkConfiguration(ring4)
    c.insert(ring4.edge_between(0, 1), 0.5 * h, DBAR)
    path = extract_path(c, (0, 0.3 * h), (1, 0.3 * h), ring_complex)
    assert len(path.small_cubes) == 2
    assert path.small_cubes[0].column == (0,)
    assert path.small_cubes[1].column == (1,)
    assert path.visits[0].exit_mode == "spatial"
    assert path_is_valid(ring_complex, path)


def test_path_requires_connection(ring4, ring_complex):
    with pytest.raises(ValueError):
        extract_path(LinkConfiguration(ring4), (0, 0.1), (1, 0.1), ring_complex)


def test_trace_wraps_the_time_circle(ring4, ring_complex):
    # a source late on the circle walks upward through the wrap to the target
    c = LinkConfiguration(ring4)
    visits = trace_loop_leg(c, ring_complex, (0, 0.99), (0, 0.01))
    cells = [v.cube.cell for v in visits]
    assert cells[0] == ring_complex.n_cells - 1
    assert cells[-1] == 0
    assert all(v.cube.column == (0,) for v in visits)


def test_path_random_battery(rng):
    done = 0
    while done < 120:
        d = rng.choice([1, 1, 2])
        k = (1,) * d if d == 2 else (rng.choice([1, 2]),)
        geom = build_geometry(d, k, rng.uniform(1.0, 3.0))
        try:
            cx = build_cube_complex(geom, rng.uniform(0.5, 1.5),
                                    rng.choice([4, 6, 8]))
        except Exception:
            continue
        config = sample_poisson(geom, rng.choice([0.0, 0.25, 0.5]),
                                rng.uniform(0.3, 1.0), rng)
        decomp = LoopDecomposition(config)
        src = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
        tgt = None
        for _ in range(40):
            cand = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
            if cand != src and decomp.connected(src, cand):
                tgt = cand
                break
        if tgt is None:
            continue
        path = extract_path(config, src, tgt, cx)
        assert path_is_valid(cx, path)
        # bookkeeping invariants: segments of one to three cubes, each with
        # its bad witness (away from the endpoints)
        for seg in path.segments:
            assert 1 <= len(seg.cubes) <= 3
            if seg.witness_cube is not None:
                assert seg.witness_report.bad
                for small in seg.cubes:
                    from loopmodel.events import _big_contains_small
                    assert _big_contains_small(cx, seg.witness_cube, small)
        if len(path.small_cubes) > 1:
            assert best_translate_fraction(config, cx, path) \
                >= peierls_fraction(d)
        done += 1
