import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from loopmodel import build_geometry
from loopmodel.linkconfig import (CROSS, DBAR, ConfigurationError,
                                  LinkConfiguration, deserialize,
                                  poisson_variate, sample_poisson, serialize)

from conftest import random_config


def test_insert_remove_roundtrip(ring4):
    c = LinkConfiguration(ring4)
    base = c.copy()
    c.insert(0, 0.25, DBAR)
    c.remove(0, 0.25)
    assert c == base


def test_flip_is_involution(ring4):
    c = LinkConfiguration(ring4)
    c.insert(1, 0.125, CROSS)
    c.flip(1, 0.125)
    assert c.kind_at(1, 0.125) == DBAR
    c.flip(1, 0.125)
    assert c.kind_at(1, 0.125) == CROSS


def test_duplicate_insert_rejected(ring4):
    c = LinkConfiguration(ring4)
    c.insert(0, 0.5, DBAR)
    with pytest.raises(ConfigurationError):
        c.insert(0, 0.5, CROSS)
    # same time on an edge sharing a site is rejected too: the loop
    # connectivity would be undefined
    with pytest.raises(ConfigurationError):
        c.insert(1, 0.5, DBAR)


def test_remove_missing_link_fails(ring4):
    c = LinkConfiguration(ring4)
    with pytest.raises(ConfigurationError):
        c.remove(0, 0.1)
    with pytest.raises(ConfigurationError):
        c.flip(0, 0.1)


def test_locality_of_mutations(ring4, rng):
    c = sample_poisson(ring4, 0.5, 0.8, rng)
    snapshot = [list(v) for v in c.edge_times]
    c.insert(2, 0.123456, DBAR)
    for eid in range(ring4.n_edges):
        if eid != 2:
            assert c.edge_times[eid] == snapshot[eid]


def test_zero_intensity_kinds(ring4, rng):
    only_bars = sample_poisson(ring4, 0.0, 1.0, rng)
    assert only_bars.cross_count() == 0
    only_crosses = sample_poisson(ring4, 1.0, 1.0, rng)
    assert only_crosses.cross_count() == only_crosses.n_links


def test_sampling_reproducible(ring4):
    a = sample_poisson(ring4, 0.3, 1.0, random.Random(77))
    b = sample_poisson(ring4, 0.3, 1.0, random.Random(77))
    assert a == b


def test_poisson_mean_and_cross_fraction():
    # mean link count d K' beta scale, cross fraction u, within 3 SE
    geom = build_geometry(1, (1,), 0.5)
    rng = random.Random(5)
    u, scale, n_draws = 0.3, 1.5, 4000
    counts = []
    crosses = 0
    for _ in range(n_draws):
        c = sample_poisson(geom, u, scale, rng)
        counts.append(c.n_links)
        crosses += c.cross_count()
    lam = geom.n_edges * geom.beta * scale
    mean = sum(counts) / n_draws
    se = math.sqrt(lam / n_draws)
    assert abs(mean - lam) <= 3 * se
    total = sum(counts)
    frac_se = math.sqrt(u * (1 - u) / total)
    assert abs(crosses / total - u) <= 3 * frac_se


def test_poisson_variate_large_mean():
    rng = random.Random(9)
    draws = [poisson_variate(800.0, rng) for _ in range(300)]
    mean = sum(draws) / len(draws)
    assert abs(mean - 800.0) <= 3 * math.sqrt(800.0 / len(draws))


def test_serialize_roundtrip(rng):
    for _ in range(20):
        geom, config = random_config(rng)
        text = serialize(config)
        back = deserialize(text)
        assert back == config
        # with the geometry supplied explicitly
        assert deserialize(text, geom) == config


def test_serialize_is_sorted_by_time(ring4, rng):
    config = sample_poisson(ring4, 0.5, 2.0, rng)
    lines = serialize(config).splitlines()[2:]
    times = [float(line.split()[2]) for line in lines]
    assert times == sorted(times)


def test_deserialize_header_mismatch(ring4):
    other = build_geometry(1, (2,), 1.0)
    text = serialize(LinkConfiguration(ring4))
    with pytest.raises(ConfigurationError):
        deserialize(text, other)


def test_deserialize_reports_line_numbers(ring4):
    text = serialize(LinkConfiguration(ring4)) + "0 1 not-a-time cross\n"
    with pytest.raises(ConfigurationError, match="line 3"):
        deserialize(text)
    text = serialize(LinkConfiguration(ring4)) + "0 1 0.5 wiggle\n"
    with pytest.raises(ConfigurationError, match="line 3"):
        deserialize(text)
    with pytest.raises(ConfigurationError, match="line 1"):
        deserialize("nonsense\n")


@given(st.floats(0.01, 0.99), st.integers(0, 10_000))
@settings(max_examples=60)
def test_serialize_roundtrip_property(u, seed):
    geom = build_geometry(1, (1,), 0.7)
    config = sample_poisson(geom, u, 1.0, random.Random(seed))
    assert deserialize(serialize(config)) == config


GOLDEN = """# loopmodel configuration
d=1 k=1 beta=1.0
0 1 0.25 dbar
1 2 0.5 cross
"""


def test_golden_configuration():
    # frozen artifact: text form, counts, and loop structure
    from loopmodel.loops import LoopDecomposition
    config = deserialize(GOLDEN)
    assert config.n_links == 2
    assert serialize(config) == GOLDEN
    # the bar merges the circles at 0 and 1; the cross splices in site 2;
    # site 3 stays alone: two loops
    assert LoopDecomposition(config).loop_count == 2
