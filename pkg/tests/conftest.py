import random

import pytest

from loopmodel import build_geometry
from loopmodel.linkconfig import sample_poisson


@pytest.fixture
def ring4():
    return build_geometry(1, (1,), 1.0)


@pytest.fixture
def torus2d():
    return build_geometry(2, (1, 1), 1.0)


@pytest.fixture
def rng():
    return random.Random(12345)


def random_config(rng, d=None, beta=None, u=None, scale=None):
    """A small random geometry plus a sampled configuration."""
    d = d if d is not None else rng.choice([1, 1, 2])
    k = tuple(rng.choice([1, 2]) for _ in range(d))
    geom = build_geometry(d, k, beta if beta is not None else rng.uniform(0.3, 1.5))
    u = u if u is not None else rng.random()
    config = sample_poisson(geom, u, scale if scale is not None else rng.uniform(0.2, 1.0), rng)
    return geom, config
