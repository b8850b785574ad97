import math
import random

import numpy as np
import pytest

from loopmodel import build_geometry
from loopmodel.estimators import (ConnectionEstimate, EstimationError,
                                  chessboard_spot_check, connection_observable,
                                  dimer_stack_indicator, estimate_connection,
                                  fit_decay, zbound_report)
from loopmodel.geometry import build_cube_complex
from loopmodel.linkconfig import DBAR, LinkConfiguration, sample_poisson
from loopmodel.loops import LoopDecomposition, delta_loops, dimer_cover
from loopmodel.sampler import SamplerParams, run_chain
from loopmodel.stats import batch_means, integrated_autocorrelation_time


def _fake_estimates(rates, se=1e-7):
    out = []
    for x in rates:
        p = math.exp(-0.7 * x)
        out.append(ConnectionEstimate(((x,), 0.0), p, se * p, 1e12))
    return out


def test_fit_recovers_exact_exponential():
    fit = fit_decay(_fake_estimates(range(1, 7)))
    assert abs(fit.rate - 0.7) < 1e-6
    lo, hi = fit.rate_interval()
    assert lo < 0.7 < hi


def test_fit_excludes_below_floor():
    ests = _fake_estimates(range(1, 7))
    ests.append(ConnectionEstimate(((9,), 0.0), 0.0, 0.0, 100.0))
    noisy = ConnectionEstimate(((8,), 0.0), 1e-4, 1e-4, 100.0)
    ests.append(noisy)
    fit = fit_decay(ests)
    assert 8.0 not in fit.fit_window and 9.0 not in fit.fit_window


def test_fit_requires_three_points():
    with pytest.raises(EstimationError):
        fit_decay(_fake_estimates([1, 2]))


def test_fit_confidence_interval_calibration():
    # synthetic noisy exponentials: the 95% interval covers the truth
    rng = random.Random(42)
    hits = 0
    trials = 200
    for _ in range(trials):
        ests = []
        for x in range(1, 7):
            p = math.exp(-0.9 * x)
            se = 0.05 * p
            noisy = p * math.exp(rng.gauss(0.0, 0.05))
            ests.append(ConnectionEstimate(((x,), 0.0), noisy, se, 1e9))
        fit = fit_decay(ests)
        lo, hi = fit.rate_interval()
        if lo <= 0.9 <= hi:
            hits += 1
    assert hits / trials >= 0.9


def test_connection_observable_basics(ring4):
    displacements = [((0,), 0.0), ((1,), 0.0), ((2,), 0.0)]
    obs = connection_observable(ring4, displacements)
    config = LinkConfiguration(ring4)
    decomp = LoopDecomposition(config)

    class Dummy:
        pass
    state = Dummy()
    state.config = config
    vals = [fn(state, decomp) for _, fn in obs]
    assert vals == [1.0, 0.0, 0.0]


def test_translation_average_matches_direct_mean(rng):
    # per-sample averaged indicator equals the mean over single origins
    geom = build_geometry(1, (2,), 1.0)
    displacements = [((2,), 0.3)]
    obs = connection_observable(geom, displacements)
    for _ in range(20):
        config = sample_poisson(geom, 0.4, 0.8, rng)
        decomp = LoopDecomposition(config)

        class Dummy:
            pass
        state = Dummy()
        state.config = config
        avg = obs[0][1](state, decomp)
        direct = [decomp.connected((v, 0.0),
                                   (geom.vertex((geom.coords(v)[0] + 2,)), 0.3))
                  for v in range(geom.n_vertices)]
        assert math.isclose(avg, sum(direct) / len(direct))


def test_merging_moves_only_grow_connectivity(rng):
    # inserting a loop-merging link never disconnects a connected pair
    geom = build_geometry(1, (2,), 1.0)
    for _ in range(40):
        config = sample_poisson(geom, 0.3, 0.6, rng)
        decomp = LoopDecomposition(config)
        pairs = [((a, 0.1), (b, 0.7)) for a in range(8) for b in range(8)]
        before = {p for p in pairs if decomp.connected(*p)}
        eid = rng.randrange(geom.n_edges)
        t = rng.random() * geom.beta
        if delta_loops(config, ("insert", eid, t, DBAR)) != -1:
            continue
        config.insert(eid, t, DBAR)
        after = LoopDecomposition(config)
        for p in before:
            assert after.connected(*p)


def test_estimate_connection_reports_ess(ring4):
    params = SamplerParams(n=2, u=0.25, sweeps=400, burnin=50, seed=3)
    displacements = [((0,), 0.0), ((1,), 0.0)]
    obs = connection_observable(ring4, displacements)
    records = run_chain(ring4, params, observables=obs)
    est = estimate_connection(records, displacements, n_origins=4)
    assert est[0].probability == 1.0
    assert est[0].standard_error == 0.0
    assert est[0].effective_samples == 400 * 4
    assert 0 < est[1].probability < 1
    assert est[1].effective_samples > 0


def test_chessboard_check_trivial_events():
    geom = build_geometry(1, (1,), 6.0)
    complex = build_cube_complex(geom, 5.0, 2)
    always = [[True] * complex.n_big for _ in range(256)]
    rep = chessboard_spot_check(always, complex, [0, 1])
    assert rep["lhs"] == 1.0 and rep["rhs"] == 1.0 and rep["ok"]
    never = [[False] * complex.n_big for _ in range(256)]
    rep = chessboard_spot_check(never, complex, [0, 1])
    assert rep["lhs"] == 0.0 and rep["ok"]


def test_zbound_report_values():
    rep = zbound_report(2, 0.0, 1, 1.0, 4)
    assert rep["exponent"] == 0.0
    rep = zbound_report(10, 0.25, 1, 1.0, 4)
    assert math.isclose(rep["exponent"], 11.0)
    # exponent is linear in beta
    assert math.isclose(zbound_report(10, 0.25, 1, 2.0, 4)["exponent"], 22.0)


def test_dimer_stack_indicator(ring4):
    fn = dimer_stack_indicator(ring4)
    config = LinkConfiguration(ring4)

    class Dummy:
        pass
    state = Dummy()
    state.config = config
    assert fn(state, None) == 1.0
    cover = dimer_cover(ring4)
    v, w = next(cover.pairs())
    config.insert(ring4.edge_between(v, w), 0.5, DBAR)
    assert fn(state, None) == 1.0
    config.insert(ring4.edge_between(1, 2), 0.25, DBAR)
    assert fn(state, None) == 0.0


def test_connection_probability_against_enumeration():
    # base-process connection probability at distance 1 by exhaustive
    # enumeration over configurations with up to four links (the ordered
    # time slots carry iid uniform edge/kind marks), truncation error
    # below the Poisson tail P(N >= 5)
    import itertools

    geom = build_geometry(1, (1,), 0.1)
    u = 0.3
    lam = geom.n_edges * geom.beta
    weights = {0: u, 1: 1 - u}     # CROSS, DBAR intensities
    exact = 0.0
    pk = math.exp(-lam)
    for k in range(0, 5):
        if k:
            pk *= lam / k
        total = 0.0
        marks = list(itertools.product(range(geom.n_edges), (0, 1)))
        for tup in itertools.product(marks, repeat=k):
            w = 1.0
            config = LinkConfiguration(geom)
            for i, (eid, kind) in enumerate(tup):
                w *= weights[kind] / geom.n_edges
                config.insert(eid, geom.beta * (i + 1) / (k + 2), kind)
            if w == 0.0:
                continue
            if LoopDecomposition(config).connected((0, 0.0), (1, 0.0)):
                total += w
        exact += pk * total
    tail = 1.0 - math.exp(-lam) * sum(lam ** j / math.factorial(j)
                                      for j in range(5))
    assert tail < 1e-4

    displacements = [((1,), 0.0)]
    obs = connection_observable(geom, displacements)
    params = SamplerParams(n=1, u=u, sweeps=30_000, burnin=300, seed=19)
    records = run_chain(geom, params, observables=obs)
    est = estimate_connection(records, displacements, n_origins=4)[0]
    assert abs(est.probability - exact) <= 3 * est.standard_error + tail


def test_batch_means_on_iid_series():
    rng = np.random.default_rng(1)
    x = rng.normal(size=20_000)
    mean, se, ess = batch_means(x)
    assert abs(mean) < 4 * se
    assert 0.7 * len(x) < ess < 1.4 * len(x)
    assert integrated_autocorrelation_time(x) < 1.5


def test_batch_means_detects_correlation():
    rng = np.random.default_rng(2)
    # AR(1) with strong correlation: ESS well below N
    x = np.zeros(20_000)
    for i in range(1, len(x)):
        x[i] = 0.95 * x[i - 1] + rng.normal()
    _, _, ess = batch_means(x)
    assert ess < len(x) / 10
