"""Metropolis sampler for the loop measure: the base point process reweighted
by n to the number of loops.

Moves are elementary link operations with their exact acceptance ratios:

  * insert a link at a uniform (edge, time), kind cross with probability u
    else double bar.  Drawing the kind from the base intensities makes the
    kind factors cancel; the ratio is n^dl * (d K' beta) / (m + 1) with m the
    current link count.
  * delete a uniformly chosen link:  n^dl * m / (d K' beta).
  * flip the kind of a uniformly chosen link:  n^dl * ((1-u)/u)^(+-1).

dl is the loop-count change from local traversal; n^dl takes only the values
n, 1, 1/n, so no log-weight bookkeeping is required.  Flips are skipped when
u is 0 or 1 (the kind is deterministic) with their proposal mass given to
insert/delete.  With n = 1 every factor n^dl is 1: the chain then samples
the base process exactly and the loop traversal is skipped entirely.

Mixing at large n is not quantified; autocorrelation diagnostics are
reported with every run instead.
"""

import bisect
import math
import random
from dataclasses import dataclass

from .linkconfig import CROSS, DBAR, LinkConfiguration, poisson_variate
from .loops import LoopDecomposition, delta_loops, dimer_cover
from .stats import batch_means, integrated_autocorrelation_time


class SamplerError(RuntimeError):
    pass


@dataclass
class SamplerParams:
    n: int
    u: float
    sweeps: int
    burnin: int
    thinning: int = 1
    seed: int = 0
    replicas: int = 1
    steps_per_sweep: int = 0        # 0: scale with system size
    recount_interval: int = 4096    # exact loop-count audit cadence (steps)
    start: str = "auto"             # empty | dimer | auto

    def __post_init__(self):
        if self.n < 1:
            raise SamplerError("loop fugacity n must be >= 1")
        if not (0.0 <= self.u <= 1.0):
            raise SamplerError("u must lie in [0, 1]")
        if self.sweeps < 0 or self.burnin < 0 or self.thinning < 1:
            raise SamplerError("bad sweep/burnin/thinning parameters")


MOVE_INSERT, MOVE_DELETE, MOVE_FLIP = "insert", "delete", "flip"


class ChainState:
    def __init__(self, geom, params, replica=0):
        self.geom = geom
        self.params = params
        self.rng = random.Random(params.seed * 1_000_003 + replica)
        self.config = _initial_configuration(geom, params, self.rng)
        # with n = 1 the weight is flat in the loop count, so it is not
        # tracked step by step (measurements recount it instead)
        self.tracks_loops = params.n != 1
        self.loop_count = LoopDecomposition(self.config).loop_count
        self.steps = 0
        self.proposed = {MOVE_INSERT: 0, MOVE_DELETE: 0, MOVE_FLIP: 0}
        self.accepted = {MOVE_INSERT: 0, MOVE_DELETE: 0, MOVE_FLIP: 0}
        self._volume = geom.n_edges * geom.beta   # d K' beta

    def audit_loop_count(self):
        actual = LoopDecomposition(self.config).loop_count
        if self.tracks_loops and actual != self.loop_count:
            raise SamplerError(
                f"incremental loop count {self.loop_count} != recount {actual}")
        return actual


def _initial_configuration(geom, params, rng):
    config = LinkConfiguration(geom)
    use_dimer = params.start == "dimer" or (params.start == "auto" and params.n >= 4
                                            and params.u < 1.0)
    if use_dimer:
        # stack of double bars on a fixed dimer cover: the dominant phase at
        # large n, so burn-in starts near it
        cover = dimer_cover(geom)
        rate = params.n * (1.0 - params.u) * geom.beta
        for v, w in cover.pairs():
            eid = geom.edge_between(v, w)
            for _ in range(poisson_variate(rate, rng)):
                while True:
                    try:
                        config.insert(eid, rng.random() * geom.beta, DBAR)
                        break
                    except ValueError:
                        continue
        if params.u > 0.0:
            # sprinkle a few crosses so u > 0 chains do not start on the
            # zero-cross hyperplane
            for _ in range(poisson_variate(params.u * geom.beta, rng)):
                eid = rng.randrange(geom.n_edges)
                try:
                    config.insert(eid, rng.random() * geom.beta, CROSS)
                except ValueError:
                    pass
    return config


def mcmc_step(state):
    """One elementary Metropolis move; returns True when accepted."""
    params = state.params
    rng = state.rng
    config = state.config
    n = params.n
    u = params.u
    state.steps += 1
    flip_allowed = 0.0 < u < 1.0
    r = rng.random()
    if flip_allowed:
        move = MOVE_INSERT if r < 0.4 else (MOVE_DELETE if r < 0.8 else MOVE_FLIP)
    else:
        move = MOVE_INSERT if r < 0.5 else MOVE_DELETE
    state.proposed[move] += 1

    if move == MOVE_INSERT:
        eid = rng.randrange(config.geom.n_edges)
        while True:
            t = rng.random() * config.geom.beta
            if t != 0.0 and not _site_collision(config, eid, t):
                break
        kind = CROSS if rng.random() < u else DBAR
        dl = delta_loops(config, ("insert", eid, t, kind)) if state.tracks_loops else 0
        ratio = _npow(n, dl) * state._volume / (config.n_links + 1)
        if ratio >= 1.0 or rng.random() < ratio:
            config.insert(eid, t, kind)
            state.loop_count += dl
            state.accepted[move] += 1
            accepted = True
        else:
            accepted = False
    elif move == MOVE_DELETE:
        if config.n_links == 0:
            accepted = False
        else:
            eid, t, kind = _uniform_link(config, rng)
            dl = delta_loops(config, ("remove", eid, t)) if state.tracks_loops else 0
            ratio = _npow(n, dl) * config.n_links / state._volume
            if ratio >= 1.0 or rng.random() < ratio:
                config.remove(eid, t)
                state.loop_count += dl
                state.accepted[move] += 1
                accepted = True
            else:
                accepted = False
    else:
        if config.n_links == 0:
            accepted = False
        else:
            eid, t, kind = _uniform_link(config, rng)
            dl = delta_loops(config, ("flip", eid, t)) if state.tracks_loops else 0
            kind_ratio = (1.0 - u) / u if kind == CROSS else u / (1.0 - u)
            ratio = _npow(n, dl) * kind_ratio
            if ratio >= 1.0 or rng.random() < ratio:
                config.flip(eid, t)
                state.loop_count += dl
                state.accepted[move] += 1
                accepted = True
            else:
                accepted = False

    if params.recount_interval and state.steps % params.recount_interval == 0:
        state.audit_loop_count()
    return accepted


def _npow(n, dl):
    if dl == 0 or n == 1:
        return 1.0
    return float(n) if dl > 0 else 1.0 / n


def _site_collision(config, eid, t):
    for v in config.geom.edge_endpoints[eid]:
        times = config.site_times[v]
        i = bisect.bisect_left(times, t)
        if i < len(times) and times[i] == t:
            return True
    return False


def _uniform_link(config, rng):
    r = rng.randrange(config.n_links)
    for eid in range(config.geom.n_edges):
        cnt = len(config.edge_times[eid])
        if r < cnt:
            return eid, config.edge_times[eid][r], config.edge_kinds[eid][r]
        r -= cnt
    raise SamplerError("link index out of range")   # unreachable


def steps_per_sweep(geom, params):
    if params.steps_per_sweep:
        return params.steps_per_sweep
    return max(8, 2 * round(geom.n_edges * geom.beta))


def run_chain(geom, params, observables=(), progress=None):
    """Run replicas and collect thinned measurement records after burn-in.

    observables: iterable of (name, fn) with fn(state, decomposition) -> value;
    the decomposition snapshot is built once per measurement and shared.
    Records always carry sweep/replica/links/loops/crosses.
    """
    records = []
    per_sweep = steps_per_sweep(geom, params)
    for replica in range(params.replicas):
        state = ChainState(geom, params, replica)
        for _ in range(params.burnin * per_sweep):
            mcmc_step(state)
        for sweep in range(params.sweeps):
            for _ in range(per_sweep):
                mcmc_step(state)
            if (sweep + 1) % params.thinning:
                continue
            decomp = None
            if observables or not state.tracks_loops:
                decomp = LoopDecomposition(state.config)
            rec = {
                "sweep": sweep + 1,
                "replica": replica,
                "links": state.config.n_links,
                "loops": state.loop_count if state.tracks_loops else decomp.loop_count,
                "crosses": state.config.cross_count(),
            }
            for name, fn in observables:
                rec[name] = fn(state, decomp)
            records.append(rec)
            if progress:
                progress(rec)
    return records


def chain_diagnostics(records, fields=("links", "loops")):
    out = {}
    for f in fields:
        series = [r[f] for r in records]
        mean, se, ess = batch_means(series)
        out[f] = {"mean": mean, "se": se, "ess": ess,
                  "tau": integrated_autocorrelation_time(series)}
    return out


def check_poisson_domination(records, geom, params):
    """Stationary sanity: links are dominated by the rate-n point process.

    Checks the mean link count against d*n*beta*K' (within 3 SE) and the
    frequency of exceeding M = e^2 * d * n * beta * K' against 1e-3.
    """
    series = [r["links"] for r in records]
    mean, se, ess = batch_means(series)
    bound = params.n * geom.n_edges * geom.beta      # d n beta K'
    big = math.e ** 2 * bound                        # tail threshold M
    n_exceed = sum(1 for v in series if v > big)
    tail_freq = n_exceed / len(series)
    return {
        "mean": mean,
        "se": se,
        "ess": ess,
        "mean_bound": bound,
        "mean_ok": mean <= bound + 3 * se,
        "tail_threshold": big,
        "tail_freq": tail_freq,
        "tail_ok": tail_freq < 1e-3,
        "ok": (mean <= bound + 3 * se) and tail_freq < 1e-3,
    }
