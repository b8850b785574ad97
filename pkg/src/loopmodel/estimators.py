"""Estimators over sampler output: connection probabilities, decay fits,
bad-event frequencies, and the chessboard spot check.

Connection probabilities are estimated with translation averaging: each
measured configuration contributes the average over all spatial origins of
the indicator that (origin, s) and (origin + dx, s + dt) lie on one loop.
Standard errors come from batch means over the correlated series.
"""

import math
from dataclasses import dataclass

import numpy as np

from .events import empty_event
from .loops import dimer_cover
from .linkconfig import DBAR
from .stats import batch_means


class EstimationError(RuntimeError):
    pass


@dataclass
class ConnectionEstimate:
    displacement: tuple        # (dx vector, dt)
    probability: float
    standard_error: float
    effective_samples: float   # iid Bernoulli count giving the same SE

    def distance(self):
        dx, dt = self.displacement
        return sum(abs(c) for c in dx) + abs(dt)


def connection_observable(geom, displacements, time_origin=0.0):
    """Measurement functions, one per displacement, translation averaged."""
    pairs = []
    for dx, dt in displacements:
        origins = []
        for v in range(geom.n_vertices):
            c = geom.coords(v)
            w = geom.vertex(tuple(c[r] + dx[r] for r in range(geom.d)))
            origins.append((v, w))
        pairs.append(((dx, dt), origins))

    def make(entry):
        (dx, dt), origins = entry
        s0 = time_origin
        s1 = (time_origin + dt) % geom.beta

        def fn(state, decomp):
            hit = 0
            for v, w in origins:
                if decomp.connected((v, s0), (w, s1)):
                    hit += 1
            return hit / len(origins)
        return fn

    return [(f"conn_{i}", make(entry)) for i, entry in enumerate(pairs)]


def estimate_connection(records, displacements, field_prefix="conn_",
                        n_origins=1):
    """Turn recorded per-sample indicators into connection estimates.

    The effective sample size is the number of independent single-origin
    indicator draws that would give the same standard error, p(1-p)/se^2;
    this credits both decorrelation and the translation averaging.  For a
    degenerate estimate (p in {0,1}, zero SE) it falls back to the raw
    number of evaluated indicators, samples times `n_origins`.
    """
    out = []
    for i, disp in enumerate(displacements):
        series = [r[f"{field_prefix}{i}"] for r in records]
        mean, se, _ = batch_means(series)
        if se > 0 and 0.0 < mean < 1.0:
            ess = mean * (1.0 - mean) / (se * se)
        else:
            ess = float(len(series) * n_origins)
        out.append(ConnectionEstimate(disp, mean, se, ess))
    return out


@dataclass
class DecayFit:
    rate: float
    rate_se: float
    intercept: float
    residuals: list
    fit_window: list           # distances used

    def rate_interval(self, z=1.96):
        return (self.rate - z * self.rate_se, self.rate + z * self.rate_se)


def fit_decay(estimates, signal_floor=10.0):
    """Weighted least squares of log probability against L1 distance.

    Only estimates with probability above `signal_floor` standard errors
    enter the fit (log of a noisy near-zero frequency is meaningless).
    Degenerate estimates with zero standard error (for instance the trivial
    zero displacement, identically connected) carry no statistical weight
    and are excluded too.
    """
    usable = [e for e in estimates
              if e.probability > 0 and e.standard_error > 0
              and e.probability > signal_floor * e.standard_error]
    if len(usable) < 3:
        raise EstimationError(
            f"only {len(usable)} displacements clear the signal floor; need >= 3")
    x = np.array([e.distance() for e in usable])
    y = np.log(np.array([e.probability for e in usable]))
    # delta method: var(log p) = (se/p)^2
    w = np.array([(e.probability / e.standard_error) ** 2 for e in usable])
    W = np.sum(w)
    xbar = np.sum(w * x) / W
    ybar = np.sum(w * y) / W
    sxx = np.sum(w * (x - xbar) ** 2)
    if sxx == 0:
        raise EstimationError("degenerate fit window (single distance)")
    slope = np.sum(w * (x - xbar) * (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    rate = -slope
    rate_se = math.sqrt(1.0 / sxx)
    residuals = list(y - (intercept + slope * x))
    return DecayFit(float(rate), float(rate_se), float(intercept),
                    residuals, sorted(set(float(v) for v in x)))


# ---------------------------------------------------------------------------
# chessboard spot check


def empty_event_observable(complex, cubes):
    """Per-sample flags of the empty event in the given big cubes plus all."""
    all_bigs = [complex.big_cube(I, J) for I, J in complex.big_indices()]

    def fn(state, decomp):
        flags = [empty_event(state.config, complex, b) for b in all_bigs]
        return flags
    return all_bigs, fn


def chessboard_spot_check(flag_records, complex, cube_subset):
    """Statistical check of the product bound for a subset of cubes.

    flag_records: per-sample lists of per-cube empty-event flags (base
    tiling order).  LHS is the joint frequency over `cube_subset`; RHS is
    the distributed-event frequency to the power m / K_{d+1}.  Diagnostic
    only: reports whether LHS <= RHS within 3 combined standard errors.
    """
    m = len(cube_subset)
    lhs_series = [1.0 if all(rec[i] for i in cube_subset) else 0.0
                  for rec in flag_records]
    dist_series = [1.0 if all(rec) else 0.0 for rec in flag_records]
    lhs, lhs_se, _ = batch_means(lhs_series)
    p_dist, dist_se, _ = batch_means(dist_series)
    power = m / complex.n_big
    if p_dist > 0:
        rhs = p_dist ** power
        rhs_se = power * p_dist ** (power - 1.0) * dist_se
    else:
        # zero hits: rule-of-three upper bound on the distributed event
        rhs = 0.0
        rhs_se = (3.0 / max(len(flag_records), 1)) ** power / 3.0
    combined = math.sqrt(lhs_se ** 2 + rhs_se ** 2)
    return {
        "m": m,
        "lhs": lhs,
        "lhs_se": lhs_se,
        "distributed_prob": p_dist,
        "distributed_se": dist_se,
        "rhs": rhs,
        "rhs_se": rhs_se,
        "margin": rhs + 3 * combined - lhs,
        "ok": lhs <= rhs + 3 * combined,
    }


# ---------------------------------------------------------------------------
# partition-function lower-bound report


def dimer_stack_indicator(geom):
    """Per-sample indicator that all links are bars on the fixed dimer cover."""
    cover = dimer_cover(geom)
    allowed = set()
    for v, w in cover.pairs():
        allowed.add(geom.edge_between(v, w))

    def fn(state, decomp):
        for eid, t, kind in state.config.links():
            if kind != DBAR or eid not in allowed:
                return 0.0
        return 1.0
    return fn


def zbound_report(n, u, d, beta, Kprime, witness_series=None):
    """Exponent of the partition-function lower bound, plus the witness rate.

    The bound comes from restricting to double-bar stacks on a fixed dimer
    cover; the empirical frequency of that event under the chain is reported
    as a diagnostic, never asserted.
    """
    exponent = (n * (1.0 - u) / 2.0 - d) * beta * Kprime
    out = {"exponent": exponent, "log_bound": exponent}
    if witness_series is not None:
        mean, se, ess = batch_means(witness_series)
        out["witness_freq"] = mean
        out["witness_se"] = se
    return out
