"""Acceptance battery: every shipping criterion as a runnable check.

Each criterion function returns a CriterionResult with a pass flag and a
one-line summary; `run_acceptance` executes them in order.  Scales and
tolerances are the shipping ones; `quick=True` shrinks the statistics for
smoke testing only and is never the gate.

Stochastic criteria run with fixed seeds, so the battery is deterministic.
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .estimators import (chessboard_spot_check, connection_observable,
                         estimate_connection, fit_decay)
from .events import (best_translate_fraction, build_distributed_crowded_config,
                     count_nonclosing, detect_switches,
                     distributed_crowded_occurs, empty_event,
                     near_translate_count, path_is_valid, peierls_fraction,
                     extract_path)
from .geometry import build_cube_complex, build_geometry
from .linkconfig import CROSS, DBAR, sample_poisson
from .loops import (LoopDecomposition, closing_links, count_closing_links,
                    count_colorings, decompose_with_pairings, delta_loops,
                    dimer_cover, minimal_pair_count, random_pairing)
from .quantum import (build_hamiltonian, pair_projector, spin_coefficient,
                      spin_matrices, swap_operator)
from .sampler import SamplerParams, run_chain, check_poisson_domination
from .stats import batch_means

import numpy as np


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)


def _random_small_config(rng, max_links=None, d_choices=(1, 2)):
    d = rng.choice(d_choices)
    k = tuple(rng.choice([1, 2]) for _ in range(d))
    geom = build_geometry(d, k, rng.uniform(0.3, 1.5))
    config = sample_poisson(geom, rng.random(), rng.uniform(0.2, 1.0), rng)
    if max_links is not None:
        links = config.links_time_ordered()
        rng.shuffle(links)
        for eid, t, kind in links[max_links:]:
            config.remove(eid, t)
    return geom, config


# ---------------------------------------------------------------------------


def criterion_1(quick=False):
    """Loop sampler vs exact diagonalization on the 4-site ring."""
    target_ess = 2e4 if quick else 1e6
    max_sweeps = 60_000 if quick else 4_000_000
    runs = [(2, 0.5, u) for u in (0.0, 0.25, 0.5)]
    runs += [(3, 0.3, u) for u in (0.0, 0.25, 0.5)]
    worst = 0.0
    min_ess = float("inf")
    rows = []
    for idx, (n, beta, u) in enumerate(runs):
        geom = build_geometry(1, (1,), beta)
        model = build_hamiltonian(geom, n, u)
        coef = spin_coefficient(n)
        times = (0.0, beta / 4.0)
        displacements = [((x,), t) for x in range(4) for t in times]
        obs = connection_observable(geom, displacements)
        records = []
        chunk = 0
        while True:
            # chunks are independent replicas with distinct seeds
            params = SamplerParams(n=n, u=u, sweeps=40_000, burnin=500,
                                   thinning=1, seed=1000 + idx + 13 * chunk)
            records.extend(run_chain(geom, params, observables=obs))
            estimates = estimate_connection(records, displacements,
                                            n_origins=geom.n_vertices)
            reached = min(e.effective_samples for e in estimates)
            if reached >= target_ess or len(records) >= max_sweeps:
                break
            chunk += 1
        for e in estimates:
            x, t = e.displacement[0][0], e.displacement[1]
            exact = model.spin_correlation(1, 0, x, t, beta)
            if e.standard_error > 0:
                z = (coef * e.probability - exact) / (coef * e.standard_error)
            else:
                z = 0.0 if abs(coef * e.probability - exact) < 1e-10 else math.inf
            worst = max(worst, abs(z))
            min_ess = min(min_ess, e.effective_samples)
            rows.append({"n": n, "u": u, "x": x, "t": t, "z": z,
                         "ess": e.effective_samples})
    passed = worst <= 3.0 and (quick or min_ess >= target_ess)
    return CriterionResult(
        1, "loop vs quantum correlation identity", passed,
        f"worst |z| = {worst:.2f} over {len(rows)} points, min ESS = {min_ess:.2e}",
        {"rows": rows})


def criterion_2(quick=False):
    """Coloring-count oracle equals n^loops on small configurations."""
    rng = random.Random(2)
    trials = 40 if quick else 200
    checked = 0
    for _ in range(trials):
        geom, config = _random_small_config(rng, max_links=6, d_choices=(1,))
        loops = LoopDecomposition(config).loop_count
        for n in (2, 3):
            if count_colorings(config, n) != n ** loops:
                return CriterionResult(
                    2, "coloring oracle", False,
                    f"mismatch at config with {config.n_links} links (n={n})")
            checked += 1
    return CriterionResult(2, "coloring oracle", True,
                           f"{checked} oracle comparisons exact")


def criterion_3(quick=False):
    """Boundary-condition loop-count inequalities, exact on every sample."""
    rng = random.Random(3)
    trials = 200 if quick else 1000
    for trial in range(trials):
        geom, config = _random_small_config(rng)
        xi0 = random_pairing(geom, rng)
        xi1 = random_pairing(geom, rng)
        per = LoopDecomposition(config).loop_count
        paired = decompose_with_pairings(config, xi0, xi1)
        L = count_closing_links(config, xi0)
        Kp = geom.n_vertices
        if per > paired.loop_count + Kp - 1:
            return CriterionResult(3, "boundary-condition inequalities", False,
                                   f"periodic bound violated at trial {trial}")
        if paired.loop_count > L + Kp // 2:
            return CriterionResult(3, "boundary-condition inequalities", False,
                                   f"closing-link bound violated at trial {trial}")
        if paired.loops_not_reaching_top != L:
            return CriterionResult(3, "boundary-condition inequalities", False,
                                   f"L mismatch at trial {trial}")
    return CriterionResult(3, "boundary-condition inequalities", True,
                           f"{trials} random triples, zero violations")


def criterion_4(quick=False):
    """Incremental loop-count delta equals the full-recount difference."""
    rng = random.Random(4)
    trials = 200 if quick else 1000
    geom, config = _random_small_config(rng)
    for trial in range(trials):
        if trial % 50 == 0:
            geom, config = _random_small_config(rng)
        before = LoopDecomposition(config).loop_count
        move = rng.choice(["insert", "remove", "flip"])
        if move == "insert" or config.n_links == 0:
            eid = rng.randrange(geom.n_edges)
            t = rng.random() * geom.beta
            kind = rng.choice([CROSS, DBAR])
            dl = delta_loops(config, ("insert", eid, t, kind))
            config.insert(eid, t, kind)
        else:
            links = config.links_time_ordered()
            eid, t, kind = links[rng.randrange(len(links))]
            if move == "remove":
                dl = delta_loops(config, ("remove", eid, t))
                config.remove(eid, t)
            else:
                dl = delta_loops(config, ("flip", eid, t))
                config.flip(eid, t)
        actual = LoopDecomposition(config).loop_count - before
        if dl != actual:
            return CriterionResult(4, "incremental loop count", False,
                                   f"{move}: delta {dl} != recount {actual}")
    return CriterionResult(4, "incremental loop count", True,
                           f"{trials} random moves, exact agreement")


def criterion_5(quick=False):
    """Chain at n=1 reproduces the base process closed forms."""
    target_ess = 3e3 if quick else 1e5
    geom = build_geometry(1, (2,), 2.0)
    u = 0.3
    expected_links = geom.n_edges * geom.beta      # d K' beta = 16
    records = []
    chunk = 0
    while True:
        params = SamplerParams(n=1, u=u, sweeps=40_000, burnin=300,
                               thinning=1, seed=50 + chunk)
        records.extend(run_chain(geom, params))
        mean, se, ess = batch_means([r["links"] for r in records])
        if ess >= target_ess or len(records) > 2_000_000:
            break
        chunk += 1
    z_links = (mean - expected_links) / se
    # cross fraction: crosses - u * links has mean zero under the base law
    mix, mix_se, _ = batch_means([r["crosses"] - u * r["links"] for r in records])
    z_mix = mix / mix_se
    frac = sum(r["crosses"] for r in records) / sum(r["links"] for r in records)
    passed = abs(z_links) <= 3 and abs(z_mix) <= 3 and ess >= target_ess
    return CriterionResult(
        5, "n=1 sampler calibration", passed,
        f"links {mean:.3f}+-{se:.3f} (target {expected_links}, z={z_links:+.2f}), "
        f"cross fraction {frac:.4f} (target {u}, z={z_mix:+.2f}), ESS {ess:.0f}")


def criterion_6(quick=False):
    """Switches never close from above (cross-free), and the distributed
    crowded construction yields the required non-closing links."""
    rng = random.Random(6)
    trials = 100 if quick else 500
    n_switches = 0
    for _ in range(trials):
        geom, config = _random_small_config(rng)
        # cross-free ensemble: the closing analysis concerns double bars
        for eid, t, kind in config.links_time_ordered():
            if kind == CROSS:
                config.remove(eid, t)
                config.insert(eid, t, DBAR)
        xi = random_pairing(geom, rng)
        closing = set(closing_links(config, xi))
        for sw in detect_switches(config, geom):
            n_switches += 1
            if (sw.upper[0], sw.upper[1]) in closing:
                return CriterionResult(6, "switch machinery", False,
                                       "closing upper link in a switch")

    geom = build_geometry(2, (1, 1), 2.0)
    complex = build_cube_complex(geom, 1.0, 4)
    K = 1
    for b in complex.spatial_blocks:
        K *= b
    m0 = complex.n * geom.beta * K / (4 * complex.R)
    v00 = geom.vertex((0, 0))
    cases = {
        "both-boundary": (geom.edge_between(v00, geom.vertex((0, 3))),
                          geom.edge_between(v00, geom.vertex((3, 0)))),
        "one-boundary": (geom.edge_between(v00, geom.vertex((0, 3))),
                         geom.edge_between(v00, geom.vertex((0, 1)))),
        "both-interior": (geom.edge_between(v00, geom.vertex((0, 1))),
                          geom.edge_between(v00, geom.vertex((1, 0)))),
    }
    counts = {}
    for name, (e1, e2) in cases.items():
        config = build_distributed_crowded_config(complex, e1, e2)
        if not distributed_crowded_occurs(config, complex, e1, e2):
            return CriterionResult(6, "switch machinery", False,
                                   f"{name}: construction misses the event")
        for xi in (dimer_cover(geom), random_pairing(geom, rng)):
            nc = count_nonclosing(config, xi)
            counts[name] = nc
            if nc < m0:
                return CriterionResult(
                    6, "switch machinery", False,
                    f"{name}: {nc} non-closing links < m0 = {m0}")
    return CriterionResult(
        6, "switch machinery", True,
        f"{n_switches} switches with non-closing uppers; "
        f"non-closing counts {counts} all >= m0 = {m0:.0f}")


def criterion_7(quick=False):
    """Path extraction validity and the guaranteed bad-cube fraction."""
    if peierls_fraction(1) != Fraction(1, 9) or peierls_fraction(2) != Fraction(1, 19):
        return CriterionResult(7, "path extraction", False,
                               "fraction formula mismatch")
    for d in range(1, 7):
        if near_translate_count(d) * peierls_fraction(d) != 1:
            return CriterionResult(7, "path extraction", False,
                                   "translate count identity fails")
    rng = random.Random(7)
    wanted = 100 if quick else 500
    done = 0
    worst = Fraction(1, 1)
    while done < wanted:
        d = rng.choice([1, 1, 2])
        k = (1,) * d if d == 2 else (rng.choice([1, 2]),)
        geom = build_geometry(d, k, rng.uniform(1.0, 3.0))
        try:
            complex = build_cube_complex(geom, rng.uniform(0.5, 1.5),
                                         rng.choice([4, 6, 8]))
        except Exception:
            continue
        config = sample_poisson(geom, rng.choice([0.0, 0.25, 0.5]),
                                rng.uniform(0.3, 1.0), rng)
        decomp = LoopDecomposition(config)
        src = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
        tgt = None
        for _ in range(60):
            cand = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
            if cand != src and decomp.connected(src, cand):
                tgt = cand
                break
        if tgt is None:
            continue
        path = extract_path(config, src, tgt, complex)
        if not path_is_valid(complex, path):
            return CriterionResult(7, "path extraction", False,
                                   "non-adjacent or repeated cube in path")
        if len(path.small_cubes) > 1:
            frac = best_translate_fraction(config, complex, path)
            worst = min(worst, frac)
            if frac < peierls_fraction(d):
                return CriterionResult(
                    7, "path extraction", False,
                    f"best-translate bad fraction {frac} < phi({d})")
        done += 1
    return CriterionResult(7, "path extraction", True,
                           f"{done} extractions valid; worst fraction {worst}")


def criterion_8(quick=False):
    """Minimal pairs never exceed half the vertex count."""
    rng = random.Random(8)
    trials = 200 if quick else 1000
    for _ in range(trials):
        d = rng.choice([1, 2, 3])
        k = tuple(rng.choice([1, 2]) for _ in range(d))
        geom = build_geometry(d, k, 1.0)
        xi = random_pairing(geom, rng)
        if minimal_pair_count(xi, geom) > geom.n_vertices // 2:
            return CriterionResult(8, "minimal-pair bound", False,
                                   "count exceeded K'/2")
    return CriterionResult(8, "minimal-pair bound", True,
                           f"{trials} random pairings within K'/2")


def criterion_9(quick=False):
    """Link counts dominated by the rate-n point process."""
    geom = build_geometry(1, (2,), 1.0)
    params = SamplerParams(n=5, u=0.25, sweeps=4000 if quick else 30_000,
                           burnin=500, thinning=1, seed=9)
    records = run_chain(geom, params)
    report = check_poisson_domination(records, geom, params)
    return CriterionResult(
        9, "point-process domination", report["ok"],
        f"mean {report['mean']:.2f} vs bound {report['mean_bound']:.0f}, "
        f"tail freq {report['tail_freq']:.2e} (threshold 1e-3)",
        report)


def criterion_10(quick=False):
    """Decay of connection probabilities at large fugacity, qualitatively."""
    geom = build_geometry(1, (4,), 1.0)
    chunk_sweeps = 10_000 if quick else 60_000
    max_chunks = 2 if quick else 5
    floor = 5.0 if quick else 10.0
    displacements = [((x,), 0.0) for x in range(0, 9)]
    obs = connection_observable(geom, displacements)
    fits = {}
    estimates_by_n = {}
    for n in (20, 2):
        records = []
        for chunk in range(max_chunks):
            params = SamplerParams(n=n, u=0.25, sweeps=chunk_sweeps,
                                   burnin=1500, thinning=1,
                                   seed=100 + n + 31 * chunk)
            records.extend(run_chain(geom, params, observables=obs))
            estimates = estimate_connection(records, displacements,
                                            n_origins=geom.n_vertices)
            usable = sum(1 for e in estimates
                         if e.standard_error > 0
                         and e.probability > floor * e.standard_error)
            if usable >= 3:
                break
        estimates_by_n[n] = estimates
        fits[n] = fit_decay(estimates, signal_floor=floor)
    # monotone nonincreasing within 3 SE along the distance axis
    ests = estimates_by_n[20]
    for a, b in zip(ests, ests[1:]):
        slack = 3 * math.sqrt(a.standard_error ** 2 + b.standard_error ** 2)
        if b.probability > a.probability + slack:
            return CriterionResult(
                10, "large-n decay", False,
                f"estimates increase at distance {b.distance()}")
    rate20, rate2 = fits[20], fits[2]
    lo, _ = rate20.rate_interval()
    passed = rate20.rate > 0 and lo > 0 and rate2.rate < rate20.rate
    return CriterionResult(
        10, "large-n decay", passed,
        f"rate(n=20) = {rate20.rate:.3f} (CI low {lo:.3f}), "
        f"rate(n=2) = {rate2.rate:.3f}",
        {"rate20": rate20.rate, "rate2": rate2.rate})


def criterion_11(quick=False):
    """Spin-operator identities and the component 1 = component 3 symmetry."""
    tol_op = 1e-12
    for n in (2, 3, 4, 5):
        s1, s2, s3 = spin_matrices(n)
        spin = (n - 1) / 2.0
        eye = np.eye(n)
        checks = [
            np.max(np.abs(s1 @ s2 - s2 @ s1 - 1j * s3)),
            np.max(np.abs(s2 @ s3 - s3 @ s2 - 1j * s1)),
            np.max(np.abs(s3 @ s1 - s1 @ s3 - 1j * s2)),
            np.max(np.abs(s1 @ s1 + s2 @ s2 + s3 @ s3 - spin * (spin + 1) * eye)),
        ]
        T = swap_operator(n)
        Q = pair_projector(n)
        checks.append(np.max(np.abs(T @ T - np.eye(n * n))))
        checks.append(np.max(np.abs(Q @ Q - Q)))
        if max(checks) > tol_op:
            return CriterionResult(11, "quantum operator identities", False,
                                   f"identity residual {max(checks):.2e} at n={n}")
    worst = 0.0
    for n, u, beta in ((2, 0.0, 0.5), (2, 0.25, 0.5), (2, 0.5, 1.0),
                       (3, 0.25, 0.3), (3, 0.5, 0.6)):
        geom = build_geometry(1, (1,), beta)
        model = build_hamiltonian(geom, n, u)
        herm = np.max(np.abs(model.hamiltonian - model.hamiltonian.conj().T))
        if herm > tol_op:
            return CriterionResult(11, "quantum operator identities", False,
                                   f"H not Hermitian ({herm:.2e})")
        for x in range(4):
            for t in (0.0, beta / 4, beta / 2):
                c1 = model.spin_correlation(1, 0, x, t, beta)
                c3 = model.spin_correlation(3, 0, x, t, beta)
                worst = max(worst, abs(c1 - c3))
                if c1 < -1e-10:
                    return CriterionResult(11, "quantum operator identities",
                                           False, "negative correlation")
    passed = worst <= 1e-10
    return CriterionResult(11, "quantum operator identities", passed,
                           f"identities to 1e-12; |c1 - c3| <= {worst:.2e}")


def criterion_12(quick=False):
    """Statistical spot check of the product bound for the empty event."""
    geom = build_geometry(1, (1,), 6.0)
    complex = build_cube_complex(geom, 5.0, 2)      # R = 6, 2 rows, 4 big cubes
    all_bigs = [complex.big_cube(I, J) for I, J in complex.big_indices()]

    def scan(state, decomp):
        return [empty_event(state.config, complex, big) for big in all_bigs]

    sweeps = 20_000 if quick else 1_000_000
    params = SamplerParams(n=2, u=0.25, sweeps=sweeps, burnin=1000,
                           thinning=1, seed=12)
    records = run_chain(geom, params, observables=[("empty_flags", scan)])
    flags = [r["empty_flags"] for r in records]
    rng = random.Random(12)
    subset = rng.sample(range(len(all_bigs)), 2)
    report = chessboard_spot_check(flags, complex, subset)
    return CriterionResult(
        12, "chessboard spot check", report["ok"],
        f"LHS {report['lhs']:.2e} vs RHS {report['rhs']:.2e} "
        f"(margin {report['margin']:+.2e}, distributed "
        f"freq {report['distributed_prob']:.2e})",
        report)


ALL_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
                criterion_5, criterion_6, criterion_7, criterion_8,
                criterion_9, criterion_10, criterion_11, criterion_12]


def run_acceptance(only=None, quick=False):
    wanted = None
    if only:
        wanted = {int(v) for v in str(only).split(",")}
    results = []
    for i, fn in enumerate(ALL_CRITERIA, start=1):
        if wanted and i not in wanted:
            continue
        results.append(fn(quick=quick))
    return results
