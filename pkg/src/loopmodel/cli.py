"""Command-line interface.

Subcommands:
  sample               run the chain, emit JSON-lines measurement records
  loops                loop counts of a serialized configuration
  estimate-connection  connection probabilities over a displacement grid (CSV)
  decay-scan           connection estimates plus an exponential decay fit
  events-scan          per-cube bad-event statistics under the chain
  algo-trace           print one extracted path with its bookkeeping
  verify-lemma22       loop-model vs exact-diagonalization comparison table
  verify-suite         run the acceptance battery, one pass/fail line each

Every run prints a header with the fully resolved configuration and seed;
re-running with that header reproduces the output exactly.

Exit codes: 0 success, 1 usage error, 2 runtime/validation failure,
3 acceptance-criterion failure.
"""

import argparse
import json
import random
import sys
from contextlib import contextmanager

from . import __version__
from .estimators import (connection_observable, estimate_connection, fit_decay,
                         EstimationError)
from .events import detect_bad_events, extract_path, peierls_fraction
from .geometry import build_cube_complex, build_geometry, GeometryError
from .linkconfig import deserialize, sample_poisson, ConfigurationError
from .loops import (LoopDecomposition, count_closing_links,
                    decompose_with_pairings, dimer_cover, random_pairing)
from .quantum import build_hamiltonian, spin_coefficient, QuantumError
from .runconfig import build_runconfig, parse_config_file
from .sampler import SamplerParams, run_chain, chain_diagnostics


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model_flags(p):
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--d", type=int)
    p.add_argument("--k", help="comma-separated torus sizes, e.g. 2,2")
    p.add_argument("--beta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--u", type=float)
    p.add_argument("--R0", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--out", help="output path (default stdout)")


def _resolve(args):
    file_fields = parse_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key, None)
                 for key in ("d", "k", "beta", "n", "u", "R0", "seed",
                             "sweeps", "burnin", "thin", "replicas")}
    return build_runconfig(file_fields, overrides)


@contextmanager
def _open_out(args):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            yield fh
    else:
        yield sys.stdout


def _header(cfg, command):
    return json.dumps({"type": "header", "tool": "loopmodel",
                       "version": __version__, "command": command,
                       **cfg.as_dict()})


def _params(cfg):
    return SamplerParams(n=cfg.n, u=cfg.u, sweeps=cfg.sweeps,
                         burnin=cfg.burnin, thinning=cfg.thin,
                         seed=cfg.seed, replicas=cfg.replicas)


def cmd_sample(args):
    cfg = _resolve(args)
    geom = build_geometry(cfg.d, cfg.k, cfg.beta)
    records = run_chain(geom, _params(cfg))
    with _open_out(args) as out:
        print(_header(cfg, "sample"), file=out)
        for w in cfg.warnings():
            print(json.dumps({"type": "warning", "message": w}), file=out)
        for rec in records:
            print(json.dumps({"type": "measurement", **rec}), file=out)
        diag = chain_diagnostics(records) if records else {}
        print(json.dumps({"type": "diagnostics", **diag}), file=out)
    return 0


def cmd_loops(args):
    with open(args.file) as fh:
        config = deserialize(fh.read())
    geom = config.geom
    rng = random.Random(args.seed if args.seed is not None else 0)
    xi0 = dimer_cover(geom)
    xi1 = random_pairing(geom, rng) if args.random_pairings else dimer_cover(geom)
    per = LoopDecomposition(config).loop_count
    paired = decompose_with_pairings(config, xi0, xi1)
    L = count_closing_links(config, xi0)
    print(f"links = {config.n_links}")
    print(f"loops_periodic = {per}")
    print(f"loops_paired = {paired.loop_count}")
    print(f"closing_links = {L}")
    return 0


def cmd_estimate_connection(args, fit=False):
    cfg = _resolve(args)
    geom = build_geometry(cfg.d, cfg.k, cfg.beta)
    displacements = _displacement_grid(geom, args.max_distance, args.time_grid)
    obs = connection_observable(geom, displacements)
    records = run_chain(geom, _params(cfg), observables=obs)
    estimates = estimate_connection(records, displacements)
    with _open_out(args) as out:
        print(_header(cfg, "decay-scan" if fit else "estimate-connection"), file=out)
        print("displacement,dt,distance,probability,se,ess", file=out)
        for e in estimates:
            dx, dt = e.displacement
            print(f"\"{','.join(str(v) for v in dx)}\",{dt},{e.distance()},"
                  f"{e.probability},{e.standard_error},{e.effective_samples}",
                  file=out)
        if fit:
            try:
                f = fit_decay(estimates, signal_floor=args.signal_floor)
                lo, hi = f.rate_interval()
                print(json.dumps({"type": "fit", "rate": f.rate,
                                  "rate_se": f.rate_se, "ci95": [lo, hi],
                                  "intercept": f.intercept,
                                  "fit_window": f.fit_window}), file=out)
            except EstimationError as exc:
                print(json.dumps({"type": "fit_error", "message": str(exc)}),
                      file=out)
                return 2
    return 0


def _displacement_grid(geom, max_distance, time_grid):
    out = []
    times = [geom.beta * i / time_grid for i in range(time_grid)] if time_grid \
        else [0.0]
    reach = min(max_distance, geom.dims[0] // 2)
    for dist in range(reach + 1):
        dx = (dist,) + (0,) * (geom.d - 1)
        for t in times:
            out.append((dx, t))
    return out


def cmd_events_scan(args):
    cfg = _resolve(args)
    geom = build_geometry(cfg.d, cfg.k, cfg.beta)
    complex = build_cube_complex(geom, cfg.R0, cfg.n)
    cubes = list(complex.big_indices())

    def scan(state, decomp):
        flags = []
        for I, J in cubes:
            rep = detect_bad_events(state.config, complex, I, J)
            flags.append((rep.crowded, rep.empty, rep.transposition))
        return flags

    records = run_chain(geom, _params(cfg), observables=[("events", scan)])
    n = len(records)
    with _open_out(args) as out:
        print(_header(cfg, "events-scan"), file=out)
        print(json.dumps({"type": "complex", "R": complex.R,
                          "rows": complex.n_rows, "big_cubes": complex.n_big}),
              file=out)
        totals = {"crowded": 0, "empty": 0, "transposition": 0, "bad": 0}
        dist = {"crowded": 0, "empty": 0, "transposition": 0}
        for i, (I, J) in enumerate(cubes):
            c = sum(rec["events"][i][0] for rec in records)
            e = sum(rec["events"][i][1] for rec in records)
            t = sum(rec["events"][i][2] for rec in records)
            b = sum(any(rec["events"][i]) for rec in records)
            totals["crowded"] += c
            totals["empty"] += e
            totals["transposition"] += t
            totals["bad"] += b
            print(json.dumps({"type": "cube", "I": list(I), "J": J,
                              "crowded": c / n, "empty": e / n,
                              "transposition": t / n, "bad": b / n}), file=out)
        for rec in records:
            for key, pos in (("crowded", 0), ("empty", 1), ("transposition", 2)):
                if all(flags[pos] for flags in rec["events"]):
                    dist[key] += 1
        m = n * len(cubes)
        print(json.dumps({"type": "summary",
                          **{k: v / m for k, v in totals.items()},
                          "distributed": {k: v / n for k, v in dist.items()}}),
              file=out)
    return 0


def cmd_algo_trace(args):
    cfg = _resolve(args)
    geom = build_geometry(cfg.d, cfg.k, cfg.beta)
    complex = build_cube_complex(geom, cfg.R0, cfg.n)
    rng = random.Random(cfg.seed)
    config = sample_poisson(geom, cfg.u, 1.0, rng)
    decomp = LoopDecomposition(config)
    pair = None
    for _ in range(4000):
        a = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
        b = (rng.randrange(geom.n_vertices), rng.random() * geom.beta)
        if a != b and decomp.connected(a, b):
            pair = (a, b)
            break
    if pair is None:
        print("no connected pair found; increase beta or density", file=sys.stderr)
        return 2
    path = extract_path(config, pair[0], pair[1], complex)
    with _open_out(args) as out:
        print(_header(cfg, "algo-trace"), file=out)
        print(f"source = {pair[0]}  target = {pair[1]}", file=out)
        print(f"path cubes ({len(path.small_cubes)}):", file=out)
        for small in path.small_cubes:
            print(f"  column={small.column} cell={small.cell}", file=out)
        print("segments:", file=out)
        for seg in path.segments:
            wit = ""
            if seg.witness_cube is not None:
                r = seg.witness_report
                kinds = [k for k, v in (("C", r.crowded), ("E", r.empty),
                                        ("T", r.transposition)) if v]
                wit = (f"  bad cube corner={seg.witness_cube.corner} "
                       f"cell0={seg.witness_cube.cell0} "
                       f"translate={seg.witness_translate} [{'/'.join(kinds)}]")
            print(f"  k={len(seg.cubes)} case={seg.case}{wit}", file=out)
        print(f"required bad fraction phi = {peierls_fraction(geom.d)}", file=out)
    return 0


def cmd_verify_lemma22(args):
    cfg = _resolve(args)
    geom = build_geometry(cfg.d, cfg.k, cfg.beta)
    model = build_hamiltonian(geom, cfg.n, cfg.u)
    coef = spin_coefficient(cfg.n)
    times = [0.0, cfg.beta / 4.0]
    displacements = [((x,) + (0,) * (geom.d - 1), t)
                     for x in range(geom.dims[0]) for t in times]
    obs = connection_observable(geom, displacements)
    records = run_chain(geom, _params(cfg), observables=obs)
    estimates = estimate_connection(records, displacements)
    worst = 0.0
    with _open_out(args) as out:
        print(_header(cfg, "verify-lemma22"), file=out)
        print("x,t,probability,se,ess,loop_estimate,exact,z", file=out)
        for e in estimates:
            x, t = e.displacement[0][0], e.displacement[1]
            exact = model.spin_correlation(1, 0, geom.vertex(e.displacement[0]),
                                           t, cfg.beta)
            if e.standard_error > 0:
                z = (coef * e.probability - exact) / (coef * e.standard_error)
            else:
                z = 0.0 if abs(coef * e.probability - exact) < 1e-12 else float("inf")
            worst = max(worst, abs(z))
            print(f"{x},{t},{e.probability:.6f},{e.standard_error:.6f},"
                  f"{e.effective_samples:.0f},{coef * e.probability:.6f},"
                  f"{exact:.6f},{z:+.2f}", file=out)
        ok = worst <= 3.0
        print(json.dumps({"type": "verdict", "worst_abs_z": worst, "pass": ok}),
              file=out)
    return 0 if ok else 3


def cmd_verify_suite(args):
    from .acceptance import run_acceptance

    results = run_acceptance(only=args.only, quick=args.quick)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {res.number}: {res.title} -- {res.summary}")
        if not res.passed:
            failed += 1
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 3


def build_parser():
    parser = _Parser(prog="loopmodel",
                     description="space-time loop model: sampler and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run the chain, emit JSON-lines records")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("loops", help="loop counts of a serialized configuration")
    p.add_argument("file")
    p.add_argument("--seed", type=int)
    p.add_argument("--random-pairings", action="store_true")
    p.set_defaults(fn=cmd_loops)

    p = sub.add_parser("estimate-connection",
                       help="connection probabilities over a displacement grid")
    _add_model_flags(p)
    p.add_argument("--max-distance", type=int, default=4)
    p.add_argument("--time-grid", type=int, default=2)
    p.set_defaults(fn=cmd_estimate_connection)

    p = sub.add_parser("decay-scan", help="connection estimates plus decay fit")
    _add_model_flags(p)
    p.add_argument("--max-distance", type=int, default=6)
    p.add_argument("--time-grid", type=int, default=2)
    p.add_argument("--signal-floor", type=float, default=10.0)
    p.set_defaults(fn=lambda a: cmd_estimate_connection(a, fit=True))

    p = sub.add_parser("events-scan", help="per-cube bad-event frequencies")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_events_scan)

    p = sub.add_parser("algo-trace", help="print one extracted path")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_algo_trace)

    p = sub.add_parser("verify-lemma22",
                       help="loop model vs exact diagonalization")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_verify_lemma22)

    p = sub.add_parser("verify-suite", help="run the acceptance battery")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--quick", action="store_true",
                   help="reduced statistics (smoke test, not the acceptance gate)")
    p.set_defaults(fn=cmd_verify_suite)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (GeometryError, ConfigurationError, QuantumError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
