"""Loop-model vs exact-diagonalization comparison on the 4-site ring.

Runs the chain at several (n, u) points, estimates connection probabilities
over all displacements and two time offsets, and prints them next to the
exact correlations.  A slimmer, faster variant of acceptance criterion 1.

Usage: python scripts/correspondence_check.py [sweeps]
"""

import sys
import time

from loopmodel import build_geometry
from loopmodel.estimators import connection_observable, estimate_connection
from loopmodel.quantum import build_hamiltonian, spin_coefficient
from loopmodel.sampler import SamplerParams, run_chain


def main():
    sweeps = int(sys.argv[1]) if len(sys.argv) > 1 else 60_000
    for n, beta in ((2, 0.5), (3, 0.3)):
        for u in (0.0, 0.25, 0.5):
            t0 = time.time()
            geom = build_geometry(1, (1,), beta)
            model = build_hamiltonian(geom, n, u)
            coef = spin_coefficient(n)
            displacements = [((x,), t) for x in range(4)
                             for t in (0.0, beta / 4)]
            obs = connection_observable(geom, displacements)
            params = SamplerParams(n=n, u=u, sweeps=sweeps, burnin=500,
                                   thinning=1, seed=2024)
            records = run_chain(geom, params, observables=obs)
            estimates = estimate_connection(records, displacements,
                                            n_origins=geom.n_vertices)
            print(f"== n={n} u={u} beta={beta} "
                  f"({time.time() - t0:.1f}s, {sweeps} sweeps)")
            for e in estimates:
                x, t = e.displacement[0][0], e.displacement[1]
                exact = model.spin_correlation(1, 0, x, t, beta)
                z = ((coef * e.probability - exact) / (coef * e.standard_error)
                     if e.standard_error > 0 else 0.0)
                print(f"  x={x} t={t:5.3f}  loop={coef * e.probability:.5f}  "
                      f"exact={exact:.5f}  z={z:+5.2f}")


if __name__ == "__main__":
    main()
