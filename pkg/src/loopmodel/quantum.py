"""Exact-diagonalization oracle for the quantum spin model.

The Hamiltonian on a small graph is minus the sum over edges of
u * (swap) + (1 - u) * n * (pair projector), acting on (C^n)^(tensor
sites): the swap sends |a,b> to |b,a> and the projector is
n^(-1) sum |b,b><a,a|, a rank-one projection onto the uniform diagonal
pair state.  The local dimension n equals 2S + 1 for the spin-S matrices.

The factor n on the projector term is what couples these Gibbs weights to
the loop measure whose double bars have intensity (1 - u): expanding
Tr e^{-beta H} as a Poisson series, a configuration with m double bars
carries the operator (n * projector)^m, whose trace over colourings is
n to the number of loops with no leftover n^(-m).  Equivalently, for n = 3
it is this normalization that makes the model the spin-1
bilinear-biquadratic chain with unit biquadratic coupling.

Imaginary-time truncated correlations are evaluated from the spectral
decomposition as the Euclidean two-point function at separation tau,
Tr[e^{-(beta-tau) H} A e^{-tau H} B] / Z, the time-ordered correlation on
the time circle.  It is symmetric under tau -> beta - tau, as it must be:
the loop connection event it equals (times (n^2 - 1)/12, for spin
components 1 and 3) has that symmetry.  With energies shifted by the
ground energy every exponent is nonpositive, so the evaluation cannot
overflow.
"""

import numpy as np

from .stats import batch_means


class QuantumError(ValueError):
    pass


SPIN_COEFFICIENT_DENOM = 12.0


def spin_coefficient(n):
    """Coefficient relating loop connection probabilities to correlations."""
    return (n * n - 1) / SPIN_COEFFICIENT_DENOM


def spin_matrices(n):
    """The three spin-S generators on C^n, 2S+1 = n (ladder construction)."""
    if n < 2:
        raise QuantumError("local dimension must be >= 2")
    s = (n - 1) / 2.0
    m = np.arange(s, -s - 1.0, -1.0)
    ladder = np.sqrt(s * (s + 1.0) - m[1:] * (m[1:] + 1.0))
    sp = np.diag(ladder, k=1).astype(complex)
    sm = sp.conj().T
    s1 = (sp + sm) / 2.0
    s2 = (sp - sm) / 2.0j
    s3 = np.diag(m).astype(complex)
    return s1, s2, s3


def swap_operator(n):
    T = np.zeros((n * n, n * n))
    for a in range(n):
        for b in range(n):
            T[b * n + a, a * n + b] = 1.0
    return T


def pair_projector(n):
    Q = np.zeros((n * n, n * n))
    for a in range(n):
        for b in range(n):
            Q[b * n + b, a * n + a] = 1.0 / n
    return Q


def _embed_pair(op4, x, y, n, n_sites):
    """Place a two-site operator on tensor slots x < y with identity elsewhere."""
    if x > y:
        x, y = y, x     # swap and pair projector are exchange symmetric
    gap = y - x - 1
    A = op4.reshape(n, n, n, n)
    if gap:
        Ig = np.eye(n ** gap)
        mid = np.einsum("XYxy,Mm->XMYxmy", A, Ig)
        mid = mid.reshape(n ** (gap + 2), n ** (gap + 2))
    else:
        mid = op4
    left = np.eye(n ** x)
    right = np.eye(n ** (n_sites - y - 1))
    return np.kron(np.kron(left, mid), right)


def site_operator(op1, x, n, n_sites):
    return np.kron(np.kron(np.eye(n ** x), op1), np.eye(n ** (n_sites - x - 1)))


class QuantumModel:
    """Dense Hamiltonian with cached eigendecomposition on a small graph."""

    def __init__(self, geom, n, u, dim_cap=4096):
        if not (0.0 <= u <= 1.0):
            raise QuantumError("u must lie in [0, 1]")
        n_sites = geom.n_vertices
        dim = n ** n_sites
        if dim > dim_cap:
            raise QuantumError(
                f"Hilbert dimension {dim} exceeds the cap {dim_cap}")
        self.geom = geom
        self.n = n
        self.u = u
        self.n_sites = n_sites
        self.dim = dim
        # n * projector, not the bare projector: see the module docstring
        pair_op = u * swap_operator(n) + (1.0 - u) * n * pair_projector(n)
        H = np.zeros((dim, dim), dtype=complex)
        for eid in range(geom.n_edges):
            a, b = geom.edge_endpoints[eid]
            H -= _embed_pair(pair_op, a, b, n, n_sites)
        herm = np.max(np.abs(H - H.conj().T))
        if herm > 1e-12:
            raise QuantumError(f"Hamiltonian not Hermitian to 1e-12 ({herm})")
        self.hamiltonian = H
        self.energies, self.vectors = np.linalg.eigh(H)
        self._spin = spin_matrices(n)

    def spin_site_operator(self, component, x):
        return site_operator(self._spin[component - 1], x, self.n, self.n_sites)

    def gibbs_expectation(self, A, beta):
        w = self.energies - self.energies[0]
        boltz = np.exp(-beta * w)
        At = self.vectors.conj().T @ A @ self.vectors
        return complex(np.dot(np.diag(At), boltz) / boltz.sum())

    def truncated_correlation(self, A, B, t, beta):
        """Tr[e^{-(beta-t)H} A e^{-tH} B]/Z - <A><B> for 0 <= t <= beta."""
        if not (0.0 <= t <= beta):
            raise QuantumError("imaginary time must lie in [0, beta]")
        w = self.energies - self.energies[0]
        boltz = np.exp(-beta * w)
        Z = boltz.sum()
        V = self.vectors
        At = V.conj().T @ A @ V
        Bt = V.conj().T @ B @ V
        weights = np.exp(-(beta - t) * w[:, None] - t * w[None, :])
        joint = np.sum(At * Bt.T * weights) / Z
        mean_a = np.dot(np.diag(At), boltz) / Z
        mean_b = np.dot(np.diag(Bt), boltz) / Z
        val = joint - mean_a * mean_b
        if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
            raise QuantumError(f"correlation not real: {val}")
        return float(val.real)

    def spin_correlation(self, component, x, y, t, beta):
        A = self.spin_site_operator(component, x)
        B = self.spin_site_operator(component, y)
        return self.truncated_correlation(A, B, t, beta)


def build_hamiltonian(geom, n, u, dim_cap=4096):
    return QuantumModel(geom, n, u, dim_cap)


def verify_spin_loop_correspondence(model, beta, connection_series, x, t,
                                    component=1):
    """Compare the exact correlation to the loop-model connection estimate.

    connection_series: per-sample translation-averaged indicators of the
    event that (0, 0) and (x, t) lie on one loop, from a stationary chain at
    matching (geometry, n, u, beta).  Reports the z-score of
    coefficient * p_hat against the exact value, and checks the component-2
    correlation against the same bound.
    """
    if beta != model.geom.beta:
        raise QuantumError("beta mismatch between oracle and loop sampler")
    coef = spin_coefficient(model.n)
    p_hat, se, ess = batch_means(connection_series)
    exact = model.spin_correlation(component, 0, x, t, beta)
    diff = coef * p_hat - exact
    z = diff / (coef * se) if se > 0 else (0.0 if abs(diff) < 1e-12 else float("inf"))
    exact2 = model.spin_correlation(2, 0, x, t, beta)
    bound2 = coef * (p_hat + 3 * se)
    return {
        "x": x,
        "t": t,
        "coefficient": coef,
        "probability": p_hat,
        "probability_se": se,
        "ess": ess,
        "loop_estimate": coef * p_hat,
        "exact": exact,
        "z": z,
        "component2": exact2,
        "component2_ok": abs(exact2) <= bound2 + 1e-12,
    }
