"""Space-time loop representation of O(n)-invariant quantum spin systems.

Samples the loop measure (the base cross/double-bar point process reweighted
by n to the number of loops), estimates loop-connection probabilities and
their decay, implements the block geometry and bad-event machinery behind
the exponential-decay argument, and cross-validates connection probabilities
against an exact-diagonalization oracle for the matching quantum model.
"""

__version__ = "0.1.0"

from .geometry import (TorusGeometry, CubeComplex, build_geometry,
                       build_cube_complex, select_block_height)
from .linkconfig import (CROSS, DBAR, LinkConfiguration, sample_poisson,
                         serialize, deserialize)
from .loops import (LoopDecomposition, PairedDecomposition, Pairing,
                    decompose_periodic, decompose_with_pairings, connected,
                    evolve_pairing, count_closing_links, minimal_pair_count,
                    delta_loops, count_colorings, dimer_cover, random_pairing)
from .sampler import SamplerParams, ChainState, mcmc_step, run_chain
from .quantum import QuantumModel, build_hamiltonian, spin_matrices
