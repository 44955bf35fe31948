"""Quantum LDPC decoding toolkit.

Belief-propagation decoding with degeneracy-breaking check splits,
BP+OSD baselines, CSS code constructors (bivariate bicycle, hypergraph
product, generalized bicycle), and a Monte Carlo logical-error-rate and
latency harness.
"""

from symbreak.gf2 import BinMatrix, BinVector, matvec, rank, kernel_basis, solve_constrained

__all__ = [
    "BinMatrix",
    "BinVector",
    "matvec",
    "rank",
    "kernel_basis",
    "solve_constrained",
]

__version__ = "0.1.0"
