"""Numerical toolkit for almost-commuting unitary families: matrix kernel,
finite-dimensional subalgebra operations, quantum-expander spectral gaps,
block gap assemblies, the deformation witness construction, and a
nearest-commuting-pair optimizer."""

__version__ = "0.1.0"

from .linalg import (
    TensorLegs,
    commutator,
    embed_leg,
    gaussian_matrix,
    haar_unitary,
    hs_inner,
    hs_norm,
    kron,
    leg_expectation,
    normalized_trace,
    op_norm,
    permute_legs,
    polar_unitary,
    trace_norm,
    unitary_exp,
    unitary_log,
)

__all__ = [
    "TensorLegs",
    "commutator",
    "embed_leg",
    "gaussian_matrix",
    "haar_unitary",
    "hs_inner",
    "hs_norm",
    "kron",
    "leg_expectation",
    "normalized_trace",
    "op_norm",
    "permute_legs",
    "polar_unitary",
    "trace_norm",
    "unitary_exp",
    "unitary_log",
    "__version__",
]
