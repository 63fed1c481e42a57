"""Separatrix-splitting toolkit for rapidly forced one-degree-of-freedom
Hamiltonian systems.

The package predicts the leading-order splitting of a separatrix under a
rapid small-amplitude forcing by a stationary-phase evaluation of the
Melnikov integral, and cross-checks the prediction with two independent
oracles: direct high-accuracy quadrature of the Melnikov function, and a
from-scratch computation of the true manifold displacement of the forced
system.
"""

from .errors import (
    ConfigError,
    DomainError,
    HypothesisError,
    NumericsError,
    ParseError,
    SepsplitError,
)

__version__ = "0.1.0"
