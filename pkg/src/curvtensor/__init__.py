"""Canonical algebraic curvature tensors: builds, identities, structure groups,
linear dependence, chain-complex reductions and decomposition estimates."""

__version__ = "0.1.0"
