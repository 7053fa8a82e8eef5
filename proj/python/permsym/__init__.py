"""Permutation-invariant and -equivariant stochastic layers."""

from ._permsym import *  # noqa: F401,F403
