"""Desk-scale toolkit for surrogate NAS benchmarks.

Subpackages cover the block-based search space, rank/fit metrics, a
from-scratch gradient-boosted tree surrogate, training-proxy scheme
search, zero-cost NAS optimizers with Pareto extraction, dataset
collection/persistence, and a command-line front end.
"""

from anbkit import archspace, data, metrics, optim, proxysearch, surrogate

__all__ = ["archspace", "metrics", "surrogate", "proxysearch", "optim", "data"]
__version__ = "0.1.0"
