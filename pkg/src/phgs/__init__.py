"""Partitioned hybrid structure learning for discrete Bayesian networks."""

__version__ = "0.1.0"
