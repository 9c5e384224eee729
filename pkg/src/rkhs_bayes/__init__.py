"""Bayesian kernel learning with a data-adaptive RKHS prior."""

__version__ = "0.1.0"
