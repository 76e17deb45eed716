"""Uncertainty-based active learning lab.

A numpy/scipy library for studying when variance-guided pool-based active
learning helps or hurts regression, with conjugate Bayesian polynomial
regression, Gaussian process regression, error-targeting acquisition
strategies, closed-form MSE analysis, and a reproducible experiment runner.
"""

__version__ = "0.1.0"
