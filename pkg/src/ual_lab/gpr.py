"""Gaussian process regression with linear, RBF, and Matern-5/2 kernels.

Hyperparameters are fixed by configuration, never learned during a run; an
optional marginal-likelihood grid over lengthscales can pick one value at
fit time. Fits are from scratch each call (n stays in the hundreds here, so
rank-1 updating buys nothing worth its complexity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .linalg import chol_spd, chol_solve_vec, solve_lower

__all__ = [
    "KernelSpec",
    "GpModel",
    "kernel_eval",
    "kernel_matrix",
    "gp_fit",
    "gp_predict",
    "gp_predict_batch",
    "log_marginal_likelihood",
    "fit_lengthscale_grid",
    "LENGTHSCALE_GRID",
]

LINEAR = "linear"
RBF = "rbf"
MATERN52 = "matern52"

LENGTHSCALE_GRID = (0.1, 0.3, 1.0, 3.0, 10.0)


@dataclass(frozen=True)
class KernelSpec:
    """Covariance function parameters.

    linear:   bias + weight * <x, x'>
    rbf:      amplitude * exp(-r^2 / (2 l^2))
    matern52: amplitude * (1 + sqrt5 r/l + 5 r^2/(3 l^2)) * exp(-sqrt5 r/l)
    """

    kind: str
    amplitude: float = 1.0
    lengthscale: float = 1.0
    bias: float = 1.0
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in (LINEAR, RBF, MATERN52):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == LINEAR:
            if self.bias < 0 or self.weight <= 0:
                raise ValueError("linear kernel needs bias >= 0 and weight > 0")
        else:
            if self.amplitude <= 0 or self.lengthscale <= 0:
                raise ValueError("stationary kernels need amplitude > 0 and lengthscale > 0")


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """k(x, x') for two single inputs (scalars or equal-length vectors)."""
    a = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"input dimension mismatch: {a.shape} vs {b.shape}")
    return float(kernel_matrix(spec, a[None, :], b[None, :])[0, 0])


def kernel_matrix(spec: KernelSpec, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix between row-stacked inputs."""
    xa = np.atleast_2d(np.asarray(xa, dtype=float))
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    if xa.shape[1] != xb.shape[1]:
        raise ValueError(f"input dimension mismatch: {xa.shape[1]} vs {xb.shape[1]}")
    if spec.kind == LINEAR:
        return spec.bias + spec.weight * (xa @ xb.T)
    r = cdist(xa, xb)
    if spec.kind == RBF:
        return spec.amplitude * np.exp(-0.5 * (r / spec.lengthscale) ** 2)
    s = math.sqrt(5.0) * r / spec.lengthscale
    return spec.amplitude * (1.0 + s + (s * s) / 3.0) * np.exp(-s)


@dataclass(frozen=True)
class GpModel:
    """A fitted GP: factored (K + sigma^2 I) and precomputed weights."""

    kernel: KernelSpec
    mean_const: float
    train_inputs: np.ndarray      # (n, d)
    train_outputs: np.ndarray     # (n,)
    chol_factor: Optional[np.ndarray]  # lower factor, None when n == 0
    weights: np.ndarray           # alpha solving (K + sigma^2 I) alpha = y - m
    noise_variance: float

    @property
    def n_train(self) -> int:
        return self.train_inputs.shape[0]


def gp_fit(
    spec: KernelSpec,
    xs,
    ys,
    noise_variance: float,
    mean_const: float = 0.0,
) -> GpModel:
    """Fit from scratch: factor (K + sigma^2 I), solve for the weights."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if xs.size == 0:
        xs = xs.reshape(0, max(1, xs.shape[-1] if xs.ndim > 1 else 1))
    if xs.shape[0] != ys.shape[0]:
        raise ValueError("xs and ys must have equal length")
    if noise_variance < 0:
        raise ValueError("noise_variance must be >= 0")
    if xs.shape[0] == 0:
        return GpModel(spec, mean_const, xs, ys, None, np.zeros(0), noise_variance)
    gram = kernel_matrix(spec, xs, xs) + noise_variance * np.eye(xs.shape[0])
    lower = chol_spd(gram)
    alpha = chol_solve_vec(lower, ys - mean_const)
    return GpModel(spec, mean_const, xs, ys, lower, alpha, noise_variance)


def gp_predict(model: GpModel, x, include_noise: bool = True) -> tuple[float, float]:
    """Posterior mean and variance at one input.

    ``include_noise`` adds sigma^2 to the returned variance (the predictive
    rather than latent posterior), the default so variance scores sit on
    the same scale as the parametric models'.
    """
    means, variances = gp_predict_batch(model, np.atleast_2d(np.asarray(x, dtype=float)),
                                        include_noise=include_noise)
    return float(means[0]), float(variances[0])


def gp_predict_batch(
    model: GpModel, xs, include_noise: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior means and variances over many inputs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if model.kernel.kind == LINEAR:
        prior_diag = model.kernel.bias + model.kernel.weight * np.sum(xs * xs, axis=1)
    else:
        prior_diag = np.full(xs.shape[0], model.kernel.amplitude)
    if model.n_train == 0:
        means = np.full(xs.shape[0], model.mean_const)
        variances = prior_diag.copy()
    else:
        k_star = kernel_matrix(model.kernel, model.train_inputs, xs)  # (n, m)
        means = model.mean_const + k_star.T @ model.weights
        v = solve_lower(model.chol_factor, k_star)
        variances = prior_diag - np.einsum("ij,ij->j", v, v)
    if include_noise:
        variances = variances + model.noise_variance
    return means, variances


def log_marginal_likelihood(model: GpModel) -> float:
    """Log evidence of the training data under the fitted model."""
    if model.n_train == 0:
        return 0.0
    resid = model.train_outputs - model.mean_const
    return float(
        -0.5 * resid @ model.weights
        - np.sum(np.log(np.diagonal(model.chol_factor)))
        - 0.5 * model.n_train * math.log(2.0 * math.pi)
    )


def fit_lengthscale_grid(
    spec: KernelSpec,
    xs,
    ys,
    noise_variance: float,
    mean_const: float = 0.0,
    grid=LENGTHSCALE_GRID,
) -> GpModel:
    """Fit once per grid lengthscale and keep the highest-evidence model.

    Linear kernels have no lengthscale and fall through to a plain fit.
    """
    if spec.kind == LINEAR:
        return gp_fit(spec, xs, ys, noise_variance, mean_const)
    best = None
    best_ll = -math.inf
    for ls in grid:
        model = gp_fit(replace(spec, lengthscale=ls), xs, ys, noise_variance, mean_const)
        ll = log_marginal_likelihood(model)
        if ll > best_ll:
            best, best_ll = model, ll
    return best
