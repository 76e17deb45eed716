"""Synthetic targets, candidate pools, and holdout test sets.

Ground truth functions are univariate polynomials with standard-normal
coefficients, optionally plus a cosine component, observed under additive
Gaussian noise: y = f(x) + eps, eps ~ N(0, sigma^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "PURE_POLYNOMIAL",
    "POLYNOMIAL_PLUS_COSINE",
    "GroundTruthTarget",
    "LabeledSet",
    "UnlabeledPool",
    "TestSet",
    "sample_target",
    "eval_target",
    "observe",
    "build_pool",
    "build_test_set",
    "gradient_bound",
]

PURE_POLYNOMIAL = "pure-polynomial"
POLYNOMIAL_PLUS_COSINE = "polynomial-plus-cosine"


@dataclass(frozen=True)
class GroundTruthTarget:
    """A target function: polynomial coefficients plus optional cosine term.

    ``coefficients[i]`` multiplies x**i; ``cosine_frequency`` is in cycles
    per unit x, so the cosine component is amplitude * cos(2*pi*freq*x).
    """

    kind: str
    order: int
    coefficients: np.ndarray
    cosine_amplitude: float = 0.0
    cosine_frequency: float = 1.0
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))
        if self.kind not in (PURE_POLYNOMIAL, POLYNOMIAL_PLUS_COSINE):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.coefficients.shape != (self.order + 1,):
            raise ValueError(
                f"need {self.order + 1} coefficients for order {self.order}, "
                f"got {self.coefficients.shape}"
            )
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.kind == PURE_POLYNOMIAL and self.cosine_amplitude != 0.0:
            raise ValueError("pure-polynomial targets must have cosine_amplitude 0")


@dataclass(frozen=True)
class LabeledSet:
    """Paired inputs and observed outputs."""

    inputs: np.ndarray   # (n, d)
    outputs: np.ndarray  # (n,)

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float)
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError("inputs and outputs must have equal length")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def appended(self, x: np.ndarray, y: float) -> "LabeledSet":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return LabeledSet(
            np.vstack([self.inputs, x[None, :]]) if len(self) else x[None, :],
            np.append(self.outputs, y),
        )


@dataclass(frozen=True)
class UnlabeledPool:
    """Candidate inputs with an activity mask; deactivation is one-way."""

    candidates: np.ndarray  # (n, d)
    active: np.ndarray      # (n,) bool

    def __post_init__(self):
        candidates = np.asarray(self.candidates, dtype=float)
        if candidates.ndim == 1:
            candidates = candidates[:, None]
        active = np.asarray(self.active, dtype=bool)
        if candidates.shape[0] != active.shape[0]:
            raise ValueError("candidates and active mask must have equal length")
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(self, "active", active)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def deactivated(self, index: int) -> "UnlabeledPool":
        if not self.active[index]:
            raise ValueError(f"candidate {index} is already inactive")
        mask = self.active.copy()
        mask[index] = False
        return UnlabeledPool(self.candidates, mask)


@dataclass(frozen=True)
class TestSet:
    """Holdout inputs with observed and (when available) noiseless outputs."""

    inputs: np.ndarray                     # (n, d)
    observed_outputs: np.ndarray           # (n,)
    clean_outputs: Optional[np.ndarray] = None  # (n,) or None for real data

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        observed = np.asarray(self.observed_outputs, dtype=float)
        if inputs.shape[0] != observed.shape[0]:
            raise ValueError("inputs and observed_outputs must have equal length")
        clean = self.clean_outputs
        if clean is not None:
            clean = np.asarray(clean, dtype=float)
            if clean.shape[0] != inputs.shape[0]:
                raise ValueError("clean_outputs length mismatch")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "observed_outputs", observed)
        object.__setattr__(self, "clean_outputs", clean)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def sample_target(
    order: int,
    rng: np.random.Generator,
    kind: str = PURE_POLYNOMIAL,
    noise_variance: float = 1.0,
    cosine_amplitude: float = 1.0,
    cosine_frequency: float = 1.0,
) -> GroundTruthTarget:
    """Draw a target with coefficients ~ N(0, I).

    For the polynomial-plus-cosine kind the cosine defaults to amplitude 1
    at one cycle per unit x, i.e. cos(2*pi*x).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    coeffs = rng.standard_normal(order + 1)
    if kind == PURE_POLYNOMIAL:
        return GroundTruthTarget(kind, order, coeffs, 0.0, 1.0, noise_variance)
    return GroundTruthTarget(
        kind, order, coeffs, cosine_amplitude, cosine_frequency, noise_variance
    )


def eval_target(target: GroundTruthTarget, x) -> np.ndarray | float:
    """Noiseless f(x); accepts a scalar or an array of inputs."""
    x_arr = np.asarray(x, dtype=float)
    value = npoly.polyval(x_arr, target.coefficients)
    if target.cosine_amplitude != 0.0:
        value = value + target.cosine_amplitude * np.cos(
            2.0 * math.pi * target.cosine_frequency * x_arr
        )
    return float(value) if np.isscalar(x) or x_arr.ndim == 0 else value


def observe(target: GroundTruthTarget, x, rng: np.random.Generator):
    """One noisy observation y = f(x) + eps per input."""
    clean = eval_target(target, x)
    sigma = math.sqrt(target.noise_variance)
    if np.isscalar(clean):
        return clean + sigma * rng.standard_normal()
    return clean + sigma * rng.standard_normal(np.shape(clean))


def build_pool(n: int, lo: float, hi: float) -> UnlabeledPool:
    """n evenly spaced candidates on [lo, hi], endpoints included."""
    if n < 2:
        raise ValueError("pool needs at least 2 candidates")
    if not lo < hi:
        raise ValueError("need lo < hi")
    xs = np.linspace(lo, hi, n)
    return UnlabeledPool(xs[:, None], np.ones(n, dtype=bool))


def build_test_set(
    n: int,
    lo: float,
    hi: float,
    target: GroundTruthTarget,
    rng: np.random.Generator,
    layout: str = "random",
) -> TestSet:
    """Holdout set with inputs uniform on [lo, hi] (or an even grid)."""
    if n < 1:
        raise ValueError("test set needs at least 1 point")
    if layout == "random":
        xs = rng.uniform(lo, hi, n)
    elif layout == "grid":
        xs = np.linspace(lo, hi, n)
    else:
        raise ValueError(f"unknown test layout {layout!r}")
    clean = np.asarray(eval_target(target, xs), dtype=float)
    noise = math.sqrt(target.noise_variance) * rng.standard_normal(n)
    return TestSet(xs[:, None], clean + noise, clean)


def gradient_bound(target: GroundTruthTarget, lo: float, hi: float) -> float:
    """Integer upper bound on |f'| over [lo, hi].

    Polynomial part: sum_k k*|w_k|*M^(k-1) with M = max(|lo|, |hi|); cosine
    part: amplitude * 2*pi*frequency. Rounded up to the next integer.
    """
    m = max(abs(lo), abs(hi))
    poly_slope = sum(
        k * abs(w) * m ** (k - 1) for k, w in enumerate(target.coefficients) if k >= 1
    )
    cos_slope = abs(target.cosine_amplitude) * 2.0 * math.pi * target.cosine_frequency
    return float(math.ceil(poly_slope + cos_slope))
