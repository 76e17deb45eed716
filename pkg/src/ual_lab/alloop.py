"""Pool-based active learning driver.

One run: fit on the initial labeled set, record step 0, then repeatedly
score the pool, query the winner's label, refit from scratch, and record
the test error. Refits are always on the full labeled set, so the final
model depends only on which points were acquired, not in what order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from . import acquisition as acq
from .bpr import BprPosterior, BprPrior, default_prior, posterior_update, predictive_batch
from .gpr import GpModel, KernelSpec, fit_lengthscale_grid, gp_fit, gp_predict_batch
from .rng import derive_rng
from .synthetic import GroundTruthTarget, LabeledSet, TestSet, UnlabeledPool, eval_target

__all__ = [
    "VS_CLEAN",
    "VS_OBSERVED",
    "PoolState",
    "StepRecord",
    "RunTrace",
    "SyntheticOracle",
    "TableOracle",
    "BprLearner",
    "GprLearner",
    "run_al",
    "test_mse",
]

VS_CLEAN = "vs_clean"
VS_OBSERVED = "vs_observed"


@dataclass(frozen=True)
class PoolState:
    """Labeled set and remaining pool at one step of a run."""

    labeled: LabeledSet
    pool: UnlabeledPool
    step: int


@dataclass(frozen=True)
class StepRecord:
    step: int
    strategy: str
    model_id: str
    chosen_x: Optional[np.ndarray]  # None for the pre-acquisition record
    test_mse: float
    bias: Optional[float] = None
    variance: Optional[float] = None


@dataclass(frozen=True)
class RunTrace:
    records: tuple[StepRecord, ...]
    terminal: bool

    def mse_at(self, step: int) -> float:
        return self.records[step].test_mse


class LabelOracle(Protocol):
    def label(self, index: int, x: np.ndarray) -> float: ...


class SyntheticOracle:
    """Labels y = f(x) + eps with noise attached to the candidate.

    Each candidate's noise comes from its own counter-based stream, so a
    candidate's label is a pure function of (seed, index): whichever
    strategy queries it, in whatever order, sees the same value.
    """

    def __init__(self, target: GroundTruthTarget, master_seed: int, path: tuple[int, ...] = ()):
        self.target = target
        self._master_seed = master_seed
        self._path = tuple(path)
        self._sigma = float(np.sqrt(target.noise_variance))

    def label(self, index: int, x: np.ndarray) -> float:
        clean = eval_target(self.target, float(np.asarray(x).reshape(-1)[0]))
        eps = derive_rng(self._master_seed, *self._path, index).standard_normal()
        return float(clean + self._sigma * eps)


class TableOracle:
    """Row lookup for real datasets: the label is the stored value."""

    def __init__(self, outputs):
        self._outputs = np.asarray(outputs, dtype=float)

    def label(self, index: int, x: np.ndarray) -> float:
        return float(self._outputs[index])


class _BprFit:
    """A fitted polynomial posterior behind the common model interface."""

    def __init__(self, post: BprPosterior, model_id: str):
        self._post = post
        self.model_id = model_id
        self.noise_variance = post.noise_variance

    def predict_batch(self, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != 1:
            raise ValueError("polynomial models are univariate")
        return predictive_batch(self._post, xs[:, 0])


class BprLearner:
    """Refits a conjugate polynomial posterior from scratch on each call."""

    def __init__(self, degree: int, noise_variance: float, prior: Optional[BprPrior] = None):
        self.degree = degree
        self.noise_variance = noise_variance
        self.prior = prior if prior is not None else default_prior(degree, noise_variance)
        self.model_id = f"bpr_deg{degree}"

    def fit(self, xs: np.ndarray, ys: np.ndarray) -> _BprFit:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != 1:
            raise ValueError("polynomial models are univariate")
        post = posterior_update(self.prior, xs[:, 0], ys)
        return _BprFit(post, self.model_id)


class _GpFit:
    def __init__(self, model: GpModel, model_id: str):
        self._model = model
        self.model_id = model_id
        self.noise_variance = model.noise_variance
        self.gp = model

    def predict_batch(self, xs) -> tuple[np.ndarray, np.ndarray]:
        return gp_predict_batch(self._model, xs, include_noise=True)


class GprLearner:
    """Refits a GP from scratch each call; the kernel stays fixed.

    With ``lengthscale_grid`` the lengthscale is chosen once, by marginal
    likelihood on the first fit of the run, and reused afterwards.
    """

    def __init__(
        self,
        kernel: KernelSpec,
        noise_variance: float,
        mean_const: float = 0.0,
        lengthscale_grid: bool = False,
    ):
        self.kernel = kernel
        self.noise_variance = noise_variance
        self.mean_const = mean_const
        self.lengthscale_grid = lengthscale_grid
        self.model_id = f"gpr_{kernel.kind}"
        self._resolved_kernel: Optional[KernelSpec] = None

    def fit(self, xs: np.ndarray, ys: np.ndarray) -> _GpFit:
        if self.lengthscale_grid and self._resolved_kernel is None:
            model = fit_lengthscale_grid(
                self.kernel, xs, ys, self.noise_variance, self.mean_const
            )
            self._resolved_kernel = model.kernel
            return _GpFit(model, self.model_id)
        kernel = self._resolved_kernel if self._resolved_kernel is not None else self.kernel
        return _GpFit(
            gp_fit(kernel, xs, ys, self.noise_variance, self.mean_const), self.model_id
        )


def test_mse(model, test: TestSet, mode: str = VS_CLEAN) -> float:
    """Mean posterior expected squared error against the test targets.

    Per point: (target - predictive mean)^2 plus the posterior spread
    (predictive variance minus the noise floor). ``vs_clean`` measures
    against the noiseless targets and needs them present.
    """
    if len(test) == 0:
        raise ValueError("test set is empty")
    bias_term, var_term = _mse_components(model, test, mode)
    return bias_term + var_term


def _mse_components(model, test: TestSet, mode: str) -> tuple[float, float]:
    if mode == VS_CLEAN:
        if test.clean_outputs is None:
            raise ValueError("vs_clean needs noiseless outputs, which this test set lacks")
        targets = test.clean_outputs
    elif mode == VS_OBSERVED:
        targets = test.observed_outputs
    else:
        raise ValueError(f"unknown mse mode {mode!r}")
    means, variances = model.predict_batch(test.inputs)
    spread = variances - model.noise_variance
    return float(np.mean((targets - means) ** 2)), float(np.mean(spread))


def run_al(
    learner,
    strategy: acq.StrategySpec,
    oracle: LabelOracle,
    init_labeled: LabeledSet,
    pool: UnlabeledPool,
    test: TestSet,
    budget: int,
    rng: np.random.Generator,
    mse_mode: str = VS_CLEAN,
    record_decomposition: bool = True,
) -> RunTrace:
    """Run ``budget`` acquisitions and return the full per-step trace.

    Step 0 records the model fit on the initial labeled set alone. The rng
    is consumed only by the random strategy, so selection and model are
    fully decoupled for the baselines.
    """
    if len(init_labeled) == 0:
        raise ValueError("need at least one initial labeled point")
    if budget > pool.n_active:
        raise ValueError(f"budget {budget} exceeds the {pool.n_active} active candidates")
    if isinstance(strategy.gradient_bound, str):
        raise ValueError("gradient_bound must be resolved to a number before running")

    state = PoolState(init_labeled, pool, 0)
    records = []

    model = learner.fit(state.labeled.inputs, state.labeled.outputs)
    records.append(_record(0, strategy.kind, model, test, mse_mode,
                           record_decomposition, None))

    for step in range(1, budget + 1):
        labeled, current_pool = state.labeled, state.pool
        if strategy.kind == acq.RANDOM:
            chosen = acq.score_random(rng, current_pool)
        else:
            candidates = current_pool.candidates[current_pool.active]
            if strategy.kind == acq.VARIANCE:
                scores = acq.score_variance(model, candidates)
            else:
                surrogate = gp_fit(
                    strategy.surrogate_kernel,
                    labeled.inputs,
                    labeled.outputs,
                    model.noise_variance,
                )
                if strategy.kind == acq.DIRECT_MSE:
                    scores = acq.score_direct_mse(surrogate, model, candidates)
                else:
                    scores = acq.score_upper_bound(
                        surrogate, model, candidates, labeled.inputs,
                        strategy.gradient_bound, strategy.confidence,
                        pool_size=candidates.shape[0],
                    )
            chosen = acq.select(current_pool, scores)
        x = current_pool.candidates[chosen]
        y = oracle.label(chosen, x)
        state = PoolState(labeled.appended(x, y), current_pool.deactivated(chosen), step)
        model = learner.fit(state.labeled.inputs, state.labeled.outputs)
        records.append(_record(step, strategy.kind, model, test, mse_mode,
                               record_decomposition, x))
    return RunTrace(tuple(records), terminal=True)


def _record(step, strategy_kind, model, test, mse_mode, record_decomposition, x):
    chosen = None if x is None else np.asarray(x, dtype=float)
    if record_decomposition and mse_mode == VS_CLEAN and test.clean_outputs is not None:
        bias_term, var_term = _mse_components(model, test, mse_mode)
        return StepRecord(step, strategy_kind, model.model_id, chosen,
                          bias_term + var_term, bias_term, var_term)
    return StepRecord(step, strategy_kind, model.model_id, chosen,
                      test_mse(model, test, mse_mode))
