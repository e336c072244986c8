"""Mini-batch stochastic projected gradient method with diminishing steps and
growing batches: gamma_k = gamma_tilde / (1 + k)^beta1, m_k = ceil(m_tilde (1 + k)^beta2)."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import RuinEvaluator
from .malliavin import GradientEstimate, WeightFunction, gradient_samples
from .model import ModelParams, Strategy, sample_batch
from .projection import FeasibleRegion, project_feasible, projected_gradient_mapping
from .streams import map_blocks

log = logging.getLogger(__name__)


def step_size(k: int, gamma_tilde: float, beta1: float) -> float:
    return gamma_tilde / (1.0 + k) ** beta1


def batch_size(k: int, m_tilde: float, beta2: float) -> int:
    return max(1, math.ceil(m_tilde * (1.0 + k) ** beta2))


@dataclass
class SpgConfig:
    gamma_tilde: float
    max_iters: int = 300
    beta1: float | None = None
    beta2: float | None = None
    m_tilde: float = 1.0
    holder_nu: float | None = None
    eval_batch: int = 10_000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.holder_nu is not None:
            if not 0 < self.holder_nu <= 1:
                raise ValueError("holder_nu must lie in (0, 1]")
            nu = self.holder_nu
            if self.beta1 is None:
                self.beta1 = 1.0 / (1.0 + nu)
            if self.beta2 is None:
                self.beta2 = nu / (1.0 + nu)
        if self.beta1 is None:
            self.beta1 = 0.67
        if self.beta2 is None:
            self.beta2 = 0.33
        if not self.gamma_tilde > 0:
            raise ValueError("gamma_tilde must be positive")
        if not self.m_tilde > 0:
            raise ValueError("m_tilde must be positive")
        if not 0 < self.beta1 <= 1:
            raise ValueError("beta1 must lie in (0, 1]")
        if self.beta2 < 0:
            raise ValueError("beta2 must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.eval_batch < 0:
            raise ValueError("eval_batch must be nonnegative")


@dataclass
class IterationRecord:
    k: int
    strategy: Strategy
    gamma: float
    batch_size: int
    gradient: np.ndarray | None
    gradmap_norm: float
    ruin_hat: float
    ruin_se: float
    min_ruin_hat: float
    wall_time: float


@dataclass
class RunTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]

    @property
    def final(self) -> Strategy:
        return self.records[-1].strategy

    @property
    def min_ruin(self) -> float:
        return self.records[-1].min_ruin_hat

    def best_strategy(self) -> Strategy:
        """Iterate with the lowest estimated ruin probability (ties: earliest)."""
        vals = np.array([r.ruin_hat for r in self.records])
        if np.all(np.isnan(vals)):
            return self.final
        return self.records[int(np.nanargmin(vals))].strategy


def _gradient(model, x, wf, seed, k, n, workers) -> GradientEstimate:
    def block(stream, count):
        return gradient_samples(model, x, sample_batch(model, stream, count), wf)

    return GradientEstimate.from_samples(np.concatenate(map_blocks(block, seed, "gradient", k, n, workers)))


def run_spg(model: ModelParams, region: FeasibleRegion, config: SpgConfig, wf: WeightFunction | None = None,
            x0: Strategy | None = None, batch_source=None, callback=None) -> RunTrace:
    """Run the projected gradient loop for ``config.max_iters`` iterations.

    The trace holds ``max_iters + 1`` records (iterates ``x_0 .. x_N``); the
    last one carries no gradient. Per-iterate ruin estimates use one fixed
    evaluation scenario set drawn on its own stream. ``batch_source(k, m_k)``
    may supply the scenarios for iteration ``k`` instead of fresh draws.
    """
    if wf is None:
        wf = WeightFunction(model.horizon_T)
    if region.m != model.m:
        raise ValueError("region and model disagree on the number of assets")
    x = Strategy.uniform(model.m, 1.0) if x0 is None else x0
    if not region.contains(x):
        raise ValueError(f"initial strategy {x!r} is not feasible")

    evaluator = None
    if config.eval_batch > 0:
        evaluator = RuinEvaluator(model, config.eval_batch, config.master_seed, "evaluation",
                                  workers=config.workers)
    trace = RunTrace()
    best = math.inf
    for k in range(config.max_iters + 1):
        started = time.perf_counter()
        gamma = step_size(k, config.gamma_tilde, config.beta1)
        m_k = batch_size(k, config.m_tilde, config.beta2)
        if evaluator is not None:
            est = evaluator.terminal(x.p, x.b)
            ruin_hat, ruin_se = est.probability, est.std_error
            best = min(best, ruin_hat)
        else:
            ruin_hat = ruin_se = best = math.nan

        grad = None
        gradmap = math.nan
        x_next = x
        if k < config.max_iters:
            if batch_source is not None:
                batch = batch_source(k, m_k)
                g = GradientEstimate.from_samples(gradient_samples(model, x, batch, wf))
            else:
                g = _gradient(model, x, wf, config.master_seed, k, m_k, config.workers)
            grad = g.mean
            if not np.all(np.isfinite(grad)):
                raise FloatingPointError(f"non-finite gradient estimate at iteration {k}: {grad}")
            gradmap = float(np.linalg.norm(projected_gradient_mapping(region, x, grad, gamma)))
            x_next = project_feasible(region, x.as_vector() - gamma * grad)

        trace.records.append(IterationRecord(
            k=k, strategy=x, gamma=gamma, batch_size=m_k, gradient=grad, gradmap_norm=gradmap,
            ruin_hat=ruin_hat, ruin_se=ruin_se, min_ruin_hat=best,
            wall_time=time.perf_counter() - started,
        ))
        if callback is not None:
            callback(trace.records[-1])
        if k % 50 == 0:
            log.debug("k=%d b=%.6f ruin=%.5f min=%.5f", k, x.b, ruin_hat, best)
        x = x_next
    return trace

