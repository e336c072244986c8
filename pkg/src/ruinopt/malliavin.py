"""Unbiased gradient estimator of the terminal ruin probability.

The ruin indicator is discontinuous in the strategy, so the gradient cannot be
taken inside the expectation. Integration by parts on the Poisson space moves
the derivative onto a random weight instead: with

    D = b r sum_i w(T_i) e^{r T_i} X_i
    B = sum_i w'(T_i) - sum_i w(T_i) (r w(T_i) + w'(T_i)) e^{r T_i} X_i / sum_i w(T_i) e^{r T_i} X_i

the per-scenario gradient sample is ``1{N_T >= 1, U_T < 0}`` times

    W_p[j] = u S_T[j] B / D,     W_b = (c2 T - sum_i e^{r T_i} X_i) B / D - 1 / b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .errors import EstimatorDomainError
from .model import (
    ModelParams,
    ScenarioBatch,
    ScenarioSample,
    Strategy,
    as_batch,
    ruin_indicator,
    ruin_indicator_batch,
    sample_batch,
)
from .streams import map_blocks


@dataclass(frozen=True)
class WeightFunction:
    """w(t) = t^a (T - t)^a, vanishing at both ends of [0, T].

    ``derivative_sign`` exists only so diagnostics can be mutation-tested;
    leave it at 1.
    """

    horizon_T: float
    exponent_a: float = 0.125
    derivative_sign: float = 1.0

    def __post_init__(self):
        if not self.horizon_T > 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.exponent_a < 0.25:
            raise ValueError("exponent a must lie in (0, 1/4) so that 1/w is in L^4")

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) or np.any(t >= self.horizon_T):
            raise EstimatorDomainError("weight function evaluated outside the open interval (0, T)")
        return t

    def value(self, t):
        t = self._check(t)
        a, T = self.exponent_a, self.horizon_T
        return t**a * (T - t) ** a

    def derivative(self, t):
        t = self._check(t)
        a, T = self.exponent_a, self.horizon_T
        d = a * t ** (a - 1) * (T - t) ** a - a * t**a * (T - t) ** (a - 1)
        return self.derivative_sign * d


def inverse_w4_integral(wf: WeightFunction) -> float:
    """Integral of w(t)^-4 over [0, T] by adaptive quadrature with algebraic end weights."""
    a = wf.exponent_a
    value, _ = integrate.quad(
        lambda t: 1.0, 0.0, wf.horizon_T, weight="alg", wvar=(-4 * a, -4 * a), epsabs=1e-13, epsrel=1e-13
    )
    return value


@dataclass(frozen=True)
class GradientSample:
    grad_p: np.ndarray
    grad_b: float

    def as_vector(self) -> np.ndarray:
        return np.append(self.grad_p, self.grad_b)


@dataclass(frozen=True)
class GradientEstimate:
    mean: np.ndarray
    batch_size: int
    sample_second_moment: float
    std_error: np.ndarray
    max_share: float  # largest single-sample share of the summed squared norms

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "GradientEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.shape[0]
        if n == 0:
            raise ValueError("gradient estimate needs a nonempty batch")
        # contiguous along the reduction axis so numpy uses its fixed pairwise order
        cols = np.ascontiguousarray(samples.T)
        mean = cols.sum(axis=1) / n
        sq = np.einsum("ij,ij->i", samples, samples)
        total_sq = sq.sum()
        if n > 1:
            std_error = np.sqrt(((cols - mean[:, None]) ** 2).sum(axis=1) / (n - 1) / n)
        else:
            std_error = np.full(samples.shape[1], np.nan)
        return cls(
            mean=mean,
            batch_size=n,
            sample_second_moment=float(total_sq / n),
            std_error=std_error,
            max_share=float(sq.max() / total_sq) if total_sq > 0 else 0.0,
        )


def malliavin_weights(params: ModelParams, strategy: Strategy, scenario: ScenarioSample, wf: WeightFunction):
    """Weights ``(W_p, W_b)`` for one scenario, straight from the closed form."""
    if not scenario.has_claims:
        raise EstimatorDomainError("weights are undefined on scenarios without claims")
    r, b, T = params.r, strategy.b, params.horizon_T
    times = np.asarray(scenario.jump_times, dtype=float)
    e_x = np.exp(r * times) * np.asarray(scenario.claim_sizes, dtype=float)
    w = wf.value(times)
    wp = wf.derivative(times)
    s_w = math.fsum(w * e_x)
    bracket = math.fsum(wp) - math.fsum(w * (r * w + wp) * e_x) / s_w
    denom = b * r * s_w
    w_p = params.u * np.asarray(scenario.asset_prices, dtype=float) * bracket / denom
    w_b = (params.c2 * T - math.fsum(e_x)) * bracket / denom - 1.0 / b
    return w_p, float(w_b)


def gradient_sample(params, strategy, scenario, wf) -> GradientSample:
    if not ruin_indicator(params, strategy, scenario):
        return GradientSample(np.zeros(params.m), 0.0)
    w_p, w_b = malliavin_weights(params, strategy, scenario, wf)
    return GradientSample(w_p, w_b)


def gradient_samples(params: ModelParams, strategy: Strategy, batch: ScenarioBatch, wf: WeightFunction) -> np.ndarray:
    """Per-scenario gradient samples, shape ``(n, m + 1)``, in batch order."""
    out = np.zeros((len(batch), params.m + 1))
    ruined = ruin_indicator_batch(params, strategy.p, strategy.b, batch).astype(bool)
    if not ruined.any():
        return out
    sub = batch.subset(ruined)
    sums = kernels.malliavin_sums(
        sub.offsets, sub.jump_times, sub.claim_sizes, params.r, wf.exponent_a, params.horizon_T
    )
    r, b = params.r, strategy.b
    s_e, s_w = sums[:, 0], sums[:, 1]
    s_wp = wf.derivative_sign * sums[:, 2]
    s_q = r * sums[:, 3] + wf.derivative_sign * sums[:, 4]
    ratio = (s_wp - s_q / s_w) / (r * s_w)
    out[ruined, :-1] = params.u * sub.asset_prices * (ratio / b)[:, None]
    out[ruined, -1] = (params.c2 * params.horizon_T - s_e) * ratio / b - 1.0 / b
    return out


def gradient_estimate(params, strategy, batch, wf) -> GradientEstimate:
    """Mini-batch mean of the gradient samples."""
    if not isinstance(batch, ScenarioBatch) and len(batch) == 0:
        raise ValueError("gradient estimate needs a nonempty batch")
    return GradientEstimate.from_samples(gradient_samples(params, strategy, as_batch(batch), wf))


def gradient_monte_carlo(
    params, strategy, wf, n, seed, purpose="gradient", iteration=0, workers=1
) -> GradientEstimate:
    """Gradient estimate over ``n`` fresh scenarios drawn block by block."""

    def block(stream, count):
        return gradient_samples(params, strategy, sample_batch(params, stream, count), wf)

    parts = map_blocks(block, seed, purpose, iteration, n, workers)
    return GradientEstimate.from_samples(np.concatenate(parts))


@dataclass(frozen=True)
class Lemma3Result:
    empirical_mean: float
    analytic_value: float
    std_error: float

    @property
    def z_score(self) -> float:
        return (self.empirical_mean - self.analytic_value) / self.std_error


def lemma3_diagnostic(params: ModelParams, wf: WeightFunction, n_samples: int, seed: int, workers: int = 1) -> Lemma3Result:
    """Compare the mean of sum_i w(T_i)^-4 with lambda * integral of w^-4."""
    if n_samples < 10_000:
        raise ValueError("use at least 10^4 samples")

    def block(stream, count):
        batch = sample_batch(params, stream, count)
        return kernels.inverse_w4_sums(batch.offsets, batch.jump_times, wf.exponent_a, params.horizon_T)

    values = np.concatenate(map_blocks(block, seed, "lemma3", 0, n_samples, workers))
    return Lemma3Result(
        empirical_mean=float(values.mean()),
        analytic_value=params.lam * inverse_w4_integral(wf),
        std_error=float(values.std(ddof=1) / math.sqrt(n_samples)),
    )
