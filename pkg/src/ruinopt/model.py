"""Insurer surplus model with proportional reinsurance and investment.

The terminal surplus for investment weights ``p`` and retention ``b`` is

    U_T = u <p, S_T> + c1 T - (1 - b) c2 T - sum_i b exp(r T_i) X_i

where claims arrive as a compound Poisson process. Scenarios are generated by
drawing the claim count, then placing the jump times as sorted uniforms on
(0, T); an exponential-gap generator is kept alongside as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ModelError, UnsupportedModelError
from .streams import RandomStream

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ClaimDistribution:
    """Gamma claim law with ``shape`` and ``scale`` (mean = shape * scale)."""

    shape: float
    scale: float
    kind: str = "gamma"

    def __post_init__(self):
        if self.kind != "gamma":
            raise ModelError(f"unsupported claim distribution {self.kind!r}")
        if not (self.shape > 0 and self.scale > 0):
            raise ModelError("gamma shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size=size)

    def mgf_minus_one(self, s):
        """E[exp(s X)] - 1, accurate for small ``s``; requires s < 1/scale."""
        s = np.asarray(s, dtype=float)
        return np.expm1(-self.shape * np.log1p(-self.scale * s))


@dataclass(frozen=True)
class AssetModel:
    kind: str = "cash"
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cash", "gbm"):
            raise ModelError(f"unknown asset kind {self.kind!r}")
        if self.kind == "gbm" and not self.sigma > 0:
            raise ModelError("gbm volatility must be positive")

    @classmethod
    def cash(cls) -> "AssetModel":
        return cls("cash")

    @classmethod
    def gbm(cls, mu: float, sigma: float) -> "AssetModel":
        return cls("gbm", float(mu), float(sigma))


def derive_premiums(lam: float, theta: float, zeta: float, claim: ClaimDistribution):
    """Premium rates ``(c1, c2)`` under the expected value principle."""
    if not lam > 0:
        raise ModelError("claim intensity must be positive")
    if not theta > 0:
        raise ModelError("insurer safety loading theta must be positive")
    if not zeta > theta:
        raise ModelError("reinsurer loading zeta must exceed theta (c2 > c1)")
    mean = claim.mean
    return lam * (1.0 + theta) * mean, lam * (1.0 + zeta) * mean


@dataclass(frozen=True)
class ModelParams:
    lam: float
    r: float
    u: float
    horizon_T: float
    theta: float
    zeta: float
    claim: ClaimDistribution
    assets: tuple = (AssetModel.cash(),)
    c1: float = field(init=False)
    c2: float = field(init=False)

    def __post_init__(self):
        if not (self.u > 0 and self.horizon_T > 0):
            raise ModelError("initial surplus and horizon must be positive")
        if self.r == 0 or not math.isfinite(self.r):
            raise ModelError("inflation rate r must be a nonzero real")
        object.__setattr__(self, "assets", tuple(self.assets))
        if len(self.assets) < 1:
            raise ModelError("at least one asset is required")
        c1, c2 = derive_premiums(self.lam, self.theta, self.zeta, self.claim)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    @property
    def m(self) -> int:
        return len(self.assets)

    @property
    def has_risky_assets(self) -> bool:
        return any(a.kind != "cash" for a in self.assets)

    @property
    def min_retention(self) -> float:
        """Smallest admissible lower bound on b: 1 - c1/c2."""
        return 1.0 - self.c1 / self.c2


@dataclass(frozen=True, eq=False)
class Strategy:
    """Investment weights ``p`` on the simplex and retention level ``b``."""

    p: np.ndarray
    b: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "b", float(self.b))
        if p.size < 1:
            raise ValueError("strategy needs at least one weight")
        if np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOL * max(1.0, p.size / 100):
            raise ValueError("investment weights must be nonnegative and sum to 1")
        if not 0 < self.b <= 1:
            raise ValueError(f"retention b={self.b} outside (0, 1]")

    @classmethod
    def uniform(cls, m: int, b: float = 1.0) -> "Strategy":
        return cls(np.full(m, 1.0 / m), b)

    def as_vector(self) -> np.ndarray:
        return np.append(self.p, self.b)

    def __eq__(self, other):
        if not isinstance(other, Strategy):
            return NotImplemented
        return self.b == other.b and np.array_equal(self.p, other.p)

    def __repr__(self):
        return f"Strategy(p={self.p.tolist()}, b={self.b!r})"


@dataclass(frozen=True, eq=False)
class ScenarioSample:
    n_claims: int
    jump_times: np.ndarray
    claim_sizes: np.ndarray
    asset_prices: np.ndarray

    @property
    def has_claims(self) -> bool:
        return self.n_claims >= 1

    def __eq__(self, other):
        if not isinstance(other, ScenarioSample):
            return NotImplemented
        return (
            self.n_claims == other.n_claims
            and np.array_equal(self.jump_times, other.jump_times)
            and np.array_equal(self.claim_sizes, other.claim_sizes)
            and np.array_equal(self.asset_prices, other.asset_prices)
        )


class ScenarioBatch:
    """Struct-of-arrays storage for many scenarios (claims stored ragged)."""

    def __init__(self, counts, jump_times, claim_sizes, asset_prices):
        self.counts = np.ascontiguousarray(counts, dtype=np.int64)
        self.offsets = np.zeros(self.counts.size + 1, dtype=np.int64)
        np.cumsum(self.counts, out=self.offsets[1:])
        self.jump_times = np.ascontiguousarray(jump_times, dtype=float)
        self.claim_sizes = np.ascontiguousarray(claim_sizes, dtype=float)
        self.asset_prices = np.ascontiguousarray(asset_prices, dtype=float)
        if self.jump_times.size != self.offsets[-1] or self.claim_sizes.size != self.offsets[-1]:
            raise ValueError("claim arrays do not match counts")
        if self.asset_prices.ndim != 2 or self.asset_prices.shape[0] != self.counts.size:
            raise ValueError("asset_prices must have shape (n_scenarios, m)")

    def __len__(self):
        return self.counts.size

    @property
    def has_claims(self) -> np.ndarray:
        return self.counts >= 1

    def __getitem__(self, i) -> ScenarioSample:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return ScenarioSample(
            int(self.counts[i]),
            self.jump_times[lo:hi].copy(),
            self.claim_sizes[lo:hi].copy(),
            self.asset_prices[i].copy(),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_samples(cls, samples: Sequence[ScenarioSample]) -> "ScenarioBatch":
        if len(samples) == 0:
            raise ValueError("empty scenario list")
        return cls(
            [s.n_claims for s in samples],
            np.concatenate([np.asarray(s.jump_times, float) for s in samples]),
            np.concatenate([np.asarray(s.claim_sizes, float) for s in samples]),
            np.stack([np.asarray(s.asset_prices, float) for s in samples]),
        )

    @classmethod
    def concat(cls, batches: Sequence["ScenarioBatch"]) -> "ScenarioBatch":
        if len(batches) == 1:
            return batches[0]
        return cls(
            np.concatenate([b.counts for b in batches]),
            np.concatenate([b.jump_times for b in batches]),
            np.concatenate([b.claim_sizes for b in batches]),
            np.concatenate([b.asset_prices for b in batches]),
        )

    def subset(self, mask) -> "ScenarioBatch":
        mask = np.asarray(mask, dtype=bool)
        claim_mask = np.repeat(mask, self.counts)
        return ScenarioBatch(
            self.counts[mask],
            self.jump_times[claim_mask],
            self.claim_sizes[claim_mask],
            self.asset_prices[mask],
        )

    def inflated_totals(self, r: float) -> np.ndarray:
        """sum_i exp(r T_i) X_i for every scenario."""
        return kernels.inflated_totals(self.offsets, self.jump_times, self.claim_sizes, r)


def as_batch(scenarios) -> ScenarioBatch:
    if isinstance(scenarios, ScenarioBatch):
        return scenarios
    if isinstance(scenarios, ScenarioSample):
        return ScenarioBatch.from_samples([scenarios])
    return ScenarioBatch.from_samples(list(scenarios))


# -- scenario generation ----------------------------------------------------


def _interior_uniforms(rng, size, horizon):
    t = rng.random(size) * horizon
    bad = (t <= 0.0) | (t >= horizon)
    while bad.any():
        t[bad] = rng.random(int(bad.sum())) * horizon
        bad = (t <= 0.0) | (t >= horizon)
    return t


def _sorted_within(counts, values):
    width = int(counts.max()) if counts.size else 0
    if width <= 1:
        return values
    table = np.full((counts.size, width), np.inf)
    mask = np.arange(width)[None, :] < counts[:, None]
    table[mask] = values
    table.sort(axis=1)
    return table[mask]


def _terminal_prices(rng, assets, n, horizon):
    prices = np.ones((n, len(assets)))
    risky = [j for j, a in enumerate(assets) if a.kind == "gbm"]
    if risky:
        z = rng.standard_normal((n, len(risky)))
        mu = np.array([assets[j].mu for j in risky])
        sigma = np.array([assets[j].sigma for j in risky])
        prices[:, risky] = np.exp((mu - 0.5 * sigma**2) * horizon + sigma * math.sqrt(horizon) * z)
    return prices


def sample_batch(params: ModelParams, stream: RandomStream, n: int) -> ScenarioBatch:
    """Draw ``n`` scenarios from one stream (conditional-uniform jump times)."""
    rng = stream.generator()
    horizon = params.horizon_T
    counts = rng.poisson(params.lam * horizon, size=n)
    total = int(counts.sum())
    times = _sorted_within(counts, _interior_uniforms(rng, total, horizon))
    sizes = params.claim.sample(rng, total)
    prices = _terminal_prices(rng, params.assets, n, horizon)
    return ScenarioBatch(counts, times, sizes, prices)


def sample_batch_exponential_gaps(params: ModelParams, stream: RandomStream, n: int) -> ScenarioBatch:
    """Draw ``n`` scenarios by accumulating exponential inter-arrival gaps.

    Independent construction of the same law as :func:`sample_batch`; used as a
    cross-check only.
    """
    rng = stream.generator()
    horizon = params.horizon_T
    mean_gap = 1.0 / params.lam
    chunk = int(params.lam * horizon + 6 * math.sqrt(params.lam * horizon) + 10)
    counts = np.empty(n, dtype=np.int64)
    pieces = []
    for i in range(n):
        arrivals = np.cumsum(rng.exponential(mean_gap, size=chunk))
        while arrivals[-1] < horizon:
            more = arrivals[-1] + np.cumsum(rng.exponential(mean_gap, size=chunk))
            arrivals = np.concatenate([arrivals, more])
        kept = arrivals[: np.searchsorted(arrivals, horizon, side="left")]
        kept = kept[kept > 0.0]
        counts[i] = kept.size
        pieces.append(kept)
    times = np.concatenate(pieces) if pieces else np.empty(0)
    sizes = params.claim.sample(rng, int(counts.sum()))
    prices = _terminal_prices(rng, params.assets, n, horizon)
    return ScenarioBatch(counts, times, sizes, prices)


def sample_scenario(params: ModelParams, stream: RandomStream) -> ScenarioSample:
    return sample_batch(params, stream, 1)[0]


# -- surplus and ruin ---------------------------------------------------------


def _check_dims(params, p):
    if np.shape(p) != (params.m,):
        raise ValueError(f"strategy has {np.size(p)} weights but model has {params.m} assets")


def surplus_terminal(params: ModelParams, strategy: Strategy, scenario: ScenarioSample) -> float:
    _check_dims(params, strategy.p)
    b, T = strategy.b, params.horizon_T
    claims = math.fsum(
        b * math.exp(params.r * t) * x for t, x in zip(scenario.jump_times, scenario.claim_sizes)
    )
    invested = params.u * float(np.dot(strategy.p, scenario.asset_prices))
    return invested + params.c1 * T - (1.0 - b) * params.c2 * T - claims


def ruin_indicator(params: ModelParams, strategy: Strategy, scenario: ScenarioSample) -> int:
    if not scenario.has_claims:
        return 0
    return int(surplus_terminal(params, strategy, scenario) < 0.0)


def _require_cash_only(params):
    if params.has_risky_assets:
        raise UnsupportedModelError("path ruin is only available for models without risky assets")


def path_ruin_indicator_reinsurance_only(params: ModelParams, b: float, scenario: ScenarioSample) -> int:
    """Ruin at any time in [0, T] for a cash-only model.

    Between claims the surplus grows linearly, so checking right after each
    jump is exact.
    """
    _require_cash_only(params)
    drift = params.c1 - (1.0 - b) * params.c2
    cum = 0.0
    for t, x in zip(scenario.jump_times, scenario.claim_sizes):
        cum += b * math.exp(params.r * t) * x
        if params.u + drift * t - cum < 0.0:
            return 1
    return 0


def surplus_terminal_batch(params, p, b, batch: ScenarioBatch, totals=None) -> np.ndarray:
    """Vectorized terminal surplus; ``p`` need not lie on the simplex."""
    p = np.asarray(p, dtype=float)
    _check_dims(params, p)
    if totals is None:
        totals = batch.inflated_totals(params.r)
    T = params.horizon_T
    return params.u * (batch.asset_prices @ p) + params.c1 * T - (1.0 - b) * params.c2 * T - b * totals


def ruin_indicator_batch(params, p, b, batch: ScenarioBatch, totals=None) -> np.ndarray:
    surplus = surplus_terminal_batch(params, p, b, batch, totals)
    return ((surplus < 0.0) & batch.has_claims).astype(np.int8)


def path_ruin_batch(params, b, batch: ScenarioBatch) -> np.ndarray:
    _require_cash_only(params)
    drift = params.c1 - (1.0 - b) * params.c2
    return kernels.path_ruin(
        batch.offsets, batch.jump_times, batch.claim_sizes, params.r, params.u, drift, b
    )
