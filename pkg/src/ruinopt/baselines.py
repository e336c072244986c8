"""Monte Carlo ruin estimates, a finite-difference gradient oracle, and the
adjustment-coefficient retention level used as a classical baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ModelError, UnsupportedModelError
from .model import (
    ModelParams,
    Strategy,
    path_ruin_batch,
    ruin_indicator_batch,
    sample_batch,
    sample_batch_exponential_gaps,
)
from .streams import concat, map_blocks

GENERATORS = {"uniform": sample_batch, "gaps": sample_batch_exponential_gaps}


@dataclass(frozen=True)
class RuinEstimate:
    probability: float
    std_error: float
    n_samples: int
    kind: str = "terminal"

    @classmethod
    def from_indicators(cls, indicators, kind="terminal") -> "RuinEstimate":
        n = len(indicators)
        p = float(np.count_nonzero(indicators)) / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n, kind)


def combined_se(*estimates) -> float:
    return math.sqrt(sum(e.std_error**2 for e in estimates))


class RuinEvaluator:
    """Fixed set of evaluation scenarios reused across many strategies.

    Terminal ruin only needs each scenario's inflated claim total and asset
    prices, so those are cached and every evaluation costs O(n m).
    """

    def __init__(self, params: ModelParams, n: int, seed: int, purpose="evaluation",
                 iteration=0, workers=1, keep_paths=False, generator="uniform"):
        self.params = params
        gen = GENERATORS[generator]
        batches = map_blocks(lambda s, c: gen(params, s, c), seed, purpose, iteration, n, workers)
        self.totals = concat([b.inflated_totals(params.r) for b in batches])
        self.has_claims = concat([b.has_claims for b in batches])
        self.prices = concat([b.asset_prices for b in batches])
        self.batches = batches if keep_paths else None
        self.n = n

    def terminal(self, p, b) -> RuinEstimate:
        prm = self.params
        T = prm.horizon_T
        p = np.asarray(p, dtype=float)
        surplus = prm.u * (self.prices @ p) + prm.c1 * T - (1.0 - b) * prm.c2 * T - b * self.totals
        return RuinEstimate.from_indicators((surplus < 0.0) & self.has_claims)

    def path(self, b) -> RuinEstimate:
        if self.batches is None:
            raise ValueError("evaluator was built without keep_paths=True")
        ind = concat([path_ruin_batch(self.params, b, batch) for batch in self.batches])
        return RuinEstimate.from_indicators(ind, kind="path_reinsurance_only")


def mc_ruin_probability(params: ModelParams, strategy: Strategy, n: int, seed: int, kind="terminal",
                        purpose="evaluation", iteration=0, workers=1, generator="uniform") -> RuinEstimate:
    """Plain Monte Carlo estimate of terminal or path ruin over ``n`` fresh scenarios."""
    if kind not in ("terminal", "path_reinsurance_only"):
        raise ValueError(f"unknown ruin kind {kind!r}")
    if kind != "terminal" and params.has_risky_assets:
        raise UnsupportedModelError("path ruin is only available for models without risky assets")
    gen = GENERATORS[generator]

    def block(stream, count):
        batch = gen(params, stream, count)
        if kind == "terminal":
            return ruin_indicator_batch(params, strategy.p, strategy.b, batch)
        return path_ruin_batch(params, strategy.b, batch)

    ind = concat(map_blocks(block, seed, purpose, iteration, n, workers))
    return RuinEstimate.from_indicators(ind, kind)


@dataclass(frozen=True)
class FiniteDifference:
    gradient: np.ndarray
    std_error: np.ndarray
    coords: tuple


def _terminal_raw(params, p, b, n, seed, purpose, iteration, workers):
    def block(stream, count):
        return ruin_indicator_batch(params, p, b, sample_batch(params, stream, count))

    return RuinEstimate.from_indicators(concat(map_blocks(block, seed, purpose, iteration, n, workers)))


def finite_difference_gradient(params: ModelParams, strategy: Strategy, h, n: int, seed: int,
                               coords=None, b_min=None, workers=1) -> FiniteDifference:
    """Central differences of the Monte Carlo ruin probability.

    Each of the two evaluations per coordinate draws its own scenarios. The
    weight coordinates are perturbed one at a time, which leaves the simplex;
    the ruin probability is still defined there as long as the weights stay
    nonnegative. ``coords`` indexes the vector ``(p_0, ..., p_{m-1}, b)``.
    """
    m = params.m
    coords = tuple(range(m + 1)) if coords is None else tuple(coords)
    steps = np.broadcast_to(np.asarray(h, dtype=float), (m + 1,))
    lo_b = 0.0 if b_min is None else b_min
    grad = np.zeros(len(coords))
    se = np.zeros(len(coords))
    for slot, j in enumerate(coords):
        hj = steps[j]
        if not hj > 0:
            raise ValueError("finite-difference steps must be positive")
        p_up, p_dn = strategy.p.copy(), strategy.p.copy()
        b_up = b_dn = strategy.b
        if j < m:
            if strategy.p[j] - hj < 0:
                raise ValueError(f"perturbation of p[{j}] by {hj} leaves the nonnegative orthant")
            p_up[j] += hj
            p_dn[j] -= hj
        else:
            b_up, b_dn = strategy.b + hj, strategy.b - hj
            if b_up > 1.0 or b_dn <= lo_b:
                raise ValueError(f"perturbation of b by {hj} leaves the retention interval")
        up = _terminal_raw(params, p_up, b_up, n, seed, "fd", 2 * j, workers)
        dn = _terminal_raw(params, p_dn, b_dn, n, seed, "fd", 2 * j + 1, workers)
        grad[slot] = (up.probability - dn.probability) / (2 * hj)
        se[slot] = combined_se(up, dn) / (2 * hj)
    return FiniteDifference(grad, se, coords)


# -- adjustment coefficient ---------------------------------------------------


def adjustment_coefficient_b_star(alpha_shape: float, theta: float, zeta: float) -> float:
    """Retention maximizing the adjustment coefficient for gamma(alpha) claims.

    Closed form for the classical (non-inflated) model; depends only on the
    gamma shape and the two loadings.
    """
    if not alpha_shape > 0:
        raise ValueError("gamma shape must be positive")
    if not (theta > 0 and zeta >= theta):
        raise ValueError("need zeta >= theta > 0")
    a = alpha_shape
    num = a * (zeta - theta) * (1.0 - (1.0 + zeta) ** (-1.0 / (a + 1.0)))
    den = a * zeta + (a + 1.0) * (1.0 - (1.0 + zeta) ** (a / (a + 1.0)))
    return min(num / den, 1.0)


def adjustment_coefficient(params: ModelParams, b: float, eps: float = 1e-9) -> float:
    """Positive root R(b) of lam (M_X(b s) - 1) = (c1 - (1 - b) c2) s, no inflation."""
    claim = params.claim
    c = params.c1 - (1.0 - b) * params.c2
    if not c > params.lam * b * claim.mean:
        raise ModelError(f"no positive Lundberg root at b={b}: premium does not exceed expected claims")

    def g(s):
        return params.lam * float(claim.mgf_minus_one(b * s)) - c * s

    hi = (1.0 - eps) / (b * claim.scale)
    lo = hi * 1e-6
    for _ in range(200):
        if g(lo) < 0:
            break
        lo *= 0.5
    else:
        raise ModelError(f"could not bracket the Lundberg root at b={b}")
    if g(hi) <= 0:
        raise ModelError(f"no sign change below the mgf pole at b={b}")
    return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _golden_max(f, lo, hi, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def lundberg_b_star_oracle(params: ModelParams, b_min: float | None = None, grid: int = 201,
                           tol: float = 1e-9) -> float:
    """Maximize R(b) numerically over [b_min, 1]: grid scan, then golden section."""
    lo_b = params.min_retention if b_min is None else b_min
    lo_b = max(lo_b, 1e-9)
    bs = np.linspace(lo_b, 1.0, grid)

    def R(b):
        try:
            return adjustment_coefficient(params, b)
        except ModelError:
            return 0.0

    values = np.array([R(b) for b in bs])
    if not np.any(values > 0):
        raise ModelError("no retention level in range has a positive adjustment coefficient")
    k = int(np.argmax(values))
    left = bs[max(k - 1, 0)]
    right = bs[min(k + 1, grid - 1)]
    return _golden_max(R, left, right, tol)
