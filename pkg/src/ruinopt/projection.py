"""Euclidean projection onto the feasible set (simplex x retention interval)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import ModelParams, Strategy


def project_simplex(v) -> np.ndarray:
    """Project ``v`` onto the unit simplex by sort-and-threshold.

    Finds the threshold ``tau`` such that ``max(v - tau, 0)`` sums to one.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if v.size == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    support = np.nonzero(u - css / ranks > 0)[0][-1]
    tau = css[support] / (support + 1)
    return np.maximum(v - tau, 0.0)


def project_interval(x: float, lo: float, hi: float) -> float:
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    return float(min(max(x, lo), hi))


@dataclass(frozen=True)
class FeasibleRegion:
    m: int
    b_min: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("region needs at least one asset")
        if not 0 < self.b_min <= 1:
            raise ValueError(f"b_min={self.b_min} must lie in (0, 1]")

    @classmethod
    def for_model(cls, params: ModelParams, b_min: float) -> "FeasibleRegion":
        """Region attached to a model; checks ``b_min >= 1 - c1/c2``."""
        if b_min < params.min_retention:
            raise ModelError(
                f"b_min={b_min} is below 1 - c1/c2 = {params.min_retention:.6g}; "
                "the insurer could be ruined without any claim"
            )
        return cls(params.m, b_min)

    def contains(self, strategy: Strategy, tol: float = 1e-12) -> bool:
        return (
            strategy.p.size == self.m
            and bool(np.all(strategy.p >= 0))
            and abs(strategy.p.sum() - 1.0) <= tol * max(1.0, self.m / 100)
            and self.b_min <= strategy.b <= 1.0
        )


def project_feasible(region: FeasibleRegion, x) -> Strategy:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != region.m + 1:
        raise ValueError(f"expected a vector of length {region.m + 1}, got {x.size}")
    return Strategy(project_simplex(x[:-1]), project_interval(x[-1], region.b_min, 1.0))


def projected_gradient_mapping(region: FeasibleRegion, x: Strategy, g, gamma: float) -> np.ndarray:
    """(x - proj(x - gamma g)) / gamma."""
    if not gamma > 0:
        raise ValueError("step gamma must be positive")
    xv = x.as_vector()
    g = np.asarray(g, dtype=float)
    if g.shape != xv.shape:
        raise ValueError("gradient and point have different dimensions")
    x_plus = project_feasible(region, xv - gamma * g).as_vector()
    return (xv - x_plus) / gamma


def project_simplex_enumerate(v) -> np.ndarray:
    """Simplex projection by trying every support set; O(2^m), small m only.

    For a fixed support S the equality-constrained minimizer is
    y_S = v_S - (sum(v_S) - 1) / |S|; the best feasible candidate wins.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    m = v.size
    if m == 0 or m > 16:
        raise ValueError("enumeration oracle supports 1 <= m <= 16")
    best, best_dist = None, np.inf
    for bits in range(1, 1 << m):
        support = np.array([(bits >> j) & 1 for j in range(m)], dtype=bool)
        y = np.zeros(m)
        y[support] = v[support] - (v[support].sum() - 1.0) / support.sum()
        if np.any(y[support] < 0):
            continue
        dist = float(np.sum((v - y) ** 2))
        if dist < best_dist:
            best, best_dist = y, dist
    return best
