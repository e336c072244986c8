"""Self-checks bundled behind ``ruinopt diagnose``."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .baselines import adjustment_coefficient_b_star, finite_difference_gradient, lundberg_b_star_oracle
from .malliavin import WeightFunction, gradient_monte_carlo, lemma3_diagnostic
from .model import Strategy
from .projection import (
    FeasibleRegion,
    project_feasible,
    project_simplex,
    project_simplex_enumerate,
    projected_gradient_mapping,
)

Z_LIMIT = 3.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    stats: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.stats.items())
        return f"[{status}] {self.name}: margin={self.margin:.4g} ({shown})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def check_lemma3(model, wf, n, seed, workers=1) -> CheckResult:
    res = lemma3_diagnostic(model, wf, n, seed, workers)
    z = res.z_score
    return CheckResult("lemma3_identity", abs(z) <= Z_LIMIT, Z_LIMIT - abs(z), {
        "empirical": res.empirical_mean, "analytic": res.analytic_value, "std_error": res.std_error, "z": z,
    })


def check_unbiasedness(model, region, wf, n_grad, n_fd, h, seed, strategy_b=None, workers=1) -> CheckResult:
    """Malliavin mean against central finite differences on b (and p_0 when m > 1)."""
    b = (region.b_min + 1.0) / 2.0 if strategy_b is None else strategy_b
    x = Strategy.uniform(model.m, b)
    coords = (0, model.m) if model.m > 1 else (model.m,)
    steps = np.full(model.m + 1, h)
    steps[:-1] = min(h, 0.5 / model.m)
    mall = gradient_monte_carlo(model, x, wf, n_grad, seed, purpose="diagnose-gradient", workers=workers)
    fd = finite_difference_gradient(model, x, steps, n_fd, seed + 1, coords=coords, b_min=region.b_min,
                                    workers=workers)
    idx = list(coords)
    diff = mall.mean[idx] - fd.gradient
    z = diff / np.sqrt(mall.std_error[idx] ** 2 + fd.std_error**2)
    worst = float(np.max(np.abs(z)))
    return CheckResult("gradient_unbiasedness", worst <= Z_LIMIT, Z_LIMIT - worst, {
        "coords": list(coords), "malliavin": mall.mean[idx].tolist(), "finite_difference": fd.gradient.tolist(),
        "z": z.tolist(), "max_sample_share": mall.max_share,
    })


def projection_sweep(n_points, seed, dims=(2, 3, 4, 5), tol_oracle=1e-8, slack=-1e-10):
    """Oracle agreement and the two projected-gradient-mapping inequalities on random inputs."""
    rng = np.random.default_rng(seed)
    max_err = 0.0
    lemma41_min = np.inf
    lemma42_min = np.inf
    bad = 0
    for m in dims:
        for _ in range(n_points):
            v = rng.normal(scale=rng.choice([0.1, 1.0, 10.0]), size=m)
            err = float(np.max(np.abs(project_simplex(v) - project_simplex_enumerate(v))))
            max_err = max(max_err, err)
            bad += err > tol_oracle

            region = FeasibleRegion(m, float(rng.uniform(0.01, 0.9)))
            x = project_feasible(region, rng.normal(size=m + 1))
            gamma = float(10 ** rng.uniform(-2, 1))
            g1, g2 = rng.normal(scale=3.0, size=(2, m + 1))
            P1 = projected_gradient_mapping(region, x, g1, gamma)
            P2 = projected_gradient_mapping(region, x, g2, gamma)
            s41 = float(g1 @ P1 - P1 @ P1)
            s42 = float(np.linalg.norm(g1 - g2) - np.linalg.norm(P1 - P2))
            lemma41_min = min(lemma41_min, s41)
            lemma42_min = min(lemma42_min, s42)
            bad += (s41 < slack) + (s42 < slack)
    return {"violations": int(bad), "max_oracle_error": max_err,
            "lemma41_min_slack": lemma41_min, "lemma42_min_slack": lemma42_min}


def check_projection(n_points, seed) -> CheckResult:
    stats = projection_sweep(n_points, seed)
    return CheckResult("projection_sweep", stats["violations"] == 0, -float(stats["violations"]), stats)


def check_b_star(model, b_min, tol=1e-4) -> CheckResult:
    closed = adjustment_coefficient_b_star(model.claim.shape, model.theta, model.zeta)
    oracle = lundberg_b_star_oracle(model, b_min=b_min)
    diff = abs(closed - oracle)
    return CheckResult("adjustment_coefficient_cross_check", diff <= tol, tol - diff,
                       {"closed_form": closed, "lundberg_oracle": oracle, "abs_diff": diff})


def run_diagnostics(cfg, derivative_sign: float = 1.0, progress=None) -> list:
    """Run every check for an :class:`~ruinopt.config.ExperimentConfig`.

    ``derivative_sign=-1`` corrupts the weight-function derivative, which must
    make the unbiasedness check fail.
    """
    model = cfg.build_model()
    region = cfg.build_region(model)
    wf = dataclasses.replace(cfg.weight_function(), derivative_sign=derivative_sign)
    d, seed, workers = cfg.diagnose, cfg.run.master_seed, cfg.run.workers
    # the inverse-fourth-power check only has a usable standard error while
    # 1/w^8 stays integrable (a < 1/8), so it may run at its own exponent
    wf3 = wf if d.lemma3_exponent is None else WeightFunction(model.horizon_T, d.lemma3_exponent)
    steps = [
        lambda: check_lemma3(model, wf3, d.lemma3_samples, seed, workers),
        lambda: check_unbiasedness(model, region, wf, d.gradient_samples, d.fd_samples, d.fd_step, seed,
                                   d.strategy_b, workers),
        lambda: check_projection(d.projection_points, seed),
        lambda: check_b_star(model, cfg.model.b_min),
    ]
    results = []
    for step in steps:
        results.append(step())
        if progress is not None:
            progress(results[-1])
    return results
