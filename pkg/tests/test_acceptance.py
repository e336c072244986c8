"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Statistical thresholds are applied exactly as stated (3 or 2 combined
standard errors); seeds are fixed so every run is reproducible.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from ruinopt.baselines import (
    RuinEvaluator,
    adjustment_coefficient_b_star,
    combined_se,
    finite_difference_gradient,
    lundberg_b_star_oracle,
    mc_ruin_probability,
)
from ruinopt.config import load_config
from ruinopt.experiments import run_compare, run_optimize
from ruinopt.malliavin import WeightFunction, gradient_monte_carlo, inverse_w4_integral, lemma3_diagnostic
from ruinopt.model import AssetModel, ClaimDistribution, ModelParams, Strategy, sample_batch
from ruinopt.optimizer import run_spg
from ruinopt.projection import project_simplex
from ruinopt.diagnostics import projection_sweep
from ruinopt.streams import RandomStream

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def comparison_model(assets=(AssetModel.cash(),), shape=5.0):
    """lambda=40, r=0.03, u=200, T=5, theta=0.08, zeta=0.15, Gamma(shape, 3) claims."""
    return ModelParams(40.0, 0.03, 200.0, 5.0, 0.08, 0.15, ClaimDistribution(shape, 3.0), assets)


def test_ac1_inverse_weight_identity(report):
    t0 = time.perf_counter()
    model = ModelParams(40.0, 0.05, 640.0, 5.0, 0.08, 0.32, ClaimDistribution(5, 3))
    wf = WeightFunction(5.0, 0.125)
    res = lemma3_diagnostic(model, wf, 100_000, seed=2024)
    quad_err = abs(inverse_w4_integral(wf) - math.pi)
    elapsed = time.perf_counter() - t0
    ok = abs(res.z_score) <= 3 and quad_err <= 1e-8 and elapsed < 30
    report("AC-1", ok, f"empirical={res.empirical_mean:.4f} analytic={res.analytic_value:.4f} "
                       f"se={res.std_error:.4f} z={res.z_score:.2f} quad_err={quad_err:.1e} t={elapsed:.1f}s")
    assert ok


def _unbiasedness(model, x, coord, seed):
    wf = WeightFunction(model.horizon_T)
    mall = gradient_monte_carlo(model, x, wf, 1_000_000, seed=seed, purpose="ac2-gradient")
    fd = finite_difference_gradient(model, x, 0.02, 1_000_000, seed=seed + 1, coords=(coord,))
    diff = mall.mean[coord] - fd.gradient[0]
    z = diff / math.hypot(mall.std_error[coord], fd.std_error[0])
    return mall.mean[coord], mall.std_error[coord], fd.gradient[0], fd.std_error[0], z, mall.max_share


def test_ac2_gradient_unbiasedness(report):
    t0 = time.perf_counter()
    lines = []
    zs = []
    cases = [
        ("b", comparison_model(), Strategy([1.0], 0.5), 1),
        ("p_0", comparison_model((AssetModel.cash(), AssetModel.gbm(0.05, 0.2))), Strategy([0.5, 0.5], 0.5), 0),
    ]
    for label, model, x, coord in cases:
        m, m_se, f, f_se, z, share = _unbiasedness(model, x, coord, seed=17)
        zs.append(z)
        lines.append(f"{label}: malliavin={m:.4g}±{m_se:.3g} fd={f:.4g}±{f_se:.3g} z={z:.2f} max_share={share:.2f}")
    elapsed = time.perf_counter() - t0
    ok = all(abs(z) <= 3 for z in zs) and elapsed < 300
    report("AC-2", ok, "; ".join(lines) + f" t={elapsed:.0f}s")
    assert ok


def test_ac3_convergence_desk_scale(report):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "convergence_n11.yaml")
    model = cfg.build_model()
    region = cfg.build_region(model)
    traces = {}
    for gamma_tilde in (1.0, 10.0):
        spg = cfg.spg_config()
        spg.gamma_tilde = gamma_tilde
        traces[gamma_tilde] = run_spg(model, region, spg, cfg.weight_function(), x0=Strategy.uniform(model.m, 1.0))
    elapsed = time.perf_counter() - t0

    def argmin_record(tr):
        return min(tr.records, key=lambda r: (r.ruin_hat, r.k))

    parts, ok = [], elapsed < 300
    for g, tr in traces.items():
        start, best = tr[0], argmin_record(tr)
        se = math.hypot(start.ruin_se, best.ruin_se)
        decreased = start.ruin_hat - tr.min_ruin > 2 * se
        norms = np.array([r.gradmap_norm for r in tr.records[:-1]])
        trend = norms[-50:].mean() < norms[:50].mean()
        feasible = all(region.contains(r.strategy) for r in tr.records)
        ok &= decreased and trend and feasible and len(tr) == 301
        parts.append(f"gamma={g:g}: F0={start.ruin_hat:.4f}±{start.ruin_se:.4f} min={tr.min_ruin:.4f} "
                     f"gradmap lead/trail={norms[:50].mean():.3g}/{norms[-50:].mean():.3g} feasible={feasible}")
    b1, b10 = argmin_record(traces[1.0]), argmin_record(traces[10.0])
    direction = traces[10.0].min_ruin <= traces[1.0].min_ruin + 2 * math.hypot(b1.ruin_se, b10.ruin_se)
    ok &= direction
    report("AC-3", ok, "; ".join(parts) + f"; larger-step direction={direction} t={elapsed:.1f}s")
    assert ok


def test_ac4_projection(report):
    t0 = time.perf_counter()
    stats_ = projection_sweep(1000, seed=4)
    rng = np.random.default_rng(5)
    worst = np.inf
    for _ in range(1000):
        m = int(rng.integers(2, 6))
        a, b = rng.normal(scale=3.0, size=(2, m))
        worst = min(worst, np.linalg.norm(a - b) - np.linalg.norm(project_simplex(a) - project_simplex(b)))
    elapsed = time.perf_counter() - t0
    ok = stats_["violations"] == 0 and stats_["max_oracle_error"] <= 1e-8 and worst >= -1e-10 and elapsed < 10
    report("AC-4", ok, f"oracle_err={stats_['max_oracle_error']:.1e} descent_slack={stats_['lemma41_min_slack']:.1e} "
                       f"lipschitz_slack={stats_['lemma42_min_slack']:.1e} nonexpansive_slack={worst:.1e} "
                       f"t={elapsed:.1f}s")
    assert ok


def test_ac5_adjustment_comparison(report, tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "compare_gamma5.yaml")
    assert cfg.run.repetitions == 20 and cfg.spg.gamma_tilde == 1.0 and cfg.spg.max_iters == 300
    summary = run_compare(cfg, tmp_path, log=lambda *a: None)
    rows = (tmp_path / "compare.csv").read_text().splitlines()[1:]
    table = [r.split(",") for r in rows]
    runs, star = table[:-1], table[-1]
    term = np.array([float(r[3]) for r in runs])
    term_se = np.array([float(r[4]) for r in runs])
    median = float(np.median(term))
    order = np.argsort(term, kind="stable")
    median_se = float(np.mean(term_se[order[9:11]]))
    star_p, star_se = float(star[3]), float(star[4])
    bound = star_p + 2 * math.hypot(median_se, star_se)
    dominance = all(float(r[5]) >= float(r[3]) for r in table)
    elapsed = time.perf_counter() - t0
    ok = len(runs) == 20 and median <= bound and dominance and elapsed < 900
    report("AC-5", ok, f"median terminal={median:.4f} b*={summary['b_star']:.6f} ruin(b*)={star_p:.4f}±{star_se:.4f} "
                       f"bound={bound:.4f} path>=terminal={dominance} t={elapsed:.1f}s")
    assert ok


def test_ac6_generator_agreement(report):
    t0 = time.perf_counter()
    model = comparison_model()
    x = Strategy([1.0], 0.5)
    a = mc_ruin_probability(model, x, 100_000, seed=61, purpose="ac6", generator="uniform")
    b = mc_ruin_probability(model, x, 100_000, seed=62, purpose="ac6", generator="gaps")
    z = (a.probability - b.probability) / combined_se(a, b)
    elapsed = time.perf_counter() - t0
    ok = abs(z) <= 3 and elapsed < 60
    report("AC-6", ok, f"uniform={a.probability:.5f}±{a.std_error:.5f} gaps={b.probability:.5f}±{b.std_error:.5f} "
                       f"z={z:.2f} t={elapsed:.1f}s")
    assert ok


def test_ac7_oracle_agreement(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for alpha in (5, 10, 15):
        closed = adjustment_coefficient_b_star(alpha, 0.08, 0.15)
        oracle = lundberg_b_star_oracle(comparison_model(shape=alpha), b_min=0.07)
        ok &= abs(closed - oracle) <= 1e-4
        parts.append(f"alpha={alpha}: closed={closed:.6f} oracle={oracle:.6f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5
    report("AC-7a", ok, "; ".join(parts) + f" t={elapsed:.2f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="the stated 0.9102 is the alpha=10 value; alpha=5 gives 0.9086")
def test_ac7_stated_alpha5_value(report):
    closed = adjustment_coefficient_b_star(5, 0.08, 0.15)
    oracle = lundberg_b_star_oracle(comparison_model(shape=5), b_min=0.07)
    ok = round(closed, 4) == 0.9102 and round(oracle, 4) == 0.9102
    report("AC-7b", ok, f"b*(alpha=5) closed={closed:.6f} oracle={oracle:.6f} expected 0.9102 to 4 decimals")
    assert ok


def test_ac8_determinism(report, tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(CONFIGS / "convergence_n11.yaml")
    blobs = []
    for i, workers in enumerate((1, 1, 4)):
        out = tmp_path / f"run{i}"
        run_optimize(cfg.with_overrides(workers=workers), out, log=lambda *a: None)
        blobs.append((out / "trace.csv").read_bytes())
    elapsed = time.perf_counter() - t0
    ok = blobs[0] == blobs[1] == blobs[2] and elapsed < 60
    report("AC-8", ok, f"identical={blobs[0] == blobs[1]} workers1vs4={blobs[0] == blobs[2]} "
                       f"bytes={len(blobs[0])} t={elapsed:.1f}s")
    assert ok


def test_ac9_single_jump_uniform(report):
    t0 = time.perf_counter()
    model = ModelParams(1.0, 0.05, 10.0, 5.0, 0.1, 0.2, ClaimDistribution(2, 1))
    lam_T = model.lam * model.horizon_T
    # P(N_T = 1) = lam_T e^{-lam_T}; draw enough scenarios for 10^4 single-claim ones
    batch = sample_batch(model, RandomStream(99, "ac9"), int(1.3e4 / (lam_T * math.exp(-lam_T))))
    t1 = batch.jump_times[batch.offsets[:-1][batch.counts == 1]][:10_000]
    d = stats.kstest(t1 / model.horizon_T, "uniform").statistic
    limit = 1.63 / math.sqrt(t1.size)
    elapsed = time.perf_counter() - t0
    ok = t1.size == 10_000 and d < limit and elapsed < 10
    report("AC-9", ok, f"n={t1.size} D_n={d:.5f} limit={limit:.5f} t={elapsed:.2f}s")
    assert ok
