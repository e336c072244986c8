import math

import numpy as np
import pytest

from conftest import hand_model, reinsurance_model, scenario
from ruinopt import malliavin
from ruinopt.malliavin import WeightFunction
from ruinopt.model import AssetModel, ClaimDistribution, ModelParams, ScenarioBatch, Strategy
from ruinopt.optimizer import SpgConfig, batch_size, run_spg, step_size
from ruinopt.projection import FeasibleRegion, project_simplex_enumerate


class TestSchedules:
    def test_step(self):
        assert step_size(0, 3.0, 0.67) == 3.0
        assert step_size(99, 10.0, 0.67) == pytest.approx(0.457088189, abs=1e-9)
        g = [step_size(k, 1.0, 0.67) for k in range(500)]
        assert all(a > b for a, b in zip(g, g[1:]))

    def test_batch(self):
        assert batch_size(0, 1.0, 0.33) == 1
        assert batch_size(999, 1.0, 0.33) == 10
        m = [batch_size(k, 2.5, 0.33) for k in range(2000)]
        assert all(a <= b for a, b in zip(m, m[1:]))

    def test_holder_defaults(self):
        assert (SpgConfig(1.0).beta1, SpgConfig(1.0).beta2) == (0.67, 0.33)
        c = SpgConfig(1.0, holder_nu=33 / 67)
        assert c.beta1 == pytest.approx(0.67) and c.beta2 == pytest.approx(0.33)
        c = SpgConfig(1.0, holder_nu=1.0, beta1=0.9)
        assert (c.beta1, c.beta2) == (0.9, 0.5)

    @pytest.mark.parametrize("kw", [{"gamma_tilde": 0.0}, {"gamma_tilde": 1.0, "m_tilde": 0.0},
                                    {"gamma_tilde": 1.0, "beta1": 1.5}, {"gamma_tilde": 1.0, "beta2": -0.1},
                                    {"gamma_tilde": 1.0, "max_iters": 0}, {"gamma_tilde": 1.0, "holder_nu": 2.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SpgConfig(**kw)


def two_asset_hand():
    return hand_model(assets=(AssetModel.cash(), AssetModel.gbm(0.0, 0.2)))


class TestRunSpg:
    def test_one_iteration_by_hand(self):
        model = two_asset_hand()
        region = FeasibleRegion(2, 0.2)
        x0 = Strategy([0.5, 0.5], 0.5)
        s = scenario([0.5], [400.0], prices=(1.0, 2.0))
        trace = run_spg(model, region, SpgConfig(1.0, max_iters=1, eval_batch=0), WeightFunction(1.0), x0=x0,
                        batch_source=lambda k, n: ScenarioBatch.from_samples([s]))
        # single claim at T/2: B / D = -1 / (b e^{r/2} X)
        e = math.exp(0.025)
        g_p = -100.0 * np.array([1.0, 2.0]) / (0.5 * e * 400.0)
        g_b = -12.0 / (0.5 * e * 400.0)
        np.testing.assert_allclose(trace[0].gradient, [*g_p, g_b], rtol=1e-12)
        want_p = project_simplex_enumerate(x0.p - g_p)
        np.testing.assert_allclose(trace[1].strategy.p, want_p, rtol=1e-12)
        assert trace[1].strategy.b == pytest.approx(0.5 - g_b, rel=1e-12)
        np.testing.assert_allclose(want_p, [0.5 - 0.25 / e, 0.5 + 0.25 / e], rtol=1e-12)

    def test_no_ruin_fixed_point(self):
        model = ModelParams(1.0, 0.05, 100.0, 1.0, 0.1, 0.2, ClaimDistribution(1.0, 1e-6))
        x0 = Strategy([1.0], 0.6)
        trace = run_spg(model, FeasibleRegion(1, 0.2), SpgConfig(1.0, max_iters=40, eval_batch=500), x0=x0)
        assert all(r.strategy == x0 for r in trace.records)
        assert all(np.all(r.gradient == 0) for r in trace.records[:-1])
        assert trace.min_ruin == 0.0

    def test_trace_invariants(self):
        model = ModelParams(40.0, 0.05, 640.0, 1.0, 0.1, 0.5, ClaimDistribution(5, 3),
                            (AssetModel.cash(), AssetModel.gbm(0.05, 0.01), AssetModel.gbm(-0.02, 0.008)))
        region = FeasibleRegion.for_model(model, 0.4)
        cfg = SpgConfig(10.0, max_iters=60, eval_batch=2000, master_seed=3)
        trace = run_spg(model, region, cfg)
        assert len(trace) == 61
        assert trace[-1].gradient is None and math.isnan(trace[-1].gradmap_norm)
        for rec in trace.records:
            assert region.contains(rec.strategy)
            assert rec.gamma == step_size(rec.k, 10.0, 0.67)
            assert rec.batch_size == batch_size(rec.k, 1.0, 0.33)
        mins = [r.min_ruin_hat for r in trace.records]
        assert all(a >= b for a, b in zip(mins, mins[1:]))
        assert mins[-1] == min(r.ruin_hat for r in trace.records)
        assert trace.best_strategy() == trace[int(np.argmin([r.ruin_hat for r in trace.records]))].strategy

    def test_deterministic_and_worker_independent(self):
        model = reinsurance_model()
        region = FeasibleRegion.for_model(model, 0.07)
        runs = [run_spg(model, region, SpgConfig(1.0, max_iters=30, m_tilde=3000, eval_batch=1000,
                                                 master_seed=5, workers=w)) for w in (1, 1, 4)]
        for other in runs[1:]:
            for a, b in zip(runs[0].records, other.records):
                assert a.strategy == b.strategy and a.ruin_hat == b.ruin_hat
                assert (a.gradient is None and b.gradient is None) or a.gradient.tobytes() == b.gradient.tobytes()

    def test_seed_changes_path(self):
        model = reinsurance_model()
        region = FeasibleRegion.for_model(model, 0.07)
        a = run_spg(model, region, SpgConfig(1.0, max_iters=20, m_tilde=500, eval_batch=0, master_seed=1))
        b = run_spg(model, region, SpgConfig(1.0, max_iters=20, m_tilde=500, eval_batch=0, master_seed=2))
        assert any(ra.strategy != rb.strategy for ra, rb in zip(a.records, b.records))

    def test_infeasible_start(self):
        model = reinsurance_model()
        with pytest.raises(ValueError):
            run_spg(model, FeasibleRegion(1, 0.5), SpgConfig(1.0, max_iters=1), x0=Strategy([1.0], 0.3))
        with pytest.raises(ValueError):
            run_spg(model, FeasibleRegion(2, 0.5), SpgConfig(1.0, max_iters=1))

    def test_non_finite_gradient_aborts(self, monkeypatch):
        monkeypatch.setattr(malliavin.kernels, "malliavin_sums", lambda off, *a: np.full((off.size - 1, 5), np.nan))
        model = hand_model()
        bad = ScenarioBatch.from_samples([scenario([0.5], [400.0])])
        with pytest.raises(FloatingPointError):
            run_spg(model, FeasibleRegion(1, 0.2), SpgConfig(1.0, max_iters=2, eval_batch=0),
                    x0=Strategy([1.0], 0.5), batch_source=lambda k, n: bad)

    def test_callback_sees_every_record(self):
        seen = []
        model = reinsurance_model()
        run_spg(model, FeasibleRegion.for_model(model, 0.07), SpgConfig(1.0, max_iters=5, eval_batch=0),
                callback=lambda rec: seen.append(rec.k))
        assert seen == list(range(6))
