"""Tests for the Monte Carlo harness: determinism, aggregation, metrics."""

import math

import numpy as np
import pytest

import stratsurv.simulate as sim
from stratsurv.errors import InvalidParameterError
from stratsurv.simulate import (
    COX_KEYS,
    TEST_KEYS,
    AggregateMetrics,
    ReplicateResult,
    SimConfig,
    aggregate,
    run_replicate,
    run_replicates,
    run_study,
)
from stratsurv.trial import ScenarioSpec, TrialDesign


def _config(hr=0.6, d=30, replicates=40, seed=555, **kw):
    design = TrialDesign.from_event_target(true_hr=hr, target_events=d)
    return SimConfig(scenario=ScenarioSpec.no_prognostic(), design=design,
                     replicates=replicates, master_seed=seed, **kw)


def _result(hr=(0.5, 0.5, 0.5), se=(0.1, 0.1, 0.1), converged=(True,) * 3,
            reject=(False,) * 5, degenerate=(False,) * 5):
    return ReplicateResult(hr=hr, log_hr_se=se, converged=converged,
                           reject=reject, degenerate=degenerate)


class TestRunReplicate:
    def test_deterministic_per_index(self):
        cfg = _config()
        assert run_replicate(cfg, 5) == run_replicate(cfg, 5)
        assert run_replicate(cfg, 5) != run_replicate(cfg, 6)

    def test_estimates_reasonable(self):
        cfg = _config(hr=0.75, d=380, replicates=1)
        res = run_replicate(cfg, 0)
        assert all(c for c in res.converged)
        target = math.sqrt(4.0 / 380.0)
        for se in res.log_hr_se:
            assert abs(se - target) < 0.35 * target

    def test_mean_se_near_asymptotic(self):
        cfg = _config(hr=0.75, d=380, replicates=60)
        ses = [run_replicate(cfg, i).log_hr_se[0] for i in range(60)]
        assert np.mean(ses) == pytest.approx(math.sqrt(4.0 / 380.0), rel=0.05)


class TestWorkerDeterminism:
    def test_worker_count_does_not_change_results(self):
        cfg = _config(replicates=30)
        serial = run_replicates(cfg, workers=1)
        parallel = run_replicates(cfg, workers=2)
        assert serial == parallel

    def test_aggregate_identical_across_workers(self):
        cfg = _config(replicates=30)
        a = aggregate(run_replicates(cfg, workers=1), cfg.design.true_hr)
        b = aggregate(run_replicates(cfg, workers=2), cfg.design.true_hr)
        assert a == b


class TestAggregate:
    def test_exact_estimates_zero_bias_mse(self):
        results = [_result(hr=(0.5,) * 3) for _ in range(4)]
        agg = aggregate(results, true_hr=0.5)
        for key in COX_KEYS:
            assert agg.methods[key].avg_bias == 0.0
            assert agg.methods[key].mse == 0.0

    def test_hand_arithmetic(self):
        results = [_result(hr=(0.4,) * 3), _result(hr=(0.6,) * 3)]
        agg = aggregate(results, true_hr=0.5)
        m = agg.methods["unstrat_cox"]
        assert m.avg_bias == pytest.approx(0.0, abs=1e-15)
        assert m.mse == pytest.approx(0.01, rel=1e-12)

    def test_non_converged_excluded_and_counted(self):
        good = _result(hr=(0.5,) * 3)
        bad = _result(hr=(float("nan"),) * 3, se=(float("nan"),) * 3,
                      converged=(False,) * 3,
                      degenerate=(False, False, True, True, True))
        agg = aggregate([good, bad, good], true_hr=0.5)
        m = agg.methods["mult_cox"]
        assert m.replicates_used == 2
        assert m.replicates_excluded == 1
        assert m.avg_bias == 0.0
        assert agg.degenerate_counts["mult_cox"] == 1

    def test_degenerate_tests_are_non_rejections(self):
        rejecting = _result(reject=(True,) * 5)
        degenerate = _result(reject=(False,) * 5, degenerate=(True,) * 5)
        agg = aggregate([rejecting, degenerate], true_hr=0.5)
        for key in TEST_KEYS:
            assert agg.power[key] == 0.5

    def test_zero_usable_replicates_reported_absent(self):
        bad = _result(converged=(False,) * 3)
        agg = aggregate([bad], true_hr=0.5)
        for key in COX_KEYS:
            assert agg.methods[key].avg_bias is None
            assert agg.methods[key].replicates_excluded == 1

    def test_empty_results_rejected(self):
        with pytest.raises(InvalidParameterError):
            aggregate([], true_hr=0.5)

    def test_se_scale_hr_multiplies(self):
        results = [_result(hr=(0.5,) * 3, se=(0.2,) * 3)]
        log_scale = aggregate(results, 0.5, se_scale="log")
        hr_scale = aggregate(results, 0.5, se_scale="hr")
        assert log_scale.methods["strat_cox"].avg_se == pytest.approx(0.2)
        assert hr_scale.methods["strat_cox"].avg_se == pytest.approx(0.1)

    def test_mse_decomposes_into_bias_and_variance(self):
        cfg = _config(replicates=200, d=40)
        results = run_replicates(cfg, workers=1)
        agg = aggregate(results, cfg.design.true_hr)
        hrs = np.array([r.hr[0] for r in results])
        m = agg.methods["unstrat_cox"]
        variance = float(np.mean((hrs - hrs.mean()) ** 2))
        assert m.mse == pytest.approx(m.avg_bias ** 2 + variance, abs=1e-10)
        assert m.mse >= m.avg_bias ** 2 - 1e-12


class TestRunStudy:
    def test_rows_in_input_order(self):
        configs = [_config(hr=0.5, d=20, replicates=10, seed=1),
                   _config(hr=0.7, d=25, replicates=10, seed=2)]
        rows = run_study(configs, workers=1)
        assert [r.config.design.true_hr for r in rows] == [0.5, 0.7]
        assert all(r.error is None for r in rows)

    def test_empty_config_list_rejected(self):
        with pytest.raises(InvalidParameterError):
            run_study([])

    def test_failing_row_does_not_abort_others(self, monkeypatch):
        configs = [_config(seed=1, replicates=5), _config(seed=2, replicates=5)]
        real = sim.run_replicate

        def flaky(config, index):
            if config.master_seed == 1:
                raise RuntimeError("boom")
            return real(config, index)

        monkeypatch.setattr(sim, "run_replicate", flaky)
        rows = run_study(configs, workers=1)
        assert rows[0].metrics is None and "boom" in rows[0].error
        assert rows[1].metrics is not None and rows[1].error is None

    def test_null_hazard_ratio_centered(self):
        cfg = _config(hr=1.0, d=60, replicates=120, seed=77)
        rows = run_study([cfg], workers=2)
        agg = rows[0].metrics
        assert isinstance(agg, AggregateMetrics)
        # HR estimates center on 1 under the null (loose MC tolerance)
        assert agg.methods["unstrat_cox"].avg_bias == pytest.approx(0.0, abs=0.1)
        for key in TEST_KEYS:
            assert agg.power[key] < 0.15


class TestSimConfigValidation:
    def test_replicates_positive(self):
        with pytest.raises(InvalidParameterError):
            _config(replicates=0)

    def test_tie_method_checked(self):
        with pytest.raises(InvalidParameterError):
            _config(tie_method="exact")

    def test_se_scale_checked(self):
        with pytest.raises(InvalidParameterError):
            _config(se_scale="linear")
