"""Simulation engine: determinism, draw correctness, and aggregation."""

import dataclasses
import math

import numpy as np
import pytest

from meanerr.estimators import (
    ExpRatio,
    MeanPerUnit,
    PowerExpRatio,
    WeightedDifference,
    WeightedPowerExpRatio,
    evaluate,
)
from meanerr.moments import PopulationParams
from meanerr.simulate import (
    AllReplicatesSkippedError,
    ConfigError,
    ErrorLaw,
    SimulationConfig,
    SimulationResult,
    _aggregate_spec,
    _standardized_errors,
    _substream,
    convergence_sweep,
    draw_replicate,
    run_monte_carlo,
    worker_count,
)
from meanerr.theory import theory_mse

SEED = 20260817


@pytest.fixture
def config(table_params):
    return SimulationConfig(params=table_params, replicates=100, seed=SEED)


def replay_truth(params, seed, index, n):
    """Independent reconstruction of the truth block of one substream."""
    rng = np.random.Generator(np.random.Philox(key=seed, counter=index << 128))
    z = rng.standard_normal(2 * n)
    y = params.mu_y + math.sqrt(params.sigma_y2) * z[:n]
    x = params.mu_x + math.sqrt(params.sigma_x2) * (
        params.rho * z[:n] + math.sqrt(1.0 - params.rho**2) * z[n:])
    return y, x


class TestConfigValidation:
    def test_accepts_valid(self, table_params):
        cfg = SimulationConfig(params=table_params, replicates=100,
                               seed=2**64 - 1, sample_n=2)
        assert cfg.sample_size == 2

    def test_sample_size_defaults_to_params_n(self, config):
        assert config.sample_size == config.params.n == 10

    @pytest.mark.parametrize("kwargs", [
        {"replicates": 99},
        {"replicates": 100.0},
        {"replicates": True},
        {"seed": -1},
        {"seed": 2**64},
        {"seed": 1.5},
        {"sample_n": 1},
        {"sample_n": 10.0},
        {"error_law": "gaussian"},
        {"error_law": ErrorLaw.STUDENT_T},                    # df missing
        {"error_law": ErrorLaw.STUDENT_T, "error_df": 4},     # var of e^2 infinite
        {"error_law": ErrorLaw.STUDENT_T, "error_df": math.inf},
        {"error_law": ErrorLaw.STUDENT_T, "error_df": True},
        {"error_df": 6.0},                                    # df without the law
    ])
    def test_rejections(self, table_params, kwargs):
        base = dict(params=table_params, replicates=100, seed=SEED)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            SimulationConfig(**base)

    def test_rejects_non_params(self):
        with pytest.raises(ConfigError):
            SimulationConfig(params={"n": 10}, replicates=100, seed=SEED)

    def test_student_t_accepts_valid_df(self, table_params):
        cfg = SimulationConfig(params=table_params, replicates=100, seed=SEED,
                               error_law=ErrorLaw.STUDENT_T, error_df=6.0)
        assert cfg.error_df == 6.0


class TestWorkerCount:
    def test_default_is_one(self, monkeypatch):
        monkeypatch.delenv("ME_LAB_THREADS", raising=False)
        assert worker_count() == 1

    def test_reads_variable(self, monkeypatch):
        monkeypatch.setenv("ME_LAB_THREADS", "4")
        assert worker_count() == 4

    @pytest.mark.parametrize("raw", ["0", "-2", "abc", "1.5"])
    def test_rejects_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("ME_LAB_THREADS", raw)
        with pytest.raises(ConfigError):
            worker_count()


class TestDrawReplicate:
    def test_deterministic_in_seed_and_index(self, config):
        a = draw_replicate(config, 5)
        b = draw_replicate(config, 5)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.x, b.x)

    def test_distinct_indices_differ(self, config):
        a = draw_replicate(config, 0)
        b = draw_replicate(config, 1)
        assert not np.array_equal(a.y, b.y)

    def test_distinct_seeds_differ(self, config):
        other = dataclasses.replace(config, seed=SEED + 1)
        assert not np.array_equal(draw_replicate(config, 0).y,
                                  draw_replicate(other, 0).y)

    def test_sample_n_override(self, config):
        assert len(draw_replicate(config, 0)) == 10
        wide = dataclasses.replace(config, sample_n=37)
        assert len(draw_replicate(wide, 0)) == 37

    @pytest.mark.parametrize("index", [-1, 2**64, 3.0, True])
    def test_rejects_bad_index(self, config, index):
        with pytest.raises(ConfigError):
            draw_replicate(config, index)

    def test_zero_error_variances_reproduce_truth(self, table_params):
        params = dataclasses.replace(table_params, sigma_u2=0.0, sigma_v2=0.0)
        cfg = SimulationConfig(params=params, replicates=100, seed=SEED)
        sample = draw_replicate(cfg, 3)
        y_true, x_true = replay_truth(params, SEED, 3, params.n)
        assert np.array_equal(sample.y, y_true)
        assert np.array_equal(sample.x, x_true)

    def test_truth_block_invariant_to_error_law(self, table_params):
        # the error variates are drawn after the truth block, so at zero
        # error variance every law yields the identical sample
        params = dataclasses.replace(table_params, sigma_u2=0.0, sigma_v2=0.0)
        base = dict(params=params, replicates=100, seed=SEED)
        gauss = SimulationConfig(**base)
        unif = SimulationConfig(**base, error_law=ErrorLaw.UNIFORM)
        t = SimulationConfig(**base, error_law=ErrorLaw.STUDENT_T, error_df=8.0)
        for index in (0, 7):
            ref = draw_replicate(gauss, index)
            for cfg in (unif, t):
                got = draw_replicate(cfg, index)
                assert np.array_equal(got.y, ref.y)
                assert np.array_equal(got.x, ref.x)

    def test_pooled_moments_match_population(self, table_params):
        # law-of-large-numbers oracle over 10^6 pooled observations
        cfg = SimulationConfig(params=table_params, replicates=5000,
                               seed=SEED, sample_n=200)
        ys, xs = [], []
        for i in range(cfg.replicates):
            sample = draw_replicate(cfg, i)
            ys.append(sample.y)
            xs.append(sample.x)
        y = np.concatenate(ys)
        x = np.concatenate(xs)
        p = table_params
        assert y.mean() == pytest.approx(p.mu_y, rel=0.01)
        assert x.mean() == pytest.approx(p.mu_x, rel=0.01)
        assert y.var() == pytest.approx(p.sigma_y2 + p.sigma_u2, rel=0.01)
        assert x.var() == pytest.approx(p.sigma_x2 + p.sigma_v2, rel=0.01)
        # errors are independent of the truth, so the observed covariance
        # still targets rho sigma_y sigma_x
        cov = np.mean((y - y.mean()) * (x - x.mean()))
        assert cov == pytest.approx(
            p.rho * math.sqrt(p.sigma_y2 * p.sigma_x2), rel=0.01)


class TestErrorLaws:
    @pytest.mark.parametrize("law,df", [
        (ErrorLaw.GAUSSIAN, None),
        (ErrorLaw.UNIFORM, None),
        (ErrorLaw.STUDENT_T, 6.0),
    ])
    def test_standardized_to_unit_variance(self, table_params, law, df):
        cfg = SimulationConfig(params=table_params, replicates=100, seed=SEED,
                               error_law=law, error_df=df)
        rng = _substream(SEED, 0)
        e = _standardized_errors(rng, cfg, 10**6)
        assert e.mean() == pytest.approx(0.0, abs=0.01)
        assert e.var() == pytest.approx(1.0, abs=0.02)

    def test_uniform_support_bound(self, table_params):
        cfg = SimulationConfig(params=table_params, replicates=100, seed=SEED,
                               error_law=ErrorLaw.UNIFORM)
        e = _standardized_errors(_substream(SEED, 0), cfg, 10**5)
        assert np.abs(e).max() <= math.sqrt(3.0)


class TestRunMonteCarlo:
    def test_deterministic(self, config):
        specs = [MeanPerUnit(), ExpRatio()]
        assert run_monte_carlo(config, specs) == run_monte_carlo(config, specs)

    def test_weighted_identity_matches_mean_per_unit(self, config):
        mean_row, weighted_row = run_monte_carlo(
            config, [MeanPerUnit(), WeightedDifference(1.0, 0.0)])
        assert weighted_row.empirical_bias == mean_row.empirical_bias
        assert weighted_row.empirical_mse == mean_row.empirical_mse
        assert weighted_row.replicates_used == mean_row.replicates_used

    def test_worker_count_invariance(self, config, monkeypatch):
        cfg = dataclasses.replace(config, replicates=300)
        specs = [MeanPerUnit(), ExpRatio(), PowerExpRatio(1.0, 1.0)]
        monkeypatch.delenv("ME_LAB_THREADS", raising=False)
        serial = run_monte_carlo(cfg, specs)
        monkeypatch.setenv("ME_LAB_THREADS", "3")
        threaded = run_monte_carlo(cfg, specs)
        assert serial == threaded

    def test_invalid_worker_env_raises(self, config, monkeypatch):
        monkeypatch.setenv("ME_LAB_THREADS", "-2")
        with pytest.raises(ConfigError):
            run_monte_carlo(config, [MeanPerUnit()])

    def test_engine_matches_scalar_evaluation(self, config):
        # the vectorized engine path and the strict scalar evaluator must
        # produce the same replicate values bit for bit
        cfg = dataclasses.replace(config, replicates=120)
        spec = ExpRatio()
        (row,) = run_monte_carlo(cfg, [spec])
        values = [evaluate(spec, draw_replicate(cfg, i), cfg.params.mu_x)
                  for i in range(cfg.replicates)]
        deviations = [t - cfg.params.mu_y for t in values]
        assert row.replicates_used == cfg.replicates
        assert row.empirical_bias == math.fsum(deviations) / cfg.replicates
        assert row.empirical_mse == math.fsum(
            d * d for d in deviations) / cfg.replicates

    def test_no_skips_in_benchmark_scenario(self, config):
        cfg = dataclasses.replace(config, replicates=200)
        specs = [MeanPerUnit(), ExpRatio(), WeightedDifference(1.0, 0.6),
                 PowerExpRatio(1.0, 1.0), WeightedPowerExpRatio(1.0, 0.2, 0.0, 1.0)]
        for row in run_monte_carlo(cfg, specs):
            assert row.replicates_skipped == 0
            assert row.replicates_used == cfg.replicates

    def test_skip_accounting_with_reachable_hazard(self):
        # n = 2 with sigma_x ~ 5 mu_x puts xbar <= 0 in play, which is a
        # hazard for a fractional power; the mean per unit sees every
        # replicate regardless
        params = PopulationParams(n=2, mu_y=1.0, mu_x=1.0, sigma_y2=1.0,
                                  sigma_x2=25.0, rho=0.0,
                                  sigma_u2=0.0, sigma_v2=0.0)
        cfg = SimulationConfig(params=params, replicates=400, seed=SEED)
        hazardous = PowerExpRatio(0.5, 0.0)
        mean_row, hazard_row = run_monte_carlo(cfg, [MeanPerUnit(), hazardous])
        assert mean_row.replicates_skipped == 0
        assert 0 < hazard_row.replicates_skipped < cfg.replicates
        assert (hazard_row.replicates_used + hazard_row.replicates_skipped
                == cfg.replicates)
        assert math.isfinite(hazard_row.empirical_mse)

    def test_theory_column_uses_effective_sample_size(self, config):
        cfg = dataclasses.replace(config, sample_n=50)
        spec = ExpRatio()
        (row,) = run_monte_carlo(cfg, [spec])
        expected = theory_mse(spec, dataclasses.replace(cfg.params, n=50))
        assert row.theory_mse == expected

    def test_mean_per_unit_matches_exact_theory(self, table_params):
        # the variance formula is exact for ybar, so the empirical MSE is a
        # direct draw-quality check; 4 standard errors keeps noise failures
        # out of routine runs
        cfg = SimulationConfig(params=table_params, replicates=20_000,
                               seed=SEED)
        (row,) = run_monte_carlo(cfg, [MeanPerUnit()])
        assert row.replicates_skipped == 0
        assert abs(row.empirical_mse - row.theory_mse) <= 4.0 * row.mc_se_mse

    def test_empty_spec_list(self, config):
        assert run_monte_carlo(config, []) == []


class TestSimulationResult:
    def test_mc_se_bias_recovers_replicate_variance(self):
        result = SimulationResult(
            estimator=MeanPerUnit(), empirical_bias=0.5, empirical_mse=1.0,
            mc_se_mse=0.1, replicates_used=100, replicates_skipped=0,
            theory_mse=1.0)
        var = (1.0 - 0.25) * 100 / 99
        assert result.mc_se_bias == pytest.approx(math.sqrt(var / 100))

    def test_mc_se_bias_undefined_for_single_replicate(self):
        result = SimulationResult(
            estimator=MeanPerUnit(), empirical_bias=0.0, empirical_mse=0.0,
            mc_se_mse=math.nan, replicates_used=1, replicates_skipped=99,
            theory_mse=1.0)
        assert math.isnan(result.mc_se_bias)


class TestAllReplicatesSkipped:
    def test_raised_at_aggregation_seam(self):
        # unreachable through a valid config (the all-skip probability is
        # astronomically small at replicates >= 100), so the contract is
        # pinned directly at the aggregation step
        xbars = np.full(5, -170.0)
        ybars = np.ones(5)
        with pytest.raises(AllReplicatesSkippedError):
            _aggregate_spec(ExpRatio(), ybars, xbars, mu_y=127.0, mu_x=170.0,
                            theory=1.0)


class TestConvergenceSweep:
    def test_rejects_bad_grids(self, config):
        with pytest.raises(ConfigError):
            convergence_sweep(config, ExpRatio(), [])
        with pytest.raises(ConfigError):
            convergence_sweep(config, ExpRatio(), [50, 10])
        with pytest.raises(ConfigError):
            convergence_sweep(config, ExpRatio(), [10, 10])
        with pytest.raises(ConfigError):
            convergence_sweep(config, ExpRatio(), [1, 10])

    def test_single_point_grid(self, config):
        points = convergence_sweep(config, ExpRatio(), [10])
        assert len(points) == 1
        point = points[0]
        assert point.n == 10
        assert point.relative_gap == abs(
            point.empirical_mse - point.theory_mse) / point.theory_mse

    def test_exact_theory_gap_stays_small(self, table_params):
        # for the mean per unit the theory is exact at every n, so the gap
        # is pure Monte Carlo noise (about sqrt(2/replicates) relative)
        params = dataclasses.replace(table_params)
        cfg = SimulationConfig(params=params, replicates=2000, seed=SEED)
        for point in convergence_sweep(cfg, MeanPerUnit(), [5, 20, 80]):
            assert point.relative_gap < 0.15

    def test_theory_column_decreases_in_n(self, config):
        points = convergence_sweep(config, ExpRatio(), [10, 40, 160])
        theories = [p.theory_mse for p in points]
        assert theories == sorted(theories, reverse=True)
