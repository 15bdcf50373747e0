import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

import lagsieve as ls

from conftest import fast_fit_options

GROWTH = math.log(2.0) / 5.0


class TestGeneratorConfig:
    def test_defaults_mirror_study_design(self):
        config = ls.default_generator_config(40, 1)
        assert config.location_probs == {0: 0.65, 1: 0.35}
        assert config.rates[1] == pytest.approx(GROWTH)
        assert config.window.descriptor.startswith("exponential:")
        assert config.incubation.descriptor.startswith("lognormal:")
        assert config.generation.descriptor.startswith("weibull:")

    def test_validation(self):
        with pytest.raises(ls.ValidationError):
            ls.GeneratorConfig(n=0, seed=1)
        with pytest.raises(ls.ValidationError):
            ls.GeneratorConfig(n=5, seed=1, location_probs={0: 0.6, 1: 0.6})
        with pytest.raises(ls.ValidationError):
            ls.GeneratorConfig(n=5, seed=1, location_probs={0: 1.0}, rates={1: 0.0})


class TestSampling:
    def test_deterministic_given_seed(self):
        config = ls.default_generator_config(50, 999)
        first = ls.sample_batch(config)
        second = ls.sample_batch(config)
        for name in ("w", "location", "t1", "i1", "i2", "g"):
            np.testing.assert_array_equal(getattr(first, name), getattr(second, name))

    def test_observation_construction(self):
        batch = ls.sample_batch(ls.default_generator_config(1000, 5))
        observations = batch.observations()
        assert len(observations) == 1000
        assert all(o.w_tilde <= o.s1 and o.s2 >= 0.0 for o in observations)

    def test_serial_interval_identity_exact(self):
        batch = ls.sample_batch(ls.default_generator_config(2000, 8))
        # identity in exact rational arithmetic on the stored draws
        for k in range(0, 2000, 97):
            serial = (
                (Fraction(batch.t1[k]) + Fraction(batch.i2[k]) + Fraction(batch.g[k]))
                - (Fraction(batch.t1[k]) + Fraction(batch.i1[k]))
            )
            assert serial == Fraction(batch.g[k]) + Fraction(batch.i2[k]) - Fraction(batch.i1[k])
        # and the float construction follows exactly these formulas
        np.testing.assert_array_equal(batch.s1, batch.t1 + batch.i1)
        np.testing.assert_array_equal(batch.s2, batch.t1 + batch.i2 + batch.g)

    def test_uniform_kernel_offset_mean(self):
        config = ls.GeneratorConfig(n=10**5, seed=77, rates={0: 0.0, 1: 0.0})
        batch = ls.sample_batch(config)
        assert float(np.mean(batch.t1 / batch.w)) == pytest.approx(0.5, abs=0.005)

    def test_incubation_mean_matches_lognormal(self):
        batch = ls.sample_batch(ls.default_generator_config(10**5, 8))
        expected = math.exp(1.644 + 0.363**2 / 2.0)
        se = batch.i1.std(ddof=1) / math.sqrt(batch.i1.size)
        assert batch.i1.mean() == pytest.approx(expected, abs=3.0 * se)

    def test_offset_sampler_matches_closed_form_cdf(self):
        rng = np.random.default_rng(202)
        draws = ls.sample_infection_offset(rng, 5.0, GROWTH, size=10**5)
        result = stats.kstest(draws, lambda s: ls.infection_offset_cdf(s, 5.0, GROWTH))
        assert result.statistic < 1.6276 / math.sqrt(10**5)

    def test_offset_cdf_endpoints(self):
        assert ls.infection_offset_cdf(0.0, 5.0, GROWTH) == 0.0
        assert ls.infection_offset_cdf(5.0, 5.0, GROWTH) == pytest.approx(1.0, abs=1e-14)
        assert ls.infection_offset_cdf(2.5, 5.0, 0.0) == pytest.approx(0.5)


class TestRunStudy:
    def test_single_replication_matches_manual_pipeline(self):
        config = ls.default_generator_config(25, 314)
        options = fast_fit_options(seed=27)
        report = ls.run_study(config, 1, 1, 1, GROWTH, options=options)
        assert len(report.rows) == 1 and not report.failures
        row = report.rows[0]

        data_seed = ls.child_seed(config.seed, 0, 0)
        fit_seed = ls.child_seed(options.seed, 0, 1)
        data = ls.sample_dataset(replace(config, seed=data_seed))
        result = ls.fit(data, config.exposure_model(), 1, 1, replace(options, seed=fit_seed))
        assert row.data_seed == data_seed and row.fit_seed == fit_seed
        assert row.loglik == result.loglik
        assert row.hellinger_sq_incubation == ls.hellinger_sq(result.incubation, config.incubation)
        assert row.r0 == ls.reproduction_number(result.generation, GROWTH)

    def test_summaries_and_columns(self):
        config = ls.default_generator_config(20, 11)
        report = ls.run_study(config, 1, 1, 3, GROWTH, options=fast_fit_options(seed=5))
        assert report.column("hellinger_sq_generation").shape == (3,)
        summaries = report.summaries()
        assert set(summaries) >= {"hellinger_sq_incubation", "r0"}
        assert all(0.0 <= v <= 2.0 for v in report.column("hellinger_sq_incubation"))
        assert report.quantile_column("incubation", 0.5).shape == (3,)


class TestBootstrap:
    H0_INC = ls.lognormal_density(1.644, 0.363)
    H0_GEN = ls.weibull_density(2.826, 5.665)

    def _observed(self, m1, m2):
        return ls.FitResult(
            incubation=ls.best_approx(self.H0_INC, m1),
            generation=ls.best_approx(self.H0_GEN, m2),
            loglik=0.0, bic=0.0, starts=(), seed=0, n_obs=20,
        )

    def test_zero_observed_statistic_gives_p_one(self):
        config = ls.default_generator_config(20, 71)
        outcome = ls.bootstrap_test(
            self._observed(1, 1), self.H0_INC, self.H0_GEN, 1, 1, config, 4,
            options=fast_fit_options(seed=6),
        )
        assert outcome.observed_incubation == pytest.approx(0.0, abs=1e-9)
        assert outcome.p_incubation == 1.0
        assert outcome.p_generation == 1.0
        assert outcome.p_joint == 1.0

    def test_extreme_observed_statistic_gives_floor(self):
        config = ls.default_generator_config(20, 72)
        # degree-1 density orthogonal to both projections: distance near 2
        far = ls.LaguerreDensity(np.array([0.0, 1.0]))
        observed = ls.FitResult(
            incubation=far, generation=far, loglik=0.0, bic=0.0,
            starts=(), seed=0, n_obs=20,
        )
        n_sims = 4
        outcome = ls.bootstrap_test(
            observed, self.H0_INC, self.H0_GEN, 1, 1, config, n_sims,
            options=fast_fit_options(seed=8),
        )
        assert outcome.p_incubation == pytest.approx(1.0 / (n_sims + 1))
        assert outcome.p_generation == pytest.approx(1.0 / (n_sims + 1))

    def test_degree_mismatch_rejected(self):
        config = ls.default_generator_config(20, 73)
        with pytest.raises(ls.ValidationError):
            ls.bootstrap_test(
                self._observed(1, 1), self.H0_INC, self.H0_GEN, 2, 1, config, 2
            )

    def test_dataset_input_is_fitted(self):
        config = ls.default_generator_config(20, 74)
        data = ls.sample_dataset(config)
        outcome = ls.bootstrap_test(
            data, self.H0_INC, self.H0_GEN, 1, 1, config, 3,
            options=fast_fit_options(seed=10),
        )
        assert 0.0 < outcome.p_incubation <= 1.0
        assert outcome.sim_incubation.shape == (3,)

    def test_add_one_pvalue(self):
        sims = np.array([0.1, 0.2, 0.3, 0.4])
        assert ls.simulate.add_one_pvalue(sims, 0.0) == 1.0
        assert ls.simulate.add_one_pvalue(sims, 0.25) == pytest.approx(3.0 / 5.0)
        assert ls.simulate.add_one_pvalue(sims, 0.9) == pytest.approx(1.0 / 5.0)


class TestImputeWindows:
    def test_full_window_passes_through(self):
        result = ls.impute_windows(
            [{"s1": 70.0, "s2": 75.0, "window_start": 10.0, "window_end": 14.0}]
        )
        assert not result.errors
        obs = result.observations[0]
        assert (obs.s1, obs.s2, obs.w_tilde) == (60.0, 65.0, 4.0)

    def test_missing_window_start_uses_sixty_day_lookback(self):
        result = ls.impute_windows([{"s1": 70.0, "s2": 75.0}])
        obs = result.observations[0]
        # window becomes [10, 70]; w_tilde = min(70, 70) - 10
        assert (obs.s1, obs.s2, obs.w_tilde) == (60.0, 65.0, 60.0)

    def test_window_end_capped_by_earlier_infectee_onset(self):
        result = ls.impute_windows([{"s1": 70.0, "s2": 65.0}])
        obs = result.observations[0]
        assert (obs.s1, obs.s2, obs.w_tilde) == (60.0, 55.0, 55.0)

    def test_window_end_capped_by_infectee_window(self):
        result = ls.impute_windows(
            [{"s1": 70.0, "s2": 75.0, "infectee_window_end": 68.0}]
        )
        assert result.observations[0].w_tilde == 58.0

    def test_rejections_carry_reasons(self):
        result = ls.impute_windows(
            [
                {"s1": 5.0, "s2": 75.0, "window_start": 10.0},
                {"s1": 70.0},
                {"s1": 70.0, "s2": 75.0, "window_start": 10.0, "window_end": 4.0},
                {"s1": 70.0, "s2": 5.0, "window_start": 10.0, "window_end": 30.0},
            ]
        )
        assert not result.observations
        assert len(result.errors) == 4
        assert result.errors[0].index == 0
        assert "precedes" in result.errors[0].reason
        assert "onsets" in result.errors[1].reason
        assert "before it starts" in result.errors[2].reason

    def test_location_retained(self):
        result = ls.impute_windows([{"s1": 70.0, "s2": 75.0, "location": 1}])
        assert result.observations[0].location == 1
