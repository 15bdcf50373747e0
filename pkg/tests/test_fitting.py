import math

import numpy as np
import pytest

import lagsieve as ls

from conftest import fast_fit_options

GROWTH = math.log(2.0) / 5.0


def make_dataset(n=30, seed=4):
    config = ls.default_generator_config(n, seed)
    return ls.sample_dataset(config), config.exposure_model(), config


class TestFit:
    def test_degree_zero_needs_no_optimization(self):
        data, model, _ = make_dataset(10)
        result = ls.fit(data, model, 0, 0, ls.FitOptions(seed=1))
        np.testing.assert_array_equal(result.incubation.theta, [1.0])
        np.testing.assert_array_equal(result.generation.theta, [1.0])
        assert result.loglik == ls.dataset_loglik(
            data, model, result.incubation, result.generation
        )
        assert result.starts == ()
        assert result.bic == pytest.approx(-2.0 * result.loglik)

    def test_empty_data_rejected(self):
        with pytest.raises(ls.ValidationError):
            ls.fit([], ls.ExposureModel({0: 0.0}), 1, 1)

    def test_deterministic_given_seed(self):
        data, model, _ = make_dataset(20)
        options = fast_fit_options(seed=42)
        first = ls.fit(data, model, 2, 1, options)
        second = ls.fit(data, model, 2, 1, options)
        assert first.loglik == second.loglik
        np.testing.assert_array_equal(first.incubation.theta, second.incubation.theta)
        np.testing.assert_array_equal(first.generation.theta, second.generation.theta)
        assert first.starts == second.starts

    def test_beats_projection_of_truth(self):
        data, model, config = make_dataset(40, seed=77)
        options = fast_fit_options(seed=9)
        result = ls.fit(data, model, 2, 2, options)
        projected = ls.dataset_loglik(
            data,
            model,
            ls.best_approx(config.incubation, 2),
            ls.best_approx(config.generation, 2),
            options.quadrature,
        )
        assert result.loglik >= projected - 1e-6

    def test_final_beats_every_starting_point(self):
        data, model, _ = make_dataset(25, seed=31)
        options = fast_fit_options(seed=13)
        result = ls.fit(data, model, 2, 2, options)
        evaluator = ls.LogLikEvaluator(data, model, 2, 2, options.quadrature)
        for k in range(options.n_starts):
            rng = np.random.default_rng(np.random.SeedSequence(13, spawn_key=(k,)))
            angles = rng.uniform(0.0, np.pi, 4)
            initial = evaluator.loglik(
                ls.angles_to_theta(angles[:2]), ls.angles_to_theta(angles[2:])
            )
            assert result.loglik >= initial - 1e-12

    def test_loglik_invariant_under_global_sign_flip(self):
        data, model, _ = make_dataset(20, seed=8)
        options = fast_fit_options(seed=3)
        result = ls.fit(data, model, 1, 2, options)
        flipped = ls.dataset_loglik(
            data,
            model,
            ls.LaguerreDensity(-result.incubation.theta),
            ls.LaguerreDensity(-result.generation.theta),
            options.quadrature,
        )
        assert flipped == pytest.approx(result.loglik, abs=1e-9)

    def test_unit_norm_and_diagnostics(self):
        data, model, _ = make_dataset(15, seed=2)
        result = ls.fit(data, model, 1, 1, fast_fit_options(seed=6))
        assert abs(np.linalg.norm(result.incubation.theta) - 1.0) < 1e-12
        assert abs(np.linalg.norm(result.generation.theta) - 1.0) < 1e-12
        assert len(result.starts) == 5
        assert result.loglik == pytest.approx(max(s.loglik for s in result.starts), abs=1e-12)

    def test_all_floor_raises_degenerate(self):
        # a zero-length window forces the likelihood floor for every theta
        data = [ls.Observation(s1=5.0, s2=8.0, w_tilde=0.0, location=0)]
        with pytest.raises(ls.DegenerateFitError):
            ls.fit(data, ls.ExposureModel({0: 0.0}), 1, 1, fast_fit_options(seed=1, n_starts=2))

    def test_grid_growth_never_hurts_majority(self):
        hits = 0
        for seed in range(3):
            data, model, _ = make_dataset(40, seed=ls.child_seed(99, seed))
            options = fast_fit_options(seed=11)
            small = ls.fit(data, model, 2, 2, options).loglik
            large = ls.fit(data, model, 3, 2, options).loglik
            hits += small <= large + 1e-4
        assert hits >= 2


class TestBic:
    def test_formula(self):
        assert ls.bic(-100.0, 2, 2, 40) == pytest.approx(200.0 + 4.0 * math.log(40.0), abs=1e-12)
        assert ls.bic(-55.5, 0, 0, 17) == pytest.approx(111.0, abs=1e-12)

    def test_param_count_override(self):
        assert ls.bic(-10.0, 2, 2, 40, param_count=6) == pytest.approx(
            20.0 + 6.0 * math.log(40.0)
        )

    def test_sample_size_validation(self):
        with pytest.raises(ls.ValidationError):
            ls.bic(-1.0, 1, 1, 0)


class TestSelectModel:
    def test_single_cell(self):
        data, model, _ = make_dataset(12, seed=1)
        selection = ls.select_model(data, model, [(1, 1)], fast_fit_options(seed=4))
        assert selection.best == (1, 1)
        assert selection.table[(1, 1)].error is None
        assert selection.best_fit().m_incubation == 1

    def test_empty_grid_rejected(self):
        data, model, _ = make_dataset(10)
        with pytest.raises(ls.ValidationError):
            ls.select_model(data, model, [], fast_fit_options(seed=4))

    def test_prefers_true_exponential_model(self, threads):
        # data from the degree-(0,0) member: extra degrees should be punished
        exponential = ls.exponential_density(1.0)
        grid = [(0, 0), (0, 1), (1, 0), (1, 1)]
        options = fast_fit_options(seed=2)
        picks = []
        for seed in range(20):
            config = ls.GeneratorConfig(
                n=200,
                seed=ls.child_seed(3131, seed),
                incubation=exponential,
                generation=exponential,
            )
            data = ls.sample_dataset(config)
            picks.append(
                ls.select_model(data, config.exposure_model(), grid, options,
                                threads=threads).best
            )
        assert sum(pick == (0, 0) for pick in picks) > 10

    def test_every_cell_failing_raises(self):
        data = [ls.Observation(s1=5.0, s2=8.0, w_tilde=0.0, location=0)]
        model = ls.ExposureModel({0: 0.0})
        with pytest.raises(ls.DegenerateFitError):
            ls.select_model(data, model, [(1, 1), (2, 1)], fast_fit_options(seed=1, n_starts=2))

    def test_failed_cells_recorded_and_excluded(self):
        data, model, _ = make_dataset(12, seed=6)
        options = fast_fit_options(seed=4)
        # degree above the stability ceiling fails inside fit, (0, 0) succeeds
        selection = ls.select_model(data, model, [(0, 0), (70, 0)], options)
        assert selection.best == (0, 0)
        assert selection.table[(70, 0)].error is not None

    def test_bic_tie_breaking(self):
        table_cells = [(2.0, 2, (1, 1)), (2.0, 1, (0, 1)), (2.0, 1, (1, 0)), (3.0, 0, (0, 0))]
        scored = [(bic, total, cell[0], cell) for bic, total, cell in table_cells]
        assert min(scored)[-1] == (0, 1)
