"""Tests for the Monte Carlo experiment harness."""
import math

import numpy as np
import pytest

from paulishift import analytics
from paulishift.analytics import (CrossoverNotFound, mse_sps,
                                  n_star_sps_exact)
from paulishift.circuits import PauliObservable, build_ansatz
from paulishift.estimators import DiagHessian, Gradient, OffDiagHessian
from paulishift.harness import (CrossingEstimate, ExperimentConfig,
                                MseEstimate, NoiseSpec, distribution_study,
                                empirical_n_star, monte_carlo_mse,
                                sample_parameter_set, substream,
                                verify_two_design)


def tiny_config(**overrides):
    base = dict(n=2, L=2, noise=NoiseSpec("global_depolarizing", 0.3),
                nt_grid=(48, 96), parameter_sets=6, experiments_per_set=10,
                master_seed=4242)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestSubstreams:

    def test_same_key_same_draws(self):
        a = substream(123, 2, 7).random(5)
        b = substream(123, 2, 7).random(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_keys_decorrelate(self):
        a = substream(123, 2, 7).random(5)
        b = substream(123, 2, 8).random(5)
        c = substream(124, 2, 7).random(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestParameterSampling:

    def test_shapes_and_ranges(self):
        layout = build_ansatz(3, 4)
        theta = sample_parameter_set(layout, np.random.default_rng(1))
        assert theta.theta.shape == (36,)
        for layer in range(1, 5):
            for qubit in range(1, 4):
                base = layout.flat_index(layer, qubit, 1)
                assert 0.0 <= theta.theta[base] < 2 * math.pi
                assert 0.0 <= theta.theta[base + 1] <= math.pi
                assert 0.0 <= theta.theta[base + 2] < 2 * math.pi

    def test_middle_angle_has_haar_density(self):
        """cos(beta) must be uniform on [-1, 1] for Haar blocks."""
        layout = build_ansatz(1, 1)
        rng = np.random.default_rng(2)
        cos_beta = np.array([
            math.cos(sample_parameter_set(layout, rng).theta[1])
            for _ in range(4000)])
        np.testing.assert_allclose(cos_beta.mean(), 0.0, atol=0.05)
        np.testing.assert_allclose(cos_beta.var(), 1.0 / 3.0, atol=0.03)


class TestConfigValidation:

    def test_good_config_builds(self):
        config = tiny_config()
        assert config.eta_total() == 0.3
        assert config.layout().parameter_count == 12

    def test_grid_must_be_multiples_of_twelve(self):
        with pytest.raises(ValueError):
            tiny_config(nt_grid=(50,))
        with pytest.raises(ValueError):
            tiny_config(nt_grid=(24,))  # multiple of 12 but below 48
        with pytest.raises(ValueError):
            tiny_config(nt_grid=())

    def test_scheme_names_checked(self):
        with pytest.raises(ValueError):
            tiny_config(schemes=("ps", "sps"))
        with pytest.raises(ValueError):
            tiny_config(schemes=("ps", "ps"))
        with pytest.raises(ValueError):
            tiny_config(schemes=())

    def test_counts_checked(self):
        with pytest.raises(ValueError):
            tiny_config(parameter_sets=0)
        with pytest.raises(ValueError):
            tiny_config(experiments_per_set=0)

    def test_custom_observable_is_used(self):
        config = tiny_config(observable=PauliObservable("ZZ"))
        assert config.resolved_observable().letters == "ZZ"
        assert tiny_config().resolved_observable().letters == "XY"

    def test_noise_spec_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec("thermal", 0.1)
        with pytest.raises(ValueError):
            NoiseSpec("cnot_depolarizing", 0.0)
        with pytest.raises(ValueError):
            NoiseSpec("cnot_depolarizing", 0.1, redraw_weights=True)
        NoiseSpec("cnot_pauli", 0.1, redraw_weights=True)  # fine

    def test_eta_total_compounds_cnot_rates(self):
        config = tiny_config(noise=NoiseSpec("cnot_depolarizing", 0.05))
        np.testing.assert_allclose(config.eta_total(), 1.0 - 0.95 ** 4)

    def test_pauli_weights_fixed_or_redrawn(self):
        fixed = tiny_config(noise=NoiseSpec("cnot_pauli", 0.1))
        assert (fixed.noise_for_set(0).weights
                == fixed.noise_for_set(3).weights)
        redraw = tiny_config(
            noise=NoiseSpec("cnot_pauli", 0.1, redraw_weights=True))
        assert (redraw.noise_for_set(0).weights
                != redraw.noise_for_set(3).weights)


class TestMonteCarloMse:

    def test_result_grid_is_complete(self):
        config = tiny_config(targets=(Gradient(), DiagHessian()))
        results = monte_carlo_mse(config)
        assert len(results) == 2 * len(config.schemes) * 2
        keys = {(r.scheme, r.target, r.n_total) for r in results}
        assert len(keys) == len(results)
        assert all(r.mean >= 0 and r.stderr >= 0 for r in results)

    def test_bit_identical_across_worker_counts(self):
        config = tiny_config()
        serial = monte_carlo_mse(config, workers=1)
        parallel = monte_carlo_mse(config, workers=2)
        for a, b in zip(serial, parallel):
            assert a == b

    def test_rerun_is_deterministic(self):
        config = tiny_config()
        a = monte_carlo_mse(config)
        b = monte_carlo_mse(config)
        assert a == b

    def test_matches_closed_form_for_plain_shift_rule(self):
        """PS Monte Carlo MSE tracks the closed form under global noise."""
        eta = 0.226
        config = ExperimentConfig(
            n=3, L=4, noise=NoiseSpec("global_depolarizing", eta),
            nt_grid=(96,), parameter_sets=40, experiments_per_set=60,
            master_seed=777, schemes=("ps",), targets=(Gradient(),))
        r = monte_carlo_mse(config)[0]
        pred = mse_sps("gradient", 8, 1.0, eta, 0.0, 96).total
        assert abs(r.mean - pred) < max(3 * r.stderr, 0.15 * pred)

    def test_shot_noise_shrinks_with_budget(self):
        config = tiny_config(noise=NoiseSpec(), nt_grid=(48, 4800),
                             schemes=("ps",), targets=(Gradient(),),
                             parameter_sets=10, experiments_per_set=30)
        results = monte_carlo_mse(config)
        by_nt = {r.n_total: r.mean for r in results}
        assert by_nt[4800] < by_nt[48]


def synthetic_curve(scheme, d, eta, grid, lam_fn):
    """Noise-free MseEstimate series straight from the closed forms."""
    out = []
    for nt in grid:
        lam = lam_fn(nt)
        total = mse_sps("gradient", d, lam, eta, 0.0, nt).total
        out.append(MseEstimate(scheme=scheme, target=Gradient(), n_total=nt,
                               mean=total, stderr=0.0))
    return out


class TestEmpiricalCrossing:

    def test_recovers_closed_form_crossing(self):
        """Synthetic exact curves cross within one grid step of the root."""
        d, eta = 16, 0.226
        exact = n_star_sps_exact("gradient", d, eta)
        grid = list(range(48, 481, 48))
        ps = synthetic_curve("ps", d, eta, grid, lambda nt: 1.0)
        nsps = synthetic_curve(
            "nsps", d, eta, grid,
            lambda nt: analytics.lambda_opt("gradient", d, nt).value)
        crossing = empirical_n_star(nsps, ps)
        assert isinstance(crossing, CrossingEstimate)
        assert abs(crossing.n_star - exact) <= 48.0

    def test_exact_zero_difference_returns_grid_point(self):
        grid = (48, 96, 144)
        base = [MseEstimate("ps", Gradient(), nt, 1.0, 0.1) for nt in grid]
        cand = [MseEstimate("nsps", Gradient(), 48, 0.5, 0.1),
                MseEstimate("nsps", Gradient(), 96, 1.0, 0.1),
                MseEstimate("nsps", Gradient(), 144, 1.5, 0.1)]
        crossing = empirical_n_star(cand, base)
        assert crossing.n_star == 96.0
        assert crossing.uncertainty == 24.0

    def test_curves_that_never_cross_signal(self):
        grid = (48, 96, 144)
        base = [MseEstimate("ps", Gradient(), nt, 1.0, 0.01) for nt in grid]
        lower = [MseEstimate("nsps", Gradient(), nt, 0.5, 0.01)
                 for nt in grid]
        with pytest.raises(CrossoverNotFound):
            empirical_n_star(lower, base)
        higher = [MseEstimate("nsps", Gradient(), nt, 2.0, 0.01)
                  for nt in grid]
        with pytest.raises(CrossoverNotFound):
            empirical_n_star(higher, base)

    def test_grids_must_match(self):
        base = [MseEstimate("ps", Gradient(), 48, 1.0, 0.1)]
        cand = [MseEstimate("nsps", Gradient(), 96, 1.0, 0.1)]
        with pytest.raises(ValueError):
            empirical_n_star(cand, base)


class TestDistributionStudy:

    def test_global_noise_gives_degenerate_g(self):
        """The global channel's error term is exactly 0 for every set."""
        config = tiny_config(parameter_sets=12)
        summary = distribution_study(config)
        np.testing.assert_allclose(summary.g_samples, 0.0, atol=1e-10)
        assert summary.r_var is None
        assert summary.var_f > 0.0

    def test_cnot_noise_gives_flat_g(self):
        config = tiny_config(noise=NoiseSpec("cnot_depolarizing", 0.05),
                             n=3, L=3, parameter_sets=40)
        summary = distribution_study(config)
        assert summary.r_var is not None
        assert summary.r_var > 1.0
        assert len(summary.f_samples) == 40

    def test_noiseless_config_is_rejected(self):
        config = tiny_config(noise=NoiseSpec())
        with pytest.raises(ValueError):
            distribution_study(config)


class TestTwoDesignCheck:

    def test_moments_at_small_samples(self):
        check = verify_two_design(2, 4, 400, 31415)
        an = check.analytic
        assert abs(check.mean_f.value) < 4 * check.mean_f.stderr
        assert (abs(check.mean_f2.value - an.mean_f2)
                < max(4 * check.mean_f2.stderr, 0.1 * an.mean_f2))
        assert check.samples == 400

    def test_probe_layer_defaults_to_middle(self):
        """Identical draws, default probe equals the explicit middle layer."""
        a = verify_two_design(2, 6, 40, 999)
        b = verify_two_design(2, 6, 40, 999, layer=4)
        assert a.mean_grad2.value == b.mean_grad2.value
        c = verify_two_design(2, 6, 40, 999, layer=2)
        assert a.mean_grad2.value != c.mean_grad2.value

    def test_single_qubit_fallback_runs(self):
        check = verify_two_design(1, 3, 50, 7)
        assert math.isfinite(check.mean_hess_off2.value)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            verify_two_design(2, 1, 100, 0)
        with pytest.raises(ValueError):
            verify_two_design(2, 4, 1, 0)
        with pytest.raises(ValueError):
            verify_two_design(2, 4, 100, 0, layer=5)
