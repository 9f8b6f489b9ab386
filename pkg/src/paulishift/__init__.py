"""Derivative estimators for noisy Pauli-rotation circuits.

Simulates parametrized circuits of Haar-random ZYZ blocks and CNOT rings
under depolarizing-type noise, estimates gradients and Hessian entries with
parameter-shift, scaled parameter-shift and finite-difference rules at finite
shot budgets, and checks the sampled errors against the closed-form MSE
theory, optimal scheme parameters and crossover copy numbers.
"""

__version__ = "0.1.0"

from .analytics import (CrossoverNotFound, MseBreakdown, SchemeParams,
                        TwoDesignMoments, epsilon_opt,
                        epsilon_opt_asymptotic, lambda_opt, lambda_opt_eta,
                        mse_fd, mse_sps, n_star_fd, n_star_sps_exact,
                        n_star_sps_small_eta, noise_bias, two_design_moments)
from .circuits import (AnsatzLayout, DensityMatrix, ParameterPoint,
                       PauliObservable, build_ansatz, cyclic_observable,
                       evolve, expectation, zero_state)
from .estimators import (DiagHessian, EstimatorSpec, Gradient,
                         OffDiagHessian, estimate_derivative, estimator_mean,
                         exact_derivative, shot_allocation)
from .harness import (ExperimentConfig, MseEstimate, NoiseSpec,
                      distribution_study, empirical_n_star, monte_carlo_mse,
                      sample_parameter_set, verify_two_design)
from .noise import (CnotDepolarizing, CnotPauliChannel, GlobalDepolarizing,
                    NoNoise, extract_g, per_layer_error_rate_to_eta0,
                    random_pauli_weights, total_error_rate)

__all__ = [
    "__version__",
    "AnsatzLayout", "ParameterPoint", "PauliObservable", "DensityMatrix",
    "build_ansatz", "cyclic_observable", "zero_state", "evolve",
    "expectation",
    "NoNoise", "GlobalDepolarizing", "CnotDepolarizing", "CnotPauliChannel",
    "random_pauli_weights", "total_error_rate",
    "per_layer_error_rate_to_eta0", "extract_g",
    "Gradient", "DiagHessian", "OffDiagHessian", "EstimatorSpec",
    "shot_allocation", "estimator_mean", "exact_derivative",
    "estimate_derivative",
    "TwoDesignMoments", "MseBreakdown", "SchemeParams", "two_design_moments",
    "mse_sps", "mse_fd", "lambda_opt", "lambda_opt_eta", "epsilon_opt",
    "epsilon_opt_asymptotic", "n_star_sps_exact", "n_star_sps_small_eta",
    "n_star_fd", "noise_bias", "CrossoverNotFound",
    "ExperimentConfig", "NoiseSpec", "MseEstimate", "sample_parameter_set",
    "monte_carlo_mse", "empirical_n_star", "distribution_study",
    "verify_two_design",
]
