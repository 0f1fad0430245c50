"""Simulation and localized estimation for time-varying Levy-driven
Ornstein-Uhlenbeck and state-space processes.

The package simulates slowly-varying continuous-time models observed on
shrinking grids and estimates their coefficient functions near a fixed
time point with three kernel-localized estimators: least squares for
the OU coefficient, a truncated quasi-maximum likelihood estimator
driven by a steady-state Kalman filter, and a Whittle estimator built
from a localized periodogram.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegeneracyError, EstimationError,
                     NumericError, OptimizationError)
from .kernels import (EPANECHNIKOV, RECTANGULAR, kernel_by_name, kernel_eval,
                      kernel_weights, validate_kernel)
from .levy import (GaussianLevy, LevySpec, NIGLevy, RngStream, levy_moments,
                   nig_centered, sample_increment, sample_increments)
from .simulate import (ConstantCurve, PiecewiseLinearCurve, SamplingGrid,
                       Window, constant_theta, curve_by_name, extract_window,
                       o2_grid, paper_grid, simulate_tv_ou,
                       simulate_tv_statespace, theta_star_curve)
from .ou_lse import (LseEstimate, lse_asymp_variance, lse_contrast,
                     lse_estimate, lse_standardized_error)
from .statespace import (AssumptionReport, ModelFamily, SampledModel,
                         check_assumptions, example2d_family, example_family,
                         matrix_exp, sampled_autocovariance,
                         sampled_density_grid, sampled_model,
                         sampled_noise_cov, spectral_density_continuous,
                         spectral_density_sampled, stationary_state_cov)
from .kalman import (KalmanSteady, StateSpaceEstimate, qmle_estimate,
                     qmle_objective, solve_riccati, truncated_innovations,
                     truncated_innovations_direct)
from .whittle import (LocalSpectrum, local_autocov, local_periodogram,
                      local_spectrum, whittle_estimate, whittle_frequencies,
                      whittle_objective, whittle_value)
from .optimize import DeConfig, DeResult, de_minimize
from .harness import (StudyConfig, StudyResult, mise, qq_export, qq_max_gap,
                      run_study)

__all__ = [name for name in dir() if not name.startswith("_")]
