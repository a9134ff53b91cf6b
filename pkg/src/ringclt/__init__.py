"""Simulation lab for high-dimensional Berry-Esseen bounds under m-dependence and m-ring dependence."""

from __future__ import annotations

__version__ = "0.1.0"

from .assumptions import AssumptionReport, enumerate_intervals, fit_sigma_lower, fit_sigma_min, validate
from .batch import SampleBatch
from .bounds import BoundEvaluation, BoundInputs, cor_rhs, fit_constant, shergin_rhs, thm_rhs_q3, thm_rhs_q4
from .coupling import gaussian_coupling
from .covmodel import CovarianceModel, expand_dense
from .distance import DiscreteLaw, DistanceEstimate, kappa_hat, kappa_monotonicity_suite, mu_exact, mu_hat
from .harness import SweepConfig, SweepRow, emit, fit_rate_slope, run_sweep
from .intervals import IntervalSet
from .linalg import cholesky, invert, min_eigenvalue, schur_conditional_cov
from .moments import MomentSummary, averaged, estimate_moments
from .procgen import ProcessSpec, block_reduce, build_duplication, build_ma, implied_covariance, sample_series
from .smoothing import SmoothingParams, f_smooth, indicator_smooth, nazarov_bound, rho_mixed, smoothing_gap
