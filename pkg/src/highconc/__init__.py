"""Inference for the location of rotationally symmetric distributions on the
unit sphere under high concentration."""

from .angular import (AngularFunction, HighConcentration, MomentSet, RotSymModel, arctan,
                      classify_high_concentration, colatitude_cdf, colatitude_logpdf, custom,
                      fvml, from_name, kappa_for_kappa_phi, log_density, log_norm_const,
                      moments_asymptotic, moments_exact, polynomial, power_exp)
from .conditions import check_condition_F, check_condition_FLAN, verify_lemma_constants
from .dataset import Dataset
from .geometry import (TangentDecomposition, TangentProjector, UnitVector, basis_vector,
                       compose, decompose, orthonormal_complement_frame)
from .inference import (ConfidenceCap, DegenerateError, TestResult, confidence_cap_feasible,
                        confidence_cap_oracle, e2_hat, fvml_concentration_mle, location_test,
                        rn_diagnostic, spherical_mean, wald_statistic, watson_statistic)
from .io import AnalysisReport, LeaveOneOutReport, analyze, ingest, leave_one_out
from .montecarlo import (ExperimentConfig, local_alternative, run_cap_experiment,
                         run_expansion_verifier, run_lan_experiment, run_power_experiment,
                         theoretical_power)
from .rng import SeededStream
from .sampling import ColatitudeSampler, sample
from .special import chi2_quantile, chi2_survival, noncentral_chi2_survival

__version__ = "0.1.0"
