"""Observed-information-driven design of sequential experiments.

Core objects: response models with elemental information, information
matrices built from designs or data, D/A design criteria with
equivalence-gap certificates, locally optimal and augmented design
solvers, sequential allocation policies, a vectorized Monte Carlo study
harness, and an event-sourced HTTP session service.
"""

from .structures import (CandidateSet, ContinuousDesign, DataSet, ExactDesign,
                         InfoMatrix)
from .models import (GammaLog, NormalSqrt, RegressorMap, eta,
                     log_likelihood, model_from_spec, model_to_spec)
from .criteria import (DEGENERATE, EfficiencyReport, observed_efficiency,
                       observed_efficiency_at_mle, psi, psi_batch,
                       psi_efficiency, relative_efficiency)
from .information import (DegenerateDataError, blended_weight, efi,
                          induced_design, info_ratios, observed_info_raw,
                          ofi, omega_weights, projected_information)
from .mle import MleResult, SingularInformationError, fit_mle
from .design_opt import (AugmentedProblem, RankDeficientError,
                         SolverDiagnostics, augmented_optimal, flod_continuous,
                         flod_exact, round_design, solve_weights)
from .adaptive import (METHODS, PolicyState, RunPlan, RunRecord,
                       export_trajectory, first_run, next_run, run_experiment)
from .streams import ResponseStreams, point_stream_raw
from .config import ConfigError, ExperimentConfig, load_config
from .simulation import (StudyConfig, StudyError, StudyResult, export_results,
                         gamma_study_config, normal_study_config, rate_study,
                         reproduce, run_study)

__version__ = "0.1.0"

__all__ = [
    "AugmentedProblem", "CandidateSet", "ConfigError", "ContinuousDesign",
    "DEGENERATE", "DataSet", "DegenerateDataError", "EfficiencyReport",
    "ExactDesign", "ExperimentConfig", "GammaLog", "InfoMatrix", "METHODS",
    "MleResult", "NormalSqrt", "PolicyState", "RankDeficientError",
    "RegressorMap", "ResponseStreams", "RunPlan", "RunRecord",
    "SingularInformationError", "SolverDiagnostics", "StudyConfig",
    "StudyError", "StudyResult", "__version__", "augmented_optimal",
    "blended_weight", "efi", "eta", "export_results", "export_trajectory",
    "first_run", "fit_mle", "flod_continuous", "flod_exact",
    "gamma_study_config", "induced_design", "info_ratios", "load_config",
    "log_likelihood", "model_from_spec", "model_to_spec", "next_run",
    "normal_study_config", "observed_efficiency", "observed_efficiency_at_mle",
    "observed_info_raw", "ofi", "omega_weights", "point_stream_raw",
    "projected_information", "psi", "psi_batch", "psi_efficiency",
    "rate_study", "relative_efficiency", "reproduce", "round_design",
    "run_experiment", "run_study", "solve_weights",
]
