"""Likelihood-free Bayesian inference of gene regulatory networks.

The package infers small directed networks (structure and edge weights
jointly) from short time-series expression data with ABC-MCMC: a
Metropolis-Hastings sampler whose likelihood is replaced by an
indicator that a candidate network's one-step-ahead predictions fall
within a calibrated distance of the observations.
"""

from .core import (ChainSample, DistanceKind, ExpressionData, GeneNetwork,
                   RunConfig, validate_network)
from .diagnostics import (EdgeSummary, PosteriorSummary, gelman_rubin,
                          gelman_rubin_matrix, summarize)
from .distances import distance, matrix_distance
from .evaluate import (CellResult, EvalReport, StudyCell, call_edges,
                       roc_auc, run_cell_once, run_study)
from .mcmc import (CalibrationResult, ChainAbortError, CoolingSchedule,
                   RunResult, abc_rejection, acceptance_probability,
                   calibrate_epsilon, neighborhood_size, propose,
                   run_abc_net, run_chain, sample_prior)
from .simulators import (GenerationError, GeneratorSpec, apply_network,
                         generate, generate_ode, generate_retry,
                         one_step_predict, raf_truth, sample_raf_params)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult", "CellResult", "ChainAbortError", "ChainSample",
    "CoolingSchedule", "DistanceKind", "EdgeSummary", "EvalReport",
    "ExpressionData", "GeneNetwork", "GenerationError", "GeneratorSpec",
    "PosteriorSummary", "RunConfig", "RunResult", "StudyCell",
    "abc_rejection", "acceptance_probability", "apply_network",
    "calibrate_epsilon",
    "call_edges", "distance", "gelman_rubin", "gelman_rubin_matrix",
    "generate", "generate_ode", "generate_retry", "matrix_distance",
    "neighborhood_size", "one_step_predict", "propose", "raf_truth",
    "roc_auc", "run_abc_net", "run_cell_once", "run_chain", "run_study",
    "sample_prior", "sample_raf_params", "summarize", "validate_network",
]
