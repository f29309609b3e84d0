"""Mixtures of Markov multinomial-logit transition models for panel data."""
__version__ = "0.1.0"

from .cluster import ClusterResult, align_labels, assign, cluster, posterior_membership
from .em import EmOptions, FitResult, e_step, fit, initialize, m_step, update_pi
from .errors import FitError, InvalidInputError, InvalidModelError, PanelParseError
from .model import (
    ModelSpec,
    PanelDataset,
    ParameterSet,
    observed_log_likelihood,
    path_log_likelihood,
    transition_probs,
)
from .simgen import CovariateSpec, GeneratorConfig, generate, table1_config
from .varsel import SelectionTrace, forward_select, holdout_log_likelihood

__all__ = [
    "ClusterResult", "CovariateSpec", "EmOptions", "FitError", "FitResult", "GeneratorConfig",
    "InvalidInputError", "InvalidModelError", "ModelSpec", "PanelDataset", "PanelParseError",
    "ParameterSet", "SelectionTrace", "align_labels", "assign", "cluster", "e_step", "fit",
    "forward_select", "generate", "holdout_log_likelihood", "initialize", "m_step",
    "observed_log_likelihood", "path_log_likelihood", "posterior_membership", "table1_config",
    "transition_probs", "update_pi",
]
