"""Gaussian mixture fitting with mode-based merging and modal clustering.

Fit finite Gaussian mixtures by EM with BIC model selection, then cluster
from the modal point of view: ascend the fitted density with a fixed-point
(mean-shift style) map to find its modes, merge components whose means share
a mode, or partition points by the mode their ascent converges to.
"""

from modalmix.clustering import (
    Clustering,
    adjusted_rand_index,
    component_assign,
    merge_components,
    modal_assign,
)
from modalmix.datagen import (
    NamedScenario,
    overlapping_components_scenario,
    scenario_by_name,
    trimodal_wellseparated_scenario,
    true_modal_labels,
)
from modalmix.em import (
    FitConfig,
    FitResult,
    SelectionResult,
    bic_score,
    em_fit,
    select_model,
)
from modalmix.errors import (
    AscentViolation,
    DegenerateData,
    DimensionMismatch,
    InvalidArgument,
    LengthMismatch,
    ModalMixError,
    NotPositiveDefinite,
    UnknownScenario,
    UnresolvedTrajectory,
)
from modalmix.gaussian import CovarianceFactor, factorize, log_density, sample
from modalmix.meanshift import (
    MeanShiftConfig,
    ModeSet,
    Trajectory,
    ascend,
    data_scale,
    find_modes,
    quasi_newton_step,
    shift_map,
)
from modalmix.mixture import GaussianComponent, GaussianMixture

__version__ = "0.1.0"

__all__ = [
    "AscentViolation",
    "Clustering",
    "CovarianceFactor",
    "DegenerateData",
    "DimensionMismatch",
    "FitConfig",
    "FitResult",
    "GaussianComponent",
    "GaussianMixture",
    "InvalidArgument",
    "LengthMismatch",
    "MeanShiftConfig",
    "ModalMixError",
    "ModeSet",
    "NamedScenario",
    "NotPositiveDefinite",
    "SelectionResult",
    "Trajectory",
    "UnknownScenario",
    "UnresolvedTrajectory",
    "adjusted_rand_index",
    "ascend",
    "bic_score",
    "component_assign",
    "data_scale",
    "em_fit",
    "factorize",
    "find_modes",
    "log_density",
    "merge_components",
    "modal_assign",
    "overlapping_components_scenario",
    "quasi_newton_step",
    "sample",
    "scenario_by_name",
    "select_model",
    "shift_map",
    "trimodal_wellseparated_scenario",
    "true_modal_labels",
    "__version__",
]
