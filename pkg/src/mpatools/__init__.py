"""Causal effect estimation with partially missing confounders.

Two halves, one workflow:

- graph side: annotate a causal diagram with treatment, outcome,
  partially observed confounders and their missingness indicators, then
  mechanically check whether weighting on per-pattern propensity scores
  identifies the average treatment effect (:func:`run_framework`);
- data side: estimate the risk difference by per-pattern propensity
  weighting and its comparators, with bootstrap inference and balance
  diagnostics (:func:`estimate_ate`), plus a structural simulator with
  known ground truth for validation (:func:`generate`).

The ``mpa`` command line wraps both halves; see ``mpa --help``.
"""

from .checker import (
    AssumptionSpec,
    FrameworkReport,
    check_cio,
    check_cit,
    check_msita,
    run_framework,
    screen_scenarios,
)
from .dsep import (
    PathReport,
    QueryVerdict,
    d_separated,
    find_open_path,
    is_d_separated,
    list_paths,
    reachable_nodes,
)
from .errors import (
    CheckError,
    DataError,
    EstimationError,
    GraphSyntaxError,
    GraphValidationError,
    MpaError,
    QueryError,
    ScenarioError,
    TransformError,
)
from .estimators import (
    AteResult,
    BalanceTable,
    Covariate,
    Dataset,
    ModelSpec,
    design_matrix,
    estimate_ate,
    fit_logistic,
    iptw_ate,
    missing_indicator_propensity,
    mpa_propensity,
    standardized_differences,
)
from .graph import CausalGraph, NodeRole, parse_graph
from .simulator import (
    Mechanism,
    ScenarioSpec,
    SimOutput,
    generate,
    population_ate,
    scenario,
    scenario_library,
)
from .transforms import (
    PatternModification,
    requires_twin_network,
    restrict_to_pattern,
    to_swit,
    to_twin_network,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionSpec",
    "AteResult",
    "BalanceTable",
    "CausalGraph",
    "CheckError",
    "Covariate",
    "DataError",
    "Dataset",
    "EstimationError",
    "FrameworkReport",
    "GraphSyntaxError",
    "GraphValidationError",
    "Mechanism",
    "ModelSpec",
    "MpaError",
    "NodeRole",
    "PathReport",
    "PatternModification",
    "QueryError",
    "QueryVerdict",
    "ScenarioError",
    "ScenarioSpec",
    "SimOutput",
    "TransformError",
    "check_cio",
    "check_cit",
    "check_msita",
    "d_separated",
    "design_matrix",
    "estimate_ate",
    "find_open_path",
    "fit_logistic",
    "generate",
    "iptw_ate",
    "is_d_separated",
    "list_paths",
    "missing_indicator_propensity",
    "mpa_propensity",
    "parse_graph",
    "population_ate",
    "reachable_nodes",
    "requires_twin_network",
    "restrict_to_pattern",
    "run_framework",
    "scenario",
    "scenario_library",
    "screen_scenarios",
    "standardized_differences",
    "to_swit",
    "to_twin_network",
]
