"""Chain event graph toolkit for reliability causal analysis.

Build probability trees from model documents, merge them into chain event
graphs via stages and positions, apply stochastic or maintenance-driven
interventions, and compute or identify causal effects on failure events.
"""

from .causal import (
    BackdoorPartition,
    BackdoorReport,
    CausalQuery,
    CriterionComparison,
    backdoor_adjustment,
    brute_force_effect,
    causal_effect_devent,
    causal_effect_edge_level,
    check_backdoor_partition,
    expected_effect_imperfect,
    forced_edge_effect,
    idle_target_mass,
    partition_from_selectors,
    remedial_breakdown,
    search_backdoor_partition,
)
from .ceg import (
    SINK_FAIL,
    SINK_OK,
    Ceg,
    build_ceg,
    ceg_from_document,
    is_fine_cut,
    lambda_of,
    root_to_sink_paths,
)
from .errors import CegError
from .event_tree import (
    DEFAULT_TOLERANCE,
    DEvent,
    Edge,
    EventTree,
    LeafStatus,
    Path,
    PathSet,
    ProbabilityTree,
    build_event_tree,
    path_probability,
    root_to_leaf_paths,
)
from .intervention import (
    DirichletFloretPrior,
    HiddenAction,
    RemedialRecord,
    RemedyClass,
    StochasticManipulation,
    classify_remedy,
    conditioned_ceg,
    indicator_terms,
    infer_indicator_distribution,
    manipulated_path_probability,
    manipulation_from_indicators,
    singular_manipulation,
    update_dirichlet,
    validate_stochastic,
)
from .model_io import (
    InterventionDocument,
    ModelDocument,
    QueryDocument,
    load,
    load_intervention,
    load_query,
    loads,
    dump,
    dumps,
)
from .staging import (
    PositionPartition,
    StagePartition,
    StagedTree,
    compute_positions,
    compute_stages,
    declared_stages,
    staged_tree_from_document,
)

__version__ = "0.1.0"

__all__ = [
    "BackdoorPartition",
    "BackdoorReport",
    "CausalQuery",
    "Ceg",
    "CegError",
    "CriterionComparison",
    "DEFAULT_TOLERANCE",
    "DEvent",
    "DirichletFloretPrior",
    "Edge",
    "EventTree",
    "HiddenAction",
    "InterventionDocument",
    "LeafStatus",
    "ModelDocument",
    "Path",
    "PathSet",
    "PositionPartition",
    "ProbabilityTree",
    "QueryDocument",
    "RemedialRecord",
    "RemedyClass",
    "SINK_FAIL",
    "SINK_OK",
    "StagePartition",
    "StagedTree",
    "StochasticManipulation",
    "backdoor_adjustment",
    "brute_force_effect",
    "build_ceg",
    "build_event_tree",
    "causal_effect_devent",
    "causal_effect_edge_level",
    "ceg_from_document",
    "check_backdoor_partition",
    "classify_remedy",
    "compute_positions",
    "compute_stages",
    "conditioned_ceg",
    "declared_stages",
    "dump",
    "dumps",
    "expected_effect_imperfect",
    "forced_edge_effect",
    "idle_target_mass",
    "indicator_terms",
    "infer_indicator_distribution",
    "is_fine_cut",
    "lambda_of",
    "load",
    "load_intervention",
    "load_query",
    "loads",
    "manipulated_path_probability",
    "manipulation_from_indicators",
    "partition_from_selectors",
    "path_probability",
    "remedial_breakdown",
    "root_to_leaf_paths",
    "root_to_sink_paths",
    "search_backdoor_partition",
    "singular_manipulation",
    "staged_tree_from_document",
    "update_dirichlet",
    "validate_stochastic",
]
