"""Stationarity and qualification toolkit for problems constrained by unions of boxes."""

__version__ = "0.1.0"

from .config import DEFAULT, Tolerances
from .errors import (
    ConsistencyError,
    DimensionError,
    DomainError,
    DskError,
    ExpressionError,
    InfeasiblePointError,
    InvalidIntervalError,
    NonSmoothError,
    SchemaError,
    TooLargeError,
    WitnessError,
)
from .geometry import (
    ActiveIndexData,
    Box,
    ExtendedInterval,
    ExtendedReal,
    OrthoDisjunctiveSet,
    interval,
    membership,
    project_onto_union,
)
from .cones import (
    SignCone,
    SignConeUnion,
    SignConstraint,
    cone_membership,
    limiting_normal_cone,
    regular_normal_cone,
)
from .expr import parse, to_string, value_and_grad
from .problem import DisjunctiveProblem, MpccProblem, embed_mpcc, mpcc_index_sets
from .linalg import positively_linearly_independent, rank_independent
from .stationarity import (
    check_licq,
    classify_mpcc,
    search_mpcc_multiplier,
    search_multiplier,
    verify_certificate,
)
from .sequences import (
    SequenceTerm,
    verify_am_sequence,
    verify_as_sequence,
    verify_mpcc_min_form,
    verify_mpcc_sequence,
    verify_sas_sequence,
)
from .qualification import (
    check_generalized_mfcq,
    check_mpcc_mfcq,
    check_mpcc_submfc,
    check_odp_submfc,
    conclude_from_mpcc_submfc,
    conclude_from_submfc,
    regularity_witness,
)
from .generator import GenerationResult, NonConvergenceWarning, PenaltyConfig, generate_am_sequence

__all__ = [name for name in dir() if not name.startswith("_")]
