"""Provably correct minimal explanations for feedforward ReLU classifiers,
computed through MILP encodings with and without indicator constraints."""

from .encoding import (
    BIG_M,
    INDICATOR,
    EncodedNetwork,
    NetworkBounds,
    attach_negation,
    attach_negation_bigm,
    attach_negation_indicator,
    build_encoding,
    canonical_assignment,
    count_stats,
    encode_bigm,
    encode_indicator,
    tighten_bounds,
)
from .errors import (
    InconclusiveError,
    MilpExplainError,
    SolverError,
    TieMarginError,
    ValidationError,
)
from .explain import (
    EntailmentVerdict,
    Explanation,
    VerifyReport,
    brute_force_entails,
    entails,
    minimal_explanation,
    verify_explanation,
)
from .milp import IndicatorConstraint, LinearConstraint, MilpModel, export_lp
from .model import (
    Ann,
    FeatureSpec,
    Instance,
    Layer,
    dump_model,
    forward,
    load_model,
    make_instance,
    parse_dataset,
    predict,
    prediction_margin,
    preprocess_dataset,
)
from .solver import LpOutcome, MilpOutcome, check_feasible, solve_lp, solve_milp

__version__ = "0.1.0"

__all__ = [
    "Ann",
    "BIG_M",
    "EncodedNetwork",
    "EntailmentVerdict",
    "Explanation",
    "FeatureSpec",
    "INDICATOR",
    "InconclusiveError",
    "Instance",
    "IndicatorConstraint",
    "Layer",
    "LinearConstraint",
    "LpOutcome",
    "MilpExplainError",
    "MilpModel",
    "MilpOutcome",
    "NetworkBounds",
    "SolverError",
    "TieMarginError",
    "ValidationError",
    "VerifyReport",
    "attach_negation",
    "attach_negation_bigm",
    "attach_negation_indicator",
    "brute_force_entails",
    "build_encoding",
    "canonical_assignment",
    "check_feasible",
    "count_stats",
    "dump_model",
    "encode_bigm",
    "encode_indicator",
    "entails",
    "export_lp",
    "forward",
    "load_model",
    "make_instance",
    "minimal_explanation",
    "parse_dataset",
    "predict",
    "prediction_margin",
    "preprocess_dataset",
    "solve_lp",
    "solve_milp",
    "tighten_bounds",
    "verify_explanation",
]
