"""Hierarchical design spaces.

Declare variables and decree rules with :func:`build_graph`, check and repair
points with :func:`is_valid` and :func:`correct`, compare them with
:func:`hier_distance`, model them with the kernels in :mod:`hierdsg.kernels`
and :mod:`hierdsg.gp`, and optimize with :mod:`hierdsg.bo`.
"""

from ._core import BACKEND
from .bo import BoConfig, BoTrace, expected_improvement, propose_next, run_bo, run_random_baseline, wb2s
from .configs import enumerate_discrete, hierarchical_names, sample_valid, stats
from .distance import DistanceParams, alg_distance, default_delta, hier_distance, pairwise_matrix
from .errors import (
    HierDsgError, DesignSpaceError, CycleError, InfeasibleError, DanglingReferenceError,
    DomainError, MissingParentError, WidthError, BudgetError, NonFiniteError, UnboundedError,
    HyperparamError, NonSymmetricError, SearchExhaustedError, SingularError, DegenerateError,
    InvalidPointError, UnknownProblemError, ParseError, SchemaError,
)
from .gp import Dataset, GpModel, SearchConfig, fit
from .graph import (
    ACTIVE,
    CATEGORICAL,
    CONTINUOUS,
    EXC,
    INTEGER,
    ORDINAL,
    Affine,
    Clause,
    Condition,
    DecreeRule,
    DesignSpaceGraph,
    Effect,
    Endpoint,
    IncompatibilityEdge,
    IntermediateNode,
    OrderRelation,
    VariableDecl,
    build_graph,
    compute_support,
    derive_role,
    support,
)
from .io import emit_design_space, parse_design_space, read_points, write_points
from .kernels import CR, GD, HIER, NAIVE, KernelHyperparams, gram, kernel, naive_kernel_witness, spd_check
from .points import ExtendedPoint, correct, decode_fast, is_valid, make_point
from .problems import ProblemSpec, evaluate, get_problem, list_problems

__all__ = [
    "BACKEND",
    "BoConfig",
    "BoTrace",
    "expected_improvement",
    "propose_next",
    "run_bo",
    "run_random_baseline",
    "wb2s",
    "enumerate_discrete",
    "hierarchical_names",
    "sample_valid",
    "stats",
    "DistanceParams",
    "alg_distance",
    "default_delta",
    "hier_distance",
    "pairwise_matrix",
    "HierDsgError",
    "DesignSpaceError",
    "CycleError",
    "InfeasibleError",
    "DanglingReferenceError",
    "DomainError",
    "MissingParentError",
    "WidthError",
    "BudgetError",
    "NonFiniteError",
    "UnboundedError",
    "HyperparamError",
    "NonSymmetricError",
    "SearchExhaustedError",
    "SingularError",
    "DegenerateError",
    "InvalidPointError",
    "UnknownProblemError",
    "ParseError",
    "SchemaError",
    "Dataset",
    "GpModel",
    "SearchConfig",
    "fit",
    "ACTIVE",
    "CATEGORICAL",
    "CONTINUOUS",
    "EXC",
    "INTEGER",
    "ORDINAL",
    "Affine",
    "Clause",
    "Condition",
    "DecreeRule",
    "DesignSpaceGraph",
    "Effect",
    "Endpoint",
    "IncompatibilityEdge",
    "IntermediateNode",
    "OrderRelation",
    "VariableDecl",
    "build_graph",
    "compute_support",
    "derive_role",
    "support",
    "emit_design_space",
    "parse_design_space",
    "read_points",
    "write_points",
    "CR",
    "GD",
    "HIER",
    "NAIVE",
    "KernelHyperparams",
    "gram",
    "kernel",
    "naive_kernel_witness",
    "spd_check",
    "ExtendedPoint",
    "correct",
    "decode_fast",
    "is_valid",
    "make_point",
    "ProblemSpec",
    "evaluate",
    "get_problem",
    "list_problems",
]

__version__ = "0.1.0"
