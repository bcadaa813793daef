"""Deciders for open, late, and early strong bisimilarity of finite
pi-calculus processes, plus modal assertion checking, built on symbolic
transitions over a lambda-tree term representation."""

from .syntax import (
    Bang,
    Bound,
    BoundIn,
    BoundOut,
    DuplicatePrefixName,
    Eigen,
    Free,
    FreeIn,
    FreeOut,
    In,
    Match,
    Nabla,
    Nil,
    NIL,
    Nu,
    Out,
    Par,
    ParseError,
    Prefix,
    Sum,
    TAU,
    Tau,
    TauPref,
    UnboundName,
    alpha_eq,
    close_abs,
    encode,
    extend_prefix_for_reserved,
    free_names,
    open_abs,
    parse_decls,
    parse_prefix,
    parse_process,
    pretty,
    pretty_action,
    pretty_name,
)
from .unify import (
    Distinction,
    EMPTY_DISTINCTION,
    IDENTITY,
    InternalError,
    Subst,
    compose,
    prefix_distinction,
    pretty_subst,
    respects,
    unify_names,
)
from .lts import (
    Edge,
    Graph,
    StateBudgetExceeded,
    Transition,
    has_no_transition,
    infer_depth,
    lts_graph,
    successors_bound,
    successors_free,
    to_dot,
)
from .modal import (
    FormulaOutsideLM,
    FreeInputModality,
    dual,
    encode_formula,
    fresh_budget,
    parse_formula,
    pretty_formula,
    sat_ground,
    sat_open,
)
from .bisim import (
    BisimResult,
    DepthBudgetExceeded,
    Goal,
    ReplicationUnsupported,
    WitnessMalformed,
    distinguishing_formula,
    early_bisim,
    late_bisim,
    open_bisim,
    verify_witness,
    witness_mainline,
)

__version__ = "0.1.0"
