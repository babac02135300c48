"""typesmith: API-driven synthesis of type-intensive client programs for
differential testing of static type checkers."""

from .ir import (
    BOTTOM,
    TOP,
    ApiSpec,
    Call,
    ClassType,
    Constant,
    EMPTY,
    FieldAccess,
    LocalVar,
    Program,
    Substitution,
    Type,
    TypeInstance,
    TypeVariable,
    apply,
    decompose,
    is_subtype,
    is_valid,
    lookup_field,
    lookup_method,
    subsumes,
    unify,
)
from .ingest import RawApiDocument, load_api, load_api_paths, parse_type_expr, skip_unusable
from .graph import ApiGraph, build_graph, graph_stats, paths_to, to_dot
from .enumeration import (
    ApiSignature,
    EnumCaps,
    TypingSequence,
    draw_substitution,
    enumerate_ill_typed,
    enumerate_well_typed,
    signature_of,
)
from .inhabitants import FeasiblePath, find_api_paths, realize, to_expr
from .checker import Verdict, check, infer_call
from .erasure import can_erase, erase, erase_program
from .emit import PROFILES, DialectProfile, SourceFile, emit, parse_ir, print_ir

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
