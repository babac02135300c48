"""Type-argument erasure for polymorphic calls.

A call's type arguments can be dropped when local inference provably
recovers every one of them: the binding unified from the target type of
the call merged with the bindings unified from the argument types must
reproduce the explicit arguments exactly (all or nothing). Erasure walks
expressions structurally; a local variable hands its declared type down as
the target, receivers and bare statements get none, arguments get their
substituted formal parameter type as target unless the enclosing call is
itself erased (the checker then re-infers without the enclosing bindings,
so the decision must not depend on them).
"""

from __future__ import annotations

from typing import Optional

from .checker import infer_call, type_of
from .graph import ApiGraph
from .ir import (
    Call,
    Constant,
    Empty,
    Expr,
    FieldAccess,
    FunctionDef,
    LocalVar,
    Program,
    Substitution,
    Type,
    apply,
    lookup_method,
    resolve,
)


def can_erase(graph: ApiGraph, call: Call, target: Optional[Type]) -> bool:
    """True iff inference from the target type and the argument types
    recovers exactly the explicit type arguments of the call."""
    spec = graph.spec
    d = spec.def_by_id(call.def_id)
    if not isinstance(d, FunctionDef) or not d.type_params or not call.type_args:
        return False
    if len(call.type_args) != len(d.type_params):
        return False
    try:
        inferred = infer_call(spec, _without_type_args(call), target)
    except Exception:
        return False
    if inferred is None:
        return False
    explicit = Substitution(
        zip(d.type_params, (resolve(spec, t) for t in call.type_args))
    )
    return all(inferred.get(v) == explicit[v] for v in d.type_params)


def _without_type_args(call: Call) -> Call:
    return Call(call.receiver, call.def_id, (), call.args)


def erase(graph: ApiGraph, e: Expr, target: Optional[Type] = None) -> Expr:
    """Structurally recursive erasure; never alters expression structure
    other than deleting type argument lists."""
    spec = graph.spec
    if isinstance(e, (Constant, Empty)):
        return e
    if isinstance(e, LocalVar):
        declared = resolve(spec, e.declared_type)
        return LocalVar(e.name, e.declared_type, erase(graph, e.rhs, declared))
    if isinstance(e, FieldAccess):
        return FieldAccess(erase(graph, e.receiver, None), e.def_id)
    if isinstance(e, Call):
        d = spec.def_by_id(e.def_id)
        drop = can_erase(graph, e, target)
        receiver = erase(graph, e.receiver, None)
        arg_targets = _argument_targets(graph, e, dropped=drop)
        args = tuple(
            erase(graph, a, t) for a, t in zip(e.args, arg_targets)
        )
        return Call(receiver, e.def_id, () if drop else e.type_args, args)
    return e


def _argument_targets(
    graph: ApiGraph, call: Call, dropped: bool
) -> tuple[Optional[Type], ...]:
    """Substituted formal parameter types, or no targets at all when this
    call loses its explicit arguments (the checker will have no bindings on
    hand while typing them)."""
    spec = graph.spec
    d = spec.def_by_id(call.def_id)
    if not isinstance(d, FunctionDef):
        return ()
    if dropped or (d.type_params and not call.type_args):
        return tuple(None for _ in d.params)
    sub = Substitution()
    if not isinstance(call.receiver, Empty):
        try:
            recv_t = type_of(spec, call.receiver, None)
        except Exception:
            return tuple(None for _ in d.params)
        found = lookup_method(spec, recv_t, d.id)
        if found is not None:
            sub = found[1]
    if call.type_args and len(call.type_args) == len(d.type_params):
        sub = sub.merged(
            Substitution(
                zip(d.type_params, (resolve(spec, t) for t in call.type_args))
            )
        )
    return tuple(apply(sub, pt) for _, pt in d.params)


def erase_program(graph: ApiGraph, program: Program) -> Program:
    """Per-statement erasure: a local variable's declared type is the
    top-level target, bare expression statements have none."""
    return Program(
        tuple(erase(graph, stmt, None) for stmt in program.stmts),
        program.provenance,
    )
