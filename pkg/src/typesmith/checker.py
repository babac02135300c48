"""Reference type checker for the program IR.

Implements the typing judgments directly: the empty receiver types to
Bottom, constants to their declared type, field accesses and method calls
through member lookup with the receiver's substitution, local variables
demand the right-hand side be a subtype of the declared type. The first
failing premise is reported with (statement index, slot).

Calls that carry no explicit type arguments on a polymorphic callee are
typed with inference enabled: bindings are unified from the target type
(when the context provides one) and the argument types, and must cover
every type variable without conflict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ir import (
    ApiSpec,
    BOTTOM,
    Call,
    Constant,
    Empty,
    Expr,
    FieldAccess,
    FieldDef,
    FunctionDef,
    LocalVar,
    Program,
    Substitution,
    Type,
    apply,
    is_receiverless,
    is_subtype,
    lookup_field,
    lookup_method,
    resolve,
    unify,
)

SLOT_RECEIVER = "receiver"
SLOT_EXPECTED = "expected"
SLOT_INFERENCE = "inference"


def slot_arg(i: int) -> str:
    return f"arg[{i}]"


@dataclass(frozen=True)
class TypeErrorInfo:
    stmt_index: int
    slot: str
    reason: str


@dataclass(frozen=True)
class Verdict:
    well_typed: bool
    error: Optional[TypeErrorInfo] = None

    def __bool__(self) -> bool:
        return self.well_typed


class _Blame(Exception):
    def __init__(self, slot: str, reason: str) -> None:
        super().__init__(reason)
        self.slot = slot
        self.reason = reason


def check(spec: ApiSpec, program: Program) -> Verdict:
    """Total on resolvable programs; the TypeError verdict is the output."""
    for i, stmt in enumerate(program.stmts):
        try:
            if isinstance(stmt, LocalVar):
                declared = resolve(spec, stmt.declared_type)
                rhs_t = _type_of(spec, stmt.rhs, declared)
                if not is_subtype(spec, rhs_t, declared):
                    raise _Blame(
                        SLOT_EXPECTED,
                        f"{rhs_t.display()} is not a subtype of "
                        f"{declared.display()}",
                    )
            else:
                _type_of(spec, stmt, None)
        except _Blame as blame:
            return Verdict(False, TypeErrorInfo(i, blame.slot, blame.reason))
    return Verdict(True)


def type_of(spec: ApiSpec, e: Expr, target: Optional[Type] = None) -> Type:
    """Type of a single expression; raises on type errors."""
    return _type_of(spec, e, target)


def _type_of(spec: ApiSpec, e: Expr, target: Optional[Type]) -> Type:
    if isinstance(e, Empty):
        return BOTTOM
    if isinstance(e, Constant):
        return resolve(spec, e.type)
    if isinstance(e, FieldAccess):
        return _type_field(spec, e)
    if isinstance(e, Call):
        return _type_call(spec, e, target)
    if isinstance(e, LocalVar):
        declared = resolve(spec, e.declared_type)
        rhs_t = _type_of(spec, e.rhs, declared)
        if not is_subtype(spec, rhs_t, declared):
            raise _Blame(
                SLOT_EXPECTED,
                f"{rhs_t.display()} is not a subtype of {declared.display()}",
            )
        return BOTTOM
    raise _Blame(SLOT_RECEIVER, f"unknown expression {e!r}")


def _type_field(spec: ApiSpec, e: FieldAccess) -> Type:
    d = spec.def_by_id(e.def_id)
    if not isinstance(d, FieldDef):
        raise _Blame(SLOT_RECEIVER, f"definition {e.def_id} is not a field")
    if isinstance(e.receiver, Empty):
        if not d.is_static:
            raise _Blame(SLOT_RECEIVER, f"field {d.name} needs a receiver")
        return resolve(spec, d.type)
    recv_t = _type_of(spec, e.receiver, None)
    found = lookup_field(spec, recv_t, d.name)
    if found is None or found[0].id != d.id:
        raise _Blame(
            SLOT_RECEIVER,
            f"{recv_t.display()} has no field {d.name}",
        )
    _, sub = found
    return apply(sub, d.type)


def _type_call(spec: ApiSpec, e: Call, target: Optional[Type]) -> Type:
    d = spec.def_by_id(e.def_id)
    if not isinstance(d, FunctionDef):
        raise _Blame(SLOT_RECEIVER, f"definition {e.def_id} is not callable")

    if isinstance(e.receiver, Empty):
        if not is_receiverless(d):
            raise _Blame(SLOT_RECEIVER, f"method {d.name} needs a receiver")
        lookup_sub = Substitution()
    else:
        if is_receiverless(d):
            raise _Blame(
                SLOT_RECEIVER, f"{d.name} does not take a receiver"
            )
        recv_t = _type_of(spec, e.receiver, None)
        found = lookup_method(spec, recv_t, d.id)
        if found is None:
            raise _Blame(
                SLOT_RECEIVER,
                f"{recv_t.display()} has no method {d.name} (id {d.id})",
            )
        _, lookup_sub = found

    if e.type_args:
        if len(e.type_args) != len(d.type_params):
            raise _Blame(
                SLOT_INFERENCE,
                f"{d.name} takes {len(d.type_params)} type arguments, "
                f"got {len(e.type_args)}",
            )
        explicit = Substitution(
            zip(d.type_params, (resolve(spec, t) for t in e.type_args))
        )
        # Explicit type arguments win over lookup-derived bindings.
        sub = lookup_sub.merged(explicit)
    elif d.type_params:
        inferred = infer_call(spec, e, target)
        if inferred is None:
            raise _Blame(
                SLOT_INFERENCE,
                f"cannot infer type arguments of {d.name}",
            )
        sub = lookup_sub.merged(inferred)
    else:
        sub = lookup_sub

    if len(e.args) != len(d.params):
        raise _Blame(
            slot_arg(min(len(e.args), len(d.params))),
            f"{d.name} takes {len(d.params)} arguments, got {len(e.args)}",
        )
    # Arguments of a call whose type arguments were inferred see no target:
    # their own inference ran before the outer bindings existed, and the
    # erasure pass made its decisions under the same restriction.
    inferred_outer = bool(d.type_params) and not e.type_args
    for i, ((_, pt), arg) in enumerate(zip(d.params, e.args)):
        formal = apply(sub, pt)
        actual = _type_of(spec, arg, None if inferred_outer else formal)
        if not is_subtype(spec, actual, formal):
            raise _Blame(
                slot_arg(i),
                f"{actual.display()} is incompatible with {formal.display()}",
            )
    return apply(sub, d.return_type)


def infer_call(
    spec: ApiSpec, call: Call, target: Optional[Type] = None
) -> Optional[Substitution]:
    """Recover type arguments of a polymorphic call from the target type and
    the argument types; absent when a variable stays unbound or bindings
    conflict."""
    d = spec.def_by_id(call.def_id)
    if not isinstance(d, FunctionDef) or not d.type_params:
        return None
    if isinstance(call.receiver, Empty):
        lookup_sub = Substitution()
    else:
        recv_t = _type_of(spec, call.receiver, None)
        found = lookup_method(spec, recv_t, d.id)
        if found is None:
            return None
        _, lookup_sub = found

    bindings: dict = {}

    def merge(sub: Optional[Substitution]) -> bool:
        if sub is None:
            return True  # an unavailable source contributes nothing
        for var, img in sub.items():
            if var not in d.type_params:
                continue
            if var in bindings and bindings[var] != img:
                return False
            bindings[var] = img
        return True

    if target is not None:
        if not merge(unify(resolve(spec, target), apply(lookup_sub, d.return_type))):
            return None
    if len(call.args) != len(d.params):
        return None
    for (_, pt), arg in zip(d.params, call.args):
        actual = _type_of(spec, arg, None)
        if not merge(unify(actual, apply(lookup_sub, pt))):
            return None
    if any(v not in bindings for v in d.type_params):
        return None
    return Substitution(bindings)
