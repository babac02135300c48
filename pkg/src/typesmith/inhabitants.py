"""Type-inhabitant search over the API graph.

A path forms an inhabitant of a target type t when it ends at the node of
t's constructor and all edge substitutions, after constant propagation and
unification against t, extend to one valid substitution that agrees with
t's own decomposition. Free variables the unification leaves open do not
affect the resulting type and are instantiated with random shallow types.

The trivial singleton path (the target itself) is always included, so the
search never comes back empty; it converts to an opaque constant.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional

from .enumeration import (
    TypingSequence,
    UnsatisfiableBounds,
    draw_substitution,
    ground_types,
)
from .graph import ApiGraph, DefNode, GraphNode, Path, TypeNode, paths_to
from .ir import (
    Call,
    Constant,
    EMPTY,
    Expr,
    FieldDef,
    FieldAccess,
    LocalVar,
    Program,
    Provenance,
    Substitution,
    Type,
    TypeVariable,
    apply,
    decompose,
    free_type_vars,
    generic_pattern,
    is_receiverless,
    is_valid,
    resolve,
    subsumes,
    unify,
)


@dataclass(frozen=True)
class FeasiblePath:
    nodes: tuple[GraphNode, ...]
    resolved: Substitution
    target: Type

    @property
    def is_trivial(self) -> bool:
        return len(self.nodes) == 1


def _propagate_labels(graph: ApiGraph, path: Path) -> dict[TypeVariable, Type]:
    """Compose edge substitutions in traversal order, resolving
    variable-to-variable chains (E->K after K->String becomes E->String)."""
    acc: dict[TypeVariable, Type] = {}
    for src, dst in zip(path, path[1:]):
        label = graph.edge_label(src, dst)
        cur = Substitution(acc)
        for var, img in label.items():
            acc[var] = apply(cur, img)
    # One stabilization sweep for out-of-order chains; identity entries
    # (a constructor returning its own parameter) are already fixpoints.
    for _ in range(len(acc)):
        cur = Substitution(acc)
        nxt = {v: apply(cur, img) for v, img in acc.items()}
        if nxt == acc:
            break
        acc = nxt
    return acc


def _path_type_vars(graph: ApiGraph, path: Path) -> list[TypeVariable]:
    """Every type variable a path introduces: definition and owner
    parameters, constructor parameters of type nodes, and variables
    occurring in edge labels."""
    seen: list[TypeVariable] = []

    def add(var: TypeVariable) -> None:
        if var not in seen:
            seen.append(var)

    for node in path:
        if isinstance(node, DefNode):
            d = graph.spec.def_by_id(node.def_id)
            for v in d.type_params:
                add(v)
            if d.owner is not None and not is_receiverless(d):
                for v in d.owner.type_params:
                    add(v)
        else:
            for v in getattr(node.type, "type_params", ()):
                add(v)
    for src, dst in zip(path, path[1:]):
        label = graph.edge_label(src, dst)
        for var, img in label.items():
            add(var)
            for v in free_type_vars(img):
                add(v)
    return seen


def _feasibility(
    graph: ApiGraph,
    path: Path,
    target: Type,
    sigma_decomp: Substitution,
    base: Type,
    rng: random.Random,
    free_draw_depth: int,
) -> Optional[FeasiblePath]:
    acc = _propagate_labels(graph, path)
    acc_sub = Substitution(acc)
    t2 = apply(acc_sub, generic_pattern(base))
    sigma1 = unify(target, t2)
    if sigma1 is None:
        return None
    path_vars = _path_type_vars(graph, path)
    # A variable is free when it still occurs in some residual image after
    # unification; identity label entries (a constructor returning its own
    # parameter) leave their variable free, not bound.
    residual_vars: set[TypeVariable] = set()
    for v in path_vars:
        residual = apply(sigma1, apply(acc_sub, acc.get(v, v)))
        residual_vars |= free_type_vars(residual)
    free = sorted(
        (v for v in path_vars if v in residual_vars and v not in sigma1),
        key=lambda v: v.name,
    )

    def merged_with(images: dict) -> Optional[Substitution]:
        binding = Substitution(dict(sigma1)).merged(Substitution(images))
        resolved = {v: apply(binding, img) for v, img in acc.items()}
        resolved.update(dict(binding))
        resolved_sub = Substitution(resolved)
        if not is_valid(resolved_sub):
            return None
        if not subsumes(sigma_decomp, resolved_sub):
            return None
        return resolved_sub

    if not free:
        resolved_sub = merged_with({})
        if resolved_sub is None:
            return None
        return FeasiblePath(tuple(path), resolved_sub, target)

    # Fast path: a random draw usually satisfies the merged bounds. Whether
    # the path is feasible must not depend on the draw, so fall back to a
    # systematic search over the candidate pool before giving up.
    try:
        drawn = draw_substitution(graph.spec, free, free_draw_depth, rng)
        resolved_sub = merged_with(dict(drawn))
        if resolved_sub is not None:
            return FeasiblePath(tuple(path), resolved_sub, target)
    except UnsatisfiableBounds:
        return None
    pool = ground_types(graph.spec, free_draw_depth, limit=256)
    budget = 20000
    for combo in itertools.product(pool, repeat=len(free)):
        budget -= 1
        if budget < 0:
            return None
        resolved_sub = merged_with(dict(zip(free, combo)))
        if resolved_sub is not None:
            return FeasiblePath(tuple(path), resolved_sub, target)
    return None


def find_api_paths(
    graph: ApiGraph,
    t: Type,
    rng: Optional[random.Random] = None,
    limit: Optional[int] = 1,
    k_per_start: Optional[int] = 1,
    free_draw_depth: int = 1,
) -> list[FeasiblePath]:
    """Paths forming inhabitants of t.

    Always returns the trivial singleton first. Graph paths are visited in
    random order (shuffled with rng) and checked for feasibility until
    `limit` feasible ones are found; limit=None with k_per_start=None
    exhausts every acyclic path.
    """
    rng = rng or random.Random(0)
    t = resolve(graph.spec, t)
    sigma_decomp, base = decompose(t)
    out = [FeasiblePath((TypeNode(t),), sigma_decomp, t)]
    target_node = TypeNode(base)
    if target_node not in graph:
        return out
    candidates = list(paths_to(graph, target_node, k=k_per_start))
    rng.shuffle(candidates)
    found = 0
    for path in candidates:
        fp = _feasibility(
            graph, path, t, sigma_decomp, base, rng, free_draw_depth
        )
        if fp is None:
            continue
        out.append(fp)
        found += 1
        if limit is not None and found >= limit:
            break
    return out


# ---------------------------------------------------------------------------
# Paths to expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthLimits:
    """Recursion bounds for expression construction."""

    max_program_depth: int = 2
    path_limit: int = 1
    k_per_start: Optional[int] = 1
    free_draw_depth: int = 1


def inhabitant_expr(
    graph: ApiGraph,
    t: Type,
    rng: random.Random,
    depth: int = 1,
    limits: SynthLimits = SynthLimits(),
) -> Expr:
    """Some expression of type t: beyond the depth budget an opaque
    constant, otherwise a randomly chosen feasible chain when one exists."""
    if depth > limits.max_program_depth:
        return Constant(resolve(graph.spec, t))
    paths = find_api_paths(
        graph,
        t,
        rng,
        limit=limits.path_limit,
        k_per_start=limits.k_per_start,
        free_draw_depth=limits.free_draw_depth,
    )
    chosen = paths[1] if len(paths) > 1 else paths[0]
    return to_expr(graph, chosen, rng=rng, depth=depth, limits=limits)


def to_expr(
    graph: ApiGraph,
    path: FeasiblePath,
    rng: Optional[random.Random] = None,
    depth: int = 1,
    limits: SynthLimits = SynthLimits(),
) -> Expr:
    """Fold a feasible path into an expression: a leading type node becomes
    an opaque constant, intermediate type nodes vanish, definition nodes
    become calls or field accesses with arguments filled by recursive
    inhabitant search."""
    rng = rng or random.Random(0)
    resolved = path.resolved
    expr: Optional[Expr] = None
    for node in path.nodes:
        if isinstance(node, TypeNode):
            if expr is None:
                expr = Constant(apply(resolved, generic_pattern(node.type)))
            continue
        d = graph.spec.def_by_id(node.def_id)
        receiver = expr if expr is not None else EMPTY
        if isinstance(d, FieldDef):
            expr = FieldAccess(receiver, d.id)
            continue
        type_args = tuple(resolved.get(v, v) for v in d.type_params)
        args = tuple(
            inhabitant_expr(
                graph, apply(resolved, pt), rng, depth + 1, limits
            )
            for _, pt in d.params
        )
        expr = Call(receiver, d.id, type_args, args)
    assert expr is not None
    return expr


def realize(
    graph: ApiGraph,
    def_id: int,
    seq: TypingSequence,
    rng: Optional[random.Random] = None,
    limits: SynthLimits = SynthLimits(),
    var_name: str = "x",
    seed: int = 0,
    mode: str = "",
) -> Program:
    """Concretize one typing sequence into a single-statement program:
    receiver and argument inhabitants around the definition, wrapped in a
    local variable of the expected type. Ill-typed sequences run the same
    construction with their faulted types; realization never fails."""
    assert seq.def_id == def_id
    rng = rng or random.Random(0)
    spec = graph.spec
    d = spec.def_by_id(def_id)
    if seq.receiver is None:
        receiver: Expr = EMPTY
    else:
        receiver = inhabitant_expr(graph, seq.receiver, rng, 2, limits)
    if isinstance(d, FieldDef):
        e: Expr = FieldAccess(receiver, d.id)
    else:
        type_args = tuple(
            seq.substitution.get(v, v) for v in d.type_params
        )
        args = tuple(
            inhabitant_expr(graph, at, rng, 2, limits)
            for at in seq.arg_types
        )
        e = Call(receiver, d.id, type_args, args)
    stmt = LocalVar(var_name, resolve(spec, seq.expected_type), e)
    return Program(
        (stmt,),
        Provenance(
            library=spec.name,
            def_id=def_id,
            sequence=seq.slots_display(),
            seed=seed,
            mode=mode or seq.verdict,
        ),
    )
