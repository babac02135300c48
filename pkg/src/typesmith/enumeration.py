"""Well-typed and ill-typed typing-sequence enumeration.

For one API definition with signature <r', p1'..pn', t'> and a valid
substitution sigma, the well-typed sequences are the Cartesian product
R x P1 x ... x Pn x T where R and Pi hold subtypes of the substituted
receiver and parameter types and T holds supertypes of the substituted
return type. Candidates come from the spec's declared ground types plus
the substituted slot type itself (and, for T, its full transitive
supertype closure); Top and Bottom never appear.

Ill-typed sequences corrupt exactly one slot: a faulted receiver is
neither a subtype nor a supertype of the formal receiver, a faulted
parameter is not a subtype, a faulted expected type is not a supertype.
All other slots stay at their tightest well-typed choice.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .graph import ApiGraph, DefNode, TypeNode
from .ir import (
    ApiDef,
    ApiSpec,
    BottomType,
    ClassType,
    Substitution,
    TopType,
    Type,
    TypeInstance,
    TypeVariable,
    apply,
    decompose,
    generic_pattern,
    is_ground,
    is_subtype,
    is_valid,
    instance_depth,
    resolve,
    result_type,
    sig_type_vars,
    transitive_supertypes,
)

WELL_TYPED = "well-typed"
ILL_TYPED = "ill-typed"


class UnsatisfiableBounds(Exception):
    """No valid instantiation exists for the given variables at this depth."""


@dataclass(frozen=True)
class EnumCaps:
    """Knobs bounding the enumeration per definition."""

    max_sequences_per_def: int = 500
    incompatible_per_slot: int = 5


@dataclass(frozen=True)
class ApiSignature:
    receiver: Optional[Type]
    params: tuple[Type, ...]
    return_type: Type


@dataclass(frozen=True)
class TypingSequence:
    """Abstract usage of one definition: receiver, argument types, and the
    expected type of the whole application."""

    def_id: int
    receiver: Optional[Type]
    arg_types: tuple[Type, ...]
    expected_type: Type
    substitution: Substitution
    verdict: str = WELL_TYPED
    faulted_slot: Optional[str] = None

    def slots_display(self) -> tuple[str, ...]:
        head = "_" if self.receiver is None else self.receiver.display()
        return (
            (head,)
            + tuple(t.display() for t in self.arg_types)
            + (self.expected_type.display(),)
        )


def signature_of(graph: ApiGraph, def_id: int) -> ApiSignature:
    """Receiver from the unique incoming receiver edge (None when the
    definition is sourceless), parameters and return from the declaration."""
    d = graph.spec.def_by_id(def_id)
    node = DefNode(def_id)
    receiver: Optional[Type] = None
    incoming = graph.inc.get(node, [])
    if incoming:
        src = incoming[0][0]
        assert isinstance(src, TypeNode)
        receiver = generic_pattern(src.type)
    params = () if d.is_field else tuple(pt for _, pt in d.params)
    return ApiSignature(receiver, params, result_type(d))


# ---------------------------------------------------------------------------
# Ground type pools and substitution drawing
# ---------------------------------------------------------------------------


def ground_types(
    spec: ApiSpec, depth: int, limit: Optional[int] = None
) -> list[Type]:
    """Ground types built from declared classes with constructor nesting up
    to `depth` (simple types are depth 0), in deterministic order, valid
    instances only."""
    out: list[Type] = sorted(spec.ground_simple_types(), key=lambda t: t.name)
    generics = sorted(
        (t for t in spec.declared_types() if t.is_constructor),
        key=lambda t: t.name,
    )
    layer: list[Type] = list(out)
    for _ in range(depth):
        new_layer: list[Type] = []
        for ctor in generics:
            for args in itertools.product(layer, repeat=len(ctor.type_params)):
                inst = TypeInstance(ctor, args)
                if instance_depth(inst) > depth:
                    continue
                if inst in out or inst in new_layer:
                    continue
                if not is_valid(decompose(inst)[0]):
                    continue
                new_layer.append(inst)
                if limit is not None and len(out) + len(new_layer) >= limit:
                    return out + new_layer
        if not new_layer:
            break
        out.extend(new_layer)
        layer = out
    return out


def _random_ground(
    spec: ApiSpec, depth: int, rng: random.Random
) -> Optional[Type]:
    """One random ground type of nesting depth <= depth; None when the spec
    declares nothing usable."""
    simples = spec.ground_simple_types()
    generics = (
        [t for t in spec.declared_types() if t.is_constructor] if depth >= 1 else []
    )
    pool: Sequence[ClassType] = sorted(
        list(simples) + list(generics), key=lambda t: t.name
    )
    if not pool:
        return None
    choice = rng.choice(pool)
    if not choice.is_constructor:
        return choice
    args = []
    for _ in choice.type_params:
        a = _random_ground(spec, depth - 1, rng)
        if a is None:
            return None
        args.append(a)
    return TypeInstance(choice, tuple(args))


def solve_substitution(
    spec: ApiSpec,
    type_params: Sequence[TypeVariable],
    depth: int,
    node_budget: int = 20000,
) -> Optional[Substitution]:
    """Deterministic backtracking search for a valid instantiation; None when
    none exists within the depth (complete up to the node budget)."""
    candidates = ground_types(spec, depth, limit=512)
    params = list(type_params)
    budget = [node_budget]

    def extend(i: int, chosen: dict[TypeVariable, Type]) -> Optional[Substitution]:
        if i == len(params):
            sub = Substitution(chosen)
            return sub if is_valid(sub) else None
        for cand in candidates:
            if budget[0] <= 0:
                return None
            budget[0] -= 1
            chosen[params[i]] = cand
            # Bounds may reference later variables; full validity is checked
            # at the leaf, this only prunes ground-bound mismatches early.
            bound = apply(Substitution(chosen), params[i].upper_bound)
            if is_ground(bound) and not is_subtype(None, cand, bound):
                del chosen[params[i]]
                continue
            found = extend(i + 1, chosen)
            if found is not None:
                return found
            del chosen[params[i]]
        return None

    return extend(0, {})


def draw_substitution(
    spec: ApiSpec,
    type_params: Sequence[TypeVariable],
    depth: int,
    rng: random.Random,
) -> Substitution:
    """A random valid substitution mapping every listed variable to a ground
    type of nesting depth <= depth. Deterministic given the rng state.
    Raises UnsatisfiableBounds when no valid instantiation exists."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    params = list(type_params)
    if not params:
        return Substitution()
    for _ in range(64):
        images = {}
        ok = True
        for var in params:
            img = _random_ground(spec, depth, rng)
            if img is None:
                ok = False
                break
            images[var] = img
        if not ok:
            break
        sub = Substitution(images)
        if is_valid(sub):
            return sub
    solved = solve_substitution(spec, params, depth)
    if solved is None:
        raise UnsatisfiableBounds(
            "no valid instantiation for "
            + ", ".join(v.name for v in params)
            + f" at depth {depth}"
        )
    return solved


# ---------------------------------------------------------------------------
# Slot candidate sets
# ---------------------------------------------------------------------------


def _pool(spec: ApiSpec) -> list[Type]:
    return sorted(spec.ground_simple_types(), key=lambda t: t.display())


def _sorted_unique(types: list[Type]) -> list[Type]:
    out: list[Type] = []
    for t in sorted(types, key=lambda x: x.display()):
        if t not in out:
            out.append(t)
    return out


def _usable(t: Type) -> bool:
    return not isinstance(t, (TopType, BottomType))


def subtype_candidates(spec: ApiSpec, t: Type) -> list[Type]:
    """Declared ground types below t, t itself included; never Top/Bottom."""
    cands = [s for s in _pool(spec) if is_subtype(spec, s, t)]
    if is_ground(t):
        cands.append(resolve(spec, t))
    return _sorted_unique([c for c in cands if _usable(c)])


def supertype_candidates(spec: ApiSpec, t: Type) -> list[Type]:
    """Declared ground types above t plus t's full transitive supertype
    closure and t itself; Top and Bottom excluded."""
    t = resolve(spec, t)
    cands = [s for s in _pool(spec) if is_subtype(spec, t, s)]
    cands.extend(s for s in transitive_supertypes(spec, t) if is_ground(s))
    if is_ground(t):
        cands.append(t)
    return _sorted_unique([c for c in cands if _usable(c)])


def _slot_sets(
    spec: ApiSpec, sig: ApiSignature, sub: Substitution
) -> list[list[Type]]:
    slots: list[list[Type]] = []
    if sig.receiver is not None:
        slots.append(subtype_candidates(spec, apply(sub, sig.receiver)))
    for p in sig.params:
        slots.append(subtype_candidates(spec, apply(sub, p)))
    slots.append(supertype_candidates(spec, apply(sub, sig.return_type)))
    return slots


def _check_sub_covers(d: ApiDef, sub: Substitution) -> None:
    missing = [v.name for v in sig_type_vars(d) if v not in sub]
    if missing:
        raise ValueError(
            f"substitution does not cover type variables: {', '.join(missing)}"
        )


def enumerate_well_typed(
    spec: ApiSpec,
    graph: ApiGraph,
    def_id: int,
    sub: Substitution,
    caps: EnumCaps = EnumCaps(),
    rng: Optional[random.Random] = None,
) -> list[TypingSequence]:
    """Exhaustive Cartesian product of the slot candidate sets, truncated to
    caps.max_sequences_per_def by seeded uniform index sampling."""
    d = spec.def_by_id(def_id)
    _check_sub_covers(d, sub)
    sig = signature_of(graph, def_id)
    slots = _slot_sets(spec, sig, sub)
    sizes = [len(s) for s in slots]
    total = 1
    for n in sizes:
        total *= n
    if total == 0:
        return []
    cap = caps.max_sequences_per_def
    if total <= cap:
        indices: Iterator[int] = iter(range(total))
    else:
        sampler = rng or random.Random(0)
        indices = iter(sorted(sampler.sample(range(total), cap)))
    has_recv = sig.receiver is not None
    out = []
    for flat in indices:
        picks = []
        rem = flat
        for n in reversed(sizes):
            picks.append(rem % n)
            rem //= n
        picks.reverse()
        chosen = [slot[i] for slot, i in zip(slots, picks)]
        receiver = chosen[0] if has_recv else None
        args = tuple(chosen[1:-1]) if has_recv else tuple(chosen[:-1])
        out.append(
            TypingSequence(def_id, receiver, args, chosen[-1], sub, WELL_TYPED)
        )
    return out


def _incompatible(spec: ApiSpec, slot: str, cand: Type, tight: Type) -> bool:
    if slot == "receiver":
        return not is_subtype(spec, cand, tight) and not is_subtype(
            spec, tight, cand
        )
    if slot == "expected":
        return not is_subtype(spec, tight, cand)
    return not is_subtype(spec, cand, tight)


def enumerate_ill_typed(
    spec: ApiSpec,
    graph: ApiGraph,
    def_id: int,
    sub: Substitution,
    caps: EnumCaps,
    rng: random.Random,
) -> list[TypingSequence]:
    """For each slot in turn, draw up to caps.incompatible_per_slot
    incompatible types while every other slot keeps its tightest well-typed
    choice. Empty when the spec holds no incompatible candidate."""
    d = spec.def_by_id(def_id)
    _check_sub_covers(d, sub)
    sig = signature_of(graph, def_id)
    tight_recv = apply(sub, sig.receiver) if sig.receiver is not None else None
    tight_args = tuple(apply(sub, p) for p in sig.params)
    tight_expected = apply(sub, sig.return_type)
    pool = _pool(spec)

    slots: list[tuple[str, Type]] = []
    if tight_recv is not None:
        slots.append(("receiver", tight_recv))
    for i, p in enumerate(tight_args):
        slots.append((f"arg[{i}]", p))
    slots.append(("expected", tight_expected))

    out = []
    for slot_name, tight in slots:
        cands = [c for c in pool if _incompatible(spec, slot_name, c, tight)]
        if not cands:
            continue
        take = min(caps.incompatible_per_slot, len(cands))
        for bad in sorted(rng.sample(cands, take), key=lambda t: t.display()):
            receiver = tight_recv
            args = list(tight_args)
            expected = tight_expected
            if slot_name == "receiver":
                receiver = bad
            elif slot_name == "expected":
                expected = bad
            else:
                args[int(slot_name[4:-1])] = bad
            out.append(
                TypingSequence(
                    def_id,
                    receiver,
                    tuple(args),
                    expected,
                    sub,
                    ILL_TYPED,
                    faulted_slot=slot_name,
                )
            )
    return out


def is_well_typed_sequence(
    spec: ApiSpec, graph: ApiGraph, seq: TypingSequence
) -> bool:
    """The defining predicate: receiver and argument types are subtypes of
    the substituted formals, the expected type a supertype of the
    substituted return type."""
    sig = signature_of(graph, seq.def_id)
    sub = seq.substitution
    if (sig.receiver is None) != (seq.receiver is None):
        return False
    if sig.receiver is not None and not is_subtype(
        spec, seq.receiver, apply(sub, sig.receiver)
    ):
        return False
    if len(seq.arg_types) != len(sig.params):
        return False
    for arg, p in zip(seq.arg_types, sig.params):
        if not is_subtype(spec, arg, apply(sub, p)):
            return False
    return is_subtype(spec, apply(sub, sig.return_type), seq.expected_type)
