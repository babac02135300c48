"""Core type algebra, API declarations, expressions, and type-level operations.

The type universe is nominal: Top and Bottom, type variables with upper
bounds, class types (which double as type constructors when they declare
type parameters), and type instances that apply a constructor to ground or
open arguments. Generic arguments are invariant; subtyping chases declared
supertypes transitively.

Identity conventions:
  * Two ClassTypes with the same name denote the same declared type.
  * Type variables are identified by name; ingestion keeps names globally
    unique within one ApiSpec.
  * API definitions are identified by integer id; overloads share a name
    but never an id.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator, Optional, Union


class ResolutionError(Exception):
    """A type name did not resolve against the ApiSpec."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class Type:
    """Base class of the type algebra. All subclasses are immutable."""

    __slots__ = ()

    def display(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.display()


@dataclass(frozen=True, repr=False)
class TopType(Type):
    __slots__ = ()

    def display(self) -> str:
        return "Top"

    def __repr__(self) -> str:
        return "Top"


@dataclass(frozen=True, repr=False)
class BottomType(Type):
    __slots__ = ()

    def display(self) -> str:
        return "Bottom"

    def __repr__(self) -> str:
        return "Bottom"


TOP = TopType()
BOTTOM = BottomType()


@dataclass(frozen=True, eq=False, repr=False)
class TypeVariable(Type):
    """A type variable with an upper bound (Top when unstated)."""

    name: str
    upper_bound: Type = TOP

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeVariable) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("tv", self.name))

    def display(self) -> str:
        return self.name

    def __repr__(self) -> str:
        if isinstance(self.upper_bound, TopType):
            return f"TypeVariable({self.name})"
        return f"TypeVariable({self.name} <: {self.upper_bound.display()})"


@dataclass(frozen=True, eq=False, repr=False)
class ClassType(Type):
    """A declared class. With type parameters it is a type constructor.

    Equality and hashing go by name: the declared class is the identity,
    parameters and supertypes are attributes of the declaration.
    """

    name: str
    type_params: tuple[TypeVariable, ...] = ()
    supertypes: tuple[Type, ...] = ()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ClassType) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("class", self.name))

    @property
    def is_constructor(self) -> bool:
        return bool(self.type_params)

    def display(self) -> str:
        return self.name

    def __repr__(self) -> str:
        if self.type_params:
            params = ", ".join(p.name for p in self.type_params)
            return f"ClassType({self.name}<{params}>)"
        return f"ClassType({self.name})"


@dataclass(frozen=True, repr=False)
class TypeInstance(Type):
    """A type constructor applied to type arguments."""

    constructor: ClassType
    type_args: tuple[Type, ...]

    def __post_init__(self) -> None:
        if len(self.type_args) != len(self.constructor.type_params):
            raise ValueError(
                f"{self.constructor.name} expects "
                f"{len(self.constructor.type_params)} type arguments, "
                f"got {len(self.type_args)}"
            )

    def display(self) -> str:
        args = ", ".join(a.display() for a in self.type_args)
        return f"{self.constructor.name}<{args}>"

    def __repr__(self) -> str:
        return f"TypeInstance({self.display()})"


def generic_pattern(t: Type) -> Type:
    """The usable form of a declared type: C for simple, C<a, b> for generic."""
    if isinstance(t, ClassType) and t.is_constructor:
        return TypeInstance(t, tuple(t.type_params))
    return t


def free_type_vars(t: Type) -> set[TypeVariable]:
    """Type variables occurring in t (bounds are not traversed)."""
    if isinstance(t, TypeVariable):
        return {t}
    if isinstance(t, TypeInstance):
        out: set[TypeVariable] = set()
        for a in t.type_args:
            out |= free_type_vars(a)
        return out
    return set()


def is_ground(t: Type) -> bool:
    return not free_type_vars(t)


def instance_depth(t: Type) -> int:
    """Constructor nesting depth: simple types are 0, C<Int> is 1, C<C<Int>> 2."""
    if isinstance(t, TypeInstance):
        return 1 + max(instance_depth(a) for a in t.type_args)
    return 0


# ---------------------------------------------------------------------------
# Substitutions
# ---------------------------------------------------------------------------


class Substitution(Mapping):
    """Finite map from type variables to types.

    Immutable; iteration order is sorted by variable name so every consumer
    is deterministic. The empty substitution is the identity of application
    and subsumes every substitution.
    """

    __slots__ = ("_map",)

    def __init__(self, entries: object = None) -> None:
        m: dict[TypeVariable, Type] = {}
        if entries is not None:
            items = entries.items() if isinstance(entries, Mapping) else entries
            for var, img in items:
                m[var] = img
        self._map = m

    def __getitem__(self, var: TypeVariable) -> Type:
        return self._map[var]

    def __iter__(self) -> Iterator[TypeVariable]:
        return iter(sorted(self._map, key=lambda v: v.name))

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Substitution):
            return self._map == other._map
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple((v.name, img) for v, img in self.items()))

    def merged(self, other: "Substitution") -> "Substitution":
        """New substitution where entries of `other` win on conflict."""
        m = dict(self._map)
        m.update(other._map)
        return Substitution(m)

    def display(self) -> str:
        inner = ", ".join(f"{v.name}->{img.display()}" for v, img in self.items())
        return "{" + inner + "}"

    def __repr__(self) -> str:
        return f"Substitution({self.display()})"


EMPTY_SUBSTITUTION = Substitution()


def apply(sub: Substitution, t: Type) -> Type:
    """Simultaneous substitution: mapped variables are replaced, recursively
    through type instances; unmapped variables survive unchanged."""
    if not sub:
        return t
    if isinstance(t, TypeVariable):
        return sub.get(t, t)
    if isinstance(t, TypeInstance):
        return TypeInstance(t.constructor, tuple(apply(sub, a) for a in t.type_args))
    return t


def subsumes(s1: Substitution, s2: Substitution) -> bool:
    """True iff every variable in s1's domain maps to the identical type in s2."""
    return all(s2.get(var) == img for var, img in s1.items())


def decompose(t: Type) -> tuple[Substitution, Type]:
    """Split a type instance into its argument substitution and constructor.

    apply(result[0], generic_pattern(result[1])) reconstructs the input.
    """
    if isinstance(t, TypeInstance):
        return (
            Substitution(zip(t.constructor.type_params, t.type_args)),
            t.constructor,
        )
    return (EMPTY_SUBSTITUTION, t)


def is_valid(sub: Substitution) -> bool:
    """Def of validity: every image is a subtype of the variable's (substituted)
    upper bound. Substituting the bound makes recursive bounds such as
    T <: A<T> meaningful."""
    for var, img in sub.items():
        if not is_subtype(None, img, apply(sub, var.upper_bound)):
            return False
    return True


# ---------------------------------------------------------------------------
# Subtyping
# ---------------------------------------------------------------------------


def direct_supertypes(spec: Optional["ApiSpec"], t: Type) -> tuple[Type, ...]:
    """Declared direct supertypes of t, substituted for type instances."""
    if isinstance(t, TypeVariable):
        return (t.upper_bound,)
    if isinstance(t, TypeInstance):
        ctor = _canonical_class(spec, t.constructor)
        sub = Substitution(zip(ctor.type_params, t.type_args))
        return tuple(apply(sub, s) for s in ctor.supertypes)
    if isinstance(t, ClassType):
        return _canonical_class(spec, t).supertypes
    return ()


def transitive_supertypes(spec: Optional["ApiSpec"], t: Type) -> list[Type]:
    """All supertypes of t reachable through declared supertype edges,
    excluding t itself and the implicit Top."""
    seen: list[Type] = []
    work = list(direct_supertypes(spec, t))
    while work:
        s = work.pop(0)
        if isinstance(s, TopType) or s in seen:
            continue
        seen.append(s)
        work.extend(direct_supertypes(spec, s))
    return seen


def is_subtype(spec: Optional["ApiSpec"], t1: Type, t2: Type) -> bool:
    """Reflexive-transitive nominal subtyping with invariant type arguments."""
    if spec is not None:
        t1 = resolve(spec, t1)
        t2 = resolve(spec, t2)
    return _is_subtype(spec, t1, t2)


def _is_subtype(spec: Optional["ApiSpec"], t1: Type, t2: Type) -> bool:
    if t1 == t2:
        return True
    if isinstance(t2, TopType) or isinstance(t1, BottomType):
        return True
    if isinstance(t1, TopType) or isinstance(t2, BottomType):
        return False
    # Same constructor with different arguments: invariance, no relation.
    if (
        isinstance(t1, TypeInstance)
        and isinstance(t2, TypeInstance)
        and t1.constructor == t2.constructor
    ):
        return False
    return any(_is_subtype(spec, s, t2) for s in direct_supertypes(spec, t1))


# ---------------------------------------------------------------------------
# Unification
# ---------------------------------------------------------------------------


def unify(t1: Type, t2: Type) -> Optional[Substitution]:
    """Find sigma binding variables of t2 so that apply(sigma, t2) is an
    equal subtype of t1.

    Inside constructors arguments must match exactly (invariance); at the
    top level subtyping is admitted by also trying every declared supertype
    pattern of t2. Absence signals non-unifiability.
    """
    out: dict[TypeVariable, Type] = {}
    if _unify_structural(t1, t2, out):
        return Substitution(out)
    for s in transitive_supertypes(None, t2):
        out = {}
        if _unify_structural(t1, s, out):
            return Substitution(out)
    return None


def _unify_structural(t1: Type, t2: Type, out: dict[TypeVariable, Type]) -> bool:
    if isinstance(t2, TypeVariable):
        if t2 in out:
            return out[t2] == t1
        out[t2] = t1
        return True
    if isinstance(t1, TypeInstance) and isinstance(t2, TypeInstance):
        if t1.constructor != t2.constructor:
            return False
        return all(
            _unify_structural(a1, a2, out)
            for a1, a2 in zip(t1.type_args, t2.type_args)
        )
    return t1 == t2


# ---------------------------------------------------------------------------
# API declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionDef:
    """A method, constructor, or free function."""

    id: int
    name: str
    owner: Optional[ClassType]
    type_params: tuple[TypeVariable, ...]
    params: tuple[tuple[str, Type], ...]
    return_type: Type
    is_static: bool = False
    is_constructor: bool = False

    @property
    def is_field(self) -> bool:
        return False


@dataclass(frozen=True)
class FieldDef:
    """A field of a class."""

    id: int
    name: str
    owner: Optional[ClassType]
    type: Type
    is_static: bool = False

    @property
    def is_field(self) -> bool:
        return True

    @property
    def is_constructor(self) -> bool:
        return False

    @property
    def type_params(self) -> tuple[TypeVariable, ...]:
        return ()


ApiDef = Union[FunctionDef, FieldDef]


def result_type(d: ApiDef) -> Type:
    return d.type if isinstance(d, FieldDef) else d.return_type


def is_receiverless(d: ApiDef) -> bool:
    """Static members, constructors, and free functions take no receiver."""
    return d.owner is None or d.is_static or d.is_constructor


def sig_type_vars(d: ApiDef) -> tuple[TypeVariable, ...]:
    """Variables free in the definition's signature: the owner's parameters
    for instance members (bound by the receiver at use sites) followed by
    the definition's own parameters."""
    owner_vars: tuple[TypeVariable, ...] = ()
    if d.owner is not None and not is_receiverless(d):
        owner_vars = d.owner.type_params
    return owner_vars + d.type_params


@dataclass(frozen=True)
class ClassDecl:
    type: ClassType
    members: tuple[ApiDef, ...]


class ApiSpec:
    """A resolved API: declared classes with members, free functions, and
    auto-declared external types. Immutable after construction."""

    def __init__(
        self,
        name: str,
        classes: tuple[ClassDecl, ...] = (),
        free_functions: tuple[ApiDef, ...] = (),
        externals: tuple[ClassType, ...] = (),
    ) -> None:
        self.name = name
        self.classes = tuple(classes)
        self.free_functions = tuple(free_functions)
        self.externals = tuple(externals)
        self._by_name: dict[str, ClassType] = {}
        self._members: dict[str, tuple[ApiDef, ...]] = {}
        for decl in self.classes:
            self._by_name[decl.type.name] = decl.type
            self._members[decl.type.name] = decl.members
        for ext in self.externals:
            self._by_name.setdefault(ext.name, ext)
            self._members.setdefault(ext.name, ())
        self._defs: dict[int, ApiDef] = {}
        for d in self.all_defs():
            if d.id in self._defs:
                raise ValueError(f"duplicate definition id {d.id}")
            self._defs[d.id] = d

    def all_defs(self) -> Iterator[ApiDef]:
        for decl in self.classes:
            yield from decl.members
        yield from self.free_functions

    def def_by_id(self, def_id: int) -> ApiDef:
        try:
            return self._defs[def_id]
        except KeyError:
            raise ResolutionError(f"unknown definition id {def_id}") from None

    def class_by_name(self, name: str) -> Optional[ClassType]:
        return self._by_name.get(name)

    def members_of(self, name: str) -> tuple[ApiDef, ...]:
        return self._members.get(name, ())

    def declared_types(self) -> tuple[ClassType, ...]:
        """Every declared class type, externals included."""
        return tuple(d.type for d in self.classes) + self.externals

    def ground_simple_types(self) -> tuple[ClassType, ...]:
        """Non-generic declared types, usable directly as value types."""
        return tuple(t for t in self.declared_types() if not t.is_constructor)

    def with_defs_removed(self, removed: set[int]) -> "ApiSpec":
        classes = tuple(
            ClassDecl(d.type, tuple(m for m in d.members if m.id not in removed))
            for d in self.classes
        )
        free = tuple(f for f in self.free_functions if f.id not in removed)
        return ApiSpec(self.name, classes, free, self.externals)


def resolve(spec: Optional[ApiSpec], t: Type) -> Type:
    """Replace class references by their canonical declarations in spec."""
    if spec is None:
        return t
    if isinstance(t, ClassType):
        decl = spec.class_by_name(t.name)
        if decl is None:
            raise ResolutionError(f"unresolved type name '{t.name}'")
        return decl
    if isinstance(t, TypeInstance):
        ctor = resolve(spec, t.constructor)
        if not isinstance(ctor, ClassType) or len(ctor.type_params) != len(
            t.type_args
        ):
            raise ResolutionError(
                f"'{t.constructor.name}' instantiated with {len(t.type_args)} "
                "arguments"
            )
        return TypeInstance(ctor, tuple(resolve(spec, a) for a in t.type_args))
    return t


def _canonical_class(spec: Optional[ApiSpec], ct: ClassType) -> ClassType:
    if spec is None:
        return ct
    decl = spec.class_by_name(ct.name)
    if decl is None:
        raise ResolutionError(f"unresolved type name '{ct.name}'")
    return decl


# ---------------------------------------------------------------------------
# Member lookup
# ---------------------------------------------------------------------------


def lookup_field(
    spec: ApiSpec, recv: Type, field_name: str
) -> Optional[tuple[ApiDef, Substitution]]:
    """Find a field in the receiver's class or, failing that, recursively in
    declared supertypes. The returned substitution carries the receiver's
    type arguments composed along the inheritance chain."""
    recv = resolve(spec, recv)
    sub, base = decompose(recv)
    if not isinstance(base, ClassType):
        return None
    for m in spec.members_of(base.name):
        if isinstance(m, FieldDef) and m.name == field_name:
            return (m, sub)
    for s in _canonical_class(spec, base).supertypes:
        found = lookup_field(spec, apply(sub, s), field_name)
        if found is not None:
            return found
    return None


def lookup_method(
    spec: ApiSpec, recv: Type, def_id: int, decompose_return: bool = False
) -> Optional[tuple[ApiDef, Substitution]]:
    """As lookup_field, keyed by definition id so overloads resolve exactly.

    decompose_return switches to the alternative reading where the found
    definition's return type is decomposed instead of the receiver; the
    default (receiver decomposition) is what every pipeline stage uses.
    """
    recv = resolve(spec, recv)
    sub, base = decompose(recv)
    if not isinstance(base, ClassType):
        return None
    for m in spec.members_of(base.name):
        if isinstance(m, FunctionDef) and m.id == def_id:
            if decompose_return:
                return (m, decompose(m.return_type)[0])
            return (m, sub)
    for s in _canonical_class(spec, base).supertypes:
        found = lookup_method(spec, apply(sub, s), def_id, decompose_return)
        if found is not None:
            return found
    return None


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Empty(Expr):
    """Receiver of static and top-level accesses; types to Bottom."""

    __slots__ = ()


EMPTY = Empty()


@dataclass(frozen=True)
class Constant(Expr):
    """An opaque value of a declared type (emitted as a cast-null form)."""

    type: Type


@dataclass(frozen=True)
class FieldAccess(Expr):
    receiver: Expr
    def_id: int


@dataclass(frozen=True)
class Call(Expr):
    """Method, constructor, or free-function application. type_args is empty
    or matches the callee's type parameter count exactly."""

    receiver: Expr
    def_id: int
    type_args: tuple[Type, ...] = ()
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class LocalVar(Expr):
    name: str
    declared_type: Type
    rhs: Expr


@dataclass(frozen=True)
class Provenance:
    """Where a program came from: enough to reproduce it."""

    library: str = ""
    def_id: int = -1
    sequence: tuple[str, ...] = ()
    seed: int = 0
    mode: str = ""


@dataclass(frozen=True)
class Program:
    stmts: tuple[Expr, ...]
    provenance: Optional[Provenance] = None
