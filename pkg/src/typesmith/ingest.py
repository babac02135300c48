"""Parsing of JSON API descriptions into a resolved ApiSpec.

The accepted document schema:

    {"library": str,
     "classes": [{"name": str,
                  "type_parameters": [str | {"name": str, "bound": str}],
                  "supertypes": [str],
                  "fields": [{"name": str, "type": str, "static": bool}],
                  "methods": [{"name": str, "type_parameters": [...],
                               "parameters": [str], "return_type": str,
                               "static": bool, "constructor": bool}]}],
     "functions": [ ... method records ... ]}

Unknown keys are ignored with a warning. Type names referenced but never
declared are auto-declared as opaque member-less external classes.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .ir import (
    BOTTOM,
    TOP,
    ApiDef,
    ApiSpec,
    ClassDecl,
    ClassType,
    FieldDef,
    FunctionDef,
    Type,
    TypeInstance,
    TypeVariable,
    free_type_vars,
    generic_pattern,
)

logger = logging.getLogger(__name__)


class SpecError(Exception):
    """Malformed or inconsistent API description."""


class TypeExprSyntaxError(SpecError):
    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnresolvedNameError(SpecError):
    pass


class ArityMismatchError(SpecError):
    pass


class SupertypeCycleError(SpecError):
    pass


# ---------------------------------------------------------------------------
# Type expression parsing
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*")

Resolver = Callable[[str, int, int], ClassType]


def _default_resolver(name: str, arity: int, offset: int) -> ClassType:
    params = tuple(TypeVariable(f"${name}.{i}") for i in range(arity))
    return ClassType(name, params)


def parse_type_expr(
    text: str,
    in_scope_vars: Sequence[object] = (),
    resolver: Optional[Resolver] = None,
) -> Type:
    """Parse a type expression. Identifiers in in_scope_vars become type
    variables; everything else resolves through the resolver (by default a
    fabricated opaque class reference, to be canonicalized later)."""
    if not text or not text.strip():
        raise TypeExprSyntaxError("empty type expression", 0)
    scope: dict[str, TypeVariable] = {}
    for v in in_scope_vars:
        var = v if isinstance(v, TypeVariable) else TypeVariable(str(v))
        scope.setdefault(var.name, var)
    res = resolver or _default_resolver
    parser = _TypeExprParser(text, scope, res)
    t = parser.parse_type()
    parser.expect_end()
    return t


class _TypeExprParser:
    def __init__(self, text: str, scope: dict[str, TypeVariable], resolver: Resolver):
        self.text = text
        self.pos = 0
        self.scope = scope
        self.resolver = resolver

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _name(self) -> tuple[str, int]:
        self._skip_ws()
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise TypeExprSyntaxError("expected a type name", self._offset())
        self.pos = m.end()
        return m.group(0), m.start()

    def _offset(self) -> int:
        return len(self.text[: self.pos].encode("utf-8"))

    def parse_type(self) -> Type:
        name, start = self._name()
        if self._peek() != "<":
            if name in self.scope:
                return self.scope[name]
            if name == "Top":
                return TOP
            if name == "Bottom":
                return BOTTOM
            ctor = self.resolver(name, 0, start)
            if ctor.type_params:
                raise ArityMismatchError(
                    f"'{name}' takes {len(ctor.type_params)} type arguments, got 0"
                )
            return ctor
        self.pos += 1  # consume '<'
        args = [self.parse_type()]
        while self._peek() == ",":
            self.pos += 1
            args.append(self.parse_type())
        if self._peek() != ">":
            raise TypeExprSyntaxError("unbalanced angle brackets", self._offset())
        self.pos += 1
        if name in self.scope:
            raise TypeExprSyntaxError(
                f"type variable '{name}' cannot take arguments", start
            )
        ctor = self.resolver(name, len(args), start)
        if len(ctor.type_params) != len(args):
            raise ArityMismatchError(
                f"'{name}' takes {len(ctor.type_params)} type arguments, "
                f"got {len(args)}"
            )
        return TypeInstance(ctor, tuple(args))

    def expect_end(self) -> None:
        self._skip_ws()
        if self.pos != len(self.text):
            raise TypeExprSyntaxError(
                f"trailing input '{self.text[self.pos:]}'", self._offset()
            )


def print_type(t: Type) -> str:
    """Canonical rendering; re-parses to a structurally equal type."""
    return t.display()


# ---------------------------------------------------------------------------
# Raw documents
# ---------------------------------------------------------------------------

_DOC_KEYS = {"library", "classes", "functions", "language"}
_CLASS_KEYS = {"name", "type_parameters", "supertypes", "fields", "methods"}
_METHOD_KEYS = {
    "name",
    "type_parameters",
    "parameters",
    "return_type",
    "static",
    "constructor",
}
_FIELD_KEYS = {"name", "type", "static"}


@dataclass
class RawApiDocument:
    """An unvalidated API description, one JSON document."""

    library_name: str
    classes: list[dict] = field(default_factory=list)
    functions: list[dict] = field(default_factory=list)
    language_hint: Optional[str] = None
    source: str = "<memory>"

    @classmethod
    def from_data(cls, data: dict, source: str = "<memory>") -> "RawApiDocument":
        if not isinstance(data, dict):
            raise SpecError(f"{source}: document is not a JSON object")
        for key in data:
            if key not in _DOC_KEYS:
                logger.warning("%s: ignoring unknown key %r", source, key)
        return cls(
            library_name=str(data.get("library", "")),
            classes=list(data.get("classes", [])),
            functions=list(data.get("functions", [])),
            language_hint=data.get("language"),
            source=source,
        )

    @classmethod
    def from_path(cls, path: str) -> "RawApiDocument":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_data(data, source=path)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


class _Loader:
    def __init__(self, documents: Iterable[RawApiDocument], strict: bool = False):
        self.documents = list(documents)
        self.strict = strict
        self.warnings: list[str] = []
        self.var_names: set[str] = set()
        self.class_types: dict[str, ClassType] = {}
        self.class_records: list[tuple[RawApiDocument, dict, ClassType]] = []
        self.externals: dict[str, ClassType] = {}

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        logger.warning("%s", message)

    def fresh_var(self, name: str, where: str) -> TypeVariable:
        base = name
        n = 2
        while name in self.var_names:
            name = f"{base}_{n}"
            n += 1
        if name != base:
            self.warn(f"{where}: type parameter '{base}' renamed to '{name}'")
        self.var_names.add(name)
        return TypeVariable(name)

    def resolver_for(self, where: str) -> Resolver:
        def resolve_name(name: str, arity: int, offset: int) -> ClassType:
            ct = self.class_types.get(name) or self.externals.get(name)
            if ct is None:
                if self.strict:
                    raise UnresolvedNameError(
                        f"{where}: unresolved type name '{name}' "
                        f"(byte offset {offset})"
                    )
                params = tuple(
                    TypeVariable(f"${name}.{i}") for i in range(arity)
                )
                ct = ClassType(name, params)
                self.externals[name] = ct
                self.warn(
                    f"{where}: auto-declaring external type '{name}'"
                    + (f" with {arity} type parameters" if arity else "")
                )
            return ct

        return resolve_name

    def parse(self, text: str, scope: Sequence[TypeVariable], where: str) -> Type:
        try:
            return parse_type_expr(text, scope, self.resolver_for(where))
        except SpecError as exc:
            raise type(exc)(f"{where}: {exc}") from None

    def run(self) -> ApiSpec:
        self._collect_headers()
        self._wire_headers()
        self._check_cycles()
        classes, free = self._build_defs()
        name = self.documents[0].library_name if self.documents else ""
        externals = tuple(
            self.externals[k] for k in sorted(self.externals)
        )
        spec = ApiSpec(name, tuple(classes), tuple(free), externals)
        spec.load_warnings = tuple(self.warnings)  # type: ignore[attr-defined]
        return spec

    # -- phase 1: class headers with canonical parameter variables

    def _collect_headers(self) -> None:
        for doc in self.documents:
            for raw in doc.classes:
                if not isinstance(raw, dict) or "name" not in raw:
                    raise SpecError(f"{doc.source}: class record without a name")
                for key in raw:
                    if key not in _CLASS_KEYS:
                        self.warn(
                            f"{doc.source}: class {raw['name']}: "
                            f"ignoring unknown key {key!r}"
                        )
                cname = str(raw["name"])
                if cname in self.class_types:
                    raise SpecError(
                        f"{doc.source}: duplicate class name '{cname}'"
                    )
                params = tuple(
                    self.fresh_var(self._param_name(p), f"class {cname}")
                    for p in raw.get("type_parameters", [])
                )
                # Supertypes and bounds are wired in later, once every class
                # name is known; the frozen objects are patched in place so
                # all references share one canonical instance per name.
                ct = ClassType(cname, params, ())
                self.class_types[cname] = ct
                self.class_records.append((doc, raw, ct))

    @staticmethod
    def _param_name(p: object) -> str:
        if isinstance(p, dict):
            return str(p["name"])
        return str(p)

    @staticmethod
    def _param_bound(p: object) -> Optional[str]:
        if isinstance(p, dict):
            return p.get("bound")
        return None

    # -- phase 2: bounds and supertypes

    def _wire_headers(self) -> None:
        for doc, raw, ct in self.class_records:
            where = f"{doc.source}: class {ct.name}"
            scope = list(ct.type_params)
            for var, p in zip(ct.type_params, raw.get("type_parameters", [])):
                bound = self._param_bound(p)
                if bound is not None:
                    object.__setattr__(
                        var, "upper_bound", self.parse(bound, scope, where)
                    )
            supers = []
            for s in raw.get("supertypes", []):
                st = self.parse(str(s), scope, where)
                if not isinstance(st, (ClassType, TypeInstance)):
                    raise SpecError(f"{where}: invalid supertype '{s}'")
                supers.append(st)
            object.__setattr__(ct, "supertypes", tuple(supers))

    def _check_cycles(self) -> None:
        edges: dict[str, list[str]] = {}
        for _, _, ct in self.class_records:
            out = []
            for s in ct.supertypes:
                base = s.constructor if isinstance(s, TypeInstance) else s
                if isinstance(base, ClassType) and base.name in self.class_types:
                    out.append(base.name)
            edges[ct.name] = out
        state: dict[str, int] = {}
        stack: list[str] = []

        def visit(name: str) -> None:
            state[name] = 1
            stack.append(name)
            for nxt in edges.get(name, ()):
                if state.get(nxt) == 1:
                    cycle = stack[stack.index(nxt):] + [nxt]
                    raise SupertypeCycleError(
                        "supertype cycle: " + " -> ".join(cycle)
                    )
                if state.get(nxt, 0) == 0:
                    visit(nxt)
            stack.pop()
            state[name] = 2

        for name in edges:
            if state.get(name, 0) == 0:
                visit(name)

    # -- phase 3: members, ids in document order

    def _build_defs(self) -> tuple[list[ClassDecl], list[ApiDef]]:
        next_id = 0
        classes: list[ClassDecl] = []
        free: list[ApiDef] = []
        for doc, raw, ct in self.class_records:
            members: list[ApiDef] = []
            for f in raw.get("fields", []):
                d = self._build_field(doc, ct, f, next_id)
                if d is not None:
                    members.append(d)
                    next_id += 1
            for m in raw.get("methods", []):
                members.append(self._build_method(doc, ct, m, next_id))
                next_id += 1
            classes.append(ClassDecl(ct, tuple(members)))
        for doc in self.documents:
            for m in doc.functions:
                free.append(self._build_method(doc, None, m, next_id))
                next_id += 1
        return classes, free

    def _build_field(
        self, doc: RawApiDocument, owner: ClassType, raw: dict, def_id: int
    ) -> Optional[FieldDef]:
        where = f"{doc.source}: field {owner.name}.{raw.get('name')}"
        for key in raw:
            if key not in _FIELD_KEYS:
                self.warn(f"{where}: ignoring unknown key {key!r}")
        static = bool(raw.get("static", False))
        t = self.parse(str(raw["type"]), owner.type_params, where)
        if static and free_type_vars(t) & set(owner.type_params):
            # A static field cannot see the owner's parameters; there is no
            # syntax to instantiate them at a field access.
            self.warn(f"{where}: static field uses owner type parameters, dropped")
            return None
        return FieldDef(def_id, str(raw["name"]), owner, t, static)

    def _build_method(
        self,
        doc: RawApiDocument,
        owner: Optional[ClassType],
        raw: dict,
        def_id: int,
    ) -> FunctionDef:
        is_ctor = bool(raw.get("constructor", False))
        name = str(raw.get("name") or (owner.name if is_ctor and owner else ""))
        where = f"{doc.source}: method {(owner.name + '.') if owner else ''}{name}"
        if not name:
            raise SpecError(f"{where}: method record without a name")
        for key in raw:
            if key not in _METHOD_KEYS:
                self.warn(f"{where}: ignoring unknown key {key!r}")
        static = bool(raw.get("static", False))

        raw_params = raw.get("type_parameters", [])
        if is_ctor and owner is not None and not raw_params:
            # A bare constructor of a generic class reuses the owner's
            # parameters; an explicit list introduces fresh ones.
            own_vars: tuple[TypeVariable, ...] = owner.type_params
        else:
            own_vars = tuple(
                self.fresh_var(self._param_name(p), where) for p in raw_params
            )
        scope = list(own_vars)
        if owner is not None:
            scope += [v for v in owner.type_params if v not in own_vars]
        for var, p in zip(own_vars, raw_params):
            bound = self._param_bound(p)
            if bound is not None:
                object.__setattr__(
                    var, "upper_bound", self.parse(bound, scope, where)
                )

        params = tuple(
            (f"p{i}", self.parse(str(p), scope, where))
            for i, p in enumerate(raw.get("parameters", []))
        )
        if is_ctor and owner is not None:
            if "return_type" in raw:
                ret = self.parse(str(raw["return_type"]), scope, where)
            elif own_vars and owner.type_params:
                if len(own_vars) != len(owner.type_params):
                    raise ArityMismatchError(
                        f"{where}: constructor declares {len(own_vars)} type "
                        f"parameters, owner has {len(owner.type_params)}"
                    )
                ret = TypeInstance(owner, tuple(own_vars))
            else:
                ret = generic_pattern(owner)
            base = ret.constructor if isinstance(ret, TypeInstance) else ret
            if base != owner:
                raise SpecError(f"{where}: constructor does not return its owner")
        else:
            if "return_type" not in raw:
                raise SpecError(f"{where}: missing return_type")
            ret = self.parse(str(raw["return_type"]), scope, where)

        # Receiverless definitions must carry every variable they mention;
        # owner parameters used by a static member are promoted so that the
        # call site can instantiate them explicitly.
        if owner is not None and (static or is_ctor):
            used = set()
            for _, pt in params:
                used |= free_type_vars(pt)
            used |= free_type_vars(ret)
            promoted = tuple(
                v for v in owner.type_params if v in used and v not in own_vars
            )
            own_vars = own_vars + promoted

        return FunctionDef(
            def_id,
            name,
            owner,
            own_vars,
            params,
            ret,
            is_static=static,
            is_constructor=is_ctor,
        )


def load_api(
    documents: Iterable[RawApiDocument], strict: bool = False
) -> ApiSpec:
    """Build a fully resolved ApiSpec from raw documents.

    Deterministic: identical documents yield identical ids and ordering.
    Raises SpecError subclasses for supertype cycles and arity mismatches.
    Undeclared type names are auto-declared as opaque externals with a
    warning; strict=True turns them into UnresolvedNameError instead.
    """
    docs = [
        d if isinstance(d, RawApiDocument) else RawApiDocument.from_data(d)
        for d in documents
    ]
    return _Loader(docs, strict=strict).run()


def load_api_paths(paths: Iterable[str]) -> ApiSpec:
    return load_api(RawApiDocument.from_path(p) for p in sorted(paths))


def skip_unusable(spec: ApiSpec, depth: int = 2) -> tuple[ApiSpec, list[int]]:
    """Drop definitions whose type parameters admit no valid instantiation
    within the given nesting depth (recursive bounds with no concrete
    subtype, missing external information). Returns the skip list."""
    from .enumeration import solve_substitution

    skipped: list[int] = []
    for d in spec.all_defs():
        from .ir import sig_type_vars

        vars_needed = sig_type_vars(d)
        if not vars_needed:
            continue
        if solve_substitution(spec, vars_needed, depth) is None:
            skipped.append(d.id)
            logger.info(
                "skipping unusable definition %s (id %d)", d.name, d.id
            )
    if not skipped:
        return spec, []
    return spec.with_defs_removed(set(skipped)), skipped
