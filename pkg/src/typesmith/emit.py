"""Rendering of IR programs: dialect emitters and the canonical IR form.

Dialect profiles are data-driven syntax tables; adding an output language
means adding a profile record, not a code path. The canonical IR form
(print_ir/parse_ir) is a faithful round-trippable rendering used in golden
tests and reports; it appends a "#id" marker to a member name only when
the name alone would be ambiguous at its use site.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from typing import Optional

from . import checker
from .ir import (
    ApiDef,
    ApiSpec,
    BOTTOM,
    TOP,
    Call,
    ClassType,
    Constant,
    EMPTY,
    Empty,
    Expr,
    FieldAccess,
    LocalVar,
    Program,
    Type,
    TypeInstance,
    TypeVariable,
    apply,
    decompose,
    resolve,
)

logger = logging.getLogger(__name__)


class IrParseError(Exception):
    pass


# ---------------------------------------------------------------------------
# Dialect profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DialectProfile:
    name: str
    generic_open: str
    generic_close: str
    constant_cast: str
    constant_bare: Optional[str]
    local_var: str
    constructor_keyword: str
    wrapper: str
    indent: str
    file_ext: str
    import_stmt: Optional[str]
    reserved: frozenset[str]


PROFILES: dict[str, DialectProfile] = {
    "ir": DialectProfile(
        name="ir",
        generic_open="<",
        generic_close=">",
        constant_cast="constant({type})",
        constant_bare=None,
        local_var="local var {name}: {type} = {expr}",
        constructor_keyword="new ",
        wrapper="{body}\n",
        indent="",
        file_ext="ir",
        import_stmt=None,
        reserved=frozenset(),
    ),
    "scala-like": DialectProfile(
        name="scala-like",
        generic_open="[",
        generic_close="]",
        constant_cast="???.asInstanceOf[{type}]",
        constant_bare="???",
        local_var="val {name}: {type} = {expr}",
        constructor_keyword="new ",
        wrapper="def test(): Unit = {{\n{body}\n}}\n",
        indent="  ",
        file_ext="scala",
        import_stmt="import {name}",
        reserved=frozenset(
            {"def", "val", "var", "type", "object", "class", "trait", "match"}
        ),
    ),
    "kotlin-like": DialectProfile(
        name="kotlin-like",
        generic_open="<",
        generic_close=">",
        constant_cast="(TODO() as {type})",
        constant_bare="TODO()",
        local_var="val {name}: {type} = {expr}",
        constructor_keyword="",
        wrapper="fun test() {{\n{body}\n}}\n",
        indent="    ",
        file_ext="kt",
        import_stmt="import {name}",
        reserved=frozenset({"fun", "val", "var", "object", "when", "in", "is"}),
    ),
    "groovy-like": DialectProfile(
        name="groovy-like",
        generic_open="<",
        generic_close=">",
        constant_cast="(null as {type})",
        constant_bare="null",
        local_var="{type} {name} = {expr}",
        constructor_keyword="new ",
        wrapper="void test() {{\n{body}\n}}\n",
        indent="    ",
        file_ext="groovy",
        import_stmt="import {name}",
        reserved=frozenset({"def", "in", "new", "class", "trait"}),
    ),
}


@dataclass(frozen=True)
class SourceFile:
    text: str
    suggested_filename: str
    imports: tuple[str, ...]


class _Emitter:
    def __init__(self, spec: ApiSpec, profile: DialectProfile) -> None:
        self.spec = spec
        self.profile = profile
        self.qualified_used: set[str] = set()

    # -- names

    def _safe(self, name: str) -> str:
        if name in self.profile.reserved:
            logger.warning(
                "name %r collides with a %s reserved word, renamed to %r",
                name,
                self.profile.name,
                name + "_",
            )
            return name + "_"
        return name

    def type_name(self, name: str) -> str:
        if "." in name:
            self.qualified_used.add(name)
            return self._safe(name.rsplit(".", 1)[1])
        return self._safe(name)

    def render_type(self, t: Type) -> str:
        if isinstance(t, TypeInstance):
            args = ", ".join(self.render_type(a) for a in t.type_args)
            return (
                self.type_name(t.constructor.name)
                + self.profile.generic_open
                + args
                + self.profile.generic_close
            )
        if isinstance(t, (ClassType, TypeVariable)):
            return self.type_name(t.display())
        return t.display()

    # -- expressions

    def render_expr(self, e: Expr, is_rhs: bool = False) -> str:
        if isinstance(e, Constant):
            if is_rhs and self.profile.constant_bare is not None:
                return self.profile.constant_bare
            return self.profile.constant_cast.format(
                type=self.render_type(e.type)
            )
        if isinstance(e, FieldAccess):
            d = self.spec.def_by_id(e.def_id)
            return f"{self._receiver(e.receiver, d)}.{self._safe(d.name)}"
        if isinstance(e, Call):
            d = self.spec.def_by_id(e.def_id)
            targs = ""
            if e.type_args:
                targs = (
                    self.profile.generic_open
                    + ", ".join(self.render_type(t) for t in e.type_args)
                    + self.profile.generic_close
                )
            args = ", ".join(self.render_expr(a) for a in e.args)
            if d.is_constructor:
                assert d.owner is not None
                head = self.profile.constructor_keyword + self.type_name(
                    d.owner.name
                )
                return f"{head}{targs}({args})"
            return (
                f"{self._receiver(e.receiver, d)}.{self._safe(d.name)}"
                f"{targs}({args})"
                if self._receiver(e.receiver, d)
                else f"{self._safe(d.name)}{targs}({args})"
            )
        if isinstance(e, LocalVar):
            return self.profile.local_var.format(
                name=self._safe(e.name),
                type=self.render_type(e.declared_type),
                expr=self.render_expr(e.rhs, is_rhs=True),
            )
        raise ValueError(f"cannot render {e!r}")

    def _receiver(self, receiver: Expr, d: ApiDef) -> str:
        if isinstance(receiver, Empty):
            if d.owner is not None:
                return self.type_name(d.owner.name)
            return ""
        return self.render_expr(receiver)


def emit(spec: ApiSpec, program: Program, profile: DialectProfile) -> SourceFile:
    """Deterministic source text: same program and profile, same bytes."""
    em = _Emitter(spec, profile)
    lines = [em.render_expr(stmt, is_rhs=False) for stmt in program.stmts]
    body = "\n".join(profile.indent + line for line in lines)
    imports = tuple(sorted(em.qualified_used))
    header = ""
    if profile.import_stmt and imports:
        header = (
            "\n".join(profile.import_stmt.format(name=n) for n in imports)
            + "\n\n"
        )
    text = header + profile.wrapper.format(body=body)
    prov = program.provenance
    if prov is not None:
        key = ":".join([str(prov.def_id), *prov.sequence, str(prov.seed), prov.mode])
    else:
        key = text
    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]
    return SourceFile(text, f"{digest}.{profile.file_ext}", imports)


# ---------------------------------------------------------------------------
# Canonical IR printing
# ---------------------------------------------------------------------------


def _members_named(spec: ApiSpec, recv: Type, name: str, fields: bool) -> list[ApiDef]:
    """Members called `name` visible on the receiver's class chain."""
    out: list[ApiDef] = []
    seen: set[int] = set()
    work = [resolve(spec, recv)]
    while work:
        t = work.pop(0)
        sub, base = decompose(t)
        if not isinstance(base, ClassType):
            continue
        for m in spec.members_of(base.name):
            if m.name == name and m.is_field == fields and m.id not in seen:
                if not (m.is_static or m.is_constructor):
                    seen.add(m.id)
                    out.append(m)
        for s in base.supertypes:
            work.append(apply(sub, s))
    return out


def _static_members_named(spec: ApiSpec, owner: ClassType, name: str) -> list[ApiDef]:
    return [
        m
        for m in spec.members_of(owner.name)
        if m.name == name and m.is_static and not m.is_constructor
    ]


def _constructors_of(spec: ApiSpec, owner: ClassType) -> list[ApiDef]:
    return [m for m in spec.members_of(owner.name) if m.is_constructor]


def _free_named(spec: ApiSpec, name: str) -> list[ApiDef]:
    return [f for f in spec.free_functions if f.name == name]


class _IrPrinter:
    def __init__(self, spec: ApiSpec) -> None:
        self.spec = spec

    def stmt(self, e: Expr) -> str:
        if isinstance(e, LocalVar):
            return (
                f"local var {e.name}: {e.declared_type.display()} = "
                f"{self.expr(e.rhs)}"
            )
        return self.expr(e)

    def _marker(self, d: ApiDef, candidates: list[ApiDef]) -> str:
        # Needed when the name is ambiguous here, or (in deliberately
        # ill-typed programs) not resolvable from the receiver at all.
        if len(candidates) == 1 and candidates[0].id == d.id:
            return ""
        return f"#{d.id}"

    def expr(self, e: Expr) -> str:
        if isinstance(e, Constant):
            return f"constant({e.type.display()})"
        if isinstance(e, FieldAccess):
            d = self.spec.def_by_id(e.def_id)
            if isinstance(e.receiver, Empty):
                assert d.owner is not None
                cands = _static_members_named(self.spec, d.owner, d.name)
                return f"{d.owner.name}.{d.name}{self._marker(d, cands)}"
            recv = self.expr(e.receiver)
            recv_t = checker.type_of(self.spec, e.receiver, None)
            cands = _members_named(self.spec, recv_t, d.name, fields=True)
            return f"{recv}.{d.name}{self._marker(d, cands)}"
        if isinstance(e, Call):
            d = self.spec.def_by_id(e.def_id)
            targs = ""
            if e.type_args:
                targs = "<" + ", ".join(t.display() for t in e.type_args) + ">"
            args = ", ".join(self.expr(a) for a in e.args)
            if d.is_constructor:
                assert d.owner is not None
                cands = _constructors_of(self.spec, d.owner)
                return f"new {d.owner.name}{self._marker(d, cands)}{targs}({args})"
            if isinstance(e.receiver, Empty):
                if d.owner is None:
                    cands = _free_named(self.spec, d.name)
                    return f"{d.name}{self._marker(d, cands)}{targs}({args})"
                cands = _static_members_named(self.spec, d.owner, d.name)
                return (
                    f"{d.owner.name}.{d.name}{self._marker(d, cands)}"
                    f"{targs}({args})"
                )
            recv = self.expr(e.receiver)
            recv_t = checker.type_of(self.spec, e.receiver, None)
            cands = _members_named(self.spec, recv_t, d.name, fields=False)
            return f"{recv}.{d.name}{self._marker(d, cands)}{targs}({args})"
        raise ValueError(f"cannot print {e!r}")


def print_ir(spec: ApiSpec, program: Program) -> str:
    """Canonical one-statement-per-line rendering; parse_ir inverts it."""
    printer = _IrPrinter(spec)
    return "\n".join(printer.stmt(s) for s in program.stmts) + "\n"


# ---------------------------------------------------------------------------
# Canonical IR parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<num>\d+)|(?P<punct>[.<>(),:=#]))"
)


def _tokenize(line: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if not m or m.end() == pos:
            if line[pos:].strip():
                raise IrParseError(f"cannot tokenize {line[pos:]!r}")
            break
        pos = m.end()
        for kind in ("ident", "num", "punct"):
            if m.group(kind) is not None:
                out.append((kind, m.group(kind)))
                break
    return out


class _IrParser:
    def __init__(self, spec: ApiSpec, line: str) -> None:
        self.spec = spec
        self.toks = _tokenize(line)
        self.pos = 0

    def peek(self, k: int = 0) -> tuple[str, str]:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else ("eof", "")

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, got = self.next()
        if got != value:
            raise IrParseError(f"expected {value!r}, got {got!r}")

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    # -- types, from the same token stream

    def parse_type(self) -> Type:
        name = self._dotted_name()
        if name == "Top":
            return TOP
        if name == "Bottom":
            return BOTTOM
        args: list[Type] = []
        if self.peek()[1] == "<":
            self.next()
            args.append(self.parse_type())
            while self.peek()[1] == ",":
                self.next()
                args.append(self.parse_type())
            self.expect(">")
        ct = self.spec.class_by_name(name)
        if ct is None:
            raise IrParseError(f"unknown type name {name!r}")
        if args:
            if len(ct.type_params) != len(args):
                raise IrParseError(f"arity mismatch instantiating {name}")
            return TypeInstance(ct, tuple(args))
        if ct.type_params:
            raise IrParseError(f"{name} needs type arguments")
        return ct

    def _dotted_name(self) -> str:
        # Type position: a dotted name is always one type name.
        kind, name = self.next()
        if kind != "ident":
            raise IrParseError(f"expected a name, got {name!r}")
        parts = [name]
        while self.peek()[1] == "." and self.peek(1)[0] == "ident":
            self.next()
            parts.append(self.next()[1])
        return ".".join(parts)

    # -- statements and expressions

    def parse_stmt(self) -> Expr:
        if self.peek()[1] == "local" and self.peek(1)[1] == "var":
            self.next()
            self.next()
            kind, name = self.next()
            if kind != "ident":
                raise IrParseError("expected a variable name")
            self.expect(":")
            declared = self.parse_type()
            self.expect("=")
            rhs = self.parse_expr()
            return LocalVar(name, declared, rhs)
        return self.parse_expr()

    def parse_expr(self) -> Expr:
        expr = self.parse_primary()
        while self.peek()[1] == ".":
            self.next()
            expr = self._member(expr)
        return expr

    def _opt_marker(self) -> Optional[int]:
        if self.peek()[1] == "#":
            self.next()
            kind, num = self.next()
            if kind != "num":
                raise IrParseError("expected a definition id after '#'")
            return int(num)
        return None

    def _opt_targs(self) -> tuple[Type, ...]:
        if self.peek()[1] != "<":
            return ()
        self.next()
        args = [self.parse_type()]
        while self.peek()[1] == ",":
            self.next()
            args.append(self.parse_type())
        self.expect(">")
        return tuple(args)

    def _opt_args(self) -> Optional[tuple[Expr, ...]]:
        if self.peek()[1] != "(":
            return None
        self.next()
        if self.peek()[1] == ")":
            self.next()
            return ()
        args = [self.parse_expr()]
        while self.peek()[1] == ",":
            self.next()
            args.append(self.parse_expr())
        self.expect(")")
        return tuple(args)

    def parse_primary(self) -> Expr:
        kind, tok = self.peek()
        if tok == "constant":
            self.next()
            self.expect("(")
            t = self.parse_type()
            self.expect(")")
            return Constant(t)
        if tok == "new":
            self.next()
            cname = self._class_name_greedy()
            owner = self.spec.class_by_name(cname)
            if owner is None:
                raise IrParseError(f"unknown class {cname!r}")
            marker = self._opt_marker()
            targs = self._opt_targs()
            args = self._opt_args()
            if args is None:
                raise IrParseError("constructor call needs arguments")
            d = self._pick(_constructors_of(self.spec, owner), marker, cname)
            return Call(EMPTY, d.id, targs, args)
        if kind != "ident":
            raise IrParseError(f"unexpected token {tok!r}")
        return self._static_or_free()

    def _class_name_greedy(self) -> str:
        parts = [self.next()[1]]
        while self.peek()[1] == "." and self.peek(1)[0] == "ident":
            self.next()
            parts.append(self.next()[1])
        return ".".join(parts)

    def _static_or_free(self) -> Expr:
        # Collect dotted segments, stopping after the first segment followed
        # by call syntax; the longest class-name prefix is the owner, the
        # rest are member accesses.
        segments = [self.next()[1]]
        while self.peek()[1] == "." and self.peek(1)[0] == "ident":
            self.next()
            segments.append(self.next()[1])
        marker = self._opt_marker()
        targs = self._opt_targs()
        args = self._opt_args()
        return self._resolve_segments(segments, marker, targs, args)

    def _resolve_segments(
        self,
        segments: list[str],
        marker: Optional[int],
        targs: tuple[Type, ...],
        args: Optional[tuple[Expr, ...]],
    ) -> Expr:
        for split in range(len(segments) - 1, 0, -1):
            owner = self.spec.class_by_name(".".join(segments[:split]))
            if owner is None:
                continue
            expr = self._static_access(
                owner,
                segments[split:],
                marker,
                targs,
                args,
            )
            if expr is not None:
                return expr
        if len(segments) == 1 and args is not None:
            d = self._pick(_free_named(self.spec, segments[0]), marker, segments[0])
            return Call(EMPTY, d.id, targs, args)
        raise IrParseError(f"cannot resolve {'.'.join(segments)!r}")

    def _static_access(
        self,
        owner: ClassType,
        members: list[str],
        marker: Optional[int],
        targs: tuple[Type, ...],
        args: Optional[tuple[Expr, ...]],
    ) -> Optional[Expr]:
        first = members[0]
        cands = _static_members_named(self.spec, owner, first)
        if not cands:
            return None
        last = len(members) == 1
        if last and args is not None:
            d = self._pick([c for c in cands if not c.is_field], marker, first)
            return Call(EMPTY, d.id, targs, args)
        d = self._pick([c for c in cands if c.is_field], marker if last else None, first)
        expr: Expr = FieldAccess(EMPTY, d.id)
        for i, name in enumerate(members[1:], start=1):
            is_last = i == len(members) - 1
            expr = self._instance_member(
                expr,
                name,
                marker if is_last else None,
                targs if is_last else (),
                args if is_last else None,
            )
        return expr

    def _member(self, receiver: Expr) -> Expr:
        kind, name = self.next()
        if kind != "ident":
            raise IrParseError(f"expected a member name, got {name!r}")
        marker = self._opt_marker()
        targs = self._opt_targs()
        args = self._opt_args()
        return self._instance_member(receiver, name, marker, targs, args)

    def _instance_member(
        self,
        receiver: Expr,
        name: str,
        marker: Optional[int],
        targs: tuple[Type, ...],
        args: Optional[tuple[Expr, ...]],
    ) -> Expr:
        recv_t = checker.type_of(self.spec, receiver, None)
        cands = _members_named(self.spec, recv_t, name, fields=args is None)
        d = self._pick(cands, marker, name)
        if args is None:
            return FieldAccess(receiver, d.id)
        return Call(receiver, d.id, targs, args)

    def _pick(
        self, cands: list[ApiDef], marker: Optional[int], name: str
    ) -> ApiDef:
        if marker is not None:
            for c in cands:
                if c.id == marker:
                    return c
            try:
                d = self.spec.def_by_id(marker)
            except Exception:
                raise IrParseError(f"unknown definition id #{marker}") from None
            if d.name == name:
                return d
            raise IrParseError(f"definition #{marker} is not named {name!r}")
        if len(cands) == 1:
            return cands[0]
        if not cands:
            raise IrParseError(f"no definition named {name!r} here")
        raise IrParseError(
            f"ambiguous reference to {name!r}; use a #id marker"
        )


def parse_ir(spec: ApiSpec, text: str) -> Program:
    """Inverse of print_ir on canonical output."""
    stmts = []
    for line in text.splitlines():
        if not line.strip():
            continue
        parser = _IrParser(spec, line)
        stmts.append(parser.parse_stmt())
        if not parser.at_end():
            raise IrParseError(f"trailing tokens in {line!r}")
    return Program(tuple(stmts))
