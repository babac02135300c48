"""Type-argument erasure and its round-trip with inference."""

import random

from typesmith.checker import check, infer_call
from typesmith.enumeration import (
    EnumCaps,
    UnsatisfiableBounds,
    draw_substitution,
    enumerate_well_typed,
)
from typesmith.erasure import can_erase, erase, erase_program
from typesmith.graph import build_graph
from typesmith.inhabitants import realize
from typesmith.ir import (
    Call,
    Constant,
    EMPTY,
    Expr,
    FieldAccess,
    LocalVar,
    Program,
    Substitution,
    sig_type_vars,
)
from typesmith.rng import derive_rng

import specgen
from conftest import def_named


def snippet(spec):
    """The four polymorphic invocations of the erasure worked example."""
    m1 = def_named(spec, "m1")
    m2 = def_named(spec, "m2")
    obj = spec.class_by_name("Object")
    string = spec.class_by_name("String")
    s = Constant(string)
    return Program(
        (
            Call(EMPTY, m1.id, (obj,), (s,)),
            Call(EMPTY, m1.id, (string,), (s,)),
            Call(EMPTY, m2.id, (string, string), (s,)),
            LocalVar("x", string, Call(EMPTY, m2.id, (string, string), (s,))),
        )
    )


class TestCanErase:
    def test_argument_inference_matches_explicit(self, erasure_graph, erasure_spec):
        m1 = def_named(erasure_spec, "m1")
        string = erasure_spec.class_by_name("String")
        call = Call(EMPTY, m1.id, (string,), (Constant(string),))
        assert can_erase(erasure_graph, call, None)

    def test_explicit_differs_from_inferred(self, erasure_graph, erasure_spec):
        m1 = def_named(erasure_spec, "m1")
        obj = erasure_spec.class_by_name("Object")
        string = erasure_spec.class_by_name("String")
        call = Call(EMPTY, m1.id, (obj,), (Constant(string),))
        assert not can_erase(erasure_graph, call, None)

    def test_uninferable_without_target(self, erasure_graph, erasure_spec):
        m2 = def_named(erasure_spec, "m2")
        string = erasure_spec.class_by_name("String")
        call = Call(EMPTY, m2.id, (string, string), (Constant(string),))
        assert not can_erase(erasure_graph, call, None)
        assert can_erase(erasure_graph, call, string)


class TestEraseSnippet:
    def test_exactly_second_and_fourth_erased(self, erasure_graph, erasure_spec):
        prog = snippet(erasure_spec)
        erased = erase_program(erasure_graph, prog)
        targs = []
        for stmt in erased.stmts:
            call = stmt.rhs if isinstance(stmt, LocalVar) else stmt
            targs.append(call.type_args)
        assert targs[0] != ()  # kept: explicit Object vs inferred String
        assert targs[1] == ()  # erased
        assert targs[2] != ()  # kept: Y has no source without a target
        assert targs[3] == ()  # erased: target recovers Y

    def test_monomorphic_call_unchanged(self, collections_spec, collections_graph):
        add = def_named(collections_spec, "add", owner="List")
        create = def_named(collections_spec, "createList")
        int_t = collections_spec.class_by_name("int")
        boolean = collections_spec.class_by_name("boolean")
        lst = Call(EMPTY, create.id, (int_t,), ())
        prog = Program(
            (LocalVar("x", boolean, Call(lst, add.id, (), (Constant(int_t),))),)
        )
        erased = erase_program(collections_graph, prog)
        assert erased.stmts[0].rhs.def_id == add.id
        assert erased.stmts[0].rhs.type_args == ()

    def test_structure_preserved(self, erasure_graph, erasure_spec):
        prog = snippet(erasure_spec)
        erased = erase_program(erasure_graph, prog)

        def strip(e: Expr) -> object:
            if isinstance(e, Call):
                return ("call", e.def_id, tuple(strip(a) for a in e.args))
            if isinstance(e, LocalVar):
                return ("local", e.name, strip(e.rhs))
            if isinstance(e, FieldAccess):
                return ("field", e.def_id, strip(e.receiver))
            return e

        assert [strip(s) for s in prog.stmts] == [strip(s) for s in erased.stmts]

    def test_idempotent(self, erasure_graph, erasure_spec):
        prog = snippet(erasure_spec)
        once = erase_program(erasure_graph, prog)
        twice = erase_program(erasure_graph, once)
        assert once == twice


class TestRoundTrip:
    def test_erased_snippet_rechecks(self, erasure_graph, erasure_spec):
        prog = snippet(erasure_spec)
        assert check(erasure_spec, prog).well_typed
        erased = erase_program(erasure_graph, prog)
        assert check(erasure_spec, erased).well_typed

    def test_inference_recovers_original_arguments(
        self, erasure_graph, erasure_spec
    ):
        prog = snippet(erasure_spec)
        erased = erase_program(erasure_graph, prog)
        string = erasure_spec.class_by_name("String")
        # Fourth statement: the erased m2 call under target String.
        stmt = erased.stmts[3]
        sigma = infer_call(erasure_spec, stmt.rhs, string)
        m2 = def_named(erasure_spec, "m2")
        original = snippet(erasure_spec).stmts[3].rhs
        expected = Substitution(zip(m2.type_params, original.type_args))
        assert sigma == expected

    def test_random_well_typed_round_trip(self):
        rng = random.Random(55)
        erased_calls = 0
        for trial in range(80):
            spec = specgen.random_spec(rng)
            graph = build_graph(spec)
            for d in spec.all_defs():
                try:
                    sub = draw_substitution(
                        spec, sig_type_vars(d), 2, derive_rng("e", trial, d.id)
                    )
                except UnsatisfiableBounds:
                    continue
                seqs = enumerate_well_typed(
                    spec, graph, d.id, sub,
                    EnumCaps(max_sequences_per_def=2),
                    derive_rng("c", trial, d.id),
                )
                for i, seq in enumerate(seqs):
                    prog = realize(
                        graph, d.id, seq, rng=derive_rng("r", trial, d.id, i)
                    )
                    if not check(spec, prog).well_typed:
                        continue  # covered by the oracle-agreement suite
                    erased = erase_program(graph, prog)
                    assert check(spec, erased).well_typed, (
                        trial,
                        d.name,
                        seq.slots_display(),
                    )
                    erased_calls += _count_erased(prog, erased)
        assert erased_calls > 20


def _count_erased(before: Program, after: Program) -> int:
    def walk(a: Expr, b: Expr) -> int:
        n = 0
        if isinstance(a, Call):
            if a.type_args and not b.type_args:
                n += 1
            n += walk(a.receiver, b.receiver)
            for x, y in zip(a.args, b.args):
                n += walk(x, y)
        elif isinstance(a, LocalVar):
            n += walk(a.rhs, b.rhs)
        elif isinstance(a, FieldAccess):
            n += walk(a.receiver, b.receiver)
        return n

    return sum(walk(a, b) for a, b in zip(before.stmts, after.stmts))
