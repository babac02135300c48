"""Acceptance suite: every criterion at its stated tolerance, one
pass/fail line each (run with -s to see them)."""

import itertools
import json
import random
import statistics
import sys
import time
from pathlib import Path

from typesmith.checker import check, infer_call
from typesmith.cli import main
from typesmith.emit import print_ir
from typesmith.enumeration import (
    EnumCaps,
    UnsatisfiableBounds,
    draw_substitution,
    enumerate_ill_typed,
    enumerate_well_typed,
    ground_types,
)
from typesmith.erasure import erase_program
from typesmith.graph import DefNode, TypeNode, build_graph
from typesmith.inhabitants import find_api_paths, realize, to_expr
from typesmith.ir import (
    ApiSpec,
    Call,
    ClassDecl,
    ClassType,
    Constant,
    EMPTY,
    FieldAccess,
    FunctionDef,
    LocalVar,
    Program,
    Substitution,
    TypeInstance,
    apply,
    lookup_method,
    resolve,
    sig_type_vars,
)
from typesmith.rng import derive_rng

import specgen
from conftest import COLLECTIONS_DOC, ERASURE_DOC, MAPS_DOC, def_named, spec_of
from test_inhabitants import oracle_feasible_paths


def criterion(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Goldens
# ---------------------------------------------------------------------------


def test_golden_collections_graph():
    t0 = time.perf_counter()
    spec = spec_of(COLLECTIONS_DOC)
    graph = build_graph(spec)
    elapsed = time.perf_counter() - t0

    ok = len(graph.def_nodes()) == 7 and len(graph.type_nodes()) == 3
    sourceless = {
        spec.def_by_id(n.def_id).name
        for n in graph.def_nodes()
        if not graph.inc[n]
    }
    ok = ok and sourceless == {"createList", "List", "Set"}
    # Edge structure: each def has one return edge; instance members have
    # one receiver edge from their owner's type node.
    for n in graph.def_nodes():
        d = spec.def_by_id(n.def_id)
        out_types = [dst.type.display() for dst, _ in graph.out[n]]
        ok = ok and len(out_types) == 1
        if d.name in ("add",):
            ok = ok and out_types == ["boolean"]
    recv_edges = {
        (src.type.display(), spec.def_by_id(dst.def_id).name)
        for src, dst, _ in graph.edges
        if isinstance(src, TypeNode)
    }
    ok = ok and recv_edges == {
        ("List", "add"), ("List", "toSet"), ("Set", "add"), ("Set", "toList"),
    }
    ok = ok and elapsed < 1.0
    criterion(
        "golden: collections API graph (7 defs, 3 types, sourceless ctors)",
        ok,
        f"{elapsed * 1000:.0f} ms",
    )


def test_golden_two_class_enumeration():
    spec = spec_of(
        {
            "library": "ab",
            "classes": [
                {
                    "name": "A",
                    "methods": [
                        {"name": "m", "parameters": ["B"], "return_type": "B"}
                    ],
                },
                {"name": "B", "supertypes": ["A"]},
            ],
        }
    )
    graph = build_graph(spec)
    m = def_named(spec, "m")
    seqs = enumerate_well_typed(spec, graph, m.id, Substitution())
    a, b = spec.class_by_name("A"), spec.class_by_name("B")
    got = {(s.receiver, s.arg_types, s.expected_type) for s in seqs}
    expected = {(a, (b,), b), (b, (b,), b), (a, (b,), a), (b, (b,), a)}
    criterion(
        "golden: B m(B x) enumerates exactly the four sequences",
        got == expected and len(seqs) == 4,
        f"{len(seqs)} sequences",
    )


def test_golden_maps_path_search():
    spec = spec_of(MAPS_DOC)
    graph = build_graph(spec)
    target = TypeInstance(
        spec.class_by_name("Set"), (spec.class_by_name("Int"),)
    )

    all_paths = find_api_paths(
        graph, target, derive_rng(0), limit=None, k_per_start=None
    )
    chains = [p for p in all_paths if len(p.nodes) > 1]
    route = lambda p: tuple(
        spec.def_by_id(n.def_id).name if isinstance(n, DefNode) else n.type.display()
        for n in p.nodes
    )
    ok = len(chains) == 1 and route(chains[0]) == ("mapOf", "Map", "keySet", "Set")

    resolved = {v.name: t.display() for v, t in chains[0].resolved.items()}
    ok = ok and resolved["X"] == "Int" and resolved["E"] == "Int"
    pool = {t.display() for t in ground_types(spec, 1)}
    ok = ok and resolved["Y"] in pool

    paths = find_api_paths(graph, target, derive_rng("golden", 0), limit=1)
    fp = [p for p in paths if len(p.nodes) > 1][0]
    expr = to_expr(graph, fp, rng=derive_rng("expr", 0))
    printed = print_ir(spec, Program((expr,))).strip()
    ok = ok and printed == "Utils.mapOf<Int, String>().keySet()"
    ok = ok and printed.replace(" ", "") == "Utils.mapOf<Int,String>().keySet()"
    criterion(
        "golden: Set<Int> search rejects the monomorphic route, pins X and E",
        ok,
        printed,
    )


def test_golden_erasure_snippet():
    spec = spec_of(ERASURE_DOC)
    graph = build_graph(spec)
    m1, m2 = def_named(spec, "m1"), def_named(spec, "m2")
    obj = spec.class_by_name("Object")
    string = spec.class_by_name("String")
    s = Constant(string)
    prog = Program(
        (
            Call(EMPTY, m1.id, (obj,), (s,)),
            Call(EMPTY, m1.id, (string,), (s,)),
            Call(EMPTY, m2.id, (string, string), (s,)),
            LocalVar("x", string, Call(EMPTY, m2.id, (string, string), (s,))),
        )
    )
    erased = erase_program(graph, prog)
    kept = []
    for stmt in erased.stmts:
        call = stmt.rhs if isinstance(stmt, LocalVar) else stmt
        kept.append(bool(call.type_args))
    criterion(
        "golden: erasure drops exactly the second and fourth invocations",
        kept == [True, False, True, False],
        f"type arguments kept: {kept}",
    )


# ---------------------------------------------------------------------------
# Property: oracle agreement
# ---------------------------------------------------------------------------


def test_property_oracle_agreement():
    t0 = time.perf_counter()
    rng = random.Random(20240101)
    trials = 0
    violations = []
    spec_i = 0
    while trials < 10_000:
        spec_i += 1
        spec = specgen.random_spec(rng, max_classes=5, max_members=3)
        graph = build_graph(spec)
        for d in spec.all_defs():
            try:
                sub = draw_substitution(
                    spec, sig_type_vars(d), 2, derive_rng("oa", spec_i, d.id)
                )
            except UnsatisfiableBounds:
                continue
            wells = enumerate_well_typed(
                spec, graph, d.id, sub,
                EnumCaps(max_sequences_per_def=3),
                derive_rng("oaw", spec_i, d.id),
            )
            ills = enumerate_ill_typed(
                spec, graph, d.id, sub,
                EnumCaps(incompatible_per_slot=1),
                derive_rng("oai", spec_i, d.id),
            )
            for j, seq in enumerate(wells + ills):
                prog = realize(
                    graph, d.id, seq, rng=derive_rng("oar", spec_i, d.id, j)
                )
                verdict = check(spec, prog)
                trials += 1
                if seq.verdict == "well-typed":
                    if not verdict.well_typed:
                        violations.append((spec_i, d.name, seq, verdict.error))
                else:
                    if verdict.well_typed or verdict.error.slot != seq.faulted_slot:
                        violations.append((spec_i, d.name, seq, verdict))
    elapsed = time.perf_counter() - t0
    criterion(
        "property: reference-checker agreement over random specs",
        not violations and trials >= 10_000 and elapsed < 60.0,
        f"{trials} trials, {len(violations)} violations, {elapsed:.1f} s",
    )


# ---------------------------------------------------------------------------
# Property: path search against brute force
# ---------------------------------------------------------------------------


def test_property_path_oracle():
    rng = random.Random(424242)
    graphs = 0
    attempts = 0
    discrepancies = []
    while graphs < 1000 and attempts < 20_000:
        attempts += 1
        spec = specgen.random_spec(rng, max_classes=3, max_members=2)
        graph = build_graph(spec)
        if not graph.nodes or len(graph.nodes) > 12:
            continue
        pool = ground_types(spec, 1)
        if not pool:
            continue
        target = rng.choice(pool)
        expected = oracle_feasible_paths(spec, graph, target)
        got = {
            p.nodes
            for p in find_api_paths(
                graph, target, derive_rng("po", attempts),
                limit=None, k_per_start=None,
            )
            if len(p.nodes) > 1
        }
        if got != expected:
            discrepancies.append((attempts, target.display(), got, expected))
        graphs += 1
    criterion(
        "property: feasible paths equal brute-force DFS plus unification",
        graphs >= 1000 and not discrepancies,
        f"{graphs} graphs, {len(discrepancies)} discrepancies",
    )


# ---------------------------------------------------------------------------
# Property: erasure round trip
# ---------------------------------------------------------------------------


def _call_targets(spec, stmt):
    """(call, target, path) triples mirroring the erasure recursion."""
    out = []

    def walk(e, target, path):
        if isinstance(e, LocalVar):
            walk(e.rhs, resolve(spec, e.declared_type), path + ("rhs",))
            return
        if isinstance(e, FieldAccess):
            walk(e.receiver, None, path + ("recv",))
            return
        if isinstance(e, Call):
            out.append((e, target, path))
            walk(e.receiver, None, path + ("recv",))
            d = spec.def_by_id(e.def_id)
            if d.is_field:
                return
            if d.type_params and not e.type_args:
                # Inferred call: its arguments see no target.
                arg_targets = [None] * len(d.params)
            else:
                sub = Substitution()
                if e.receiver != EMPTY:
                    try:
                        from typesmith.checker import type_of

                        recv_t = type_of(spec, e.receiver, None)
                        found = lookup_method(spec, recv_t, d.id)
                        if found:
                            sub = found[1]
                    except Exception:
                        pass
                if e.type_args:
                    sub = sub.merged(
                        Substitution(zip(d.type_params, e.type_args))
                    )
                arg_targets = [apply(sub, pt) for _, pt in d.params]
            for i, a in enumerate(e.args):
                walk(a, arg_targets[i] if i < len(arg_targets) else None,
                     path + (f"arg{i}",))

    walk(stmt, None, ())
    return out


def test_property_erasure_round_trip():
    rng = random.Random(77770)
    trials = 0
    violations = []
    recovered = 0
    masked = 0
    spec_i = 0
    while trials < 10_000:
        spec_i += 1
        spec = specgen.random_spec(rng)
        graph = build_graph(spec)
        for d in spec.all_defs():
            try:
                sub = draw_substitution(
                    spec, sig_type_vars(d), 2, derive_rng("er", spec_i, d.id)
                )
            except UnsatisfiableBounds:
                continue
            wells = enumerate_well_typed(
                spec, graph, d.id, sub,
                EnumCaps(max_sequences_per_def=2),
                derive_rng("erw", spec_i, d.id),
            )
            ills = enumerate_ill_typed(
                spec, graph, d.id, sub,
                EnumCaps(incompatible_per_slot=1),
                derive_rng("eri", spec_i, d.id),
            )
            for j, seq in enumerate(wells):
                prog = realize(
                    graph, d.id, seq, rng=derive_rng("err", spec_i, d.id, j)
                )
                erased = erase_program(graph, prog)
                trials += 1
                if not check(spec, erased).well_typed:
                    violations.append(("recheck", spec_i, d.name, seq))
                    continue
                before = _call_targets(spec, prog.stmts[0])
                after = _call_targets(spec, erased.stmts[0])
                for (orig, _, path), (er, target, path2) in zip(before, after):
                    if path != path2 or orig.def_id != er.def_id:
                        violations.append(("shape", spec_i, d.name, path))
                        continue
                    if orig.type_args and not er.type_args:
                        recovered += 1
                        inferred = infer_call(spec, er, target)
                        cd = spec.def_by_id(orig.def_id)
                        expected = Substitution(
                            zip(cd.type_params, orig.type_args)
                        )
                        if inferred != expected:
                            violations.append(
                                ("recover", spec_i, d.name, path, inferred)
                            )
            for j, seq in enumerate(ills):
                prog = realize(
                    graph, d.id, seq, rng=derive_rng("eri2", spec_i, d.id, j)
                )
                erased = erase_program(graph, prog)
                trials += 1
                if check(spec, erased).well_typed:
                    masked += 1  # detected: excluded from the reject oracle
    criterion(
        "property: erased programs re-infer their original type arguments",
        not violations and trials >= 10_000,
        f"{trials} trials, {recovered} erased calls re-inferred, "
        f"{masked} masked ill programs excluded, {len(violations)} violations",
    )


# ---------------------------------------------------------------------------
# Performance
# ---------------------------------------------------------------------------


def synthetic_spec(n_classes, methods_per_class):
    classes = [ClassType(f"C{i}") for i in range(n_classes)]
    decls = []
    def_id = 0
    for i, ct in enumerate(classes):
        members = [
            FunctionDef(def_id, ct.name, ct, (), (), ct, is_constructor=True)
        ]
        def_id += 1
        for k in range(methods_per_class):
            ret = classes[(i * 7 + k * 13 + 1) % n_classes]
            arg = classes[(i + k) % n_classes]
            members.append(
                FunctionDef(def_id, f"m{k}", ct, (), (("p0", arg),), ret)
            )
            def_id += 1
        decls.append(ClassDecl(ct, tuple(members)))
    return ApiSpec("synthetic", tuple(decls))


def test_performance_scaling():
    sizes = [30, 60, 120, 250]
    edges = []
    means = []
    for n in sizes:
        spec = synthetic_spec(n, 50)
        graph = build_graph(spec)
        defs = [d for d in spec.all_defs() if not d.is_constructor]
        picker = derive_rng("perf-pick", n)
        times = []
        for p in range(15):
            d = defs[picker.randrange(len(defs))]
            t0 = time.perf_counter()
            sub = draw_substitution(
                spec, sig_type_vars(d), 2, derive_rng("perf", n, p)
            )
            seqs = enumerate_well_typed(
                spec, graph, d.id, sub,
                EnumCaps(max_sequences_per_def=1),
                derive_rng("perf-e", n, p),
            )
            realize(graph, d.id, seqs[0], rng=derive_rng("perf-r", n, p))
            times.append(time.perf_counter() - t0)
        edges.append(len(graph.edges))
        means.append(statistics.mean(times))
    big_mean = means[-1]
    r = statistics.correlation(
        [__import__("math").log(e) for e in edges],
        [__import__("math").log(t) for t in means],
    )
    criterion(
        "performance: <= 1 s per program at >= 25k edges, near-linear growth",
        edges[-1] >= 25_000 and big_mean <= 1.0 and r >= 0.9,
        f"edges={edges[-1]}, mean={big_mean * 1000:.0f} ms, log-log r={r:.3f}",
    )


# ---------------------------------------------------------------------------
# Determinism
# ---------------------------------------------------------------------------


def _normalized_report(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        row = json.loads(line)
        row.pop("time_ms")
        rows.append(row)
    return rows


def _program_bytes(out_dir):
    return {
        p.name: p.read_bytes()
        for p in Path(out_dir).rglob("*")
        if p.is_file() and p.suffix != ".jsonl"
    }


def test_determinism_of_fuzz_runs(tmp_path, capsys):
    api = tmp_path / "api.json"
    api.write_text(json.dumps(COLLECTIONS_DOC))
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        rc = main(
            [
                "fuzz", "--api", str(api), "--no-compile",
                "--modes", "well,well-erased,ill,ill-erased",
                "--seed", "99", "--out", str(out),
                "--max-sequences", "6", "--incompatible-per-slot", "2",
            ]
        )
        assert rc == 0
        outs.append(out)
    capsys.readouterr()
    reports = [next(Path(o).rglob("report.jsonl")) for o in outs]
    same_rows = _normalized_report(reports[0]) == _normalized_report(reports[1])
    same_programs = _program_bytes(outs[0]) == _program_bytes(outs[1])
    criterion(
        "determinism: identical config and seed reproduce programs and report",
        same_rows and same_programs,
        f"{len(_normalized_report(reports[0]))} rows compared",
    )


# ---------------------------------------------------------------------------
# Environment-dependent smoke test with a stand-in compiler
# ---------------------------------------------------------------------------

TOY_API = Path(__file__).resolve().parents[1] / "src/typesmith/assets/collections.json"


def test_smoke_campaign_with_compiler(tmp_path, capsys):
    compiler = tmp_path / "acceptc.py"
    compiler.write_text("import sys; sys.exit(0)\n")
    out = tmp_path / "out"
    rc = main(
        [
            "fuzz", "--api", str(TOY_API),
            "--compiler-cmd", f"{sys.executable} {compiler} {{files}}",
            "--modes", "well", "--seed", "17", "--substitutions", "8",
            "--out", str(out), "--max-programs", "100",
            "--batch-size", "45", "--workers", "2",
        ]
    )
    printed = capsys.readouterr().out
    summary = json.loads(printed[: printed.index("report:")])
    pass_rate = summary["pass"] / summary["programs"]
    criterion(
        "smoke: 100-program well-typed campaign classifies >= 95% pass",
        summary["programs"] == 100 and pass_rate >= 0.95 and rc == 0,
        f"pass rate {pass_rate:.0%}",
    )
