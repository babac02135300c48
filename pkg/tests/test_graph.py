"""API graph construction, k-shortest-path streaming, stats."""

import random

from typesmith.graph import (
    DefNode,
    TypeNode,
    build_graph,
    graph_stats,
    paths_to,
    to_dot,
)
from typesmith.ir import EMPTY_SUBSTITUTION, Substitution, TypeVariable, apply, generic_pattern, result_type

from conftest import def_named


class TestBuildGraph:
    def test_collections_node_counts(self, collections_spec, collections_graph):
        g = collections_graph
        assert len(g.def_nodes()) == 7
        assert len(g.type_nodes()) == 3
        type_names = {n.type.display() for n in g.type_nodes()}
        assert type_names == {"List", "Set", "boolean"}

    def test_sourceless_definitions(self, collections_spec, collections_graph):
        g = collections_graph
        sourceless = {
            collections_spec.def_by_id(n.def_id).name
            for n in g.def_nodes()
            if not g.inc[n]
        }
        assert sourceless == {"createList", "List", "Set"}

    def test_receiver_edges_have_empty_labels(self, collections_graph):
        for src, dst, label in collections_graph.edges:
            if isinstance(src, TypeNode):
                assert label == EMPTY_SUBSTITUTION

    def test_return_edge_labels_reconstruct_return_types(
        self, collections_spec, collections_graph
    ):
        for src, dst, label in collections_graph.edges:
            if isinstance(src, DefNode):
                d = collections_spec.def_by_id(src.def_id)
                assert apply(label, generic_pattern(dst.type)) == result_type(d)

    def test_polymorphic_return_edge(self, collections_spec, collections_graph):
        create = def_named(collections_spec, "createList")
        (dst, label), = collections_graph.out[DefNode(create.id)]
        assert dst.type.name == "List"
        t_param = dst.type.type_params[0]
        assert label == Substitution({t_param: TypeVariable("X")})

    def test_empty_spec(self):
        from typesmith.ingest import load_api

        g = build_graph(load_api([]))
        assert not g.nodes and not g.edges

    def test_deterministic_and_idempotent(self, collections_spec):
        g1 = build_graph(collections_spec)
        g2 = build_graph(collections_spec)
        assert g1.nodes == g2.nodes
        assert [
            (g1.node_index(s), g1.node_index(d), l) for s, d, l in g1.edges
        ] == [(g2.node_index(s), g2.node_index(d), l) for s, d, l in g2.edges]


class TestStats:
    def test_collections_counts(self, collections_graph):
        stats = graph_stats(collections_graph)
        assert stats.nodes == 10
        assert stats.def_nodes == 7
        assert stats.type_nodes == 3
        assert stats.constructors == 2
        assert stats.sourceless_defs == 3

    def test_empty_graph_zeroes(self):
        from typesmith.ingest import load_api

        stats = graph_stats(build_graph(load_api([])))
        assert stats.nodes == 0 and stats.edges == 0
        assert stats.avg_signature_size == 0.0

    def test_counts_match_spec_recount(self, collections_spec, collections_graph):
        # Independent recount straight off the declarations.
        stats = graph_stats(collections_graph)
        defs = list(collections_spec.all_defs())
        assert stats.def_nodes == len(defs)
        assert stats.constructors == sum(1 for d in defs if d.is_constructor)
        assert stats.fields == sum(1 for d in defs if d.is_field)
        assert stats.edges == len(collections_graph.edges)


class TestPathsTo:
    def test_maps_paths_to_set(self, maps_spec, maps_graph):
        set_node = TypeNode(maps_spec.class_by_name("Set"))
        paths = list(paths_to(maps_graph, set_node, k=None))
        # Exactly two acyclic paths reach Set: one through each factory.
        assert len(paths) == 2
        firsts = {maps_spec.def_by_id(p[0].def_id).name for p in paths}
        assert firsts == {"mapOf", "mapOfStrs"}
        assert all(p[-1] == set_node for p in paths)

    def test_isolated_node_empty_stream(self, maps_spec, maps_graph):
        # String has no members and nothing returns it.
        node = TypeNode(maps_spec.class_by_name("String"))
        assert node not in maps_graph
        assert list(paths_to(maps_graph, node, k=None)) == []

    def test_nondecreasing_lengths(self, collections_graph, collections_spec):
        bool_node = TypeNode(collections_spec.class_by_name("boolean"))
        lengths = [len(p) for p in paths_to(collections_graph, bool_node, k=None)]
        assert lengths == sorted(lengths)

    def test_k_bounds_paths_per_start(self, collections_graph, collections_spec):
        bool_node = TypeNode(collections_spec.class_by_name("boolean"))
        all_paths = list(paths_to(collections_graph, bool_node, k=None))
        starts = {p[0] for p in all_paths}
        one_per = list(paths_to(collections_graph, bool_node, k=1))
        assert len(one_per) == len(
            {p[0] for p in one_per}
        ), "k=1 yields at most one path per start"
        assert {p[0] for p in one_per} == starts

    def test_paths_are_loopless_and_unique(self, collections_graph, collections_spec):
        list_node = TypeNode(collections_spec.class_by_name("List"))
        seen = set()
        for p in paths_to(collections_graph, list_node, k=None):
            assert len(set(p)) == len(p)
            assert p not in seen
            seen.add(p)


def random_dag(rng):
    """A random DAG in adjacency form over < 12 nodes."""
    n = rng.randint(3, 11)
    edges = set()
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.35:
                edges.add((a, b))
    return n, sorted(edges)


class FakeGraph:
    """Adapter exposing the adjacency surface paths_to needs."""

    def __init__(self, n, edges):
        self.nodes = list(range(n))
        self.out = {i: [] for i in range(n)}
        self.inc = {i: [] for i in range(n)}
        for a, b in edges:
            self.out[a].append((b, EMPTY_SUBSTITUTION))
            self.inc[b].append((a, EMPTY_SUBSTITUTION))

    def __contains__(self, node):
        return node in self.out

    def node_index(self, node):
        return node

    def sourceless_nodes(self):
        return [n for n in self.nodes if not self.inc[n]]


def brute_force_paths(graph, target):
    """All acyclic paths from sourceless nodes to target, by plain search."""
    out = set()

    def dfs(node, path):
        if node == target and len(path) > 1:
            out.add(tuple(path))
            return
        for succ, _ in graph.out[node]:
            if succ in path:
                continue
            dfs(succ, path + [succ])

    for start in graph.sourceless_nodes():
        if start != target:
            dfs(start, [start])
    return out


class TestPathsAgainstBruteForce:
    def test_random_dags_match_dfs(self):
        rng = random.Random(20240901)
        for trial in range(200):
            n, edges = random_dag(rng)
            g = FakeGraph(n, edges)
            target = rng.randrange(n)
            expected = brute_force_paths(g, target)
            got = set(paths_to(g, target, k=None))
            assert got == expected, f"trial {trial}"
            # Yen with a huge k must agree as well.
            got_yen = set(paths_to(g, target, k=10**6))
            assert got_yen == expected, f"trial {trial} (yen)"


class TestDot:
    def test_dump_contains_nodes_and_labels(self, collections_spec, collections_graph):
        dot = to_dot(collections_graph)
        assert dot.startswith("digraph api {")
        assert "shape=oval" in dot and "shape=box" in dot
        assert "createList" in dot
        assert "->" in dot
