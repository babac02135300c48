"""The API graph: type nodes and definition nodes with substitution labels.

Edges encode two relations only:
  * TypeNode(t) -> DefNode(d) with an empty label when d is an instance
    member of t's class (receiver edge);
  * DefNode(d) -> TypeNode(r') labeled sigma when decompose(return type of d)
    yields (sigma, r').

Static members, constructors, and free functions have no incoming edges.
Parameter types create no edges; arguments are satisfied recursively by the
inhabitant search. Edge weight is uniform, "shortest" means fewest edges.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .ir import (
    ApiDef,
    ApiSpec,
    BottomType,
    EMPTY_SUBSTITUTION,
    Substitution,
    TopType,
    Type,
    decompose,
    is_receiverless,
    result_type,
)


@dataclass(frozen=True)
class TypeNode:
    type: Type

    def label(self) -> str:
        return self.type.display()


@dataclass(frozen=True)
class DefNode:
    def_id: int

    def label(self) -> str:
        return f"def#{self.def_id}"


GraphNode = Union[TypeNode, DefNode]
Edge = tuple[GraphNode, GraphNode, Substitution]


class ApiGraph:
    """Immutable after build; safe to share across concurrent readers."""

    def __init__(self, spec: ApiSpec) -> None:
        self.spec = spec
        self.nodes: list[GraphNode] = []
        self._index: dict[GraphNode, int] = {}
        self.out: dict[GraphNode, list[tuple[GraphNode, Substitution]]] = {}
        self.inc: dict[GraphNode, list[tuple[GraphNode, Substitution]]] = {}
        self.edges: list[Edge] = []

    def __contains__(self, node: GraphNode) -> bool:
        return node in self._index

    def node_index(self, node: GraphNode) -> int:
        return self._index[node]

    def add_node(self, node: GraphNode) -> GraphNode:
        if node not in self._index:
            self._index[node] = len(self.nodes)
            self.nodes.append(node)
            self.out[node] = []
            self.inc[node] = []
        return node

    def add_edge(self, src: GraphNode, dst: GraphNode, label: Substitution) -> None:
        self.add_node(src)
        self.add_node(dst)
        self.out[src].append((dst, label))
        self.inc[dst].append((src, label))
        self.edges.append((src, dst, label))

    def edge_label(self, src: GraphNode, dst: GraphNode) -> Substitution:
        for node, label in self.out[src]:
            if node == dst:
                return label
        raise KeyError(f"no edge {src} -> {dst}")

    def sourceless_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if not self.inc[n]]

    def def_nodes(self) -> list[DefNode]:
        return [n for n in self.nodes if isinstance(n, DefNode)]

    def type_nodes(self) -> list[TypeNode]:
        return [n for n in self.nodes if isinstance(n, TypeNode)]


def _topological_classes(spec: ApiSpec):
    """Declared classes, supertypes before subtypes, ties by declaration order."""
    order = {d.type.name: i for i, d in enumerate(spec.classes)}
    indeg = {d.type.name: 0 for d in spec.classes}
    children: dict[str, list[str]] = {name: [] for name in indeg}
    for decl in spec.classes:
        for s in decl.type.supertypes:
            base = s.constructor if hasattr(s, "constructor") else s
            bname = getattr(base, "name", None)
            if bname in indeg:
                indeg[decl.type.name] += 1
                children[bname].append(decl.type.name)
    ready = sorted((n for n, d in indeg.items() if d == 0), key=order.get)
    by_name = {d.type.name: d for d in spec.classes}
    out = []
    while ready:
        name = ready.pop(0)
        out.append(by_name[name])
        for c in sorted(children[name], key=order.get):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort(key=order.get)
    return out


def _add_return_edge(g: ApiGraph, d_node: DefNode, d: ApiDef) -> None:
    sub, base = decompose(result_type(d))
    if isinstance(base, (TopType, BottomType)):
        return  # Top and Bottom own no members and get no nodes
    g.add_edge(d_node, TypeNode(base), sub)


def build_graph(spec: ApiSpec) -> ApiGraph:
    """Deterministic and idempotent: same spec, same node/edge order."""
    g = ApiGraph(spec)
    for decl in _topological_classes(spec):
        t_node = TypeNode(decl.type)
        for d in decl.members:
            d_node = DefNode(d.id)
            g.add_node(d_node)
            if not is_receiverless(d):
                g.add_node(t_node)
                g.add_edge(t_node, d_node, EMPTY_SUBSTITUTION)
            _add_return_edge(g, d_node, d)
    for d in spec.free_functions:
        d_node = DefNode(d.id)
        g.add_node(d_node)
        _add_return_edge(g, d_node, d)
    return g


# ---------------------------------------------------------------------------
# Path enumeration
# ---------------------------------------------------------------------------

Path = tuple[GraphNode, ...]


def _bfs_shortest(
    graph: ApiGraph,
    src: GraphNode,
    dst: GraphNode,
    banned_nodes: frozenset[GraphNode] = frozenset(),
    banned_edges: frozenset[tuple[GraphNode, GraphNode]] = frozenset(),
) -> Optional[Path]:
    if src in banned_nodes or dst in banned_nodes:
        return None
    if src == dst:
        return (src,)
    parent: dict[GraphNode, GraphNode] = {src: src}
    frontier = [src]
    while frontier:
        nxt: list[GraphNode] = []
        for node in frontier:
            for succ, _ in graph.out[node]:
                if succ in parent or succ in banned_nodes:
                    continue
                if (node, succ) in banned_edges:
                    continue
                parent[succ] = node
                if succ == dst:
                    path = [succ]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    return tuple(reversed(path))
                nxt.append(succ)
        frontier = nxt
    return None


def _yen_paths(graph: ApiGraph, src: GraphNode, dst: GraphNode) -> Iterator[Path]:
    """K-shortest loopless paths, lazily, in nondecreasing length order."""
    first = _bfs_shortest(graph, src, dst)
    if first is None:
        return
    yield first
    found = [first]
    seen = {first}
    candidates: list[tuple[int, tuple[int, ...], Path]] = []
    while True:
        prev = found[-1]
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            banned_edges = set()
            for p in found:
                if len(p) > i + 1 and p[: i + 1] == root:
                    banned_edges.add((p[i], p[i + 1]))
            banned_nodes = frozenset(root[:-1])
            spur_path = _bfs_shortest(
                graph, spur, dst, banned_nodes, frozenset(banned_edges)
            )
            if spur_path is None:
                continue
            total = root[:-1] + spur_path
            if total in seen:
                continue
            seen.add(total)
            key = tuple(graph.node_index(n) for n in total)
            heapq.heappush(candidates, (len(total), key, total))
        if not candidates:
            return
        _, _, best = heapq.heappop(candidates)
        found.append(best)
        yield best


def _all_paths_to(graph: ApiGraph, start: GraphNode, target: GraphNode) -> Iterator[Path]:
    """Every acyclic path from start to target, by depth-first search."""
    path: list[GraphNode] = [start]
    on_path = {start}

    def walk(node: GraphNode) -> Iterator[Path]:
        if node == target and len(path) > 1:
            yield tuple(path)
            # target may still have outgoing edges; paths must end here,
            # so do not continue past it
            return
        for succ, _ in graph.out[node]:
            if succ in on_path:
                continue
            path.append(succ)
            on_path.add(succ)
            yield from walk(succ)
            path.pop()
            on_path.remove(succ)

    if start == target:
        return
    yield from walk(start)


def _shortest_per_start(graph: ApiGraph, target: GraphNode) -> Iterator[Path]:
    """One shortest path per sourceless start in nondecreasing length order,
    from a single breadth-first sweep over reversed edges."""
    dist: dict[GraphNode, int] = {target: 0}
    hop: dict[GraphNode, GraphNode] = {}
    frontier = [target]
    while frontier:
        nxt: list[GraphNode] = []
        for node in frontier:
            for pred, _ in graph.inc[node]:
                if pred in dist:
                    continue
                dist[pred] = dist[node] + 1
                hop[pred] = node
                nxt.append(pred)
        frontier = nxt
    entries = []
    for idx, start in enumerate(graph.sourceless_nodes()):
        if start == target or start not in dist:
            continue
        path = [start]
        while path[-1] != target:
            path.append(hop[path[-1]])
        entries.append((len(path), idx, tuple(path)))
    for _, _, path in sorted(entries):
        yield path


def paths_to(
    graph: ApiGraph, target: GraphNode, k: Optional[int] = None
) -> Iterator[Path]:
    """Acyclic paths ending at target, in nondecreasing length order.

    Paths start at sourceless nodes (definitions without receivers, type
    nodes nothing returns into) and contain at least one edge; each node
    appears at most once per path. k bounds the number of paths per start
    (Yen's algorithm); k=None enumerates every acyclic path.
    """
    if target not in graph:
        return
    if k == 1:
        yield from _shortest_per_start(graph, target)
        return

    def tagged(gen: Iterator[Path], idx: int) -> Iterator[tuple[int, int, int, Path]]:
        for seq, p in enumerate(gen):
            yield (len(p), idx, seq, p)

    streams = []
    for start_idx, start in enumerate(graph.sourceless_nodes()):
        if start == target:
            continue
        if k is None:
            gen: Iterator[Path] = iter(
                sorted(
                    _all_paths_to(graph, start, target),
                    key=lambda p: (len(p), tuple(graph.node_index(n) for n in p)),
                )
            )
        else:
            gen = _bounded(_yen_paths(graph, start, target), k)
        streams.append(tagged(gen, start_idx))
    for _, _, _, path in heapq.merge(*streams):
        yield path


def _bounded(gen: Iterator[Path], k: int) -> Iterator[Path]:
    for i, p in enumerate(gen):
        if i >= k:
            return
        yield p


# ---------------------------------------------------------------------------
# Stats and dumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatsRecord:
    nodes: int
    type_nodes: int
    def_nodes: int
    edges: int
    receiver_edges: int
    return_edges: int
    sourceless_defs: int
    methods: int
    polymorphic_methods: int
    fields: int
    constructors: int
    avg_signature_size: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def graph_stats(graph: ApiGraph) -> StatsRecord:
    spec = graph.spec
    defs = [spec.def_by_id(n.def_id) for n in graph.def_nodes()]
    methods = [d for d in defs if not d.is_field and not d.is_constructor]
    ctors = [d for d in defs if d.is_constructor]
    fields = [d for d in defs if d.is_field]
    receiver_edges = sum(
        1 for src, dst, _ in graph.edges if isinstance(src, TypeNode)
    )
    sig_sizes = []
    for d in defs:
        n = 1  # return slot
        if not is_receiverless(d):
            n += 1
        if not d.is_field:
            n += len(d.params)
        sig_sizes.append(n)
    return StatsRecord(
        nodes=len(graph.nodes),
        type_nodes=len(graph.type_nodes()),
        def_nodes=len(graph.def_nodes()),
        edges=len(graph.edges),
        receiver_edges=receiver_edges,
        return_edges=len(graph.edges) - receiver_edges,
        sourceless_defs=sum(
            1 for n in graph.def_nodes() if not graph.inc[n]
        ),
        methods=len(methods),
        polymorphic_methods=sum(1 for d in methods if d.type_params),
        fields=len(fields),
        constructors=len(ctors),
        avg_signature_size=(
            sum(sig_sizes) / len(sig_sizes) if sig_sizes else 0.0
        ),
    )


def _node_display(graph: ApiGraph, node: GraphNode) -> str:
    if isinstance(node, TypeNode):
        t = node.type
        params = getattr(t, "type_params", ())
        if params:
            return f"{t.display()}<{', '.join(p.name for p in params)}>"
        return t.display()
    d = graph.spec.def_by_id(node.def_id)
    owner = f"{d.owner.name}." if d.owner else ""
    if d.is_field:
        return f"{owner}{d.name}"
    params = ", ".join(pt.display() for _, pt in d.params)
    return f"{owner}{d.name}({params})"


def to_dot(graph: ApiGraph) -> str:
    """Graphviz rendering: ovals for types, boxes for definitions."""
    lines = ["digraph api {"]
    for i, node in enumerate(graph.nodes):
        shape = "oval" if isinstance(node, TypeNode) else "box"
        lines.append(
            f'  n{i} [label="{_node_display(graph, node)}", shape={shape}];'
        )
    for src, dst, label in graph.edges:
        attr = ""
        if len(label):
            attr = f' [label="{label.display()}"]'
        lines.append(
            f"  n{graph.node_index(src)} -> n{graph.node_index(dst)}{attr};"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
