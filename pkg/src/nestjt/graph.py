"""Moral and induced graphs, min-fill triangulation, cliques, junction trees."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from nestjt.errors import StructuralError


class UndirectedGraph:
    """Simple graph on integer vertices; adjacency is kept symmetric."""

    def __init__(self, vertices: Iterable[int] = (), edges: Iterable[tuple[int, int]] = ()):
        self.adj: dict[int, set[int]] = {int(v): set() for v in vertices}
        for u, v in edges:
            self.add_edge(u, v)

    def add_vertex(self, v: int) -> None:
        self.adj.setdefault(int(v), set())

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise StructuralError(f"self-loop on vertex {u}")
        self.add_vertex(u)
        self.add_vertex(v)
        self.adj[u].add(v)
        self.adj[v].add(u)

    def make_complete(self, vertices: Iterable[int]) -> None:
        vs = sorted(set(vertices))
        for v in vs:
            self.add_vertex(v)
        for u, v in itertools.combinations(vs, 2):
            self.add_edge(u, v)

    @property
    def vertices(self) -> list[int]:
        return sorted(self.adj)

    def edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u in self.adj for v in self.adj[u] if u < v}

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj.get(u, ())

    def copy(self) -> UndirectedGraph:
        g = UndirectedGraph()
        g.adj = {v: set(n) for v, n in self.adj.items()}
        return g

    def __eq__(self, other):
        return isinstance(other, UndirectedGraph) and self.adj == other.adj

    def __repr__(self):
        return f"UndirectedGraph({len(self.adj)} vertices, {len(self.edges())} edges)"


def induced_graph(domains: Iterable[Iterable[int]]) -> UndirectedGraph:
    """Graph in which every domain is a complete subgraph."""
    g = UndirectedGraph()
    for dom in domains:
        g.make_complete(dom)
    return g


def moralize(spec) -> UndirectedGraph:
    g = UndirectedGraph(v.id for v in spec.variables)
    for cpt in spec.cpts:
        g.make_complete(cpt.family)
    return g


@dataclass
class EliminationOrder:
    order: list[int]
    fill_ins: list[list[tuple[int, int]]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    @property
    def n_fill_ins(self) -> int:
        return sum(len(step) for step in self.fill_ins)


def triangulate(g: UndirectedGraph, cards: Mapping[int, int] | None = None):
    """Greedy min-fill elimination.

    Ties go to the vertex whose elimination clique has the smaller table,
    then to the lowest id. Returns the filled graph and the order.
    """
    cards = cards or {}
    work = g.copy()
    filled = g.copy()
    order, fills = [], []
    while work.adj:
        best = None
        for v in sorted(work.adj):
            nbrs = sorted(work.adj[v])
            fill = sum(1 for a, b in itertools.combinations(nbrs, 2) if b not in work.adj[a])
            size = cards.get(v, 2) * math.prod(cards.get(u, 2) for u in nbrs)
            key = (fill, size, v)
            if best is None or key < best:
                best = key
        v = best[2]
        nbrs = sorted(work.adj[v])
        step = []
        for a, b in itertools.combinations(nbrs, 2):
            if b not in work.adj[a]:
                work.add_edge(a, b)
                filled.add_edge(a, b)
                step.append((a, b))
        for u in nbrs:
            work.adj[u].discard(v)
        del work.adj[v]
        order.append(v)
        fills.append(step)
    return filled, EliminationOrder(order, fills)


def is_perfect_elimination_order(g: UndirectedGraph, order: Sequence[int]) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    if set(pos) != set(g.adj):
        return False
    for v in order:
        later = [u for u in g.adj[v] if pos[u] > pos[v]]
        for a, b in itertools.combinations(later, 2):
            if not g.has_edge(a, b):
                return False
    return True


def max_cliques(filled: UndirectedGraph, order: EliminationOrder | Sequence[int]) -> list[frozenset[int]]:
    """Maximal cliques in elimination discovery order."""
    seq = list(order)
    if not is_perfect_elimination_order(filled, seq):
        raise StructuralError("order is not a perfect elimination order of the graph (graph not chordal?)")
    pos = {v: i for i, v in enumerate(seq)}
    cliques: list[frozenset[int]] = []
    for v in seq:
        cand = frozenset([v] + [u for u in filled.adj[v] if pos[u] > pos[v]])
        # a later residual set cannot contain an earlier vertex, so only
        # earlier cliques can absorb this one
        if not any(cand <= c for c in cliques):
            cliques.append(cand)
    return cliques


@dataclass
class JunctionTree:
    """Cliques, tree edges with separators, and a potential assignment.

    ``potentials`` may hold Potential objects or bare domains; the tree
    only looks at their variable sets. ``assignment[i]`` lists indices into
    ``potentials`` whose product is the clique's initial potential.
    """

    cliques: list[frozenset[int]]
    edges: list[tuple[int, int, frozenset[int]]]
    assignment: dict[int, list[int]]
    potentials: list
    cards: dict[int, int]

    def __post_init__(self):
        self._nbrs: dict[int, list[int]] = {i: [] for i in range(len(self.cliques))}
        self._sep: dict[tuple[int, int], frozenset[int]] = {}
        for i, j, s in self.edges:
            self._nbrs[i].append(j)
            self._nbrs[j].append(i)
            self._sep[(i, j)] = self._sep[(j, i)] = s
        for n in self._nbrs.values():
            n.sort()

    def neighbors(self, i: int) -> list[int]:
        return self._nbrs[i]

    def separator(self, i: int, j: int) -> frozenset[int]:
        return self._sep[(i, j)]

    def size(self, variables: Iterable[int]) -> int:
        return math.prod(self.cards[v] for v in variables)

    def clique_size(self, i: int) -> int:
        return self.size(self.cliques[i])

    def domain_of(self, k: int) -> tuple[int, ...]:
        p = self.potentials[k]
        return tuple(p.domain) if hasattr(p, "domain") else tuple(p)

    def rooted(self, root: int):
        """(parent map, post-order list) for a DFS from `root`, children ascending."""
        parent = {root: None}
        post = []

        def visit(u):
            for w in self._nbrs[u]:
                if w != parent[u]:
                    parent[w] = u
                    visit(w)
            post.append(u)

        visit(root)
        return parent, post

    def children(self, i: int, parent: Mapping[int, int | None]) -> list[int]:
        return [w for w in self._nbrs[i] if w != parent[i]]

    def total_space(self) -> int:
        return sum(self.clique_size(i) for i in range(len(self.cliques))) + sum(
            self.size(s) for _, _, s in self.edges
        )

    def path(self, a: int, b: int) -> list[int]:
        parent, _ = self.rooted(a)
        out = [b]
        while out[-1] != a:
            out.append(parent[out[-1]])
        return out[::-1]

    def check(self) -> list[str]:
        """Return violated junction tree invariants."""
        problems = []
        n = len(self.cliques)
        if len(self.edges) != max(n - 1, 0):
            problems.append(f"{len(self.edges)} edges for {n} cliques")
        parent, post = self.rooted(0) if n else ({}, [])
        if len(post) != n:
            problems.append("tree is not connected")
            return problems
        for a, b in itertools.combinations(range(n), 2):
            common = self.cliques[a] & self.cliques[b]
            for c in self.path(a, b):
                if not common <= self.cliques[c]:
                    problems.append(f"running intersection fails between {a} and {b} at {c}")
                    break
            if self.cliques[a] <= self.cliques[b] or self.cliques[b] <= self.cliques[a]:
                problems.append(f"clique {a} and {b} are nested")
        for i, ks in self.assignment.items():
            for k in ks:
                if not set(self.domain_of(k)) <= self.cliques[i]:
                    problems.append(f"potential {k} not contained in clique {i}")
        return problems


def build_junction_tree(cliques: Sequence[Iterable[int]], potentials: Sequence, cards: Mapping[int, int]) -> JunctionTree:
    """Maximum-weight spanning tree over clique intersections (Kruskal).

    Ties between equal weights go to the lexicographically smallest clique
    pair; each potential goes to the lowest-indexed clique containing it.
    """
    cl = [frozenset(c) for c in cliques]
    pairs = sorted(
        itertools.combinations(range(len(cl)), 2),
        key=lambda ij: (-len(cl[ij[0]] & cl[ij[1]]), ij),
    )
    comp = list(range(len(cl)))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    edges = []
    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            comp[ri] = rj
            edges.append((i, j, cl[i] & cl[j]))
        if len(edges) == len(cl) - 1:
            break
    assignment: dict[int, list[int]] = {i: [] for i in range(len(cl))}
    for k, p in enumerate(potentials):
        dom = set(p.domain) if hasattr(p, "domain") else set(p)
        for i, c in enumerate(cl):
            if dom <= c:
                assignment[i].append(k)
                break
        else:
            raise StructuralError(f"potential {k} over {sorted(dom)} is not covered by any clique")
    return JunctionTree(cl, edges, assignment, list(potentials), dict(cards))


def junction_tree_for(domains_or_potentials: Sequence, cards: Mapping[int, int], extra_vertices=()) -> JunctionTree:
    """Induced graph -> min-fill triangulation -> cliques -> junction tree."""
    doms = [p.domain if hasattr(p, "domain") else tuple(p) for p in domains_or_potentials]
    g = induced_graph(doms)
    for v in extra_vertices:
        g.add_vertex(v)
    filled, order = triangulate(g, cards)
    return build_junction_tree(max_cliques(filled, order), domains_or_potentials, cards)


def network_junction_tree(spec, potentials=None) -> JunctionTree:
    """Junction tree of a network's moral graph, CPT potentials assigned."""
    g = moralize(spec)
    filled, order = triangulate(g, spec.cards)
    pots = potentials if potentials is not None else spec.cpt_potentials()
    return build_junction_tree(max_cliques(filled, order), pots, spec.cards)


def dump_tree(tree: JunctionTree, name_of=str) -> str:
    """Text dump: cliques and separators with table sizes, total space."""
    lines = []
    for i, c in enumerate(tree.cliques):
        vs = ",".join(name_of(v) for v in sorted(c))
        pots = ",".join(str(k) for k in tree.assignment.get(i, []))
        lines.append(f"clique C{i} {{{vs}}} size={tree.clique_size(i)} potentials=[{pots}]")
    for i, j, s in tree.edges:
        vs = ",".join(name_of(v) for v in sorted(s))
        lines.append(f"separator C{i}-C{j} {{{vs}}} size={tree.size(s)}")
    lines.append(f"total space {tree.total_space()}")
    return "\n".join(lines)
