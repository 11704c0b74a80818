"""Nerves of covers, GF(2) cycle spaces and bipartization by edge splitting."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compacts import DiscretizedCompact, GeometryError


class TripleOverlapError(GeometryError):
    pass


@dataclass(frozen=True)
class NerveGraph:
    """Simple undirected graph; edges are stored as sorted vertex pairs."""

    vertices: tuple
    edges: tuple
    geometry: dict | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        verts = tuple(self.vertices)
        seen = set()
        clean = []
        vset = set(verts)
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"loop at vertex {u!r}")
            if u not in vset or v not in vset:
                raise ValueError(f"edge ({u!r}, {v!r}) uses an unknown vertex")
            e = _key(u, v)
            if e in seen:
                raise ValueError(f"multi-edge {e!r}")
            seen.add(e)
            clean.append(e)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(clean))

    def adjacency(self) -> dict:
        adj = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for v in adj:
            adj[v].sort(key=_order)
        return adj

    def degree(self, v) -> int:
        return sum(1 for e in self.edges if v in e)

    def edge_index(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    def n_components(self) -> int:
        adj = self.adjacency()
        seen = set()
        count = 0
        for v in self.vertices:
            if v in seen:
                continue
            count += 1
            stack = [v]
            seen.add(v)
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
        return count


def _order(v):
    return (0, v) if isinstance(v, (int, np.integer)) else (1, str(v))


def _key(u, v):
    return (u, v) if _order(u) <= _order(v) else (v, u)


# ---------------------------------------------------------------------------
# nerves


def nerve(cover: list) -> NerveGraph:
    """Nerve of a cover by discretised compacts; only double overlaps allowed."""
    if not cover:
        return NerveGraph((), ())
    h = cover[0].h
    for c in cover:
        if abs(c.h - h) > 1e-12 * h:
            raise GeometryError("cover elements use different spacings")
    counts: dict = {}
    for i, c in enumerate(cover):
        for k in c.key_ids().tolist():
            counts.setdefault(k, []).append(i)
    edges = set()
    geometry = {}
    for k, members in counts.items():
        if len(members) > 2:
            raise TripleOverlapError(f"cover elements {members} share a sample")
        if len(members) == 2:
            edges.add(_key(*members))
    for e in sorted(edges):
        geometry[e] = cover[e[0]].intersection(cover[e[1]])
    return NerveGraph(tuple(range(len(cover))), tuple(sorted(edges)), geometry)


# ---------------------------------------------------------------------------
# cycle space


@dataclass(frozen=True)
class CycleVector:
    """Edge-indicator vector over GF(2) for a graph's edge ordering."""

    bits: tuple
    edges: tuple

    @property
    def support(self) -> list:
        return [e for e, b in zip(self.edges, self.bits) if b]

    @property
    def weight(self) -> int:
        return int(sum(self.bits))

    def is_cycle(self) -> bool:
        deg: dict = {}
        for u, v in self.support:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        return all(d % 2 == 0 for d in deg.values())


def _spanning_forest(g: NerveGraph):
    adj = g.adjacency()
    parent = {}
    depth = {}
    tree = set()
    for root in sorted(g.vertices, key=_order):
        if root in parent:
            continue
        parent[root] = None
        depth[root] = 0
        q = deque([root])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in parent:
                    parent[y] = x
                    depth[y] = depth[x] + 1
                    tree.add(_key(x, y))
                    q.append(y)
    return parent, depth, tree


def _tree_path(parent, depth, u, v) -> list:
    a, b = u, v
    left, right = [], []
    while depth[a] > depth[b]:
        left.append(_key(a, parent[a]))
        a = parent[a]
    while depth[b] > depth[a]:
        right.append(_key(b, parent[b]))
        b = parent[b]
    while a != b:
        left.append(_key(a, parent[a]))
        right.append(_key(b, parent[b]))
        a, b = parent[a], parent[b]
    return left + right


def cycle_basis(g: NerveGraph) -> list:
    """Fundamental cycles of a BFS spanning forest, one per non-tree edge."""
    parent, depth, tree = _spanning_forest(g)
    idx = g.edge_index()
    basis = []
    for e in g.edges:
        if e in tree:
            continue
        bits = [0] * len(g.edges)
        bits[idx[e]] = 1
        for t in _tree_path(parent, depth, *e):
            bits[idx[t]] ^= 1
        basis.append(CycleVector(tuple(bits), g.edges))
    return basis


def gf2_rank(vectors: list) -> int:
    if not vectors:
        return 0
    M = np.array([v.bits for v in vectors], dtype=np.uint8) % 2
    rank = 0
    rows, cols = M.shape
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if M[r, c]), None)
        if pivot is None:
            continue
        M[[rank, pivot]] = M[[pivot, rank]]
        for r in range(rows):
            if r != rank and M[r, c]:
                M[r] ^= M[rank]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# colouring and bipartization


@dataclass(frozen=True)
class TwoColoring:
    ok: bool
    colors: dict
    odd_cycle: tuple = ()


def two_color(g: NerveGraph) -> TwoColoring:
    """BFS bipartition, or an odd circuit as witness."""
    adj = g.adjacency()
    color = {}
    parent = {}
    depth = {}
    for root in sorted(g.vertices, key=_order):
        if root in color:
            continue
        color[root] = 0
        parent[root] = None
        depth[root] = 0
        q = deque([root])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in color:
                    color[y] = 1 - color[x]
                    parent[y] = x
                    depth[y] = depth[x] + 1
                    q.append(y)
                elif color[y] == color[x]:
                    return TwoColoring(False, {}, _odd_circuit(parent, depth, x, y))
    return TwoColoring(True, color)


def _odd_circuit(parent, depth, u, v) -> tuple:
    a, b = u, v
    left, right = [a], [b]
    while depth[a] > depth[b]:
        a = parent[a]
        left.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        right.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        left.append(a)
        right.append(b)
    return tuple(left + right[-2::-1])


@dataclass(frozen=True)
class Bipartization:
    graph: NerveGraph
    split_edges: tuple
    fresh_vertices: tuple
    odd_basis_count: int


def _fresh_name(g_vertices: set, e) -> object:
    base = f"s{e[0]}_{e[1]}"
    name = base
    k = 1
    while name in g_vertices:
        name = f"{base}_{k}"
        k += 1
    return name


def split_edge(g: NerveGraph, e, fresh) -> NerveGraph:
    e = _key(*e)
    edges = [x for x in g.edges if x != e] + [_key(e[0], fresh), _key(fresh, e[1])]
    return NerveGraph(g.vertices + (fresh,), tuple(edges))


def bipartize_by_splitting(g: NerveGraph) -> Bipartization:
    """Split one private edge of every odd fundamental cycle.

    Parity is linear on the cycle space, so once every odd basis cycle has
    gained one extra edge every cycle of the new graph is even.
    """
    basis = cycle_basis(g)
    odd = [i for i, c in enumerate(basis) if c.weight % 2]
    chosen = []
    for i in odd:
        others = [basis[j] for j in range(len(basis)) if j != i]
        private = [k for k, b in enumerate(basis[i].bits)
                   if b and not any(o.bits[k] for o in others)]
        chosen.append(g.edges[min(private)])
    out = g
    fresh = []
    names = set(g.vertices)
    for e in chosen:
        f = _fresh_name(names, e)
        names.add(f)
        fresh.append(f)
        out = split_edge(out, e, f)
    return Bipartization(out, tuple(chosen), tuple(fresh), len(odd))


def suppress_degree_two(g: NerveGraph, vertices) -> NerveGraph:
    """Undo edge splits: merge the two edges at each listed degree-2 vertex."""
    out = g
    for v in vertices:
        nb = [x for e in out.edges if v in e for x in e if x != v]
        if len(nb) != 2:
            raise ValueError(f"vertex {v!r} does not have degree 2")
        edges = [e for e in out.edges if v not in e] + [_key(nb[0], nb[1])]
        out = NerveGraph(tuple(x for x in out.vertices if x != v), tuple(edges))
    return out


def same_graph(a: NerveGraph, b: NerveGraph) -> bool:
    return set(a.vertices) == set(b.vertices) and set(a.edges) == set(b.edges)


# ---------------------------------------------------------------------------
# cover refinement


def refine_cover_split(cover: list, vi: int, wi: int, r_in: float | None = None,
                       r_out: float | None = None) -> list:
    """Replace overlapping V, W by V', U, W' with V' n W' empty.

    ``U`` is the part of ``V u W`` within ``r_out`` of ``V n W``; ``V'`` and
    ``W'`` drop the points within ``r_in`` of it.  ``U`` is appended at the
    end of the returned list.
    """
    V, W = cover[vi], cover[wi]
    h = V.h
    r_in = 3 * h if r_in is None else r_in
    r_out = r_in + 4 * h if r_out is None else r_out
    if not r_out > r_in:
        raise GeometryError("r_out must exceed r_in")
    vw = V.intersection(W)
    if not len(vw):
        raise GeometryError("refine_cover_split needs overlapping V and W")
    tree = vw.tree()
    both = V.union(W)
    d, _ = tree.query(np.column_stack([both.points.real, both.points.imag]))
    U = both.subset(d <= r_out + 1e-9 * h)
    dv, _ = tree.query(np.column_stack([V.points.real, V.points.imag]))
    dw, _ = tree.query(np.column_stack([W.points.real, W.points.imag]))
    Vp = V.subset(dv >= r_in - 1e-9 * h)
    Wp = W.subset(dw >= r_in - 1e-9 * h)
    if not len(Vp) or not len(Wp):
        raise GeometryError("refinement swallowed V or W entirely; lower r_in")
    if len(Vp.intersection(Wp)):
        raise GeometryError("cannot separate V' and W' at this resolution")
    new = list(cover)
    new[vi] = Vp
    new[wi] = Wp
    new.append(U)
    nerve(new)  # raises on triple overlaps
    return new


# ---------------------------------------------------------------------------
# edge-list I/O


def parse_edge_list(text: str) -> NerveGraph:
    verts: list = []
    edges = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        pair = []
        for p in parts:
            try:
                p = int(p)
            except ValueError:
                pass
            pair.append(p)
            if p not in seen:
                seen.add(p)
                verts.append(p)
        edges.append(tuple(pair))
    return NerveGraph(tuple(sorted(verts, key=_order)), tuple(edges))


def read_edge_list(path) -> NerveGraph:
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g: NerveGraph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges)
