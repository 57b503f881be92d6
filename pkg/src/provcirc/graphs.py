"""Labeled weighted digraphs shared by the circuit builders, the product-graph
machinery, and the instance generators.  Edge identity is (src, dst, label);
every edge carries a provenance variable id.

File format (TSV): ``src <TAB> dst <TAB> label [<TAB> weight]``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .datalog import Atom, Database, ParseError, _parse_weight
from .semiring import Element, SemiringSpec


class NotLayered(ValueError):
    """The digraph does not have the strict bottom-to-top layered shape."""


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    label: str = "E"
    weight: Element | None = None
    #: provenance variable; defaults to label(src,dst), but product-graph edges
    #: keep the variable of the edge they project to
    var_id: str | None = None

    @property
    def var(self) -> str:
        return self.var_id if self.var_id is not None else f"{self.label}({self.src},{self.dst})"


@dataclass(frozen=True)
class Digraph:
    edges: tuple
    extra_vertices: tuple = ()

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            key = (e.src, e.dst, e.label)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def vertices(self) -> tuple:
        vs = set(self.extra_vertices)
        for e in self.edges:
            vs.add(e.src)
            vs.add(e.dst)
        return tuple(sorted(vs))

    @property
    def labels(self) -> tuple:
        return tuple(sorted({e.label for e in self.edges}))

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.src == v]

    def in_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == v]

    def assignment(self, spec: SemiringSpec) -> dict:
        """Edge-variable valuation: weight, or the semiring one when unweighted."""
        return {
            e.var: (e.weight if e.weight is not None else spec.one) for e in self.edges
        }


def digraph(pairs, label: str = "E", weights: dict | None = None, extra=()) -> Digraph:
    """Build a digraph from (src, dst) pairs, sorted for determinism."""
    weights = weights or {}
    edges = tuple(
        Edge(str(u), str(v), label, weights.get((u, v)))
        for u, v in sorted(set(pairs))
    )
    return Digraph(edges, tuple(sorted(set(map(str, extra)))))


def to_database(g: Digraph) -> Database:
    """EDB facts label(src,dst), tagged with the edge variables."""
    db = Database()
    for e in sorted(g.edges, key=lambda e: (e.label, e.src, e.dst)):
        db.add(Atom(e.label, (e.src, e.dst)), var=e.var, weight=e.weight)
    return db


def from_database(db: Database, pred: str = "E") -> Digraph:
    edges = tuple(
        Edge(a.args[0], a.args[1], a.pred, db.facts[a].weight)
        for a in sorted(db.by_pred(pred), key=lambda a: a.args)
    )
    return Digraph(edges)


def parse_graph_tsv(text: str) -> Digraph:
    edges = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].rstrip()
        if not line.strip():
            continue
        cols = [c.strip() for c in line.split("\t") if c.strip()]
        if len(cols) not in (3, 4):
            raise ParseError("graph row is src, dst, label and optional weight", line_no)
        weight = _parse_weight(cols[3], line_no) if len(cols) == 4 else None
        edges.append(Edge(cols[0], cols[1], cols[2], weight))
    return Digraph(tuple(edges))


def graph_tsv(g: Digraph) -> str:
    rows = []
    for e in g.edges:
        cols = [e.src, e.dst, e.label]
        if e.weight is not None:
            cols.append(str(e.weight))
        rows.append("\t".join(cols))
    return "\n".join(rows) + "\n"


def layered_levels(g: Digraph, s: str, t: str) -> dict:
    """Level assignment of a layered digraph: s at level 0, every edge goes up
    exactly one level, t alone at the top.  Raises NotLayered otherwise."""
    verts = set(g.vertices) | {s, t}
    level = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for e in g.out_edges(u):
                if e.dst not in level:
                    level[e.dst] = level[u] + 1
                    nxt.append(e.dst)
        frontier = nxt
    if t not in level:
        # no s-t connection at all; treat the empty instance as one layer high
        level[t] = max(level.values(), default=0) + 1
    top = level[t]
    for e in g.edges:
        if e.src not in level or level.get(e.dst) != level[e.src] + 1:
            raise NotLayered(f"edge {e.src}->{e.dst} does not step one layer up")
    if any(level[v] == 0 and v != s for v in level):
        raise NotLayered("a vertex other than s sits at the bottom level")
    if any(level[v] == top and v != t for v in level):
        raise NotLayered("a vertex other than t sits at the top level")
    for v in verts - set(level):
        raise NotLayered(f"vertex {v} is disconnected from s")
    return level


# ---------------------------------------------------------------------------
# Instance generators (deterministic under a fixed seed)


def complete_digraph(n: int, weights: bool = False, seed: int = 0) -> Digraph:
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(n)]
    edges = []
    for u in names:
        for v in names:
            if u != v:
                w = rng.randint(0, 9) if weights else None
                edges.append(Edge(u, v, "E", w))
    return Digraph(tuple(edges))


def layered_digraph(width: int, layers: int, full: bool = True, seed: int = 0,
                    keep_prob: float = 0.7) -> Digraph:
    """(width, layers)-layered graph with s below the bottom layer and t above
    the top; `full` keeps every between-layer edge, otherwise a seeded subset."""
    rng = random.Random(seed)
    cols = [["s"]] + [
        [f"l{j}_{i}" for i in range(width)] for j in range(1, layers + 1)
    ] + [["t"]]
    edges = []
    for a, b in zip(cols, cols[1:]):
        for u in a:
            for v in b:
                if full or rng.random() < keep_prob:
                    edges.append(Edge(u, v))
    return Digraph(tuple(edges), extra_vertices=("s", "t"))


def random_sparse_digraph(n: int, m: int, seed: int = 0, weights: bool = True) -> Digraph:
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(n)]
    candidates = [(u, v) for u in names for v in names if u != v]
    m = min(m, len(candidates))
    chosen = rng.sample(candidates, m)
    edges = tuple(
        Edge(u, v, "E", rng.randint(0, 9) if weights else None)
        for u, v in sorted(chosen)
    )
    return Digraph(edges, extra_vertices=tuple(names))
