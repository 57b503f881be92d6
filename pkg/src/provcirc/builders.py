"""Circuit constructions: each maps (program or graph, target fact) to a
circuit whose absorption-reduced polynomial equals the tight-proof-tree
antichain of the fact.

All builders are deterministic: operand lists are sorted before balanced
summation, and hash-consing keeps repeated stages cheap (a stage past the
fixpoint re-derives identical gates and costs only cache hits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import Circuit, CircuitBuilder, metrics
from .datalog import LINEAR, Atom, Database, Program, ground
from .graphs import Digraph, layered_levels


@dataclass(frozen=True)
class BuilderReport:
    circuit: Circuit
    strategy: str
    size: int
    depth: int
    stages: int

    @staticmethod
    def of(strategy: str, circuit: Circuit, stages: int) -> "BuilderReport":
        m = metrics(circuit)
        return BuilderReport(circuit, strategy, m.size, m.depth, stages)


def _require_idb_fact(program: Program, fact: Atom):
    if fact.pred not in program.idbs:
        raise ValueError(f"{fact} is not a fact of an IDB predicate")
    if not fact.is_ground():
        raise ValueError(f"target fact must be ground: {fact}")


# ---------------------------------------------------------------------------
# Layered naive evaluation (also the UCQ sum-of-products circuit for k=1)


def build_layered_naive(program: Program, db: Database, fact: Atom, k: int) -> Circuit:
    """k unrolled immediate-consequence layers.  Layer j computes each IDB fact
    as the sum over its grounded rules of the product of layer j-1 body gates;
    EDB body atoms are input gates.  k below the number of IDB facts yields an
    under-approximation, which the caller owns."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _require_idb_fact(program, fact)
    grounded = ground(program, db)
    by_head = grounded.rules_by_head()
    b = CircuitBuilder()
    zero = b.zero()

    prev: dict = {}
    for _ in range(k):
        cur = {}
        for head in grounded.idb_facts:
            terms = []
            for gr in by_head[head]:
                factors = []
                for atom in gr.body:
                    if atom.pred in program.idbs:
                        factors.append(prev.get(atom, zero))
                    else:
                        factors.append(b.input(db.facts[atom].var))
                terms.append(b.mul_many(factors))
            gate = b.add_many(terms)
            if gate != zero:
                cur[head] = gate
        if cur == prev:
            break  # fixpoint reached; further layers are identical
        prev = cur
    return b.finish(prev.get(fact, zero))


# ---------------------------------------------------------------------------
# The layered graph read directly as a circuit


def build_layered_graph(graph: Digraph, s: str, t: str) -> Circuit:
    """st-connectivity circuit of a layered graph: a sum gate per vertex over
    its incoming edges, a product gate per edge with the edge variable.
    Size is linear in the edge count; depth is the layer count plus the
    logarithm of the width."""
    if s == t:
        b = CircuitBuilder()
        return b.finish(b.one())
    levels = layered_levels(graph, s, t)
    b = CircuitBuilder()
    order = sorted(levels, key=lambda v: (levels[v], v))
    gate: dict = {}
    for v in order:
        if v == s:
            continue
        incoming = []
        for e in sorted(graph.in_edges(v), key=lambda e: (e.src, e.label)):
            if e.src == s:
                incoming.append(b.input(e.var))
            else:
                incoming.append(b.mul(gate[e.src], b.input(e.var)))
        gate[v] = b.add_many(incoming)
    return b.finish(gate.get(t, b.zero()))


# ---------------------------------------------------------------------------
# Bellman-Ford unrolled to gates


def build_bellman_ford(graph: Digraph, s: str, t: str) -> Circuit:
    """n-1 relaxation layers: layer k holds, per vertex j, the sum over walks
    of length at most k from s to j of their edge products.  Over an absorptive
    semiring walk monomials are absorbed by the paths inside them, so the
    produced polynomial reduces to the s-t path antichain."""
    if s == t:
        b = CircuitBuilder()
        return b.finish(b.one())
    vertices = sorted(set(graph.vertices) | {s, t})
    b = CircuitBuilder()
    zero = b.zero()
    in_edges = {v: sorted(graph.in_edges(v), key=lambda e: (e.src, e.label)) for v in vertices}

    f = {
        v: b.add_many([b.input(e.var) for e in in_edges[v] if e.src == s])
        for v in vertices
    }
    n = len(vertices)
    for _ in range(2, n):
        f = {
            v: b.add_many(
                [f[v]] + [b.mul(f[e.src], b.input(e.var)) for e in in_edges[v]]
            )
            for v in vertices
        }
    return b.finish(f.get(t, zero))


# ---------------------------------------------------------------------------
# Repeated squaring of the adjacency matrix


def build_repeated_squaring(graph: Digraph, s: str, t: str) -> Circuit:
    """ceil(log2 n) squarings of the matrix with 1 on the diagonal, the edge
    variable on edges, 0 elsewhere; the (s,t) entry of the result.  Self-loops
    are ignored: the diagonal stays 1, which absorbs them."""
    vertices = sorted(set(graph.vertices) | {s, t})
    b = CircuitBuilder()
    zero = b.zero()
    m: dict = {}
    for v in vertices:
        m[(v, v)] = b.one()
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.label)):
        if e.src == e.dst:
            continue
        key = (e.src, e.dst)
        gate = b.input(e.var)
        m[key] = b.add(m[key], gate) if key in m else gate

    n = len(vertices)
    rounds = (n - 1).bit_length() if n > 1 else 0
    for _ in range(rounds):
        nxt = {}
        for i in vertices:
            for j in vertices:
                terms = []
                for k in vertices:
                    a = m.get((i, k))
                    c = m.get((k, j))
                    if a is not None and c is not None:
                        terms.append(b.mul(a, c))
                gate = b.add_many(terms)
                if gate != zero:
                    nxt[(i, j)] = gate
        m = nxt
    return b.finish(m.get((s, t), zero))


# ---------------------------------------------------------------------------
# Finite-language chain programs: source-anchored word matching


class NotFinite(ValueError):
    pass


class NotLeftLinear(ValueError):
    pass


def build_magic_bounded(program: Program, db: Database, fact: Atom) -> Circuit:
    """Source-bound circuit for a left-linear chain program whose language is
    finite.  The IDBs become effectively unary: per accepted word, one layer
    per letter tracks the vertices reachable from the source along that
    prefix.  Layer count is the maximum word length, so depth stays
    logarithmic and size linear in the input."""
    # lazy import: grammar depends on builders for the product-graph circuits
    from . import grammar as _grammar
    from .datalog import LEFT_LINEAR

    _require_idb_fact(program, fact)
    if fact.arity != 2:
        raise ValueError("target fact of a chain program must be binary")
    g = _grammar.program_to_grammar(program)
    if not _grammar.is_finite(g):
        raise NotFinite(f"the language of {fact.pred} is infinite")
    if LEFT_LINEAR not in program.classification:
        raise NotLeftLinear("program is not left-linear chain Datalog")
    words = _grammar.enumerate_words(g, start=fact.pred)

    s, t = fact.args
    edges_by_label: dict = {}
    for atom in db.facts:
        if atom.arity == 2 and atom.pred in program.edbs:
            edges_by_label.setdefault(atom.pred, []).append(atom)
    for label in edges_by_label:
        edges_by_label[label].sort(key=lambda a: a.args)

    b = CircuitBuilder()
    zero = b.zero()
    word_gates = []
    for word in words:
        cur = {s: b.one()}
        for letter in word:
            nxt: dict = {}
            terms: dict = {}
            for atom in edges_by_label.get(letter, ()):
                u, v = atom.args
                if u in cur:
                    terms.setdefault(v, []).append(
                        b.mul(cur[u], b.input(db.facts[atom].var))
                    )
            for v in sorted(terms):
                nxt[v] = b.add_many(terms[v])
            cur = nxt
            if not cur:
                break
        word_gates.append(cur.get(t, zero))
    return b.finish(b.add_many(word_gates))


# ---------------------------------------------------------------------------
# Staged construction for programs with small proof trees


def default_uvg_stages(program: Program, n_idb_facts: int) -> int:
    """Stage budget that is always sound at this scale: for linear programs the
    tight-tree size is at most N*(b+1)+1, giving the log-4/3 budget; otherwise
    N stages suffice because every stage subsumes one naive-evaluation step."""
    n = n_idb_facts
    if n == 0:
        return 0
    if LINEAR in program.classification:
        b = max(len(r.body) for r in program.rules)
        bound = n * (b + 1) + 1
        return max(1, min(n, math.ceil(math.log(bound) / math.log(4 / 3))))
    return n


def build_uvg(
    program: Program, db: Database, fact: Atom, stages: int | None = None
) -> Circuit:
    """Staged low-depth construction: gates track a graph over IDB-fact ids
    plus a root id, where the edge (id_b, id_a) holds the derivations of fact
    a having a single open leaf b (the root id marks complete derivations).
    Each stage applies every grounded rule once, first fully closed, then with
    one IDB occurrence left open, and finishes with one squaring step of the
    id graph.  The output is the root-to-target entry of the final stage."""
    _require_idb_fact(program, fact)
    grounded = ground(program, db)
    derivable = set(grounded.idb_facts)
    rules = []
    for gr in grounded.rules:
        idb_body = tuple(a for a in gr.body if a.pred in program.idbs)
        if any(a not in derivable for a in idb_body):
            continue  # a body fact with no deriving rule is always zero
        edb_vars = tuple(db.facts[a].var for a in gr.body if a.pred not in program.idbs)
        rules.append((gr.head, idb_body, edb_vars))

    if stages is None:
        stages = default_uvg_stages(program, len(grounded.idb_facts))

    b = CircuitBuilder()
    zero = b.zero()
    root = None  # id of "no open leaf"

    def id_key(x):
        return ("", ()) if x is None else (x.pred, x.args)

    g_prev: dict = {}
    for _ in range(stages):
        # complete derivations, one rule application deep on the previous stage
        g1_root: dict = {}
        terms_root: dict = {}
        for head, idb_body, edb_vars in rules:
            factors = []
            ok = True
            for beta in idb_body:
                gate = g_prev.get((root, beta))
                if gate is None:
                    ok = False
                    break
                factors.append(gate)
            if not ok:
                continue
            factors.extend(b.input(v) for v in edb_vars)
            terms_root.setdefault(head, []).append(b.mul_many(factors))
        for head in sorted(terms_root, key=id_key):
            gate = b.add_many(terms_root[head])
            if gate != zero:
                g1_root[head] = gate

        # one IDB occurrence left open, the rest closed at this stage
        terms_pair: dict = {}
        for head, idb_body, edb_vars in rules:
            for p, delta in enumerate(idb_body):
                factors = []
                ok = True
                for q, beta in enumerate(idb_body):
                    if q == p:
                        continue
                    gate = g1_root.get(beta)
                    if gate is None:
                        ok = False
                        break
                    factors.append(gate)
                if not ok:
                    continue
                factors.extend(b.input(v) for v in edb_vars)
                terms_pair.setdefault((delta, head), []).append(b.mul_many(factors))

        g1: dict = {(root, h): g for h, g in g1_root.items()}
        for key in sorted(terms_pair, key=lambda k: (id_key(k[0]), id_key(k[1]))):
            gate = b.add_many(terms_pair[key])
            if gate != zero:
                g1[key] = gate

        # accumulate, then one squaring step of the id graph
        g2: dict = {}
        for key in sorted(set(g_prev) | set(g1), key=lambda k: (id_key(k[0]), id_key(k[1]))):
            gate = b.add(g_prev.get(key, zero), g1.get(key, zero))
            if gate != zero:
                g2[key] = gate

        out_of: dict = {}
        into: dict = {}
        for (a, c), gate in g2.items():
            out_of.setdefault(a, []).append(c)
            into.setdefault(c, []).append(a)
        comp_terms: dict = {}
        for mid in sorted(into.keys() & out_of.keys(), key=id_key):
            for a in sorted(into[mid], key=id_key):
                for c in sorted(out_of[mid], key=id_key):
                    comp_terms.setdefault((a, c), []).append(
                        b.mul(g2[(a, mid)], g2[(mid, c)])
                    )
        g_new: dict = {}
        for key in sorted(set(g2) | set(comp_terms), key=lambda k: (id_key(k[0]), id_key(k[1]))):
            base = [g2[key]] if key in g2 else []
            gate = b.add_many(base + comp_terms.get(key, []))
            if gate != zero:
                g_new[key] = gate

        if g_new == g_prev:
            break  # stages are a deterministic function of the previous stage
        g_prev = g_new

    return b.finish(g_prev.get((root, fact), zero))


# ---------------------------------------------------------------------------
# Strategy dispatch (shared by the CLI and cross-builder tests)

GRAPH_STRATEGIES = ("layered-graph", "bellman-ford", "squaring")
PROGRAM_STRATEGIES = ("naive", "magic", "uvg")
STRATEGIES = PROGRAM_STRATEGIES + GRAPH_STRATEGIES


def build(
    strategy: str,
    program: Program,
    db: Database,
    fact: Atom,
    k: int | None = None,
    stages: int | None = None,
) -> BuilderReport:
    """Run one strategy against a program instance.  Graph strategies require
    a single binary EDB, which is read as the edge relation."""
    from .graphs import from_database

    _require_idb_fact(program, fact)
    if strategy == "naive":
        grounded_k = k if k is not None else max(1, len(ground(program, db).idb_facts))
        return BuilderReport.of(
            strategy, build_layered_naive(program, db, fact, grounded_k), grounded_k
        )
    if strategy == "uvg":
        n = len(ground(program, db).idb_facts)
        st = stages if stages is not None else default_uvg_stages(program, n)
        return BuilderReport.of(strategy, build_uvg(program, db, fact, st), st)
    if strategy == "magic":
        return BuilderReport.of(strategy, build_magic_bounded(program, db, fact), 0)
    if strategy in GRAPH_STRATEGIES:
        edbs = sorted(program.edbs)
        if len(edbs) != 1 or program.arities[edbs[0]] != 2 or fact.arity != 2:
            raise ValueError(
                f"strategy {strategy} needs one binary edge EDB and a binary target"
            )
        graph = from_database(db, edbs[0])
        s, t = fact.args
        if strategy == "layered-graph":
            c = build_layered_graph(graph, s, t)
            stages_out = max(layered_levels(graph, s, t).values(), default=0)
        elif strategy == "bellman-ford":
            c = build_bellman_ford(graph, s, t)
            stages_out = max(0, len(set(graph.vertices) | {s, t}) - 1)
        else:
            c = build_repeated_squaring(graph, s, t)
            n = len(set(graph.vertices) | {s, t})
            stages_out = (n - 1).bit_length() if n > 1 else 0
        return BuilderReport.of(strategy, c, stages_out)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
