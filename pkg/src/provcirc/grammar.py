"""Context-free grammars as the mirror of chain Datalog: correspondence in
both directions, finiteness (which decides boundedness for chain programs),
DFA construction for the regular fragment, product-graph query circuits,
pumping decompositions, and the reduction gadget generators.

Words are tuples of terminal symbols throughout; terminals are EDB predicate
names, so a symbol may be longer than one character.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import builders as _builders
from .circuit import Circuit, CircuitBuilder, inline
from .datalog import (
    CHAIN,
    CQ,
    LINEAR,
    Atom,
    Database,
    ParseError,
    Program,
    Rule,
    Var,
    expansions_by_count,
)
from .graphs import Digraph, Edge, layered_levels
from .provenance import find_homomorphism
from .semiring import SemiringSpec

Word = tuple


class NotChain(ValueError):
    pass


class NotRegularForm(ValueError):
    pass


class EpsilonProduction(ValueError):
    pass


class FiniteLanguage(ValueError):
    pass


class UnknownLabel(ValueError):
    pass


class InvalidDecomposition(ValueError):
    pass


class VEmpty(InvalidDecomposition):
    """The pumped left segment is empty; fall back to the regular reduction."""


class DisconnectedCQ(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    nonterminals: frozenset
    terminals: frozenset
    productions: tuple  # ((head, (symbol, ...)), ...); empty body is epsilon
    start: str

    def __post_init__(self):
        if self.start not in self.nonterminals:
            raise ValueError(f"start symbol {self.start} is not a nonterminal")
        for head, body in self.productions:
            if head not in self.nonterminals:
                raise ValueError(f"production head {head} is not a nonterminal")
            for sym in body:
                if sym not in self.nonterminals and sym not in self.terminals:
                    raise ValueError(f"unknown symbol {sym}")

    def bodies(self, nt: str) -> list:
        return [body for head, body in self.productions if head == nt]


def parse_grammar(text: str) -> Grammar:
    """One production group per line, ``S -> a S b | a b``; ``@start S``
    overrides the default start (the first head); ``eps`` is the empty word."""
    prods = []
    heads = []
    start = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@start"):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("@start expects one symbol", line_no)
            start = parts[1]
            continue
        if "->" not in line:
            raise ParseError("production needs '->'", line_no)
        head, rhs = line.split("->", 1)
        head = head.strip()
        if not head:
            raise ParseError("empty production head", line_no)
        heads.append(head)
        for alt in rhs.split("|"):
            syms = alt.split()
            if not syms:
                raise ParseError("empty alternative; write 'eps' for the empty word", line_no)
            if syms == ["eps"]:
                prods.append((head, ()))
            else:
                prods.append((head, tuple(syms)))
    if not prods:
        raise ParseError("grammar has no productions", 1)
    nts = frozenset(heads)
    terms = frozenset(s for _, body in prods for s in body if s not in nts)
    return Grammar(nts, terms, tuple(prods), start if start is not None else heads[0])


def grammar_text(g: Grammar) -> str:
    lines = [f"@start {g.start}"]
    for head, body in g.productions:
        lines.append(f"{head} -> {' '.join(body) if body else 'eps'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Chain Datalog <-> CFG


def program_to_grammar(program: Program) -> Grammar:
    """Read each rule as a production by dropping the variables."""
    if CHAIN not in program.classification:
        raise NotChain("program is not chain Datalog")
    prods = tuple(
        (r.head.pred, tuple(a.pred for a in r.body)) for r in program.rules
    )
    return Grammar(program.idbs, program.edbs, prods, program.target)


def grammar_to_program(g: Grammar) -> Program:
    """Chain program whose expansions read left-to-right are the derivations.
    Grammars deriving the empty word have no chain counterpart."""
    if _nullable_set(g):
        if () in _language_samples(g, 0):
            raise EpsilonProduction("the grammar derives the empty word")
        g = _eliminate_epsilon(g)
    rules = []
    for head, body in g.productions:
        vars_ = [Var("x")] + [Var(f"z{i}") for i in range(1, len(body))] + [Var("y")]
        atoms = tuple(
            Atom(sym, (vars_[i], vars_[i + 1])) for i, sym in enumerate(body)
        )
        rules.append(Rule(Atom(head, (Var("x"), Var("y"))), atoms))
    return Program(tuple(rules), g.start)


def _language_samples(g: Grammar, max_len: int) -> set:
    """Words of length <= max_len derivable from the start symbol (bruteBFS)."""
    out = set()
    seen = set()
    frontier = [(g.start,)]
    while frontier:
        form = frontier.pop()
        if form in seen:
            continue
        seen.add(form)
        if len(form) > max(max_len, 1) + sum(1 for s in form if s in g.nonterminals):
            continue
        idx = next((i for i, s in enumerate(form) if s in g.nonterminals), None)
        if idx is None:
            if len(form) <= max_len:
                out.add(form)
            continue
        for body in g.bodies(form[idx]):
            frontier.append(form[:idx] + body + form[idx + 1:])
    return out


def _nullable_set(g: Grammar) -> set:
    nullable = set()
    changed = True
    while changed:
        changed = False
        for head, body in g.productions:
            if head not in nullable and all(s in nullable for s in body):
                nullable.add(head)
                changed = True
    return nullable


def _eliminate_epsilon(g: Grammar) -> Grammar:
    nullable = _nullable_set(g)
    prods = []
    for head, body in g.productions:
        optional = [i for i, s in enumerate(body) if s in nullable]
        for mask in range(1 << len(optional)):
            drop = {optional[i] for i in range(len(optional)) if mask >> i & 1}
            new = tuple(s for i, s in enumerate(body) if i not in drop)
            if new and (head, new) not in prods:
                prods.append((head, new))
    return replace(g, productions=tuple(prods))


# ---------------------------------------------------------------------------
# Chomsky normal form and CYK


@dataclass(frozen=True)
class Cnf:
    start: str
    term: dict = field(default_factory=dict)  # NT -> sorted tuple of terminals
    bins: dict = field(default_factory=dict)  # NT -> sorted tuple of (NT, NT)
    nullable_start: bool = False

    @property
    def nonterminals(self) -> list:
        return sorted(set(self.term) | set(self.bins))


def to_cnf(g: Grammar) -> Cnf:
    nullable = _nullable_set(g)
    nullable_start = g.start in nullable
    if nullable:
        g = _eliminate_epsilon(g)

    # unit closure
    unit = {nt: {nt} for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for head, body in g.productions:
            if len(body) == 1 and body[0] in g.nonterminals:
                for b in unit[body[0]]:
                    if b not in unit[head]:
                        unit[head].add(b)
                        changed = True
    prods = []
    for head in sorted(g.nonterminals):
        for via in sorted(unit[head]):
            for body in g.bodies(via):
                if len(body) == 1 and body[0] in g.nonterminals:
                    continue
                if body and (head, body) not in prods:
                    prods.append((head, body))

    # drop non-productive and unreachable symbols
    productive = set()
    changed = True
    while changed:
        changed = False
        for head, body in prods:
            if head not in productive and all(
                s in g.terminals or s in productive for s in body
            ):
                productive.add(head)
                changed = True
    prods = [
        (h, b) for h, b in prods
        if h in productive and all(s in g.terminals or s in productive for s in b)
    ]
    reachable = {g.start}
    changed = True
    while changed:
        changed = False
        for head, body in prods:
            if head in reachable:
                for s in body:
                    if s in productive and s not in reachable:
                        reachable.add(s)
                        changed = True
    prods = [(h, b) for h, b in prods if h in reachable]

    term: dict = {}
    bins: dict = {}

    def wrap(sym: str) -> str:
        if sym not in g.terminals:
            return sym
        name = f"<{sym}>"
        term.setdefault(name, set()).add(sym)
        return name

    counter = 0
    for head, body in prods:
        if len(body) == 1:
            term.setdefault(head, set()).add(body[0])
            continue
        syms = [wrap(s) for s in body]
        while len(syms) > 2:
            counter += 1
            fresh = f"{head};{counter}"
            bins.setdefault(fresh, set()).add((syms[-2], syms[-1]))
            syms = syms[:-2] + [fresh]
        bins.setdefault(head, set()).add((syms[0], syms[1]))

    return Cnf(
        g.start,
        {nt: tuple(sorted(ts)) for nt, ts in term.items()},
        {nt: tuple(sorted(bs)) for nt, bs in bins.items()},
        nullable_start,
    )


def cyk(cnf: Cnf, word: Word) -> bool:
    """Membership of the word in the CNF language (epsilon handled separately)."""
    n = len(word)
    if n == 0:
        return cnf.nullable_start
    table = [[set() for _ in range(n + 1)] for _ in range(n)]
    for i, a in enumerate(word):
        table[i][i + 1] = {nt for nt, ts in cnf.term.items() if a in ts}
    for span in range(2, n + 1):
        for i in range(n - span + 1):
            j = i + span
            cell = table[i][j]
            for mid in range(i + 1, j):
                left, right = table[i][mid], table[mid][j]
                if not left or not right:
                    continue
                for nt, bs in cnf.bins.items():
                    if nt in cell:
                        continue
                    if any(b in left and c in right for b, c in bs):
                        cell.add(nt)
    return cnf.start in table[0][n]


def accepts(g: Grammar, word: Word) -> bool:
    return cyk(to_cnf(g), word)


def is_finite(g: Grammar) -> bool:
    """Finiteness of the language: after normalization (epsilon and unit
    productions removed, useless symbols dropped), the language is finite iff
    the nonterminal dependency digraph is acyclic."""
    cnf = to_cnf(g)
    deps = {nt: set() for nt in cnf.nonterminals}
    for nt, bs in cnf.bins.items():
        for b, c in bs:
            deps[nt].add(b)
            deps[nt].add(c)
    state: dict = {}  # 1 in-progress, 2 done

    def cyclic(nt):
        state[nt] = 1
        for d in deps.get(nt, ()):
            if state.get(d) == 1 or (state.get(d) is None and cyclic(d)):
                return True
        state[nt] = 2
        return False

    return not any(cyclic(nt) for nt in cnf.nonterminals if nt not in state)


def enumerate_words(g: Grammar, start: str | None = None, max_words: int = 100_000) -> list:
    """All words of a finite language, sorted by (length, word)."""
    if start is not None:
        g = replace(g, start=start)
    if not is_finite(g):
        raise FiniteLanguage(f"the language of {g.start} is infinite")
    cnf = to_cnf(g)
    memo: dict = {}

    def words(nt: str) -> set:
        if nt in memo:
            return memo[nt]
        out = {(a,) for a in cnf.term.get(nt, ())}
        for b, c in cnf.bins.get(nt, ()):
            for wb in words(b):
                for wc in words(c):
                    out.add(wb + wc)
        if len(out) > max_words:
            raise ValueError(f"more than {max_words} words for {nt}")
        memo[nt] = out
        return out

    result = words(g.start) if (g.start in cnf.term or g.start in cnf.bins) else set()
    if cnf.nullable_start:
        result = result | {()}
    return sorted(result, key=lambda w: (len(w), w))


# ---------------------------------------------------------------------------
# DFA for the regular (left-linear) fragment


@dataclass(frozen=True)
class Dfa:
    states: tuple
    alphabet: tuple
    transitions: dict  # (state, symbol) -> state, total
    start: str
    accepting: frozenset

    def run(self, word: Word, state: str | None = None) -> str:
        q = self.start if state is None else state
        for a in word:
            q = self.transitions[(q, a)]
        return q

    def accepts(self, word: Word) -> bool:
        return self.run(word) in self.accepting


def is_left_linear_grammar(g: Grammar) -> bool:
    for _, body in g.productions:
        if any(s in g.nonterminals for s in body[1:]):
            return False
    return True


def to_dfa(g: Grammar) -> Dfa:
    """Subset-construction DFA for a left-linear grammar, dead state included.

    The intermediate NFA runs derivations bottom-up: completing the word of a
    production for A lands in state A, so the accepted language of state A is
    the language derived from A, and the start symbol is the accepting state.
    """
    if not is_left_linear_grammar(g):
        raise NotRegularForm("grammar is not left-linear")
    edges: dict = {}
    eps: dict = {}
    fresh = 0
    for head, body in g.productions:
        if body and body[0] in g.nonterminals:
            src, tail = body[0], body[1:]
        else:
            src, tail = "q0", body
        if not tail:
            eps.setdefault(src, set()).add(head)
            continue
        cur = src
        for sym in tail[:-1]:
            fresh += 1
            nxt = f"#{fresh}"
            edges.setdefault((cur, sym), set()).add(nxt)
            cur = nxt
        edges.setdefault((cur, tail[-1]), set()).add(head)

    def closure(states: frozenset) -> frozenset:
        out = set(states)
        stack = list(states)
        while stack:
            for nxt in eps.get(stack.pop(), ()):
                if nxt not in out:
                    out.add(nxt)
                    stack.append(nxt)
        return frozenset(out)

    alphabet = tuple(sorted(g.terminals))
    start = closure(frozenset({"q0"}))
    names = {start: "d0"}
    order = [start]
    transitions = {}
    i = 0
    while i < len(order):
        cur = order[i]
        i += 1
        for a in alphabet:
            nxt = closure(
                frozenset(x for q in cur for x in edges.get((q, a), ()))
            )
            if nxt not in names:
                names[nxt] = f"d{len(names)}"
                order.append(nxt)
            transitions[(names[cur], a)] = names[nxt]
    accepting = frozenset(names[sub] for sub in order if g.start in sub)
    return Dfa(
        tuple(names[sub] for sub in order),
        alphabet,
        transitions,
        names[start],
        accepting,
    )


# ---------------------------------------------------------------------------
# Product graph and RPQ circuits


def product_graph(graph: Digraph, dfa: Dfa):
    """Synchronous product: vertex (v,q); an edge per (graph edge, automaton
    transition on its label).  Product edges keep the provenance variable of
    the edge they project to, which is exactly the reduction's rewiring rule."""
    for label in graph.labels:
        if label not in dfa.alphabet:
            raise UnknownLabel(f"edge label {label} is not in the automaton alphabet")
    edges = []
    projection = {}
    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.label)):
        for q in dfa.states:
            q2 = dfa.transitions[(q, e.label)]
            pe = Edge(f"{e.src}@{q}", f"{e.dst}@{q2}", e.label, e.weight, var_id=e.var)
            edges.append(pe)
            projection[pe] = e
    vertices = tuple(sorted(f"{v}@{q}" for v in graph.vertices for q in dfa.states))
    return Digraph(tuple(edges), extra_vertices=vertices), projection


def rpq_via_tc(
    graph: Digraph, g: Grammar, s: str, t: str, strategy: str = "bellman-ford"
) -> Circuit:
    """Sum over accept states of a transitive-closure circuit on the product
    graph from (s, start) to (t, accept), inputs rewired to original edges."""
    dfa = to_dfa(g)
    prod, _ = product_graph(graph, dfa)
    src = f"{s}@{dfa.start}"
    targets = [f"{t}@{q}" for q in sorted(dfa.accepting)]

    fwd = _closure_from(prod, {src}, forward=True)
    bwd = _closure_from(prod, set(targets), forward=False)
    kept = tuple(e for e in prod.edges if e.src in fwd and e.dst in bwd)
    keep_vertices = {src, *targets}
    for e in kept:
        keep_vertices.add(e.src)
        keep_vertices.add(e.dst)
    pruned = Digraph(kept, extra_vertices=tuple(sorted(keep_vertices)))

    build = {
        "bellman-ford": _builders.build_bellman_ford,
        "squaring": _builders.build_repeated_squaring,
    }.get(strategy)
    if build is None:
        raise ValueError(f"rpq strategy must be bellman-ford or squaring, not {strategy!r}")

    b = CircuitBuilder()
    terms = [inline(b, build(pruned, src, at)) for at in targets]
    return b.finish(b.add_many(terms))


def _closure_from(g: Digraph, seeds: set, forward: bool) -> set:
    seen = set(seeds)
    stack = list(seeds)
    step = {}
    for e in g.edges:
        a, z = (e.src, e.dst) if forward else (e.dst, e.src)
        step.setdefault(a, []).append(z)
    while stack:
        for z in step.get(stack.pop(), ()):
            if z not in seen:
                seen.add(z)
                stack.append(z)
    return seen


# ---------------------------------------------------------------------------
# Pumping decompositions


@dataclass(frozen=True)
class RegularPumping:
    x: Word
    y: Word
    z: Word

    def pumped(self, i: int) -> Word:
        return self.x + self.y * i + self.z


@dataclass(frozen=True)
class CfgPumping:
    u: Word
    v: Word
    w: Word
    x: Word
    y: Word

    def pumped(self, i: int) -> Word:
        return self.u + self.v * i + self.w + self.x * i + self.y


def _shortest_words_from_start(dfa: Dfa) -> dict:
    # BFS with the alphabet sorted yields shortest, lexicographically least words
    out = {dfa.start: ()}
    queue = [dfa.start]
    while queue:
        nxt = []
        for q in queue:
            for a in dfa.alphabet:
                r = dfa.transitions[(q, a)]
                if r not in out:
                    out[r] = out[q] + (a,)
                    nxt.append(r)
        queue = nxt
    return out


def _shortest_word_between(dfa: Dfa, src: str, dst: str, min_len: int = 0) -> Word | None:
    best = {src: ()}
    queue = [src]
    if src == dst and min_len == 0:
        return ()
    while queue:
        nxt = []
        for q in queue:
            for a in dfa.alphabet:
                r = dfa.transitions[(q, a)]
                w = best[q] + (a,)
                if r == dst and len(w) >= min_len:
                    return w
                if r not in best:
                    best[r] = w
                    nxt.append(r)
        queue = nxt
    return None


def find_pumping_regular(g: Grammar) -> RegularPumping:
    """Locate a DFA cycle reachable from the start and co-reachable to an
    accept state: x enters the cycle, y loops, z exits to acceptance."""
    dfa = to_dfa(g)
    from_start = _shortest_words_from_start(dfa)
    candidates = []
    for q in sorted(from_start):
        y = min(
            (
                (a,) + w
                for a in dfa.alphabet
                if (w := _shortest_word_between(dfa, dfa.transitions[(q, a)], q)) is not None
            ),
            key=lambda w: (len(w), w),
            default=None,
        )
        if y is None:
            continue
        z = min(
            (
                w
                for acc in sorted(dfa.accepting)
                if (w := _shortest_word_between(dfa, q, acc)) is not None
            ),
            key=lambda w: (len(w), w),
            default=None,
        )
        if z is None and q in dfa.accepting:
            z = ()
        if z is None:
            continue
        candidates.append(RegularPumping(from_start[q], y, z))
    if not candidates:
        raise FiniteLanguage("no pumpable cycle: the language is finite")
    best = min(candidates, key=lambda d: (len(d.x + d.y + d.z), d.x + d.y + d.z))
    for i in range(5):
        assert dfa.accepts(best.pumped(i)), f"pumping check failed at i={i}"
    return best


def _min_yields(cnf: Cnf) -> dict:
    out: dict = {}
    changed = True
    while changed:
        changed = False
        for nt in cnf.nonterminals:
            cands = [(a,) for a in cnf.term.get(nt, ())]
            for bc, cc in cnf.bins.get(nt, ()):
                if bc in out and cc in out:
                    cands.append(out[bc] + out[cc])
            if cands:
                best = min(cands, key=lambda w: (len(w), w))
                if nt not in out or (len(best), best) < (len(out[nt]), out[nt]):
                    out[nt] = best
                    changed = True
    return out


def _min_contexts(cnf: Cnf, yields: dict) -> dict:
    """Per nonterminal A, a minimal pair (u, y) with start =>* u A y."""
    out = {cnf.start: ((), ())}
    changed = True
    while changed:
        changed = False
        for nt, bs in cnf.bins.items():
            if nt not in out:
                continue
            u, y = out[nt]
            for bc, cc in bs:
                options = []
                if cc in yields:
                    options.append((bc, (u, yields[cc] + y)))
                if bc in yields:
                    options.append((cc, ((u + yields[bc]), y)))
                for child, ctx in options:
                    cur = out.get(child)
                    key = (len(ctx[0]) + len(ctx[1]), ctx)
                    if cur is None or key < (len(cur[0]) + len(cur[1]), cur):
                        out[child] = ctx
                        changed = True
    return out


def find_pumping_cfg(g: Grammar) -> CfgPumping:
    """Self-embedding decomposition from a cycle in the CNF derivation steps:
    descending left adds the right sibling's yield to x, descending right adds
    the left sibling's yield to v.  Prefers a non-empty v when one exists."""
    if is_finite(g):
        raise FiniteLanguage("the language is finite")
    cnf = to_cnf(g)
    yields = _min_yields(cnf)
    contexts = _min_contexts(cnf, yields)

    steps: dict = {}
    for nt, bs in cnf.bins.items():
        for bc, cc in bs:
            if cc in yields:
                steps.setdefault(nt, []).append((bc, (), yields[cc]))
            if bc in yields:
                steps.setdefault(nt, []).append((cc, yields[bc], ()))
    for nt in steps:
        steps[nt].sort(key=lambda s: (s[0], s[1], s[2]))

    candidates = []

    def search(anchor, node, v, x, on_path):
        if len(candidates) > 500:
            return
        for child, v_add, x_add in steps.get(node, ()):
            nv, nx = v + v_add, x_add + x
            if child == anchor:
                if nv or nx:
                    candidates.append((anchor, nv, nx))
            elif child not in on_path:
                search(anchor, child, nv, nx, on_path | {child})

    for anchor in cnf.nonterminals:
        if anchor in contexts and anchor in yields:
            search(anchor, anchor, (), (), frozenset({anchor}))

    decomps = []
    for anchor, v, x in candidates:
        u, y = contexts[anchor]
        decomps.append(CfgPumping(u, v, yields[anchor], x, y))
    if not decomps:
        raise FiniteLanguage("no self-embedding cycle found")

    def rank(d: CfgPumping):
        word = d.u + d.v + d.w + d.x + d.y
        return (0 if d.v else 1, len(word), word, d.v, d.x)

    for d in sorted(decomps, key=rank):
        if all(cyk(cnf, d.pumped(i)) for i in range(4)):
            return d
    raise AssertionError("no candidate decomposition survived the CYK check")

# ---------------------------------------------------------------------------
# Reduction instances: pumping gadgets


@dataclass(frozen=True)
class ExpandedInstance:
    """A reachability instance rewritten for a fixed infinite language: a
    prefix path into s, every original edge replaced by a pumped-segment path
    whose first edge is the designated image of the original edge, and a
    suffix path out of t."""

    graph: Digraph
    s: str
    t: str
    edge_map: dict  # original edge var -> designated expanded edge var

    def assignment(self, spec: SemiringSpec, original: dict) -> dict:
        """Valuation of the expanded edge variables: designated edges take the
        original edge's value, every other edge takes the semiring one."""
        reverse = {v: k for k, v in self.edge_map.items()}
        return {
            e.var: original[reverse[e.var]] if e.var in reverse else spec.one
            for e in self.graph.edges
        }

    def restricted(self, present_original_vars) -> Digraph:
        """Drop designated edges whose original edge is absent (boolean view)."""
        reverse = {v: k for k, v in self.edge_map.items()}
        kept = tuple(
            e
            for e in self.graph.edges
            if e.var not in reverse or reverse[e.var] in present_original_vars
        )
        return Digraph(kept, extra_vertices=self.graph.vertices)


def _expand_instance(graph, s, t, prefix: Word, segment: Word, suffix: Word) -> ExpandedInstance:
    if len({(e.src, e.dst) for e in graph.edges}) != len(graph.edges):
        raise InvalidDecomposition("instance must have at most one edge per vertex pair")
    edges = []
    edge_map = {}

    names = [f"pre{i}" for i in range(len(prefix))] + [s]
    for i, sym in enumerate(prefix):
        edges.append(Edge(names[i], names[i + 1], sym))
    s_bar = names[0]

    for e in sorted(graph.edges, key=lambda e: (e.src, e.dst)):
        mids = [e.src] + [f"{e.src}>{e.dst}~{j}" for j in range(1, len(segment))] + [e.dst]
        for j, sym in enumerate(segment):
            expanded = Edge(mids[j], mids[j + 1], sym, e.weight if j == 0 else None)
            edges.append(expanded)
            if j == 0:
                edge_map[e.var] = expanded.var

    names = [t] + [f"suf{i}" for i in range(1, len(suffix) + 1)]
    for i, sym in enumerate(suffix):
        edges.append(Edge(names[i], names[i + 1], sym))
    t_bar = names[-1]

    return ExpandedInstance(Digraph(tuple(edges)), s_bar, t_bar, edge_map)


def expand_instance_regular(graph: Digraph, s: str, t: str, d: RegularPumping) -> ExpandedInstance:
    """Reachability instance for the pumped regular language: any s̄-t̄ path
    spells x y^k z, so acceptance is exactly original s-t reachability.  Works
    on arbitrary digraphs because the pump count is unconstrained."""
    if not isinstance(d, RegularPumping):
        raise InvalidDecomposition("expected a regular decomposition")
    if not d.y:
        raise InvalidDecomposition("the pumped segment y must be non-empty")
    return _expand_instance(graph, s, t, d.x, d.y, d.z)


def expand_instance_cfg(graph: Digraph, s: str, t: str, d: CfgPumping) -> ExpandedInstance:
    """Reachability instance for a pumped context-free language.  The graph
    must be layered so that every s-t path crosses the same number of edges P:
    the prefix carries u v, each edge carries v, and the suffix carries
    w x^(P+1) y, balancing the v pumps exactly."""
    if not isinstance(d, CfgPumping):
        raise InvalidDecomposition("expected a context-free decomposition")
    if not d.v:
        raise VEmpty("decomposition has an empty v; use the regular reduction")
    levels = layered_levels(graph, s, t)
    pumps = levels[t] + 1
    return _expand_instance(graph, s, t, d.u + d.v, d.v, d.w + d.x * pumps + d.y)


# ---------------------------------------------------------------------------
# Reduction instances: canonical-database gadgets


@dataclass(frozen=True)
class GadgetInstance:
    db: Database
    target: str  # the domain element carrying the reduction's answer fact
    designated: dict  # original edge var -> the gadget fact carrying it

    def facts_for(self, present_original_vars) -> Database:
        """Database with absent edges' designated facts removed (boolean view)."""
        out = Database()
        keep_out = {
            atom for var, atom in self.designated.items()
            if var not in present_original_vars
        }
        for atom, tag in self.db.facts.items():
            if atom not in keep_out:
                out.add(atom, var=tag.var, weight=tag.weight)
        return out


def _check_gadget_cq(cq: CQ, name: str):
    if len(cq.head) != 2 or not all(isinstance(h, Var) for h in cq.head):
        raise DisconnectedCQ(f"{name} must have two designated head variables")
    if cq.head[0] == cq.head[1]:
        raise DisconnectedCQ(f"{name} head variables must be distinct")
    adj: dict = {}
    for atom in cq.atoms:
        vs = atom.variables()
        for v in vs:
            adj.setdefault(v, set()).update(vs)
    if any(h not in adj for h in cq.head):
        raise DisconnectedCQ(f"{name} head variables must occur in its atoms")
    seen = {cq.head[0]}
    stack = [cq.head[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != set(adj):
        raise DisconnectedCQ(f"{name} is not connected")


def expand_instance_cq_gadgets(
    graph: Digraph, s: str, t: str, cx: CQ, cy: CQ, czu: CQ
) -> GadgetInstance:
    """Per-edge canonical databases: cx on edges out of s, cy between layers,
    czu into t.  Head variables bind to the edge endpoints; every other
    variable becomes a fresh constant.  Each gadget's first fact carries the
    original edge variable; the remaining facts evaluate as the constant 1.
    The reduction's answer is the fact of the target IDB at the returned
    element (the head end, i.e. s)."""
    for cq, name in ((cx, "cx"), (cy, "cy"), (czu, "czu")):
        _check_gadget_cq(cq, name)
    levels = layered_levels(graph, s, t)
    if levels[t] < 2:
        raise NotLayered("gadget expansion needs at least one internal layer")
    db = Database()
    designated = {}
    for gid, e in enumerate(sorted(graph.edges, key=lambda e: (e.src, e.dst))):
        cq = cx if e.src == s else czu if e.dst == t else cy
        binding = {cq.head[0]: e.src, cq.head[1]: e.dst}
        for j, atom in enumerate(cq.atoms):
            args = tuple(
                binding.setdefault(a, f"g{gid}:{a.name}") if isinstance(a, Var) else a
                for a in atom.args
            )
            fact = Atom(atom.pred, args)
            if j == 0:
                if fact in db:
                    raise DisconnectedCQ(
                        f"designated fact {fact} collides with another gadget"
                    )
                db.add(fact, var=e.var, weight=e.weight)
                designated[e.var] = fact
            elif fact not in db:
                db.add(fact, var=f"g{gid}#{j}")
    return GadgetInstance(db, s, designated)


# ---------------------------------------------------------------------------
# Boundedness evidence for linear programs


@dataclass(frozen=True)
class WitnessReport:
    status: str  # bounded | unbounded | inconclusive
    bound: int | None = None
    witness: int | None = None

    def __str__(self):
        if self.status == "bounded":
            return f"BoundedEvidence({self.bound})"
        if self.status == "unbounded":
            return f"UnboundedWitness({self.witness})"
        return "Inconclusive"


def check_bounded_witness(
    program: Program, n: int, n_max: int, max_expansions: int = 5000
) -> WitnessReport:
    """Semi-decision for boundedness of a linear program over multiplicatively
    idempotent absorptive semirings: every expansion with more than n recursive
    steps must be subsumed (via a head-preserving homomorphism) by one with at
    most n.  A failure at depth k is a concrete unboundedness witness; blow-up
    of the expansion count is reported as inconclusive, never decided."""
    if LINEAR not in program.classification:
        raise ValueError("witness search needs a linear program")
    groups = expansions_by_count(program, n_max)
    total = sum(len(v) for v in groups.values())
    if total > max_expansions:
        return WitnessReport("inconclusive")
    small = [cq for m in range(n + 1) for cq in groups.get(m, [])]
    for k in range(n + 1, n_max + 1):
        for cq in groups.get(k, []):
            if not any(find_homomorphism(c, cq) is not None for c in small):
                return WitnessReport("unbounded", witness=k)
    return WitnessReport("bounded", bound=n)
