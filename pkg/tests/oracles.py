"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written from scratch against the textbook
definition (Dijkstra, BFS, brute-force substitution, sentential-form search)
and must not call into the code paths it validates.
"""

import heapq
import itertools

INF = float("inf")


def dijkstra(weighted_edges, s, t):
    """Shortest path weight from s to t; INF when unreachable.  Edges are
    (u, v, w) triples; paths must use at least one edge (s == t included)."""
    adj = {}
    for u, v, w in weighted_edges:
        adj.setdefault(u, []).append((v, w))
    dist = {}
    heap = [(w, v) for v, w in adj.get(s, [])]
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if u in dist:
            continue
        dist[u] = d
        for v, w in adj.get(u, []):
            if v not in dist:
                heapq.heappush(heap, (d + w, v))
    return dist.get(t, INF)


def bfs_reachable(pairs, s, t):
    """True iff a path with >= 1 edge runs from s to t."""
    adj = {}
    for u, v in pairs:
        adj.setdefault(u, []).append(v)
    seen = set()
    stack = list(adj.get(s, []))
    while stack:
        v = stack.pop()
        if v == t:
            return True
        if v not in seen:
            seen.add(v)
            stack.extend(adj.get(v, []))
    return False


def simple_paths(pairs, s, t):
    """All simple s-t paths as edge lists (s == t yields simple cycles)."""
    adj = {}
    for u, v in pairs:
        adj.setdefault(u, []).append(v)
    out = []

    def walk(u, visited, path):
        for v in adj.get(u, []):
            if v == t:
                out.append(path + [(u, v)])
            elif v not in visited:
                walk(v, visited | {v}, path + [(u, v)])

    walk(s, {s}, [])
    return out


def ico_trace(program, db, spec, rounds):
    """Naive-evaluation iterates computed by brute substitution: for every
    rule, try every assignment of its variables to the active domain.  Returns
    [x0, x1, ..., x_rounds] as dicts over IDB ground atoms."""
    from provcirc.datalog import Atom, Var

    domain = sorted(
        {c for a in db.facts for c in a.args}
        | {t for r in program.rules for a in (r.head, *r.body)
           for t in a.args if not isinstance(t, Var)}
    )
    idb_facts = set()
    groundings = []
    for rule in program.rules:
        vs = sorted({v for a in (rule.head, *rule.body) for v in a.variables()},
                    key=lambda v: v.name)
        for combo in itertools.product(domain, repeat=len(vs)):
            sub = dict(zip(vs, combo))
            inst = lambda a: Atom(a.pred, tuple(
                sub[x] if isinstance(x, Var) else x for x in a.args))
            head = inst(rule.head)
            body = [inst(a) for a in rule.body]
            groundings.append((head, body))
            idb_facts.add(head)

    def value(atom, val):
        if atom.pred in program.idbs:
            return val.get(atom, spec.zero)
        tag = db.facts.get(atom)
        if tag is None:
            return spec.zero
        return tag.weight if tag.weight is not None else spec.one

    trace = [{f: spec.zero for f in idb_facts}]
    for _ in range(rounds):
        prev = trace[-1]
        new = {f: spec.zero for f in idb_facts}
        for head, body in groundings:
            prod = spec.one
            for atom in body:
                prod = spec.mul(prod, value(atom, prev))
            new[head] = spec.add(new[head], prod)
        trace.append(new)
    return trace


def cq_holds(cq, facts, binding):
    """Brute-force CQ evaluation: the head terms are pinned by `binding`
    (a tuple aligned with cq.head) and body variables range over the domain."""
    from provcirc.datalog import Var

    domain = sorted({c for a in facts for c in a.args})
    fact_set = set(facts)
    fixed = {}
    for h, c in zip(cq.head, binding):
        if isinstance(h, Var):
            if fixed.get(h, c) != c:
                return False
            fixed[h] = c
        elif h != c:
            return False
    free = sorted(
        {v for a in cq.atoms for v in a.variables() if v not in fixed},
        key=lambda v: v.name,
    )
    from provcirc.datalog import Atom

    for combo in itertools.product(domain, repeat=len(free)):
        sub = {**fixed, **dict(zip(free, combo))}
        if all(
            Atom(a.pred, tuple(sub[x] if isinstance(x, Var) else x for x in a.args))
            in fact_set
            for a in cq.atoms
        ):
            return True
    return False


def grammar_words(grammar, max_len):
    """Words of length <= max_len by sentential-form search over the raw
    productions.  Forms are pruned once they cannot shrink below the cap,
    assuming every nonterminal needs at least zero terminals (nullable-safe
    but exponential; test grammars are tiny)."""
    nts = grammar.nonterminals
    words = set()
    seen = set()
    stack = [(grammar.start,)]
    while stack:
        form = stack.pop()
        if form in seen or len(form) > 2 * max_len + 2:
            continue
        seen.add(form)
        terminal_count = sum(1 for s in form if s not in nts)
        if terminal_count > max_len:
            continue
        idx = next((i for i, s in enumerate(form) if s in nts), None)
        if idx is None:
            words.add(form)
            continue
        for head, body in grammar.productions:
            if head == form[idx]:
                stack.append(form[:idx] + body + form[idx + 1:])
    return words
