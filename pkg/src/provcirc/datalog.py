"""Datalog core: AST, text parser, program classification, grounding,
naive fixpoint evaluation over a semiring, and CQ expansions.

Surface syntax (one rule per line):

    @target T
    T(x,y) :- E(x,y).
    T(x,y) :- T(x,z), E(z,y).   % comment

Bare identifiers in rules are variables; constants are quoted ('a' or "a").
Database text is TSV: ``predicate <TAB> arg1 .. argk [<TAB> weight]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

from .semiring import Element, SemiringSpec

# Classification flags.
LINEAR = "linear"
MONADIC = "monadic"
CHAIN = "chain"
CONNECTED = "connected"
LEFT_LINEAR = "left_linear"


class DatalogError(ValueError):
    pass


class ParseError(DatalogError):
    def __init__(self, message, line=None, col=None):
        loc = "" if line is None else f" at line {line}" + ("" if col is None else f", col {col}")
        super().__init__(message + loc)
        self.line = line
        self.col = col


class EmptyProgram(ParseError):
    pass


class UnsafeRule(ParseError):
    pass


class UndeclaredTarget(ParseError):
    pass


class ArityMismatch(DatalogError):
    pass


class NotStable(DatalogError):
    """Naive evaluation exhausted its iteration budget without a fixpoint."""


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"?{self.name}"


#: A term is a variable or a constant; constants are plain strings.
Term = Var | str


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __repr__(self):
        parts = ",".join(a.name if isinstance(a, Var) else a for a in self.args)
        return f"{self.pred}({parts})"

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def variables(self) -> list[Var]:
        return [a for a in self.args if isinstance(a, Var)]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple

    def __repr__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(repr, self.body))}."


@dataclass(frozen=True)
class CQ:
    """Conjunctive query with designated head variables (or constants)."""

    head: tuple
    atoms: tuple

    def __repr__(self):
        head = ",".join(a.name if isinstance(a, Var) else a for a in self.head)
        return f"({head}) <- {' & '.join(map(repr, self.atoms))}"

    def variables(self) -> set:
        out = {t for t in self.head if isinstance(t, Var)}
        for a in self.atoms:
            out.update(a.variables())
        return out


@dataclass(frozen=True)
class Program:
    rules: tuple
    target: str

    @cached_property
    def idbs(self) -> frozenset:
        return frozenset(r.head.pred for r in self.rules)

    @cached_property
    def edbs(self) -> frozenset:
        preds = set()
        for r in self.rules:
            for a in r.body:
                if a.pred not in self.idbs:
                    preds.add(a.pred)
        return frozenset(preds)

    @cached_property
    def arities(self) -> dict:
        out = {}
        for r in self.rules:
            for a in (r.head, *r.body):
                if a.pred in out and out[a.pred] != a.arity:
                    raise ArityMismatch(
                        f"predicate {a.pred} used with arities {out[a.pred]} and {a.arity}"
                    )
                out[a.pred] = a.arity
        return out

    @cached_property
    def classification(self) -> frozenset:
        return classify(self)

    def is_recursive_rule(self, rule: Rule) -> bool:
        return any(a.pred in self.idbs for a in rule.body)

    def rules_for(self, pred: str) -> list[Rule]:
        return [r for r in self.rules if r.head.pred == pred]


@dataclass(frozen=True)
class FactTag:
    """Provenance tag of an EDB fact: its variable id, optional concrete weight."""

    var: str
    weight: Element | None = None


class Database:
    """Ground EDB facts, each tagged with a unique provenance variable."""

    def __init__(self, facts: dict | None = None):
        self.facts: dict[Atom, FactTag] = dict(facts or {})

    def add(self, atom: Atom, var: str | None = None, weight: Element | None = None):
        if not atom.is_ground():
            raise DatalogError(f"database fact must be ground: {atom}")
        tag = FactTag(var if var is not None else str(atom), weight)
        if atom in self.facts:
            raise DatalogError(f"duplicate fact {atom}")
        if any(t.var == tag.var for t in self.facts.values()):
            raise DatalogError(f"duplicate fact variable {tag.var}")
        self.facts[atom] = tag

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.facts

    def __len__(self):
        return len(self.facts)

    def domain(self) -> list[str]:
        return sorted({c for a in self.facts for c in a.args})

    def arities(self) -> dict:
        out = {}
        for a in self.facts:
            if a.pred in out and out[a.pred] != a.arity:
                raise ArityMismatch(f"predicate {a.pred} with mixed arities in database")
            out[a.pred] = a.arity
        return out

    def by_pred(self, pred: str) -> list[Atom]:
        return [a for a in self.facts if a.pred == pred]

    def assignment(self, spec: SemiringSpec) -> dict:
        """Concrete valuation of the fact variables: weight, or 1 when untagged."""
        out = {}
        for atom, tag in self.facts.items():
            value = tag.weight if tag.weight is not None else spec.one
            if not spec.is_element(value):
                raise DatalogError(
                    f"weight {value!r} of {atom} is not a {spec.name} element"
                )
            out[tag.var] = value
        return out


class GroundRule(NamedTuple):
    head: Atom
    body: tuple
    rule_index: int


@dataclass(frozen=True)
class GroundedProgram:
    rules: tuple
    idb_facts: tuple

    def rules_by_head(self) -> dict:
        out = {}
        for gr in self.rules:
            out.setdefault(gr.head, []).append(gr)
        return out


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<num>\d+)
      | (?P<quoted>'[^']*'|"[^"]*")
      | (?P<sym>:-|[(),.])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line_no: int):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return out


class _RuleParser:
    def __init__(self, tokens, line_no):
        self.tokens = tokens
        self.i = 0
        self.line = line_no

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None:
            raise ParseError("unexpected end of rule", self.line)
        if kind is not None and tok[0] != kind or value is not None and tok[1] != value:
            raise ParseError(f"unexpected token {tok[1]!r}", self.line, tok[2])
        self.i += 1
        return tok

    def atom(self) -> Atom:
        kind, name, col = self.take()
        if kind != "ident":
            raise ParseError(f"expected predicate name, got {name!r}", self.line, col)
        self.take("sym", "(")
        args = []
        while True:
            kind, val, col = self.take()
            if kind == "ident":
                args.append(Var(val))
            elif kind == "num":
                args.append(val)
            elif kind == "quoted":
                args.append(val[1:-1])
            else:
                raise ParseError(f"expected term, got {val!r}", self.line, col)
            kind, val, col = self.take("sym")
            if val == ")":
                break
            if val != ",":
                raise ParseError(f"expected ',' or ')', got {val!r}", self.line, col)
        return Atom(name, tuple(args))

    def rule(self) -> Rule:
        head = self.atom()
        body = []
        kind, val, col = self.take("sym")
        if val == ":-":
            while True:
                body.append(self.atom())
                kind, val, col = self.take("sym")
                if val == ".":
                    break
                if val != ",":
                    raise ParseError(f"expected ',' or '.', got {val!r}", self.line, col)
        elif val != ".":
            raise ParseError(f"expected ':-' or '.', got {val!r}", self.line, col)
        if self.peek()[0] is not None:
            raise ParseError(f"trailing input {self.peek()[1]!r}", self.line, self.peek()[2])
        return Rule(head, tuple(body))


def parse_program(text: str) -> Program:
    """Parse program text into a classified AST; the @target directive is required."""
    rules = []
    target = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@target"):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("@target expects one predicate name", line_no)
            target = parts[1]
            continue
        rules.append(_RuleParser(_tokenize(line, line_no), line_no).rule())
    if not rules:
        raise EmptyProgram("program has no rules")
    for r in rules:
        body_vars = {v for a in r.body for v in a.variables()}
        missing = [v for v in r.head.variables() if v not in body_vars]
        if missing:
            raise UnsafeRule(
                f"unsafe rule {r}: head variable {missing[0].name} not in body"
            )
    if target is None:
        raise UndeclaredTarget("missing @target directive")
    idbs = {r.head.pred for r in rules}
    if target not in idbs:
        raise UndeclaredTarget(f"target {target} is not the head of any rule")
    program = Program(tuple(rules), target)
    program.arities  # validates consistent arities
    return program


def parse_fact(text: str) -> Atom:
    """Parse a ground fact like ``T(s,t)``; bare identifiers are constants here."""
    tokens = _tokenize(text.strip(), 1)
    atom = _RuleParser(tokens + [("sym", ".", 0)], 1).atom()
    return Atom(atom.pred, tuple(a.name if isinstance(a, Var) else a for a in atom.args))


def parse_database(text: str, arities: dict | None = None) -> Database:
    """Parse TSV fact rows.  With known arities, a trailing extra column is the
    weight; without them every column is an argument."""
    db = Database()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].rstrip("\n")
        if not line.strip():
            continue
        cols = [c.strip() for c in line.split("\t") if c.strip()]
        if len(cols) < 2:
            raise ParseError("fact row needs a predicate and at least one argument", line_no)
        pred, rest = cols[0], cols[1:]
        weight = None
        if arities is not None and pred in arities:
            k = arities[pred]
            if len(rest) == k + 1:
                weight = _parse_weight(rest[-1], line_no)
                rest = rest[:-1]
            elif len(rest) != k:
                raise ArityMismatch(
                    f"line {line_no}: {pred} expects {k} arguments, got {len(rest)}"
                )
        db.add(Atom(pred, tuple(rest)), weight=weight)
    return db


def _parse_weight(text: str, line_no: int):
    if text == "inf":
        return float("inf")
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ParseError(f"bad weight {text!r}", line_no) from None


# ---------------------------------------------------------------------------
# Classification


def _is_chain_rule(rule: Rule) -> bool:
    head = rule.head
    if head.arity != 2 or not all(isinstance(t, Var) for t in head.args):
        return False
    x, y = head.args
    if x == y or not rule.body:
        return False
    cur = x
    seen = {x}
    for i, atom in enumerate(rule.body):
        if atom.arity != 2 or not all(isinstance(t, Var) for t in atom.args):
            return False
        a, b = atom.args
        if a != cur or b in seen:
            return False
        seen.add(b)
        cur = b
    return cur == y


def _variable_graph(atoms: Iterable[Atom]) -> dict:
    adj = {}
    for atom in atoms:
        vs = atom.variables()
        for v in vs:
            adj.setdefault(v, set())
        for i, v in enumerate(vs):
            for w in vs[i + 1:]:
                adj[v].add(w)
                adj[w].add(v)
    return adj


def _is_connected_rule(rule: Rule, idbs: frozenset) -> bool:
    edb_atoms = [a for a in rule.body if a.pred not in idbs]
    adj = _variable_graph(edb_atoms)
    if not adj:
        return False
    anchors = set(rule.head.variables())
    for a in rule.body:
        if a.pred in idbs:
            anchors.update(a.variables())
    if not anchors.issubset(adj):
        return False
    # connectivity of the EDB variable graph
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == set(adj)


def classify(program: Program) -> frozenset:
    """Compute the classification flags; idempotent and purely syntactic."""
    idbs = program.idbs
    flags = set()
    if all(sum(a.pred in idbs for a in r.body) <= 1 for r in program.rules):
        flags.add(LINEAR)
    if all(program.arities[p] == 1 for p in idbs):
        flags.add(MONADIC)
    if all(_is_chain_rule(r) for r in program.rules):
        flags.add(CHAIN)
        def leftmost_idb(r):
            return all(a.pred not in idbs for a in r.body[1:])
        if LINEAR in flags and all(
            leftmost_idb(r) for r in program.rules if program.is_recursive_rule(r)
        ):
            flags.add(LEFT_LINEAR)
    if all(_is_connected_rule(r, idbs) for r in program.rules):
        flags.add(CONNECTED)
    return frozenset(flags)


# ---------------------------------------------------------------------------
# Grounding


def ground(program: Program, db: Database) -> GroundedProgram:
    """All rule instantiations over the active domain whose EDB body atoms are
    present in the database.  Deterministic: rules in program order,
    substitutions in lexicographic order of the variable-value tuple."""
    for pred, k in db.arities().items():
        if pred in program.arities and program.arities[pred] != k:
            raise ArityMismatch(
                f"predicate {pred}: arity {program.arities[pred]} in program, {k} in database"
            )
    domain = set(db.domain())
    for r in program.rules:
        for a in (r.head, *r.body):
            domain.update(t for t in a.args if not isinstance(t, Var))
    domain = sorted(domain)

    idbs = program.idbs
    grounded = []
    for idx, rule in enumerate(program.rules):
        rule_vars = []
        for a in (rule.head, *rule.body):
            for v in a.variables():
                if v not in rule_vars:
                    rule_vars.append(v)
        subs = []
        _join(rule.body, 0, {}, rule_vars, domain, db, idbs, subs)
        subs.sort(key=lambda s: tuple(s[v] for v in rule_vars))
        for s in subs:
            grounded.append(
                GroundRule(
                    _substitute(rule.head, s),
                    tuple(_substitute(a, s) for a in rule.body),
                    idx,
                )
            )
    idb_facts = sorted({gr.head for gr in grounded}, key=lambda a: (a.pred, a.args))
    return GroundedProgram(tuple(grounded), tuple(idb_facts))


def _substitute(atom: Atom, subst: dict) -> Atom:
    return Atom(atom.pred, tuple(subst[t] if isinstance(t, Var) else t for t in atom.args))


def _match(atom: Atom, fact: Atom, subst: dict) -> dict | None:
    if atom.pred != fact.pred or atom.arity != fact.arity:
        return None
    out = dict(subst)
    for t, c in zip(atom.args, fact.args):
        if isinstance(t, Var):
            if out.get(t, c) != c:
                return None
            out[t] = c
        elif t != c:
            return None
    return out


def _join(body, i, subst, rule_vars, domain, db, idbs, out):
    if i == len(body):
        # any variable not bound by the body appears nowhere else (safety);
        # this also covers empty bodies of constant-only rules
        free = [v for v in rule_vars if v not in subst]
        if not free:
            out.append(dict(subst))
            return
        for c in domain:
            _join(body, i, {**subst, free[0]: c}, rule_vars, domain, db, idbs, out)
        return
    atom = body[i]
    if atom.pred in idbs:
        free = [v for v in atom.variables() if v not in subst]
        if not free:
            _join(body, i + 1, subst, rule_vars, domain, db, idbs, out)
            return
        def assign(j, s):
            if j == len(free):
                _join(body, i + 1, s, rule_vars, domain, db, idbs, out)
                return
            for c in domain:
                assign(j + 1, {**s, free[j]: c})
        assign(0, subst)
    else:
        for fact in db.by_pred(atom.pred):
            s = _match(atom, fact, subst)
            if s is not None:
                _join(body, i + 1, s, rule_vars, domain, db, idbs, out)


# ---------------------------------------------------------------------------
# Naive evaluation


class EvalResult(NamedTuple):
    valuation: dict
    iterations: int


def naive_eval(
    program: Program,
    db: Database,
    spec: SemiringSpec,
    max_iters: int | None = None,
    assignment: dict | None = None,
) -> EvalResult:
    """Iterate the immediate-consequence step from the all-zero valuation until
    nothing changes.  ``iterations`` counts applications including the final
    no-change one.  Raises NotStable when the budget runs out, which happens
    for non-absorptive semirings on genuinely recursive instances."""
    grounded = ground(program, db)
    if max_iters is None:
        max_iters = len(grounded.idb_facts) + 1
    values = assignment if assignment is not None else db.assignment(spec)
    by_head = grounded.rules_by_head()
    idb_set = set(grounded.idb_facts)

    def fact_value(atom, val):
        if atom.pred in program.idbs:
            return val.get(atom, spec.zero)
        return values[db.facts[atom].var]

    val = {f: spec.zero for f in grounded.idb_facts}
    for k in range(1, max_iters + 1):
        new = {}
        for fact in grounded.idb_facts:
            acc = spec.zero
            for gr in by_head[fact]:
                prod = spec.one
                for atom in gr.body:
                    prod = spec.mul(prod, fact_value(atom, val))
                acc = spec.add(acc, prod)
            new[fact] = acc
        if new == val:
            return EvalResult(val, k)
        val = new
    raise NotStable(f"no fixpoint within {max_iters} iterations")


# ---------------------------------------------------------------------------
# CQ expansions


def expansions(program: Program, depth: int) -> list[CQ]:
    """Unfold the target predicate into conjunctive queries, closing every IDB
    with an initialization rule and applying at most `depth` recursive rules.
    Variables are renamed canonically per expansion."""
    return [cq for cq, _ in expansions_with_count(program, depth)]


def expansions_by_count(program: Program, depth: int) -> dict:
    out: dict[int, list[CQ]] = {}
    for cq, n in expansions_with_count(program, depth):
        out.setdefault(n, []).append(cq)
    return out


def expansions_with_count(program: Program, depth: int) -> list[tuple]:
    k = program.arities[program.target]
    head = tuple(Var(f"X{i}") for i in range(k))
    goal = Atom(program.target, head)
    results: list[tuple] = []
    counter = [0]

    def rename(rule: Rule) -> Rule:
        counter[0] += 1
        tag = counter[0]
        ren = {v: Var(f"{v.name}_{tag}") for a in (rule.head, *rule.body) for v in a.variables()}
        sub = lambda a: Atom(a.pred, tuple(ren.get(t, t) if isinstance(t, Var) else t for t in a.args))
        return Rule(sub(rule.head), tuple(sub(a) for a in rule.body))

    def unfold(atoms, head_terms, used):
        idx = next((i for i, a in enumerate(atoms) if a.pred in program.idbs), None)
        if idx is None:
            results.append((_canonical_cq(head_terms, atoms), used))
            return
        goal_atom = atoms[idx]
        for rule in program.rules:
            if rule.head.pred != goal_atom.pred:
                continue
            cost = 1 if program.is_recursive_rule(rule) else 0
            if used + cost > depth:
                continue
            r = rename(rule)
            subst = _unify(r.head.args, goal_atom.args)
            if subst is None:
                continue
            new_atoms = [
                _apply_subst(a, subst)
                for a in (*atoms[:idx], *r.body, *atoms[idx + 1:])
            ]
            new_head = _apply_subst(Atom("_", head_terms), subst).args
            unfold(new_atoms, new_head, used + cost)

    unfold([goal], head, 0)
    return results


def _apply_subst(atom: Atom, subst: dict) -> Atom:
    def walk(t):
        while isinstance(t, Var) and t in subst:
            t = subst[t]
        return t
    return Atom(atom.pred, tuple(walk(t) for t in atom.args))


def _unify(args1, args2) -> dict | None:
    subst: dict = {}

    def walk(t):
        while isinstance(t, Var) and t in subst:
            t = subst[t]
        return t

    for a, b in zip(args1, args2):
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Var):
            subst[a] = b
        elif isinstance(b, Var):
            subst[b] = a
        else:
            return None
    return subst


def _canonical_cq(head_terms, atoms) -> CQ:
    ren: dict = {}

    def name(t):
        if not isinstance(t, Var):
            return t
        if t not in ren:
            ren[t] = Var(f"x{len(ren)}")
        return ren[t]

    head = tuple(name(t) for t in head_terms)
    new_atoms = tuple(Atom(a.pred, tuple(name(t) for t in a.args)) for a in atoms)
    return CQ(head, new_atoms)
