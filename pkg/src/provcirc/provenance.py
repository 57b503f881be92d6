"""Ground-truth provenance: tight proof-tree enumeration, the absorption-reduced
polynomial normal form, and CQ homomorphism search.

The polynomial normal form is an antichain of monomials under componentwise
exponent order: over any absorptive semiring, a monomial whose exponent vector
dominates another contributes nothing (m + m*n = m), so only the minimal
monomials survive.  Every circuit builder is validated against these oracles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .datalog import CQ, Atom, Database, Program, Var, ground
from .semiring import SemiringSpec


class LimitExceeded(RuntimeError):
    """Too many tight proof trees for oracle use on this instance."""


@dataclass(frozen=True)
class Monomial:
    """Product of fact variables with positive integer exponents."""

    exps: tuple  # sorted ((var, exponent), ...)

    @staticmethod
    def one() -> "Monomial":
        return Monomial(())

    @staticmethod
    def of(var: str) -> "Monomial":
        return Monomial(((var, 1),))

    @staticmethod
    def from_dict(d: dict) -> "Monomial":
        if any(e <= 0 for e in d.values()):
            raise ValueError("exponents must be positive")
        return Monomial(tuple(sorted(d.items())))

    def as_dict(self) -> dict:
        return dict(self.exps)

    def mul(self, other: "Monomial") -> "Monomial":
        d = dict(self.exps)
        for v, e in other.exps:
            d[v] = d.get(v, 0) + e
        return Monomial(tuple(sorted(d.items())))

    def divides(self, other: "Monomial") -> bool:
        """Componentwise exponent order: self <= other."""
        o = dict(other.exps)
        return all(o.get(v, 0) >= e for v, e in self.exps)

    def flattened(self) -> "Monomial":
        return Monomial(tuple((v, 1) for v, _ in self.exps))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exps)

    def evaluate(self, spec: SemiringSpec, assignment: dict):
        acc = spec.one
        for v, e in self.exps:
            for _ in range(e):
                acc = spec.mul(acc, assignment[v])
        return acc

    def __repr__(self):
        if not self.exps:
            return "1"
        return "*".join(v if e == 1 else f"{v}^{e}" for v, e in self.exps)


@dataclass(frozen=True)
class Polynomial:
    """Absorption-reduced antichain of monomials.  Empty set is the zero
    polynomial; the empty monomial alone is the one polynomial."""

    monomials: frozenset = frozenset()

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial(frozenset())

    @staticmethod
    def one() -> "Polynomial":
        return Polynomial(frozenset({Monomial.one()}))

    @staticmethod
    def var(v: str) -> "Polynomial":
        return Polynomial(frozenset({Monomial.of(v)}))

    def is_zero(self) -> bool:
        return not self.monomials

    def add(self, other: "Polynomial") -> "Polynomial":
        return absorb_reduce(self.monomials | other.monomials)

    def mul(self, other: "Polynomial") -> "Polynomial":
        prods = {m.mul(n) for m in self.monomials for n in other.monomials}
        return absorb_reduce(prods)

    def flattened(self) -> "Polynomial":
        return absorb_reduce({m.flattened() for m in self.monomials})

    def evaluate(self, spec: SemiringSpec, assignment: dict):
        acc = spec.zero
        for m in self.monomials:
            acc = spec.add(acc, m.evaluate(spec, assignment))
        return acc

    def variables(self) -> set:
        return {v for m in self.monomials for v, _ in m.exps}

    def to_json(self) -> str:
        ms = sorted(self.monomials, key=lambda m: (m.degree, m.exps))
        return json.dumps([m.as_dict() for m in ms])

    @staticmethod
    def from_json(text: str) -> "Polynomial":
        return absorb_reduce(Monomial.from_dict(d) for d in json.loads(text))

    def __repr__(self):
        if not self.monomials:
            return "0"
        return " + ".join(map(repr, sorted(self.monomials, key=lambda m: (m.degree, m.exps))))

    def __len__(self):
        return len(self.monomials)


def absorb_reduce(monomials) -> Polynomial:
    """Keep the minimal monomials under componentwise exponent order.

    Sound over every absorptive semiring: the discarded monomials are each
    dominated by a kept one and thus absorbed.  Output is a subset of the
    input, and the reduction is idempotent.
    """
    ms = sorted(set(monomials), key=lambda m: (m.degree, m.exps))
    kept: list[Monomial] = []
    for m in ms:
        if not any(k.divides(m) for k in kept):
            kept.append(m)
    return Polynomial(frozenset(kept))


# ---------------------------------------------------------------------------
# Tight proof trees


@dataclass(frozen=True)
class ProofTree:
    fact: Atom
    children: tuple = ()
    rule_index: int | None = None  # grounding's source rule; None for leaves

    @property
    def is_leaf(self) -> bool:
        return not self.children and self.rule_index is None

    def leaves(self) -> list[Atom]:
        if self.is_leaf:
            return [self.fact]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def monomial(self, db: Database) -> Monomial:
        m = Monomial.one()
        for leaf in self.leaves():
            m = m.mul(Monomial.of(db.facts[leaf].var))
        return m

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def enumerate_tight_trees(
    program: Program, db: Database, fact: Atom, limit: int = 10**6, grounded=None
) -> list[ProofTree]:
    """All tight proof trees of `fact`: proof trees with no repeated internal
    fact along any leaf-to-root path.  The path set guarantees termination;
    raises LimitExceeded past `limit` trees.  Pass a precomputed grounding
    when enumerating many facts of one instance."""
    if grounded is None:
        grounded = ground(program, db)
    idbs = program.idbs

    # facts underivable outright can never label a proof-tree node, so rules
    # mentioning them are dead; pruning them keeps the search from exploring
    # exponentially many doomed branches
    derivable = set()
    changed = True
    while changed:
        changed = False
        for gr in grounded.rules:
            if gr.head in derivable:
                continue
            if all(
                (a in derivable) if a.pred in idbs else (a in db) for a in gr.body
            ):
                derivable.add(gr.head)
                changed = True
    by_head: dict = {}
    for gr in grounded.rules:
        if gr.head in derivable and all(
            a.pred not in idbs or a in derivable for a in gr.body
        ):
            by_head.setdefault(gr.head, []).append(gr)
    count = [0]

    def trees(goal: Atom, path: frozenset):
        if goal.pred not in idbs:
            if goal in db:
                yield ProofTree(goal)
            return
        if goal in path:
            return
        sub_path = path | {goal}
        for gr in by_head.get(goal, ()):
            for children in _child_combos(gr.body, 0, sub_path, trees):
                count[0] += 1
                if count[0] > limit:
                    raise LimitExceeded(
                        f"more than {limit} tight proof trees for {fact}"
                    )
                yield ProofTree(goal, tuple(children), gr.rule_index)

    return list(trees(fact, frozenset()))


def _child_combos(body, i, path, trees):
    if i == len(body):
        yield []
        return
    for first in trees(body[i], path):
        for rest in _child_combos(body, i + 1, path, trees):
            yield [first, *rest]


def oracle_polynomial(
    program: Program,
    db: Database,
    fact: Atom,
    otimes_idem: bool = False,
    limit: int = 10**6,
    grounded=None,
) -> Polynomial:
    """Antichain of tight-proof-tree monomials; exponents flattened to 1 first
    when the target semiring class is multiplicatively idempotent."""
    monomials = set()
    for tree in enumerate_tight_trees(program, db, fact, limit=limit, grounded=grounded):
        m = tree.monomial(db)
        monomials.add(m.flattened() if otimes_idem else m)
    return absorb_reduce(monomials)


def check_proof_tree(tree: ProofTree, program: Program, db: Database) -> bool:
    """Validate the proof-tree conditions plus tightness along every path."""
    grounded_bodies = {
        (gr.head, gr.body) for gr in ground(program, db).rules
    }

    def walk(node: ProofTree, path: tuple) -> bool:
        if node.is_leaf:
            return node.fact in db
        if any(node.fact == f for f in path):
            return False
        body = tuple(c.fact for c in node.children)
        if (node.fact, body) not in grounded_bodies:
            return False
        return all(walk(c, (*path, node.fact)) for c in node.children)

    return walk(tree, ())


# ---------------------------------------------------------------------------
# CQ homomorphisms


def find_homomorphism(source: CQ, target: CQ) -> dict | None:
    """A variable mapping sending every atom of `source` to an atom of `target`
    while fixing head terms pairwise; None when no such mapping exists.
    Exhaustive backtracking with candidates pre-filtered by predicate."""
    if len(source.head) != len(target.head):
        return None
    mapping: dict = {}
    for s, t in zip(source.head, target.head):
        if isinstance(s, Var):
            if mapping.get(s, t) != t:
                return None
            mapping[s] = t
        elif s != t:
            return None

    by_pred: dict = {}
    for a in target.atoms:
        by_pred.setdefault((a.pred, a.arity), []).append(a)

    atoms = sorted(source.atoms, key=lambda a: len(by_pred.get((a.pred, a.arity), [])))

    def extend(i, mp):
        if i == len(atoms):
            return mp
        atom = atoms[i]
        for cand in by_pred.get((atom.pred, atom.arity), ()):
            new = dict(mp)
            ok = True
            for t, c in zip(atom.args, cand.args):
                if isinstance(t, Var):
                    if new.get(t, c) != c:
                        ok = False
                        break
                    new[t] = c
                elif t != c:
                    ok = False
                    break
            if ok:
                result = extend(i + 1, new)
                if result is not None:
                    return result
        return None

    return extend(0, mapping)
