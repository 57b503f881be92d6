import itertools
import random

import pytest

from conftest import FIG1_ANSWER, FIG1_EDGES, edge_db, poly_as_sets
from oracles import dijkstra

from provcirc.datalog import CQ, Atom, Database, Var, naive_eval, parse_program
from provcirc.provenance import (
    LimitExceeded,
    Monomial,
    Polynomial,
    absorb_reduce,
    check_proof_tree,
    enumerate_tight_trees,
    find_homomorphism,
    oracle_polynomial,
)
from provcirc.semiring import builtin


def m(*vars_, **exps):
    d = {}
    for v in vars_:
        d[v] = d.get(v, 0) + 1
    d.update(exps)
    return Monomial.from_dict(d)


class TestMonomials:
    def test_construction(self):
        assert m("x", "x", "y") == Monomial.from_dict({"x": 2, "y": 1})
        with pytest.raises(ValueError):
            Monomial.from_dict({"x": 0})

    def test_divides_is_componentwise(self):
        assert m("x").divides(m("x", "y"))
        assert m("x").divides(m(x=2))
        assert not m(x=2).divides(m("x"))
        assert Monomial.one().divides(m("x"))
        assert not m("x").divides(m("y"))

    def test_flatten_and_degree(self):
        assert m(x=3, y=1).flattened() == m("x", "y")
        assert m(x=3, y=1).degree == 4


class TestAbsorbReduce:
    def test_multiple_absorption(self):
        assert absorb_reduce({m("x"), m("x", "y")}) == Polynomial(frozenset({m("x")}))

    def test_exponent_absorption(self):
        assert absorb_reduce({m(x=2), m("x")}) == Polynomial(frozenset({m("x")}))

    def test_one_absorbs_everything(self):
        p = absorb_reduce({Monomial.one(), m("x"), m("x", "y")})
        assert p == Polynomial.one()

    def test_idempotent_and_subset(self):
        rng = random.Random(0)
        vars_ = ["a", "b", "c", "d"]
        for _ in range(30):
            ms = {
                Monomial.from_dict(
                    {v: rng.randint(1, 3) for v in rng.sample(vars_, rng.randint(1, 4))}
                )
                for _ in range(10)
            }
            reduced = absorb_reduce(ms)
            assert reduced.monomials <= ms
            assert absorb_reduce(reduced.monomials) == reduced

    def test_evaluation_preserved_over_tropical(self):
        rng = random.Random(1)
        spec = builtin("tropical")
        vars_ = ["a", "b", "c", "d"]
        for _ in range(30):
            ms = {
                Monomial.from_dict(
                    {v: rng.randint(1, 3) for v in rng.sample(vars_, rng.randint(1, 4))}
                )
                for _ in range(10)
            }
            assignment = {v: rng.randint(0, 9) for v in vars_}
            raw = spec.zero
            for mono in ms:
                raw = spec.add(raw, mono.evaluate(spec, assignment))
            assert absorb_reduce(ms).evaluate(spec, assignment) == raw

    def test_zero_and_one(self):
        assert Polynomial.zero().is_zero()
        assert Polynomial.zero().add(Polynomial.one()) == Polynomial.one()
        assert Polynomial.one().mul(Polynomial.var("x")) == Polynomial.var("x")
        assert Polynomial.zero().mul(Polynomial.var("x")) == Polynomial.zero()

    def test_json_round_trip(self):
        p = absorb_reduce({m("x", "y"), m(z=2)})
        assert Polynomial.from_json(p.to_json()) == p


class TestTightTrees:
    def test_fig1_has_three(self, tc_program, fig1_db):
        trees = enumerate_tight_trees(tc_program, fig1_db, Atom("T", ("s", "t")))
        assert len(trees) == 3
        for tree in trees:
            assert check_proof_tree(tree, tc_program, fig1_db)

    def test_single_edge_single_tree(self, tc_program):
        db = edge_db([("a", "b")])
        trees = enumerate_tight_trees(tc_program, db, Atom("T", ("a", "b")))
        assert len(trees) == 1
        assert trees[0].leaves() == [Atom("E", ("a", "b"))]

    def test_three_cycle_trees_are_tight(self, tc_program):
        db = edge_db([("a", "b"), ("b", "c"), ("c", "a")])
        trees = enumerate_tight_trees(tc_program, db, Atom("T", ("a", "a")))
        assert trees
        for tree in trees:
            assert check_proof_tree(tree, tc_program, db)

    def test_limit_exceeded(self, tc_program, fig1_db):
        with pytest.raises(LimitExceeded):
            enumerate_tight_trees(tc_program, fig1_db, Atom("T", ("s", "t")), limit=2)

    def test_unreachable_fact_has_no_trees(self, tc_program, fig1_db):
        assert enumerate_tight_trees(tc_program, fig1_db, Atom("T", ("t", "s"))) == []


class TestOraclePolynomial:
    def test_fig1_worked_example(self, tc_program, fig1_db):
        poly = oracle_polynomial(tc_program, fig1_db, Atom("T", ("s", "t")))
        assert poly_as_sets(poly) == FIG1_ANSWER

    def test_unreachable_is_zero(self, tc_program, fig1_db):
        assert oracle_polynomial(tc_program, fig1_db, Atom("T", ("t", "s"))).is_zero()

    def test_three_cycle_antichain(self, tc_program):
        db = edge_db([("a", "b"), ("b", "c"), ("c", "a")])
        poly = oracle_polynomial(tc_program, db, Atom("T", ("a", "a")))
        # the only simple cycle through a; longer closed walks are absorbed
        assert poly_as_sets(poly) == {("E(a,b)", "E(b,c)", "E(c,a)")}

    def test_instance_order_independence(self, tc_program):
        db1 = Database()
        db2 = Database()
        for u, v in FIG1_EDGES:
            db1.add(Atom("E", (u, v)))
        for u, v in reversed(FIG1_EDGES):
            db2.add(Atom("E", (u, v)))
        fact = Atom("T", ("s", "t"))
        assert oracle_polynomial(tc_program, db1, fact) == oracle_polynomial(
            tc_program, db2, fact
        )

    def test_otimes_idem_flattens(self, dyck_program):
        # L(a,b), R(b,a): S(a,a) nests through itself reusing both edges
        db = edge_db([("a", "b")], label="L")
        db.add(Atom("R", ("b", "a")))
        poly = oracle_polynomial(dyck_program, db, Atom("S", ("a", "a")))
        flat = oracle_polynomial(dyck_program, db, Atom("S", ("a", "a")), otimes_idem=True)
        assert all(e == 1 for mono in flat.monomials for _, e in mono.exps)
        assert flat == poly.flattened()

    def test_boolean_support_matches_naive_eval(self, tc_program):
        spec = builtin("boolean")
        nodes = ["a", "b", "c"]
        candidates = [(u, v) for u in nodes for v in nodes if u != v]
        for mask in range(1 << len(candidates)):
            pairs = [e for i, e in enumerate(candidates) if mask >> i & 1]
            db = edge_db(pairs)
            result = naive_eval(tc_program, db, spec)
            from provcirc.datalog import ground

            grounded = ground(tc_program, db)
            for fact in grounded.idb_facts:
                derived = result.valuation.get(fact, False)
                poly = oracle_polynomial(tc_program, db, fact, grounded=grounded)
                assert (not poly.is_zero()) == derived

    def test_tropical_value_matches_naive_eval(self, tc_program):
        rng = random.Random(9)
        spec = builtin("tropical")
        for _ in range(15):
            n = rng.randint(2, 6)
            pairs = [(f"n{i}", f"n{j}") for i in range(n) for j in range(n)
                     if i != j and rng.random() < 0.5]
            if not pairs:
                continue
            weights = {p: rng.randint(0, 9) for p in pairs}
            db = edge_db(pairs, weights=weights)
            assignment = db.assignment(spec)
            result = naive_eval(tc_program, db, spec)
            s, t = f"n0", f"n{n - 1}"
            poly = oracle_polynomial(tc_program, db, Atom("T", (s, t)))
            assert poly.evaluate(spec, assignment) == result.valuation.get(
                Atom("T", (s, t)), spec.zero
            )
            assert poly.evaluate(spec, assignment) == dijkstra(
                [(u, v, w) for (u, v), w in weights.items()], s, t
            )


class TestHomomorphism:
    def cq(self, head, *atoms):
        return CQ(tuple(Var(h) for h in head), tuple(atoms))

    def e(self, a, b):
        return Atom("E", (Var(a), Var(b)))

    def test_path2_does_not_map_into_path3(self):
        src = self.cq(("x", "y"), self.e("x", "z"), self.e("z", "y"))
        dst = self.cq(("x", "y"), self.e("x", "z"), self.e("z", "w"), self.e("w", "y"))
        assert find_homomorphism(src, dst) is None

    def test_identity(self):
        cq = self.cq(("x", "y"), self.e("x", "z"), self.e("z", "y"))
        mapping = find_homomorphism(cq, cq)
        assert mapping is not None
        assert mapping[Var("x")] == Var("x")

    def test_embedding_with_extra_atom(self):
        src = self.cq(("x", "y"), self.e("x", "z"), self.e("z", "y"))
        dst = self.cq(
            ("x", "y"),
            self.e("x", "z"),
            self.e("z", "y"),
            Atom("A", (Var("z"),)),
        )
        assert find_homomorphism(src, dst) is not None

    def test_collapse_onto_loop(self):
        src = self.cq(("x", "y"), self.e("x", "z"), self.e("z", "y"))
        dst = CQ((Var("u"), Var("u")), (Atom("E", (Var("u"), Var("u"))),))
        mapping = find_homomorphism(src, dst)
        assert mapping is not None and mapping[Var("z")] == Var("u")

    def test_constants_must_match(self):
        src = CQ(("a", Var("y")), (Atom("E", ("a", Var("y"))),))
        dst_ok = CQ(("a", Var("v")), (Atom("E", ("a", Var("v"))),))
        dst_bad = CQ(("b", Var("v")), (Atom("E", ("b", Var("v"))),))
        assert find_homomorphism(src, dst_ok) is not None
        assert find_homomorphism(src, dst_bad) is None

    def test_exhaustive_against_brute_force(self):
        rng = random.Random(4)
        vars_ = [Var(v) for v in "xyzw"]
        for _ in range(40):
            def rand_cq():
                atoms = tuple(
                    Atom("E", (rng.choice(vars_), rng.choice(vars_)))
                    for _ in range(rng.randint(1, 3))
                )
                return CQ((vars_[0], vars_[1]), atoms)

            src, dst = rand_cq(), rand_cq()
            found = find_homomorphism(src, dst) is not None
            terms = {t for a in dst.atoms for t in a.args} | set(dst.head)
            brute = False
            for combo in itertools.product(sorted(terms, key=str), repeat=4):
                mp = dict(zip(vars_, combo))
                if mp[src.head[0]] != dst.head[0] or mp[src.head[1]] != dst.head[1]:
                    continue
                if all(
                    Atom(a.pred, tuple(mp[t] for t in a.args)) in set(dst.atoms)
                    for a in src.atoms
                ):
                    brute = True
                    break
            assert found == brute
