import itertools
import random

import pytest

from conftest import FIG1_ANSWER, FIG1_EDGES, edge_db, poly_as_sets
from oracles import dijkstra, simple_paths

from provcirc.builders import (
    BuilderReport,
    NotFinite,
    NotLeftLinear,
    build,
    build_bellman_ford,
    build_layered_graph,
    build_layered_naive,
    build_magic_bounded,
    build_repeated_squaring,
    build_uvg,
)
from provcirc.circuit import evaluate, metrics, symbolic_polynomial
from provcirc.datalog import Atom, Database, ground, parse_fact, parse_program
from provcirc.graphs import Digraph, Edge, NotLayered, from_database, layered_digraph
from provcirc.grammar import parse_grammar, grammar_to_program
from provcirc.provenance import Polynomial, oracle_polynomial
from provcirc.semiring import TROPICAL_INF, builtin


def graph_of(pairs, weights=None):
    return from_database(edge_db(pairs, weights=weights))


def tc_oracle(tc_program, pairs, fact, **kw):
    return oracle_polynomial(tc_program, edge_db(pairs), fact, **kw)


class TestLayeredNaive:
    def test_fig1_k4(self, tc_program, fig1_db):
        c = build_layered_naive(tc_program, fig1_db, Atom("T", ("s", "t")), 4)
        assert poly_as_sets(symbolic_polynomial(c)) == FIG1_ANSWER

    def test_k1_underapproximates(self, tc_program, fig1_db):
        c = build_layered_naive(tc_program, fig1_db, Atom("T", ("s", "t")), 1)
        assert symbolic_polynomial(c).is_zero()  # no length-1 s-t path

    def test_empty_db_single_layer(self, tc_program):
        c = build_layered_naive(tc_program, Database(), Atom("T", ("a", "b")), 1)
        assert c.gates == (("zero",),)

    def test_invalid_k(self, tc_program, fig1_db):
        with pytest.raises(ValueError):
            build_layered_naive(tc_program, fig1_db, Atom("T", ("s", "t")), 0)

    def test_ucq_single_layer_is_sum_of_products(self):
        ucq = parse_program("@target P\nP(x) :- R(x,y), S(y).\nP(x) :- Q(x).\n")
        db = Database()
        for a in [Atom("R", ("a", "b")), Atom("R", ("a", "c")), Atom("S", ("b",)),
                  Atom("Q", ("a",))]:
            db.add(a)
        c = build_layered_naive(ucq, db, Atom("P", ("a",)), 1)
        got = poly_as_sets(symbolic_polynomial(c))
        assert got == {("Q(a)",), ("R(a,b)", "S(b)")}
        want = oracle_polynomial(ucq, db, Atom("P", ("a",)))
        assert symbolic_polynomial(c) == want

    def test_matches_oracle_on_cycles(self, tc_program):
        pairs = [("a", "b"), ("b", "c"), ("c", "a"), ("a", "c")]
        db = edge_db(pairs)
        grounded = ground(tc_program, db)
        k = len(grounded.idb_facts)
        for fact in grounded.idb_facts:
            c = build_layered_naive(tc_program, db, fact, k)
            assert symbolic_polynomial(c) == oracle_polynomial(
                tc_program, db, fact, grounded=grounded
            )


class TestLayeredGraph:
    def test_single_edge_is_input_var(self):
        c = build_layered_graph(graph_of([("s", "t")]), "s", "t")
        assert c.gates == (("in", "E(s,t)"),)

    def test_not_layered(self):
        with pytest.raises(NotLayered):
            build_layered_graph(graph_of([("s", "a"), ("a", "b"), ("s", "b")]), "s", "b")
        with pytest.raises(NotLayered):
            build_layered_graph(graph_of([("s", "a"), ("b", "a")]), "s", "a")

    def test_two_parallel_length2_paths(self):
        g = graph_of([("s", "a"), ("s", "b"), ("a", "t"), ("b", "t")])
        poly = symbolic_polynomial(build_layered_graph(g, "s", "t"))
        assert poly_as_sets(poly) == {("E(a,t)", "E(s,a)"), ("E(b,t)", "E(s,b)")}

    def test_fig1(self, fig1_graph):
        c = build_layered_graph(fig1_graph, "s", "t")
        assert poly_as_sets(symbolic_polynomial(c)) == FIG1_ANSWER

    def test_full_layered_counts_all_paths(self):
        g = layered_digraph(2, 3)
        c = build_layered_graph(g, "s", "t")
        poly = symbolic_polynomial(c)
        paths = simple_paths([(e.src, e.dst) for e in g.edges], "s", "t")
        assert len(poly) == len(paths) == 2 ** 3
        assert metrics(c).size <= 3 * len(g.edges)

    def test_against_path_enumeration_on_subsets(self):
        full = layered_digraph(2, 2)
        edges = sorted(full.edges, key=lambda e: (e.src, e.dst))
        for mask in range(0, 1 << len(edges), 7):  # sampled subsets
            kept = tuple(e for i, e in enumerate(edges) if mask >> i & 1)
            g = Digraph(kept, extra_vertices=("s", "t"))
            try:
                poly = symbolic_polynomial(build_layered_graph(g, "s", "t"))
            except NotLayered:
                continue  # a surviving vertex sits outside the s-t level order
            paths = simple_paths([(e.src, e.dst) for e in kept], "s", "t")
            want = {tuple(sorted(f"E({u},{v})" for u, v in p)) for p in paths}
            got = {tuple(sorted(v for v, _ in m.exps)) for m in poly.monomials}
            assert got == want


class TestBellmanFord:
    def test_fig1(self, fig1_graph):
        c = build_bellman_ford(fig1_graph, "s", "t")
        assert poly_as_sets(symbolic_polynomial(c)) == FIG1_ANSWER

    def test_s_equals_t(self, fig1_graph):
        c = build_bellman_ford(fig1_graph, "s", "s")
        assert c.gates == (("one",),)

    def test_single_edge(self):
        c = build_bellman_ford(graph_of([("s", "t")]), "s", "t")
        assert symbolic_polynomial(c) == Polynomial.var("E(s,t)")

    def test_cyclic_tropical_matches_dijkstra(self):
        rng = random.Random(21)
        spec = builtin("tropical")
        for _ in range(20):
            n = rng.randint(2, 6)
            pairs = [(f"n{i}", f"n{j}") for i in range(n) for j in range(n)
                     if i != j and rng.random() < 0.5]
            weights = {p: rng.randint(0, 9) for p in pairs}
            g = graph_of(pairs, weights)
            s, t = "n0", f"n{n-1}"
            c = build_bellman_ford(g, s, t)
            got = evaluate(c, spec, g.assignment(spec))
            assert got == dijkstra([(u, v, w) for (u, v), w in weights.items()], s, t)

    def test_depth_bound_fig1(self, fig1_graph):
        m = metrics(build_bellman_ford(fig1_graph, "s", "t"))
        n = len(fig1_graph.vertices)
        max_indeg = max(len(fig1_graph.in_edges(v)) for v in fig1_graph.vertices)
        assert m.depth <= (n - 1) * (1 + max_indeg.bit_length() + 1)
        assert m == (28, 8, 4)  # golden from the first verified build


class TestRepeatedSquaring:
    def test_single_vertex(self):
        g = Digraph((), extra_vertices=("a",))
        c = build_repeated_squaring(g, "a", "a")
        assert c.gates == (("one",),)

    def test_fig1(self, fig1_graph):
        c = build_repeated_squaring(fig1_graph, "s", "t")
        assert poly_as_sets(symbolic_polynomial(c)) == FIG1_ANSWER

    def test_diagonal_is_one(self, fig1_graph):
        c = build_repeated_squaring(fig1_graph, "u1", "u1")
        assert symbolic_polynomial(c) == Polynomial.one()

    def test_exhaustive_agreement_with_bellman_n3(self, tc_program):
        nodes = ["a", "b", "c"]
        candidates = [(u, v) for u in nodes for v in nodes if u != v]
        for mask in range(1 << len(candidates)):
            pairs = [e for i, e in enumerate(candidates) if mask >> i & 1]
            g = graph_of(pairs) if pairs else Digraph((), extra_vertices=tuple(nodes))
            for s, t in [("a", "b"), ("a", "c"), ("b", "c")]:
                p1 = symbolic_polynomial(build_bellman_ford(g, s, t))
                p2 = symbolic_polynomial(build_repeated_squaring(g, s, t))
                assert p1 == p2


class TestMagicBounded:
    def test_single_word(self):
        prog = grammar_to_program(parse_grammar("@start S\nS -> a b\n"))
        db = Database()
        db.add(Atom("a", ("1", "2")))
        db.add(Atom("b", ("2", "3")))
        c = build_magic_bounded(prog, db, Atom("S", ("1", "3")))
        assert poly_as_sets(symbolic_polynomial(c)) == {("a(1,2)", "b(2,3)")}

    def test_two_words_two_monomials(self):
        prog = grammar_to_program(parse_grammar("@start S\nS -> a b | c\n"))
        db = Database()
        db.add(Atom("a", ("s", "m")))
        db.add(Atom("b", ("m", "t")))
        db.add(Atom("c", ("s", "t")))
        c = build_magic_bounded(prog, db, Atom("S", ("s", "t")))
        assert poly_as_sets(symbolic_polynomial(c)) == {("a(s,m)", "b(m,t)"), ("c(s,t)",)}

    def test_matches_oracle_with_walks(self):
        # both words match along walks that reuse an edge
        prog = grammar_to_program(parse_grammar("@start S\nS -> A a\nA -> a a\n"))
        db = Database()
        db.add(Atom("a", ("u", "v")))
        db.add(Atom("a", ("v", "u")))
        fact = Atom("S", ("u", "v"))
        c = build_magic_bounded(prog, db, fact)
        assert symbolic_polynomial(c) == oracle_polynomial(prog, db, fact)

    def test_infinite_language_rejected(self, tc_program, fig1_db):
        with pytest.raises(NotFinite):
            build_magic_bounded(tc_program, fig1_db, Atom("T", ("s", "t")))

    def test_not_left_linear_rejected(self):
        prog = grammar_to_program(parse_grammar("@start S\nS -> a B\nB -> b\n"))
        db = Database()
        db.add(Atom("a", ("1", "2")))
        db.add(Atom("b", ("2", "3")))
        with pytest.raises(NotLeftLinear):
            build_magic_bounded(prog, db, Atom("S", ("1", "3")))


class TestUvg:
    def test_dyck_two_edges(self, dyck_program):
        db = Database()
        db.add(Atom("L", ("a", "b")))
        db.add(Atom("R", ("b", "c")))
        c = build_uvg(dyck_program, db, Atom("S", ("a", "c")))
        assert poly_as_sets(symbolic_polynomial(c)) == {("L(a,b)", "R(b,c)")}

    def test_zero_stages(self, dyck_program):
        db = Database()
        db.add(Atom("L", ("a", "b")))
        db.add(Atom("R", ("b", "c")))
        c = build_uvg(dyck_program, db, Atom("S", ("a", "c")), stages=0)
        assert c.gates == (("zero",),)

    def test_dyck_nested_path(self, dyck_program):
        db = Database()
        db.add(Atom("L", ("a0", "a1")))
        db.add(Atom("L", ("a1", "a2")))
        db.add(Atom("R", ("a2", "a3")))
        db.add(Atom("R", ("a3", "a4")))
        fact = Atom("S", ("a0", "a4"))
        c = build_uvg(dyck_program, db, fact)
        assert symbolic_polynomial(c) == oracle_polynomial(dyck_program, db, fact)

    def test_dyck_mixed_instance_all_facts(self, dyck_program):
        db = Database()
        for pred, u, v in [("L", "a", "b"), ("R", "b", "c"), ("L", "c", "d"),
                           ("R", "d", "e"), ("L", "b", "c")]:
            db.add(Atom(pred, (u, v)))
        grounded = ground(dyck_program, db)
        for fact in grounded.idb_facts:
            c = build_uvg(dyck_program, db, fact)
            want = oracle_polynomial(dyck_program, db, fact, grounded=grounded)
            assert symbolic_polynomial(c) == want, fact

    def test_tc_fig1(self, tc_program, fig1_db):
        c = build_uvg(tc_program, fig1_db, Atom("T", ("s", "t")))
        assert poly_as_sets(symbolic_polynomial(c)) == FIG1_ANSWER


class TestCrossBuilder:
    def test_tropical_equivalence_random(self, tc_program):
        rng = random.Random(30)
        spec = builtin("tropical")
        for _ in range(10):
            n = rng.randint(2, 6)
            pairs = [(f"n{i}", f"n{j}") for i in range(n) for j in range(n)
                     if i != j and rng.random() < 0.5]
            weights = {p: rng.randint(0, 9) for p in pairs}
            db = edge_db(pairs, weights=weights)
            g = from_database(db)
            s, t = "n0", f"n{n-1}"
            fact = Atom("T", (s, t))
            values = g.assignment(spec)
            results = {
                "bf": evaluate(build_bellman_ford(g, s, t), spec, values),
                "sq": evaluate(build_repeated_squaring(g, s, t), spec, values),
                "naive": evaluate(
                    build_layered_naive(tc_program, db, fact, max(1, n)), spec,
                    db.assignment(spec),
                ),
                "uvg": evaluate(build_uvg(tc_program, db, fact), spec, db.assignment(spec)),
            }
            assert len(set(results.values())) == 1, results


class TestDispatch:
    def test_report_metrics_match(self, tc_program, fig1_db):
        rep = build("bellman-ford", tc_program, fig1_db, parse_fact("T(s,t)"))
        m = metrics(rep.circuit)
        assert (rep.size, rep.depth) == (m.size, m.depth)
        assert rep.strategy == "bellman-ford"

    def test_unknown_strategy(self, tc_program, fig1_db):
        with pytest.raises(ValueError):
            build("closure", tc_program, fig1_db, parse_fact("T(s,t)"))

    def test_graph_strategy_needs_binary_edb(self):
        prog = parse_program("@target P\nP(x) :- A(x).\nP(x) :- P(y), A(x).\n")
        db = Database()
        db.add(Atom("A", ("a",)))
        with pytest.raises(ValueError):
            build("bellman-ford", prog, db, parse_fact("P(a)"))

    def test_non_idb_fact_rejected(self, tc_program, fig1_db):
        with pytest.raises(ValueError):
            build("naive", tc_program, fig1_db, parse_fact("E(s,t)"))
