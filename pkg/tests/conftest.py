import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # oracles/corpus helpers

from provcirc.datalog import Atom, Database, parse_program
from provcirc.graphs import Digraph, Edge, from_database

DATA = Path(__file__).parent / "data"

TC_TEXT = """\
@target T
T(x,y) :- E(x,y).
T(x,y) :- T(x,z), E(z,y).
"""

DYCK_TEXT = """\
@target S
S(x,y) :- L(x,z), R(z,y).
S(x,y) :- L(x,w), S(w,z), R(z,y).
S(x,y) :- S(x,z), S(z,y).
"""

BOUNDED_TEXT = """\
@target T
T(x,y) :- E(x,y).
T(x,y) :- A(x), T(z,y).
"""

REACH_TEXT = """\
@target U
U(x) :- E(x,y), A(y).
U(x) :- E(x,y), U(y).
"""

FIG1_EDGES = [
    ("s", "u1"), ("s", "u2"),
    ("u1", "v1"), ("u1", "v2"), ("u2", "v2"),
    ("v1", "t"), ("v2", "t"),
]


def edge_db(pairs, label="E", weights=None):
    db = Database()
    weights = weights or {}
    for u, v in sorted(pairs):
        db.add(Atom(label, (u, v)), weight=weights.get((u, v)))
    return db


@pytest.fixture(scope="session")
def tc_program():
    return parse_program(TC_TEXT)


@pytest.fixture(scope="session")
def dyck_program():
    return parse_program(DYCK_TEXT)


@pytest.fixture(scope="session")
def bounded_program():
    return parse_program(BOUNDED_TEXT)


@pytest.fixture(scope="session")
def reach_program():
    return parse_program(REACH_TEXT)


@pytest.fixture()
def fig1_db():
    return edge_db(FIG1_EDGES)


@pytest.fixture()
def fig1_graph(fig1_db):
    return from_database(fig1_db)


#: the worked-example answer for T(s,t): three edge-disjoint path monomials
FIG1_ANSWER = {
    ("E(s,u1)", "E(u1,v1)", "E(v1,t)"),
    ("E(s,u1)", "E(u1,v2)", "E(v2,t)"),
    ("E(s,u2)", "E(u2,v2)", "E(v2,t)"),
}


def poly_as_sets(poly):
    """Polynomial -> set of variable tuples (requires all exponents 1)."""
    out = set()
    for m in poly.monomials:
        assert all(e == 1 for _, e in m.exps)
        out.add(tuple(v for v, _ in m.exps))
    return out
