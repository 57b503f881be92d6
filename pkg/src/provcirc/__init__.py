"""Datalog-over-semirings provenance circuits: builders, oracles, reductions."""

from .builders import (
    BuilderReport,
    build,
    build_bellman_ford,
    build_layered_graph,
    build_layered_naive,
    build_magic_bounded,
    build_repeated_squaring,
    build_uvg,
)
from .circuit import (
    Circuit,
    CircuitBuilder,
    evaluate,
    expand_to_formula,
    export,
    metrics,
    reinterpret_boolean,
    symbolic_polynomial,
)
from .datalog import (
    Atom,
    CQ,
    Database,
    Program,
    Rule,
    Var,
    classify,
    expansions,
    ground,
    naive_eval,
    parse_database,
    parse_fact,
    parse_program,
)
from .grammar import (
    Dfa,
    Grammar,
    check_bounded_witness,
    expand_instance_cfg,
    expand_instance_cq_gadgets,
    expand_instance_regular,
    find_pumping_cfg,
    find_pumping_regular,
    grammar_to_program,
    is_finite,
    parse_grammar,
    product_graph,
    program_to_grammar,
    rpq_via_tc,
    to_dfa,
)
from .graphs import Digraph, Edge
from .provenance import (
    Monomial,
    Polynomial,
    absorb_reduce,
    enumerate_tight_trees,
    find_homomorphism,
    oracle_polynomial,
)
from .semiring import SemiringSpec, builtin, check_laws

__version__ = "0.1.0"
