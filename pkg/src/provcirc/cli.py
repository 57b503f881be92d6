"""Command-line front end.

Commands: compile, eval, verify, measure, reduce, check-bounded.
Exit codes: 0 ok, 2 usage or builder error, 3 verification mismatch,
4 oracle overflow.  All outputs are deterministic under a fixed seed,
except the build_ms timing column of measure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import builders, grammar as gr
from .circuit import CapExceeded, evaluate, symbolic_polynomial, to_dot, to_json
from .datalog import CHAIN, LINEAR, parse_database, parse_fact, parse_program
from .graphs import (
    complete_digraph,
    graph_tsv,
    layered_digraph,
    parse_graph_tsv,
    random_sparse_digraph,
)
from .provenance import LimitExceeded, oracle_polynomial
from .semiring import TROPICAL_INF, builtin

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_MISMATCH = 3
EXIT_ORACLE_OVERFLOW = 4


def _read(path: str) -> str:
    return Path(path).read_text()


def _load_instance(args):
    program = parse_program(_read(args.program))
    db = parse_database(_read(args.db), arities=dict(program.arities))
    fact = parse_fact(args.fact)
    return program, db, fact


def _fmt(value) -> str:
    if value is True:
        return "TRUE"
    if value is False:
        return "FALSE"
    if value == TROPICAL_INF:
        return "inf"
    return str(value)


def cmd_compile(args) -> int:
    program, db, fact = _load_instance(args)
    report = builders.build(args.strategy, program, db, fact, k=args.k, stages=args.stages)
    if args.out:
        Path(args.out).write_text(to_json(report.circuit))
    if args.dot:
        Path(args.dot).write_text(to_dot(report.circuit))
    print(f"{report.strategy},{report.size},{report.depth},{report.stages}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .datalog import naive_eval

    program, db, fact = _load_instance(args)
    spec = builtin(args.semiring)
    result = naive_eval(program, db, spec, max_iters=args.max_iters)
    value = result.valuation.get(fact, spec.zero)
    print(f"{fact} = {_fmt(value)}")
    print(f"iterations = {result.iterations}")
    return EXIT_OK


def cmd_verify(args) -> int:
    program, db, fact = _load_instance(args)
    report = builders.build(args.strategy, program, db, fact, k=args.k, stages=args.stages)
    got = symbolic_polynomial(report.circuit)
    want = oracle_polynomial(program, db, fact, limit=args.limit)
    if got == want:
        print(f"VERIFY OK {args.strategy} {fact}: {len(want)} monomials")
        return EXIT_OK
    missing = sorted(want.monomials - got.monomials, key=lambda m: (m.degree, m.exps))
    extra = sorted(got.monomials - want.monomials, key=lambda m: (m.degree, m.exps))
    print(f"VERIFY MISMATCH {args.strategy} {fact}")
    for m in missing:
        print(f"  missing: {m}")
    for m in extra:
        print(f"  extra:   {m}")
    return EXIT_MISMATCH


def cmd_measure(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    strategies = [s for s in args.strategies.split(",") if s]
    rows = []
    for n in sizes:
        if args.family == "complete":
            graph = complete_digraph(n)
        elif args.family == "layered":
            graph = layered_digraph(2, max(1, n - 2))
        else:
            graph = random_sparse_digraph(n, 3 * n, seed=args.seed)
        vs = graph.vertices
        s, t = ("s", "t") if args.family == "layered" else (vs[0], vs[-1])
        m = len(graph.edges)
        for strategy in strategies:
            start = time.perf_counter()
            if strategy == "bellman-ford":
                c = builders.build_bellman_ford(graph, s, t)
            elif strategy == "squaring":
                c = builders.build_repeated_squaring(graph, s, t)
            elif strategy == "layered-graph":
                c = builders.build_layered_graph(graph, s, t)
            else:
                raise ValueError(f"measure supports graph strategies, not {strategy!r}")
            ms = (time.perf_counter() - start) * 1000.0
            from .circuit import metrics

            mt = metrics(c)
            rows.append([strategy, n, m, mt.size, mt.depth, f"{ms:.2f}"])
    out = sys.stdout if not args.out else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["strategy", "n", "m", "size", "depth", "build_ms"])
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_reduce(args) -> int:
    g = gr.parse_grammar(_read(args.grammar))
    graph = parse_graph_tsv(_read(args.graph))
    if gr.is_finite(g):
        raise gr.FiniteLanguage("reduction needs an infinite language")
    kind = args.kind
    if kind == "auto":
        kind = "regular" if gr.is_left_linear_grammar(g) else "cfg"
    if kind == "regular":
        decomp = gr.find_pumping_regular(g)
        instance = gr.expand_instance_regular(graph, args.s, args.t, decomp)
        accept = lambda word: gr.to_dfa(g).accepts(word)
    else:
        decomp = gr.find_pumping_cfg(g)
        try:
            instance = gr.expand_instance_cfg(graph, args.s, args.t, decomp)
        except gr.VEmpty:
            # only the right side pumps: u v^i w x^i y degenerates to (uw) x^i y
            fallback = gr.RegularPumping(decomp.u + decomp.w, decomp.x, decomp.y)
            instance = gr.expand_instance_regular(graph, args.s, args.t, fallback)
        cnf = gr.to_cnf(g)
        accept = lambda word: gr.cyk(cnf, word)

    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "instance.tsv").write_text(graph_tsv(instance.graph))
    (outdir / "edge_map.json").write_text(json.dumps(instance.edge_map, sort_keys=True, indent=2))
    (outdir / "target.txt").write_text(f"{instance.s}\t{instance.t}\n")
    print(f"expanded instance: {len(instance.graph.edges)} edges, "
          f"s={instance.s}, t={instance.t}")

    if args.check:
        m = len(graph.edges)
        if m > 8:
            print("check skipped: more than 8 original edges")
            return EXIT_OK
        edges = sorted(graph.edges, key=lambda e: (e.src, e.dst))
        for mask in range(1 << m):
            present = {e.var for i, e in enumerate(edges) if mask >> i & 1}
            want = _reachable(
                [(e.src, e.dst) for e in edges if e.var in present], args.s, args.t
            )
            sub = instance.restricted(present)
            got = any(
                accept(word)
                for word in _path_words(sub, instance.s, instance.t)
            )
            if got != want:
                print(f"CHECK FAILED at subset {sorted(present)}")
                return EXIT_MISMATCH
        print(f"CHECK OK ({1 << m} subsets)")
    return EXIT_OK


def _reachable(pairs, s, t) -> bool:
    if s == t:
        return True
    adj: dict = {}
    for u, v in pairs:
        adj.setdefault(u, []).append(v)
    seen = {s}
    stack = [s]
    while stack:
        for v in adj.get(stack.pop(), ()):
            if v == t:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def _path_words(graph, s, t):
    """Label words of all simple s-t paths (small instances only)."""
    out_edges: dict = {}
    for e in graph.edges:
        out_edges.setdefault(e.src, []).append(e)

    def walk(v, visited, word):
        if v == t:
            yield tuple(word)
            return
        for e in out_edges.get(v, ()):
            if e.dst not in visited:
                yield from walk(e.dst, visited | {e.dst}, word + [e.label])

    yield from walk(s, {s}, [])


def cmd_check_bounded(args) -> int:
    program = parse_program(_read(args.program))
    flags = program.classification
    if CHAIN in flags:
        g = gr.program_to_grammar(program)
        if gr.is_finite(g):
            print("FINITE (bounded)")
        else:
            print("INFINITE (unbounded)")
        return EXIT_OK
    if LINEAR in flags:
        report = None
        for n in range(args.n_max):
            report = gr.check_bounded_witness(program, n, args.n_max)
            if report.status == "bounded":
                break
        print(str(report))
        return EXIT_OK
    print("Inconclusive")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="provcirc",
        description="Compile Datalog over semirings into provenance circuits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_flags(p, fact_required=True):
        p.add_argument("--program", required=True, help="Datalog program file")
        p.add_argument("--db", required=True, help="TSV database file")
        p.add_argument("--fact", required=fact_required, help="target fact, e.g. T(s,t)")

    p = sub.add_parser("compile", help="build a circuit for a fact")
    instance_flags(p)
    p.add_argument("--strategy", required=True, choices=builders.STRATEGIES)
    p.add_argument("--k", type=int, default=None, help="layers for naive")
    p.add_argument("--stages", type=int, default=None, help="stages for uvg")
    p.add_argument("--out", help="write circuit JSON here")
    p.add_argument("--dot", help="write DOT here")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="naive fixpoint evaluation over a semiring")
    instance_flags(p)
    p.add_argument("--semiring", required=True, choices=["boolean", "tropical", "counting", "minmax"])
    p.add_argument("--max-iters", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="compare a circuit against the proof-tree oracle")
    instance_flags(p)
    p.add_argument("--strategy", required=True, choices=builders.STRATEGIES)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--stages", type=int, default=None)
    p.add_argument("--limit", type=int, default=10**6, help="oracle proof-tree cap")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("measure", help="size/depth sweep over generated instances")
    p.add_argument("--strategies", default="bellman-ford,squaring")
    p.add_argument("--sizes", required=True, help="comma-separated vertex counts")
    p.add_argument("--family", default="complete", choices=["complete", "layered", "sparse"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("reduce", help="emit a pumping-gadget reachability instance")
    p.add_argument("--grammar", required=True)
    p.add_argument("--graph", required=True, help="layered TC instance (TSV)")
    p.add_argument("--s", default="s")
    p.add_argument("--t", default="t")
    p.add_argument("--kind", default="auto", choices=["auto", "regular", "cfg"])
    p.add_argument("--out-dir", default="reduction")
    p.add_argument("--check", action="store_true",
                   help="exhaustive boolean-equivalence check (m <= 8)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("check-bounded", help="boundedness report for a program")
    p.add_argument("--program", required=True)
    p.add_argument("--n-max", type=int, default=4)
    p.set_defaults(func=cmd_check_bounded)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_OVERFLOW
    except (ValueError, KeyError, CapExceeded, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
