"""Arithmetic circuits: fan-in-2 add/mul DAGs over fact variables and the
constants 0 and 1, stored topologically.

Construction goes through CircuitBuilder, which hash-conses structurally
identical gates and constant-folds x+0, x*0, x*1.  Reported sizes are
therefore post-consing gate counts.  Depth counts edges: a lone input gate
has depth 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .provenance import Monomial, Polynomial, absorb_reduce
from .semiring import SemiringSpec

IN, ZERO, ONE, ADD, MUL = "in", "zero", "one", "add", "mul"


class MissingAssignment(KeyError):
    def __init__(self, variables):
        super().__init__(f"assignment missing variables: {sorted(variables)}")
        self.variables = frozenset(variables)


class CapExceeded(RuntimeError):
    """An intermediate monomial antichain outgrew the configured cap."""


class DepthBudgetExceeded(RuntimeError):
    pass


class Metrics(NamedTuple):
    size: int
    depth: int
    fanout_max: int


@dataclass(frozen=True)
class Circuit:
    """Gates in topological order; each gate is a tuple:
    ("in", var) | ("zero",) | ("one",) | ("add", l, r) | ("mul", l, r)."""

    gates: tuple
    output: int

    def __post_init__(self):
        for i, g in enumerate(self.gates):
            if g[0] in (ADD, MUL) and not (g[1] < i and g[2] < i):
                raise ValueError(f"gate {i} references a later gate")
        if not 0 <= self.output < len(self.gates):
            raise ValueError("output index out of range")

    @property
    def size(self) -> int:
        return len(self.gates)

    def input_variables(self) -> set:
        return {g[1] for g in self.gates if g[0] == IN}


class CircuitBuilder:
    """Hash-consing, constant-folding gate factory."""

    def __init__(self):
        self.gates: list = []
        self._index: dict = {}

    def _gate(self, gate) -> int:
        idx = self._index.get(gate)
        if idx is None:
            idx = len(self.gates)
            self.gates.append(gate)
            self._index[gate] = idx
        return idx

    def input(self, var: str) -> int:
        return self._gate((IN, var))

    def zero(self) -> int:
        return self._gate((ZERO,))

    def one(self) -> int:
        return self._gate((ONE,))

    def add(self, left: int, right: int) -> int:
        if self.gates[left] == (ZERO,):
            return right
        if self.gates[right] == (ZERO,):
            return left
        if left > right:  # commutative; canonical order improves sharing
            left, right = right, left
        return self._gate((ADD, left, right))

    def mul(self, left: int, right: int) -> int:
        if self.gates[left] == (ZERO,) or self.gates[right] == (ZERO,):
            return self.zero()
        if self.gates[left] == (ONE,):
            return right
        if self.gates[right] == (ONE,):
            return left
        if left > right:
            left, right = right, left
        return self._gate((MUL, left, right))

    def add_many(self, terms: Iterable[int]) -> int:
        """Balanced binary sum in the given operand order; 0 for no terms."""
        return self._balanced(list(terms), self.add, self.zero)

    def mul_many(self, terms: Iterable[int]) -> int:
        return self._balanced(list(terms), self.mul, self.one)

    def _balanced(self, level, op, empty):
        if not level:
            return empty()
        while len(level) > 1:
            nxt = [op(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
        return level[0]

    def finish(self, output: int, prune: bool = True) -> Circuit:
        """Freeze the gate list; by default keep only gates reachable from the
        output, so sizes reflect the delivered DAG rather than construction
        scratch (folding and staged builds leave orphans)."""
        if not prune:
            return Circuit(tuple(self.gates), output)
        live = set()
        stack = [output]
        while stack:
            i = stack.pop()
            if i in live:
                continue
            live.add(i)
            g = self.gates[i]
            if g[0] in (ADD, MUL):
                stack.append(g[1])
                stack.append(g[2])
        remap = {}
        gates = []
        for i in sorted(live):
            g = self.gates[i]
            if g[0] in (ADD, MUL):
                g = (g[0], remap[g[1]], remap[g[2]])
            remap[i] = len(gates)
            gates.append(g)
        return Circuit(tuple(gates), remap[output])


def metrics(c: Circuit) -> Metrics:
    """Exact size, depth (edges on the longest input-to-output path reaching
    the output gate), and maximum fan-out, in one topological pass."""
    depth = [0] * c.size
    fanout = [0] * c.size
    for i, g in enumerate(c.gates):
        if g[0] in (ADD, MUL):
            depth[i] = 1 + max(depth[g[1]], depth[g[2]])
            fanout[g[1]] += 1
            fanout[g[2]] += 1
    return Metrics(c.size, depth[c.output], max(fanout) if fanout else 0)


def evaluate(c: Circuit, spec: SemiringSpec, assignment: dict):
    """Bottom-up evaluation over the semiring."""
    missing = {g[1] for g in c.gates if g[0] == IN and g[1] not in assignment}
    if missing:
        raise MissingAssignment(missing)
    val: list = [None] * c.size
    for i, g in enumerate(c.gates):
        op = g[0]
        if op == IN:
            val[i] = assignment[g[1]]
        elif op == ZERO:
            val[i] = spec.zero
        elif op == ONE:
            val[i] = spec.one
        elif op == ADD:
            val[i] = spec.add(val[g[1]], val[g[2]])
        else:
            val[i] = spec.mul(val[g[1]], val[g[2]])
    return val[c.output]


def symbolic_polynomial(
    c: Circuit, otimes_idem: bool = False, monomial_cap: int = 100_000
) -> Polynomial:
    """The absorption-reduced polynomial the circuit computes, built bottom-up
    over antichains.  Reducing at every gate is sound because absorption
    reduction commutes with both + and * on antichains over any absorptive
    semiring."""
    val: list = [None] * c.size
    for i, g in enumerate(c.gates):
        op = g[0]
        if op == IN:
            val[i] = Polynomial.var(g[1])
        elif op == ZERO:
            val[i] = Polynomial.zero()
        elif op == ONE:
            val[i] = Polynomial.one()
        elif op == ADD:
            val[i] = val[g[1]].add(val[g[2]])
        else:
            val[i] = val[g[1]].mul(val[g[2]])
        if otimes_idem:
            val[i] = val[i].flattened()
        if len(val[i]) > monomial_cap:
            raise CapExceeded(f"gate {i} holds {len(val[i])} monomials (cap {monomial_cap})")
    return val[c.output]


def reinterpret_boolean(c: Circuit) -> Circuit:
    """The boolean reading of the circuit: add-gates as OR, mul-gates as AND,
    the constants as FALSE/TRUE.  Gates are operator-symbolic, so the DAG is
    unchanged; evaluating the result over the boolean semiring applies the
    support homomorphism of any positive semiring."""
    return Circuit(c.gates, c.output)


def evaluate_boolean(c: Circuit, true_vars) -> bool:
    """Fast path for the boolean reading: variables in `true_vars` are TRUE."""
    val = [False] * c.size
    for i, g in enumerate(c.gates):
        op = g[0]
        if op == IN:
            val[i] = g[1] in true_vars
        elif op == ONE:
            val[i] = True
        elif op == ADD:
            val[i] = val[g[1]] or val[g[2]]
        elif op == MUL:
            val[i] = val[g[1]] and val[g[2]]
    return val[c.output]


def expand_to_formula(c: Circuit, depth_budget: int = 24) -> Circuit:
    """Duplicate shared subcircuits into a tree.  Every non-output gate of the
    result has fan-out exactly one; depth is unchanged and the number of leaf
    occurrences is at most 2**depth."""
    if metrics(c).depth > depth_budget:
        raise DepthBudgetExceeded(
            f"circuit depth {metrics(c).depth} exceeds budget {depth_budget}"
        )
    gates: list = []

    def copy(i: int) -> int:
        g = c.gates[i]
        if g[0] in (ADD, MUL):
            l = copy(g[1])
            r = copy(g[2])
            gates.append((g[0], l, r))
        else:
            gates.append(g)
        return len(gates) - 1

    out = copy(c.output)
    return Circuit(tuple(gates), out)


def is_formula(c: Circuit) -> bool:
    """Tree-shaped: every gate except the output is referenced exactly once."""
    refs = [0] * c.size
    for g in c.gates:
        if g[0] in (ADD, MUL):
            refs[g[1]] += 1
            refs[g[2]] += 1
    return refs[c.output] == 0 and all(
        r == 1 for i, r in enumerate(refs) if i != c.output
    )


def formula_leaves(c: Circuit) -> int:
    """Leaf occurrences (inputs and constants) counted with multiplicity."""
    count = [0] * c.size
    for i, g in enumerate(c.gates):
        count[i] = count[g[1]] + count[g[2]] if g[0] in (ADD, MUL) else 1
    return count[c.output]


def op_gate_count(c: Circuit) -> int:
    return sum(1 for g in c.gates if g[0] in (ADD, MUL))


def inline(builder: CircuitBuilder, c: Circuit) -> int:
    """Replay a circuit into an existing builder and return its output gate.
    Consing merges structure shared with gates already in the builder."""
    remap = [0] * c.size
    for i, g in enumerate(c.gates):
        if g[0] == IN:
            remap[i] = builder.input(g[1])
        elif g[0] == ZERO:
            remap[i] = builder.zero()
        elif g[0] == ONE:
            remap[i] = builder.one()
        elif g[0] == ADD:
            remap[i] = builder.add(remap[g[1]], remap[g[2]])
        else:
            remap[i] = builder.mul(remap[g[1]], remap[g[2]])
    return remap[c.output]


# ---------------------------------------------------------------------------
# Export / import


def to_json(c: Circuit) -> str:
    rows = []
    for g in c.gates:
        if g[0] == IN:
            rows.append({"op": "in", "var": g[1]})
        elif g[0] in (ADD, MUL):
            rows.append({"op": g[0], "l": g[1], "r": g[2]})
        else:
            rows.append({"op": g[0]})
    return json.dumps({"gates": rows, "output": c.output})


def from_json(text: str) -> Circuit:
    data = json.loads(text)
    gates = []
    for row in data["gates"]:
        op = row["op"]
        if op == "in":
            gates.append((IN, row["var"]))
        elif op in (ADD, MUL):
            gates.append((op, row["l"], row["r"]))
        elif op in (ZERO, ONE):
            gates.append((op,))
        else:
            raise ValueError(f"unknown gate op {op!r}")
    return Circuit(tuple(gates), data["output"])


def to_dot(c: Circuit) -> str:
    lines = ["digraph circuit {", "  rankdir=BT;"]
    for i, g in enumerate(c.gates):
        if g[0] == IN:
            label, shape = g[1], "box"
        elif g[0] == ZERO:
            label, shape = "0", "box"
        elif g[0] == ONE:
            label, shape = "1", "box"
        else:
            label, shape = ("+" if g[0] == ADD else "*"), "circle"
        peripheries = ", peripheries=2" if i == c.output else ""
        lines.append(f'  g{i} [label="{label}", shape={shape}{peripheries}];')
    for i, g in enumerate(c.gates):
        if g[0] in (ADD, MUL):
            lines.append(f"  g{g[1]} -> g{i};")
            lines.append(f"  g{g[2]} -> g{i};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export(c: Circuit, fmt: str) -> bytes:
    if fmt == "json":
        return to_json(c).encode()
    if fmt == "dot":
        return to_dot(c).encode()
    raise ValueError(f"unknown export format {fmt!r}")
