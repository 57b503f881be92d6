"""Commutative semirings: the four built-in instances and sample-based law checks.

A semiring here is a plain record of its two operations, the two constants,
and a set of capability flags.  The flags gate which circuit constructions
and equivalences are valid downstream, so they are part of the contract,
not documentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

Element = Any

# Capability flags.
IDEMPOTENT_ADD = "idempotent_add"
ABSORPTIVE = "absorptive"
OTIMES_IDEMPOTENT = "otimes_idempotent"
POSITIVE = "positive"
NATURALLY_ORDERED = "naturally_ordered"

ALL_FLAGS = frozenset(
    {IDEMPOTENT_ADD, ABSORPTIVE, OTIMES_IDEMPOTENT, POSITIVE, NATURALLY_ORDERED}
)

#: Additive identity of the tropical semiring (unreachable / no path).
TROPICAL_INF = float("inf")


class UnknownSemiring(ValueError):
    pass


@dataclass(frozen=True)
class SemiringSpec:
    """A commutative semiring (D, add, mul, zero, one) with capability flags."""

    name: str
    zero: Element
    one: Element
    add: Callable[[Element, Element], Element] = field(repr=False)
    mul: Callable[[Element, Element], Element] = field(repr=False)
    flags: frozenset = frozenset()
    is_element: Callable[[Element], bool] = field(repr=False, default=lambda x: True)
    #: Default elements used by law checks when the caller supplies none.
    samples: tuple = ()

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def support(self, x: Element) -> bool:
        """Map to the boolean semiring: True iff x is not the zero element."""
        return x != self.zero


def _trop_add(a, b):
    return min(a, b)


def _trop_mul(a, b):
    # mul saturates at +inf; finite values stay exact ints.
    if a == TROPICAL_INF or b == TROPICAL_INF:
        return TROPICAL_INF
    return a + b


def _is_nat(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


_BUILTINS = {
    "boolean": SemiringSpec(
        name="boolean",
        zero=False,
        one=True,
        add=lambda a, b: a or b,
        mul=lambda a, b: a and b,
        flags=ALL_FLAGS,
        is_element=lambda x: isinstance(x, bool),
        samples=(False, True),
    ),
    "tropical": SemiringSpec(
        name="tropical",
        zero=TROPICAL_INF,
        one=0,
        add=_trop_add,
        mul=_trop_mul,
        flags=frozenset({IDEMPOTENT_ADD, ABSORPTIVE, POSITIVE, NATURALLY_ORDERED}),
        is_element=lambda x: x == TROPICAL_INF or _is_nat(x),
        samples=(0, 1, 2, 5, TROPICAL_INF),
    ),
    "counting": SemiringSpec(
        name="counting",
        zero=0,
        one=1,
        add=lambda a, b: a + b,
        mul=lambda a, b: a * b,
        flags=frozenset({POSITIVE, NATURALLY_ORDERED}),
        is_element=_is_nat,
        samples=(0, 1, 2, 3),
    ),
    "minmax": SemiringSpec(
        name="minmax",
        zero=0.0,
        one=1.0,
        add=max,
        mul=min,
        flags=ALL_FLAGS,
        is_element=lambda x: isinstance(x, (int, float)) and 0.0 <= x <= 1.0,
        samples=(0.0, 0.25, 0.5, 1.0),
    ),
}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def builtin(name: str) -> SemiringSpec:
    """Return one of the built-in semirings: boolean, tropical, counting, minmax."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise UnknownSemiring(
            f"unknown semiring {name!r}; expected one of {', '.join(BUILTIN_NAMES)}"
        ) from None


@dataclass(frozen=True)
class LawEntry:
    law: str
    ok: bool
    counterexample: tuple | None = None


@dataclass(frozen=True)
class LawReport:
    entries: tuple

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list[LawEntry]:
        return [e for e in self.entries if not e.ok]


def check_laws(spec: SemiringSpec, samples: list | None = None) -> LawReport:
    """Check the semiring axioms and every declared flag over sample elements.

    This is an exhaustive check over all pairs/triples drawn from `samples`,
    not a proof: the laws are universally quantified and domains may be
    infinite.  Failures are report entries, never exceptions.
    """
    xs = list(samples) if samples is not None else list(spec.samples)
    if not xs:
        raise ValueError("check_laws requires a non-empty sample list")
    add, mul, zero, one = spec.add, spec.mul, spec.zero, spec.one
    entries = []

    def law(name, predicate, tuples):
        for t in tuples:
            if not predicate(*t):
                entries.append(LawEntry(name, False, t))
                return
        entries.append(LawEntry(name, True))

    pairs = [(a, b) for a in xs for b in xs]
    triples = [(a, b, c) for a in xs for b in xs for c in xs]

    law("add_associative", lambda a, b, c: add(add(a, b), c) == add(a, add(b, c)), triples)
    law("add_commutative", lambda a, b: add(a, b) == add(b, a), pairs)
    law("add_identity", lambda a: add(a, zero) == a, [(a,) for a in xs])
    law("mul_associative", lambda a, b, c: mul(mul(a, b), c) == mul(a, mul(b, c)), triples)
    law("mul_commutative", lambda a, b: mul(a, b) == mul(b, a), pairs)
    law("mul_identity", lambda a: mul(a, one) == a, [(a,) for a in xs])
    law("distributive", lambda a, b, c: mul(a, add(b, c)) == add(mul(a, b), mul(a, c)), triples)
    law("annihilation", lambda a: mul(a, zero) == zero, [(a,) for a in xs])

    if spec.has(IDEMPOTENT_ADD):
        law("idempotent_add", lambda a: add(a, a) == a, [(a,) for a in xs])
    if spec.has(ABSORPTIVE):
        law("absorptive", lambda a: add(one, a) == one, [(a,) for a in xs])
    if spec.has(OTIMES_IDEMPOTENT):
        law("otimes_idempotent", lambda a: mul(a, a) == a, [(a,) for a in xs])
    if spec.has(POSITIVE):
        law(
            "positive_add_kernel",
            lambda a, b: add(a, b) != zero or (a == zero and b == zero),
            pairs,
        )
        law(
            "positive_mul_kernel",
            lambda a, b: mul(a, b) != zero or a == zero or b == zero,
            pairs,
        )
    if spec.has(NATURALLY_ORDERED):
        # a <= b iff exists z with a + z = b; antisymmetry over witnesses in the sample.
        def leq(a, b):
            return any(add(a, z) == b for z in xs)

        law(
            "naturally_ordered_antisymmetric",
            lambda a, b: not (leq(a, b) and leq(b, a)) or a == b,
            pairs,
        )

    return LawReport(tuple(entries))
