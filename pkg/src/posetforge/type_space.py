"""External types over a finite poset: valid triples and their lattice.

A valid triple (U, V, W) partitions the host A into the elements lying
below, incomparable to, and above a virtual extension point.  The module
implements the characterisation of validity, pairwise <-/inc-validity, the
strict order `ll` with its meet/join formulas, the lambda/mu subsets, the
shift bijection between them, opposite-poset transport, and the prefix
metric on types.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, Sequence

from .errors import (
    HostMismatch,
    InvalidTriple,
    NotAPartition,
    NotInLambda,
)
from .poset_core import FinitePoset, Relation


@dataclass(frozen=True)
class ValidTriple:
    """An external type over `host`, stored as the partition (U, V, W)."""

    host: FinitePoset
    U: frozenset[int]
    V: frozenset[int]
    W: frozenset[int]

    def parts(self) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
        return (self.U, self.V, self.W)

    def __repr__(self) -> str:
        f = lambda s: "{" + ",".join(map(str, sorted(s))) + "}"
        return f"({f(self.U)}, {f(self.V)}, {f(self.W)})"

    def to_json(self) -> dict:
        return {"U": sorted(self.U), "V": sorted(self.V), "W": sorted(self.W)}

    @classmethod
    def from_json(cls, host: FinitePoset, doc: dict) -> "ValidTriple":
        return make_triple(host, doc["U"], doc["V"], doc["W"])


def _check_partition(host: FinitePoset, U, V, W) -> tuple[frozenset, frozenset, frozenset]:
    U, V, W = frozenset(U), frozenset(V), frozenset(W)
    if U | V | W != frozenset(host.elements) or len(U) + len(V) + len(W) != len(host.elements):
        raise NotAPartition(f"({sorted(U)}, {sorted(V)}, {sorted(W)}) over {sorted(host.elements)}")
    return U, V, W


def triple_conditions_hold(host: FinitePoset, U, V, W) -> bool:
    """The three clauses characterising validity of a partition."""
    for u in U:
        for w in W:
            if not host.lt(u, w):
                return False
    for u in U:
        for v in V:
            if host.rel(u, v) is Relation.GT:
                return False
    for w in W:
        for v in V:
            if host.rel(w, v) is Relation.LT:
                return False
    return True


def is_valid_triple(host: FinitePoset, t: Sequence) -> bool:
    U, V, W = _check_partition(host, *t)
    return triple_conditions_hold(host, U, V, W)


def make_triple(host: FinitePoset, U, V, W) -> ValidTriple:
    U, V, W = _check_partition(host, U, V, W)
    if not triple_conditions_hold(host, U, V, W):
        raise InvalidTriple(f"({sorted(U)}, {sorted(V)}, {sorted(W)})")
    return ValidTriple(host, U, V, W)


def all_valid_triples(host: FinitePoset) -> Iterator[ValidTriple]:
    """Every valid triple over `host`, in a fixed deterministic order."""
    els = host.elements
    for codes in product(range(3), repeat=len(els)):
        U = frozenset(e for e, c in zip(els, codes) if c == 0)
        V = frozenset(e for e, c in zip(els, codes) if c == 1)
        W = frozenset(e for e, c in zip(els, codes) if c == 2)
        if triple_conditions_hold(host, U, V, W):
            yield ValidTriple(host, U, V, W)


def realize(host: FinitePoset, t: ValidTriple, new_id: int | None = None) -> tuple[FinitePoset, int]:
    """One-point extension of the host whose extension point has type `t`."""
    if t.host is not host and t.host != host:
        raise HostMismatch("triple does not live over this host")
    if not triple_conditions_hold(host, t.U, t.V, t.W):
        raise InvalidTriple(repr(t))
    e = new_id if new_id is not None else (max(host.elements, default=-1) + 1)
    if e in host:
        raise InvalidTriple(f"extension id {e} already present")
    els = host.elements + (e,)
    n = len(els)
    old = host.matrix()
    m = bytearray(n * n)
    for i in range(n - 1):
        for j in range(n - 1):
            m[i * n + j] = old[i * (n - 1) + j]
    for i, x in enumerate(host.elements):
        if x in t.U:
            m[i * n + (n - 1)] = Relation.LT
            m[(n - 1) * n + i] = Relation.GT
        elif x in t.W:
            m[i * n + (n - 1)] = Relation.GT
            m[(n - 1) * n + i] = Relation.LT
    return FinitePoset(els, bytes(m)), e


def tp_of(extension: FinitePoset, host: FinitePoset, e: int) -> ValidTriple:
    """Extract tp(e / host) from a poset containing both."""
    U, V, W = set(), set(), set()
    for x in host.elements:
        r = extension.rel(x, e)
        if r is Relation.LT:
            U.add(x)
        elif r is Relation.GT:
            W.add(x)
        else:
            V.add(x)
    return ValidTriple(host, frozenset(U), frozenset(V), frozenset(W))


def _same_host(p: ValidTriple, q: ValidTriple) -> None:
    if p.host.elements != q.host.elements or p.host.matrix() != q.host.matrix():
        raise HostMismatch("triples over different hosts")


def lt_valid(p: ValidTriple, q: ValidTriple) -> bool:
    """Whether points typed p, q can coexist with p's point strictly below q's."""
    _same_host(p, q)
    return p.U <= q.U and p.V <= (q.U | q.V)


def inc_valid(p: ValidTriple, q: ValidTriple) -> bool:
    _same_host(p, q)
    return not (p.U & q.W) and not (q.U & p.W)


def ll(p: ValidTriple, q: ValidTriple) -> bool:
    """The strict order on the type space: p != q and (p, q) is <-valid."""
    return p != q and lt_valid(p, q)


def meet(p: ValidTriple, q: ValidTriple) -> ValidTriple:
    _same_host(p, q)
    U = p.U & q.U
    V = (p.V & q.V) | (p.V & q.U) | (q.V & p.U)
    W = p.W | q.W
    return make_triple(p.host, U, V, W)


def join(p: ValidTriple, q: ValidTriple) -> ValidTriple:
    _same_host(p, q)
    U = p.U | q.U
    V = (p.V & q.V) | (p.V & q.W) | (q.V & p.W)
    W = p.W & q.W
    return make_triple(p.host, U, V, W)


def lambda_set(host: FinitePoset) -> list[ValidTriple]:
    """Types below-or-incomparable to all of the host (U empty)."""
    return [t for t in all_valid_triples(host) if not t.U]


def mu_set(host: FinitePoset) -> list[ValidTriple]:
    return [t for t in all_valid_triples(host) if not t.W]


def shift_up(p: ValidTriple) -> ValidTriple:
    """(empty, V, W) -> (V, W, empty); bijection lambda -> mu."""
    if p.U:
        raise NotInLambda(repr(p))
    return ValidTriple(p.host, p.V, p.W, frozenset())


def shift_down(p: ValidTriple) -> ValidTriple:
    if p.W:
        raise NotInLambda(repr(p))
    return ValidTriple(p.host, frozenset(), p.U, p.V)


def op_type(p: ValidTriple, op_host: FinitePoset | None = None) -> ValidTriple:
    """Transport p over A to (W, V, U) over the opposite poset."""
    host = op_host if op_host is not None else p.host.opposite()
    return ValidTriple(host, p.W, p.V, p.U)


@dataclass(frozen=True)
class BasicOpen:
    """A basic open set of the type-space topology, named by a finite triple.

    The defining triple lives over a finite subset of the host; membership of
    a full type is containment part by part.
    """

    host: FinitePoset
    U0: frozenset[int]
    V0: frozenset[int]
    W0: frozenset[int]

    def __post_init__(self):
        support = self.U0 | self.V0 | self.W0
        sub = self.host.restrict(support)
        if not triple_conditions_hold(sub, self.U0, self.V0, self.W0):
            raise InvalidTriple(f"basic open ({sorted(self.U0)}, {sorted(self.V0)}, {sorted(self.W0)})")

    def contains(self, p: ValidTriple) -> bool:
        return self.U0 <= p.U and self.V0 <= p.V and self.W0 <= p.W


def basic_open(host: FinitePoset, U0, V0, W0) -> BasicOpen:
    return BasicOpen(host, frozenset(U0), frozenset(V0), frozenset(W0))


def type_distance(p: ValidTriple, q: ValidTriple, enumeration: Sequence[int]) -> Fraction:
    """1/(m+1) for the least m with p and q classifying element a_m differently."""
    _same_host(p, q)
    for m, a in enumerate(enumeration):
        pc = 0 if a in p.U else (1 if a in p.V else 2)
        qc = 0 if a in q.U else (1 if a in q.V else 2)
        if pc != qc:
            return Fraction(1, m + 1)
    return Fraction(0)
