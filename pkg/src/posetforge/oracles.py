"""Brute-force oracles, kept independent of the type-space formulas.

Validity of a partition is decided by actually building the one-point
extension and scanning it; pairwise validity by building the two-point
extension; lattice bounds by exhaustive search in the brute-force order.
The plain generic builder realizes finite valid triples in FIFO order with
no group machinery, for the upward-closure forcing checks.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations, product

from . import kernels
from .poset_core import FinitePoset, Relation

Triple = tuple[frozenset[int], frozenset[int], frozenset[int]]


def _extension_matrix(host: FinitePoset, classifications: list[dict[int, int]]) -> bytearray:
    """Matrix of host plus one virtual point per classification map
    (element -> code 0 below / 1 incomparable / 2 above the new point)."""
    base = len(host.elements)
    n = base + len(classifications)
    m = bytearray(n * n)
    old = host.matrix()
    for i in range(base):
        for j in range(base):
            m[i * n + j] = old[i * base + j]
    for k, cls in enumerate(classifications):
        e = base + k
        for i, x in enumerate(host.elements):
            c = cls[x]
            if c == 0:
                m[i * n + e] = Relation.LT
                m[e * n + i] = Relation.GT
            elif c == 2:
                m[i * n + e] = Relation.GT
                m[e * n + i] = Relation.LT
    return m


def _classification(U, V, W) -> dict[int, int]:
    out = {}
    for x in U:
        out[x] = 0
    for x in V:
        out[x] = 1
    for x in W:
        out[x] = 2
    return out


def oracle_triple_valid(host: FinitePoset, U, V, W) -> bool:
    """Does a one-point extension with this partition pass the poset scan?"""
    m = _extension_matrix(host, [_classification(U, V, W)])
    return kernels.check_strict(m, len(host.elements) + 1) == -1


def oracle_pair_valid(host: FinitePoset, p: Triple, q: Triple, rel_bc: Relation) -> bool:
    """Two-point extension with tp(b)=p, tp(c)=q and the given b-c relation."""
    m = _extension_matrix(host, [_classification(*p), _classification(*q)])
    n = len(host.elements) + 2
    b, c = n - 2, n - 1
    m[b * n + c] = int(rel_bc)
    m[c * n + b] = int(rel_bc.flip())
    return kernels.check_strict(m, n) == -1


def oracle_all_triples(host: FinitePoset) -> list[Triple]:
    els = host.elements
    out = []
    for codes in product(range(3), repeat=len(els)):
        U = frozenset(e for e, c in zip(els, codes) if c == 0)
        V = frozenset(e for e, c in zip(els, codes) if c == 1)
        W = frozenset(e for e, c in zip(els, codes) if c == 2)
        if oracle_triple_valid(host, U, V, W):
            out.append((U, V, W))
    return out


def oracle_ll(host: FinitePoset, p: Triple, q: Triple) -> bool:
    return p != q and oracle_pair_valid(host, p, q, Relation.LT)


class BruteOrder:
    """The order on all external types of a host, computed entirely from the
    two-point extension oracle, with bitmask bounds for fast inf/sup."""

    def __init__(self, host: FinitePoset):
        self.host = host
        self.triples = oracle_all_triples(host)
        self.index = {t: i for i, t in enumerate(self.triples)}
        T = len(self.triples)
        self.below = [0] * T  # j-th bit set iff t_j is <=-below t_i
        self.above = [0] * T
        for i, p in enumerate(self.triples):
            for j, q in enumerate(self.triples):
                if i == j or oracle_ll(host, q, p):
                    self.below[i] |= 1 << j
                if i == j or oracle_ll(host, p, q):
                    self.above[i] |= 1 << j

    def _extremum(self, masks, p: Triple, q: Triple) -> Triple | None:
        common = masks[self.index[p]] & masks[self.index[q]]
        m = common
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            if masks[j] & common == common:
                return self.triples[j]
        return None

    def meet(self, p: Triple, q: Triple) -> Triple | None:
        return self._extremum(self.below, p, q)

    def join(self, p: Triple, q: Triple) -> Triple | None:
        return self._extremum(self.above, p, q)


def brute_meet(host: FinitePoset, p: Triple, q: Triple, order: BruteOrder | None = None) -> Triple | None:
    """Greatest lower bound of p, q in the brute-force order, or None."""
    return (order or BruteOrder(host)).meet(p, q)


def brute_join(host: FinitePoset, p: Triple, q: Triple, order: BruteOrder | None = None) -> Triple | None:
    return (order or BruteOrder(host)).join(p, q)


# -- plain genericity builder ---------------------------------------------------


def plain_triple_stream(element_count: int, support_bound: int = 3):
    """Deterministic enumeration of candidate partitions over an id prefix."""
    for size in range(1, support_bound + 1):
        for combo in combinations(range(element_count), size):
            for codes in product(range(3), repeat=size):
                U = frozenset(e for e, c in zip(combo, codes) if c == 0)
                V = frozenset(e for e, c in zip(combo, codes) if c == 1)
                W = frozenset(e for e, c in zip(combo, codes) if c == 2)
                yield (U, V, W)


def plain_generic_poset(n_points: int, support_bound: int = 3) -> tuple[FinitePoset, list[Triple]]:
    """Grow a poset by realizing finite valid triples in FIFO order.

    No stabilizer machinery: the witness scheduler of the plain genericity
    argument.  Returns the poset and the list of triples realized, in order.
    """
    poset = FinitePoset.from_lt_pairs([0, 1], [])
    realized: list[Triple] = []
    fifo: deque[Triple] = deque()
    seen = set()
    streamed_upto = 0

    def pull(upto: int):
        nonlocal streamed_upto
        if upto <= streamed_upto:
            return
        for t in plain_triple_stream(upto, support_bound):
            if t not in seen:
                seen.add(t)
                fifo.append(t)
        streamed_upto = upto

    pull(len(poset))
    while len(poset) < n_points:
        if not fifo:
            pull(len(poset))
            continue
        U, V, W = fifo.popleft()
        support = U | V | W
        if not oracle_triple_valid(poset.restrict(support), U, V, W):
            continue
        # extend the full poset: below U (and its down-set), above W's up-set
        full_U = poset.down_closure(U)
        full_W = poset.up_closure(W)
        if full_U & full_W:
            continue
        cls = {x: 1 for x in poset.elements}
        for x in full_U:
            cls[x] = 0
        for x in full_W:
            cls[x] = 2
        m = _extension_matrix(poset, [cls])
        if kernels.check_strict(m, len(poset) + 1) != -1:
            continue
        e = len(poset.elements)
        poset = FinitePoset(poset.elements + (e,), bytes(m), _checked=True)
        realized.append((U, V, W))
        pull(len(poset))
    return poset, realized


def plain_would_enqueue(element_count: int, triple: Triple, support_bound: int = 3) -> bool:
    """Whether the deterministic stream eventually emits this triple."""
    U, V, W = triple
    support = U | V | W
    return len(support) <= support_bound and all(0 <= x < element_count for x in support)
