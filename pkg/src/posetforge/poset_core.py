"""Finite strict partial orders and the brute-force utilities built on them.

Element ids are opaque integers; provenance (which sort an id belongs to in
the staged construction) lives in `universe`, not here.  Relations are kept
in a flat dense matrix so the kernels can scan them; every constructor runs
the full coherence scan, so a FinitePoset in hand is always a strict poset.
"""

from __future__ import annotations

import json
from enum import IntEnum
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping

from . import kernels
from .errors import CycleDetected, SizeBound, UnknownElement

ENUMERATION_BOUND = 5
AUTOMORPHISM_BOUND = 10


class Relation(IntEnum):
    INC = 0
    LT = 1
    GT = 2

    def flip(self) -> "Relation":
        if self is Relation.LT:
            return Relation.GT
        if self is Relation.GT:
            return Relation.LT
        return Relation.INC


class FinitePoset:
    """Immutable labelled strict poset over a tuple of integer element ids."""

    __slots__ = ("elements", "_index", "_rel")

    def __init__(self, elements: Iterable[int], rel: bytes, _checked: bool = False):
        self.elements = tuple(elements)
        self._index = {e: i for i, e in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise ValueError("duplicate element ids")
        n = len(self.elements)
        if len(rel) != n * n:
            raise ValueError("relation matrix has wrong shape")
        self._rel = bytes(rel)
        if not _checked:
            bad = kernels.check_strict(self._rel, n)
            if bad >= 0:
                i, j = divmod(bad, n)
                raise ValueError(f"not a strict poset at ({self.elements[i]}, {self.elements[j]})")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_relations(cls, elements: Iterable[int], rel: Mapping[tuple[int, int], Relation]) -> "FinitePoset":
        elements = tuple(elements)
        index = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        m = bytearray(n * n)
        for (x, y), r in rel.items():
            if x not in index or y not in index:
                raise UnknownElement(f"({x}, {y})")
            m[index[x] * n + index[y]] = int(r)
        return cls(elements, bytes(m))

    @classmethod
    def from_lt_pairs(cls, elements: Iterable[int], pairs: Iterable[tuple[int, int]]) -> "FinitePoset":
        """Close the given x<y pairs transitively; all other pairs INC."""
        elements = tuple(elements)
        index = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        m = bytearray(n * n)
        for x, y in pairs:
            if x not in index or y not in index:
                raise UnknownElement(f"({x}, {y})")
            if x == y:
                raise CycleDetected(f"{x} < {x}")
            m[index[x] * n + index[y]] = int(Relation.LT)
            m[index[y] * n + index[x]] = int(Relation.GT)
        bad = kernels.close_strict(m, n)
        if bad >= 0:
            raise CycleDetected(f"{elements[bad // n]} < itself after closure")
        return cls(elements, bytes(m), _checked=True)

    # -- queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, e: int) -> bool:
        return e in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FinitePoset)
            and self.elements == other.elements
            and self._rel == other._rel
        )

    def __hash__(self) -> int:
        return hash((self.elements, self._rel))

    def __repr__(self) -> str:
        return f"FinitePoset({len(self.elements)} elements, {len(self.lt_pairs())} lt pairs)"

    def index_of(self, e: int) -> int:
        try:
            return self._index[e]
        except KeyError:
            raise UnknownElement(str(e)) from None

    def rel(self, x: int, y: int) -> Relation:
        if x == y:
            raise UnknownElement(f"rel({x},{x}) is undefined on a strict order")
        n = len(self.elements)
        return Relation(self._rel[self.index_of(x) * n + self.index_of(y)])

    def lt(self, x: int, y: int) -> bool:
        return x != y and self.rel(x, y) is Relation.LT

    def leq(self, x: int, y: int) -> bool:
        return x == y or self.rel(x, y) is Relation.LT

    def lt_pairs(self) -> list[tuple[int, int]]:
        n = len(self.elements)
        out = []
        for i in range(n):
            for j in range(n):
                if self._rel[i * n + j] == Relation.LT:
                    out.append((self.elements[i], self.elements[j]))
        return out

    def matrix(self) -> bytes:
        return self._rel

    # -- closures and derived posets -----------------------------------

    def down_closure(self, ids: Iterable[int]) -> frozenset[int]:
        """{v | exists w in ids with v <= w}, inclusive of ids."""
        out = set()
        for w in ids:
            wi = self.index_of(w)
            out.add(w)
            n = len(self.elements)
            for i in range(n):
                if self._rel[wi * n + i] == Relation.GT:
                    out.add(self.elements[i])
        return frozenset(out)

    def up_closure(self, ids: Iterable[int]) -> frozenset[int]:
        out = set()
        for w in ids:
            wi = self.index_of(w)
            out.add(w)
            n = len(self.elements)
            for i in range(n):
                if self._rel[wi * n + i] == Relation.LT:
                    out.add(self.elements[i])
        return frozenset(out)

    def opposite(self) -> "FinitePoset":
        n = len(self.elements)
        m = bytearray(self._rel)
        for i in range(n * n):
            if m[i] == Relation.LT:
                m[i] = Relation.GT
            elif m[i] == Relation.GT:
                m[i] = Relation.LT
        return FinitePoset(self.elements, bytes(m), _checked=True)

    def restrict(self, ids: Iterable[int]) -> "FinitePoset":
        ids = [e for e in self.elements if e in set(ids)]
        n = len(self.elements)
        k = len(ids)
        m = bytearray(k * k)
        for a, x in enumerate(ids):
            xi = self._index[x]
            for b, y in enumerate(ids):
                m[a * k + b] = self._rel[xi * n + self._index[y]]
        return FinitePoset(ids, bytes(m), _checked=True)

    def automorphisms(self, max_size: int = AUTOMORPHISM_BOUND) -> list[dict[int, int]]:
        """All relation-preserving bijections, identity first."""
        n = len(self.elements)
        if n > max_size:
            raise SizeBound(f"|P| = {n} exceeds bound {max_size}")
        perms = kernels.automorphisms(self._rel, n)
        return [
            {self.elements[i]: self.elements[p[i]] for i in range(n)}
            for p in perms
        ]

    # -- hasse / serialization -----------------------------------------

    def covers(self) -> list[tuple[int, int]]:
        """Edges of the transitive reduction (x covered by y)."""
        n = len(self.elements)
        out = []
        for i in range(n):
            for j in range(n):
                if self._rel[i * n + j] != Relation.LT:
                    continue
                if any(
                    self._rel[i * n + k] == Relation.LT and self._rel[k * n + j] == Relation.LT
                    for k in range(n)
                ):
                    continue
                out.append((self.elements[i], self.elements[j]))
        return out

    def to_json(self) -> dict:
        return {
            "elements": list(self.elements),
            "lt": [list(p) for p in sorted(self.covers())],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FinitePoset":
        return cls.from_lt_pairs(doc["elements"], [tuple(p) for p in doc["lt"]])

    def to_dot(self, labels: Mapping[int, str] | None = None, colors: Mapping[int, str] | None = None) -> str:
        lines = ["digraph poset {", "  rankdir=BT;"]
        for e in self.elements:
            label = labels[e] if labels else str(e)
            attrs = [f'label="{label}"']
            if colors and e in colors:
                attrs.append(f'style=filled fillcolor="{colors[e]}"')
            lines.append(f'  n{e} [{" ".join(attrs)}];')
        for x, y in sorted(self.covers()):
            lines.append(f"  n{x} -> n{y};")
        lines.append("}")
        return "\n".join(lines)


def transitive_close(elements: Iterable[int], generating_pairs: Iterable[tuple[int, int]]) -> FinitePoset:
    """Smallest transitive relation containing the pairs; raises CycleDetected."""
    return FinitePoset.from_lt_pairs(elements, generating_pairs)


def down_closure(p: FinitePoset, ids: Iterable[int]) -> frozenset[int]:
    return p.down_closure(ids)


def up_closure(p: FinitePoset, ids: Iterable[int]) -> frozenset[int]:
    return p.up_closure(ids)


def opposite(p: FinitePoset) -> FinitePoset:
    return p.opposite()


def enumerate_posets(n: int) -> Iterator[FinitePoset]:
    """All labelled posets on elements 0..n-1, each exactly once.

    Brute force: assign one of {LT, GT, INC} to each unordered pair and keep
    the transitive assignments.  Counts follow A001035 (1, 3, 19, 219, ...).
    """
    if n > ENUMERATION_BOUND:
        raise SizeBound(f"n = {n} exceeds bound {ENUMERATION_BOUND}")
    elements = tuple(range(n))
    pairs = list(combinations(range(n), 2))
    for codes in product((Relation.INC, Relation.LT, Relation.GT), repeat=len(pairs)):
        m = bytearray(n * n)
        for (i, j), c in zip(pairs, codes):
            m[i * n + j] = int(c)
            m[j * n + i] = int(c.flip())
        if kernels.check_strict(m, n) == -1:
            yield FinitePoset(elements, bytes(m), _checked=True)


def poset_to_json_str(p: FinitePoset) -> str:
    return json.dumps(p.to_json(), sort_keys=True)


def poset_from_json_str(text: str) -> FinitePoset:
    return FinitePoset.from_json(json.loads(text))
