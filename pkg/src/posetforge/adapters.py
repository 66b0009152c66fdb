"""Countably infinite host posets, presented through cofinality adapters.

An adapter answers, stably across truncation growth: the pairwise relation
of elements a_i (by index), the descending-chain rank c_a of each element
(elements counted, so a minimal element has rank 1), whether the subsets
named by a SetRule admit finite dominating/codominating subsets, and the
generator automorphisms of the host.  Six hosts are built in; `chain-down`
is the one whose fixed limit needs the opposite-poset reduction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .errors import OracleUnavailable
from .poset_core import Relation

INFINITE = float("inf")


@dataclass(frozen=True)
class SetRule:
    """A definable subset of the host, named by a rank rule."""

    kind: str  # all | none | c_le | c_gt | c_finite | c_infinite
    n: int | None = None

    def contains(self, adapter: "CofinalityAdapter", i: int) -> bool:
        if self.kind == "all":
            return True
        if self.kind == "none":
            return False
        r = adapter.down_rank(i)
        if self.kind == "c_le":
            return r <= self.n
        if self.kind == "c_gt":
            return r > self.n
        if self.kind == "c_finite":
            return r != INFINITE
        if self.kind == "c_infinite":
            return r == INFINITE
        raise OracleUnavailable(f"unknown rule {self.kind}")

    def to_json(self) -> dict:
        doc = {"rule": self.kind}
        if self.n is not None:
            doc["n"] = self.n
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SetRule":
        return cls(doc["rule"], doc.get("n"))


ALL = SetRule("all")
NONE = SetRule("none")


@dataclass(frozen=True)
class Generator:
    """A host automorphism given as a total index map with its inverse."""

    name: str
    fwd: Callable[[int], int]
    inv: Callable[[int], int]


def _transposition(i: int, j: int, name: str | None = None) -> Generator:
    def f(k: int) -> int:
        return j if k == i else (i if k == j else k)

    return Generator(name or f"swap({i},{j})", f, f)


class CofinalityAdapter:
    """Base adapter; subclasses fill in the host-specific rank structure."""

    name = "abstract"

    # pairwise relation between a_i and a_j, i != j
    def rel_indices(self, i: int, j: int) -> Relation:
        raise NotImplementedError

    def down_rank(self, i: int):
        raise NotImplementedError

    # rank-profile oracle bits
    def sup_rank_infinite(self) -> bool:
        raise NotImplementedError

    def has_infinite_rank(self) -> bool:
        raise NotImplementedError

    def max_finite_rank(self):
        """Largest finite rank attained, or None when unbounded."""
        raise NotImplementedError

    def least_infinite_level(self) -> int:
        """Least n with {a : c_a = n} infinite; only called when sup is finite."""
        raise NotImplementedError

    def generators(self) -> tuple[Generator, ...]:
        return ()

    def min_initial(self) -> int:
        """How many host elements must materialize up front so every
        generator restricts to a bijection of the materialized prefix."""
        return 1

    def materialization_block(self) -> int:
        return 1

    def opposite(self) -> "CofinalityAdapter":
        raise OracleUnavailable(f"{self.name} does not provide an opposite adapter")

    # -- extent reasoning (shared) --------------------------------------

    def rule_extent(self, rule: SetRule) -> str:
        """Classify a rule's subset as 'all', 'empty' or 'proper'."""
        if rule.kind == "all":
            return "all"
        if rule.kind == "none":
            return "empty"
        if rule.kind == "c_finite":
            if not self.has_infinite_rank():
                return "all"
            if self.max_finite_rank() is None and not self.sup_rank_infinite():
                return "proper"
            return "empty" if self._all_ranks_infinite() else "proper"
        if rule.kind == "c_infinite":
            if not self.has_infinite_rank():
                return "empty"
            return "all" if self._all_ranks_infinite() else "proper"
        if rule.kind == "c_le":
            mfr = self.max_finite_rank()
            if not self.has_infinite_rank() and mfr is not None and mfr <= rule.n:
                return "all"
            if rule.n <= 0:
                return "empty"
            return "proper"
        if rule.kind == "c_gt":
            mfr = self.max_finite_rank()
            if rule.n <= 0:
                return "all"
            if not self.has_infinite_rank() and mfr is not None and mfr <= rule.n:
                return "empty"
            return "proper"
        raise OracleUnavailable(f"unknown rule {rule.kind}")

    def _all_ranks_infinite(self) -> bool:
        return False

    def normalize_rule(self, rule: SetRule) -> SetRule:
        extent = self.rule_extent(rule)
        if extent == "all":
            return ALL
        if extent == "empty":
            return NONE
        return rule

    # -- dominating-set oracle ------------------------------------------

    def whole_domain_dominated(self) -> bool:
        """Whether some finite V0 has V0^- = A.  False for every built-in
        except chain-down (where {a_0} works)."""
        return False

    def whole_domain_codominated(self) -> bool:
        return False

    def admits_finite_dominating(self, rule: SetRule) -> bool:
        extent = self.rule_extent(rule)
        if extent == "empty":
            return True
        if extent == "all":
            return self.whole_domain_dominated()
        raise OracleUnavailable(f"{self.name}: dominating query for proper rule {rule}")

    def admits_finite_codominating(self, rule: SetRule) -> bool:
        extent = self.rule_extent(rule)
        if extent == "empty":
            return True
        if extent == "all":
            return self.whole_domain_codominated()
        raise OracleUnavailable(f"{self.name}: codominating query for proper rule {rule}")

    def finite_set_dominates(self, indices, rule: SetRule) -> bool:
        """Is the rule's subset contained in the downward closure of the
        given finite index set?  Used by the minimality audit."""
        extent = self.rule_extent(rule)
        if extent == "empty":
            return True
        if extent == "all":
            return self._finite_set_dominates_all(frozenset(indices))
        raise OracleUnavailable(f"{self.name}: containment query for proper rule {rule}")

    def _finite_set_dominates_all(self, indices: frozenset[int]) -> bool:
        return False


class AntichainAdapter(CofinalityAdapter):
    """Countably infinite antichain; every rank is 1."""

    name = "antichain"

    def rel_indices(self, i, j):
        return Relation.INC

    def down_rank(self, i):
        return 1

    def sup_rank_infinite(self):
        return False

    def has_infinite_rank(self):
        return False

    def max_finite_rank(self):
        return 1

    def least_infinite_level(self):
        return 1

    def generators(self):
        return (_transposition(0, 1),)

    def min_initial(self):
        return 2

    def opposite(self):
        return self


class ChainUpAdapter(CofinalityAdapter):
    """Ascending omega-chain a_0 < a_1 < ...; ranks i+1, rigid."""

    name = "chain-up"

    def rel_indices(self, i, j):
        return Relation.LT if i < j else Relation.GT

    def down_rank(self, i):
        return i + 1

    def sup_rank_infinite(self):
        return True

    def has_infinite_rank(self):
        return False

    def max_finite_rank(self):
        return None

    def least_infinite_level(self):
        raise OracleUnavailable("sup of ranks is infinite")

    def whole_domain_codominated(self):
        return True  # {a_0}^+ = A

    def opposite(self):
        return ChainDownAdapter()


class ChainDownAdapter(CofinalityAdapter):
    """Descending omega-chain a_0 > a_1 > ...; every rank is infinite."""

    name = "chain-down"

    def rel_indices(self, i, j):
        return Relation.GT if i < j else Relation.LT

    def down_rank(self, i):
        return INFINITE

    def sup_rank_infinite(self):
        return True

    def has_infinite_rank(self):
        return True

    def max_finite_rank(self):
        return None

    def _all_ranks_infinite(self):
        return True

    def least_infinite_level(self):
        raise OracleUnavailable("sup of ranks is infinite")

    def whole_domain_dominated(self):
        return True  # {a_0}^- = A

    def _finite_set_dominates_all(self, indices):
        return 0 in indices

    def opposite(self):
        return ChainUpAdapter()


class TwoChainsAdapter(CofinalityAdapter):
    """Two disjoint ascending chains on even/odd indices, swapped by G."""

    name = "two-chains"

    def rel_indices(self, i, j):
        if i % 2 != j % 2:
            return Relation.INC
        return Relation.LT if i < j else Relation.GT

    def down_rank(self, i):
        return i // 2 + 1

    def sup_rank_infinite(self):
        return True

    def has_infinite_rank(self):
        return False

    def max_finite_rank(self):
        return None

    def least_infinite_level(self):
        raise OracleUnavailable("sup of ranks is infinite")

    def generators(self):
        def f(k: int) -> int:
            return k + 1 if k % 2 == 0 else k - 1

        return (Generator("swap-chains", f, f),)

    def min_initial(self):
        return 2

    def materialization_block(self):
        return 2


class StarAdapter(CofinalityAdapter):
    """One bottom element a_0 below an infinite antichain of leaves."""

    name = "star"

    def rel_indices(self, i, j):
        if i == 0:
            return Relation.LT
        if j == 0:
            return Relation.GT
        return Relation.INC

    def down_rank(self, i):
        return 1 if i == 0 else 2

    def sup_rank_infinite(self):
        return False

    def has_infinite_rank(self):
        return False

    def max_finite_rank(self):
        return 2

    def least_infinite_level(self):
        return 2  # level 1 is just {a_0}

    def generators(self):
        return (_transposition(1, 2), _transposition(2, 3))

    def min_initial(self):
        return 4

    def whole_domain_codominated(self):
        return True  # {a_0}^+ = A


class RandomFixedSeedAdapter(CofinalityAdapter):
    """Random poset: edge a_i < a_j (i < j) with probability 1/3, then the
    transitive closure.  Edges point from lower to higher index, so every
    recorded relation is final as the truncation grows, all ranks are
    finite, and no finite subset dominates the whole host."""

    name = "random-fixed-seed"
    EDGE_SEED = 99991

    def __init__(self):
        self._reach: list[int] = []  # bitmask of strictly-below indices
        self._rank: list[int] = []

    def _grow(self, upto: int) -> None:
        while len(self._reach) <= upto:
            j = len(self._reach)
            reach = 0
            for i in range(j):
                if random.Random((self.EDGE_SEED, i, j)).random() < 1 / 3:
                    reach |= (1 << i) | self._reach[i]
            rank = 1
            m = reach
            while m:
                i = (m & -m).bit_length() - 1
                m &= m - 1
                if self._rank[i] + 1 > rank:
                    rank = self._rank[i] + 1
            self._reach.append(reach)
            self._rank.append(rank)

    def rel_indices(self, i, j):
        self._grow(max(i, j))
        if i < j:
            return Relation.LT if (self._reach[j] >> i) & 1 else Relation.INC
        return Relation.GT if (self._reach[i] >> j) & 1 else Relation.INC

    def down_rank(self, i):
        self._grow(i)
        return self._rank[i]

    def sup_rank_infinite(self):
        return True

    def has_infinite_rank(self):
        return False

    def max_finite_rank(self):
        return None

    def least_infinite_level(self):
        raise OracleUnavailable("sup of ranks is infinite")


BUILTIN_ADAPTERS: dict[str, Callable[[], CofinalityAdapter]] = {
    "antichain": AntichainAdapter,
    "chain-up": ChainUpAdapter,
    "chain-down": ChainDownAdapter,
    "two-chains": TwoChainsAdapter,
    "star": StarAdapter,
    "random-fixed-seed": RandomFixedSeedAdapter,
}


def get_adapter(name: str) -> CofinalityAdapter:
    try:
        return BUILTIN_ADAPTERS[name]()
    except KeyError:
        raise OracleUnavailable(f"unknown adapter {name!r}") from None
