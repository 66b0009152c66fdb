"""Limit detection over adapter-backed infinite hosts.

Over a finite poset every external type is isolated, so the operations here
accept only adapters.  A G-fixed type in lambda(A) is described by a pair
of set rules (V first, W second); the fixed-limit algorithm picks the rank
partition and classifies it as an upper limit directly, or flags the
opposite-poset reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .adapters import ALL, NONE, CofinalityAdapter, SetRule
from .errors import OracleUnavailable


class LimitMode(Enum):
    UPPER = "upper"
    NEEDS_OP_REDUCTION = "needs-op-reduction"


@dataclass(frozen=True)
class TripleDescriptor:
    """A type (empty, V, W) in lambda(A), with V and W named by rules."""

    v_rule: SetRule
    w_rule: SetRule

    def classify(self, adapter: CofinalityAdapter, i: int) -> str:
        if self.v_rule.contains(adapter, i):
            return "V"
        if self.w_rule.contains(adapter, i):
            return "W"
        raise OracleUnavailable(f"element {i} matched neither rule")

    def in_v(self, adapter: CofinalityAdapter, i: int) -> bool:
        return self.v_rule.contains(adapter, i)

    def in_w(self, adapter: CofinalityAdapter, i: int) -> bool:
        return self.w_rule.contains(adapter, i)

    def to_json(self) -> dict:
        return {"V": self.v_rule.to_json(), "W": self.w_rule.to_json()}

    @classmethod
    def from_json(cls, doc: dict) -> "TripleDescriptor":
        return cls(SetRule.from_json(doc["V"]), SetRule.from_json(doc["W"]))


def is_upper_limit(adapter: CofinalityAdapter, p: TripleDescriptor) -> bool:
    """True iff no finite V0 has V0^- = V_p (types in lambda only)."""
    return not adapter.admits_finite_dominating(p.v_rule)


def is_lower_limit(adapter: CofinalityAdapter, p: TripleDescriptor) -> bool:
    return not adapter.admits_finite_codominating(p.w_rule)


def op_reduce(p: TripleDescriptor) -> TripleDescriptor:
    """shift_down(op_type(p)): the descriptor to rebuild with over the
    opposite host.  Only extent-normalized rules transport safely."""
    for rule in (p.v_rule, p.w_rule):
        if rule.kind not in ("all", "none"):
            raise OracleUnavailable(f"cannot transport proper rule {rule} to the opposite host")
    return TripleDescriptor(v_rule=p.w_rule, w_rule=p.v_rule)


def fixed_limit(adapter: CofinalityAdapter) -> tuple[TripleDescriptor, LimitMode]:
    """The Aut(A)-fixed upper-or-lower limit of lambda(A), from chain ranks.

    Infinite rank sup: V = {c_a finite}, W = {c_a infinite}.  Finite sup:
    V = {c_a <= n} for the least n whose level is infinite.  The result is
    generator-fixed because automorphisms preserve ranks.  Mode is UPPER
    when the dominating-set oracle refutes a finite dominating subset of V;
    otherwise the caller rebuilds over the opposite host with op_reduce.
    """
    if adapter.sup_rank_infinite():
        v_rule = adapter.normalize_rule(SetRule("c_finite"))
        w_rule = adapter.normalize_rule(SetRule("c_infinite"))
    else:
        n = adapter.least_infinite_level()
        v_rule = adapter.normalize_rule(SetRule("c_le", n))
        w_rule = adapter.normalize_rule(SetRule("c_gt", n))
    p = TripleDescriptor(v_rule, w_rule)
    if is_upper_limit(adapter, p):
        return p, LimitMode.UPPER
    if not is_lower_limit(adapter, p):
        raise OracleUnavailable("adapter claims the fixed type is neither an upper nor a lower limit")
    return p, LimitMode.NEEDS_OP_REDUCTION


def resolve_build_target(adapter: CofinalityAdapter) -> tuple[CofinalityAdapter, TripleDescriptor, bool]:
    """Adapter and UPPER-mode descriptor to actually build over.

    Returns (effective adapter, p, op_reduced).  For a NEEDS_OP_REDUCTION
    host this is the opposite adapter with the shifted opposite type, which
    must then come out UPPER.
    """
    p, mode = fixed_limit(adapter)
    if mode is LimitMode.UPPER:
        return adapter, p, False
    op = adapter.opposite()
    p_op = op_reduce(p)
    if not is_upper_limit(op, p_op):
        raise OracleUnavailable("opposite-poset reduction did not produce an upper limit")
    return op, p_op, True


ALL_RULE = ALL
NONE_RULE = NONE
