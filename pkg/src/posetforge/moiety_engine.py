"""Lazy three-sorted auxiliary structure backing the moiety families.

The engine grows a poset N partitioned into sorts 0, 1, 2 under the rules:
relations across sorts only point upward in sort order, and sort 1 is an
antichain.  Sort 1 is identified with the antichain S of the main
construction; a SIGMA handle names the set {s in N1 | s < z} for a sort-2
generator z, a SIGMA_PRIME handle the set {s | v < s} for a sort-0
generator v.  All recorded relations are final, so every sandwich
guarantee issued by find_Z is preserved by construction: it is exactly
transitivity of N.

Membership of a sort-1 point in a handle is decided once, when the point
materializes, by a seeded genericity policy constrained by the recorded
relations.  Distinctness of handles is witnessed by explicit separating
points; freshness demands ("avoid") mint their certificates eagerly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import (
    ForcedZConflictsAvoid,
    InconsistentWithK,
    PreconditionViolated,
    UnknownElement,
)
from .poset_core import FinitePoset, Relation

SIGMA = "sigma"
SIGMA_PRIME = "sigma_prime"

# sort s may sit strictly below sort t
_LEGAL_BELOW = {0: (0,), 1: (0,), 2: (0, 1, 2)}


@dataclass(frozen=True)
class MoietyHandle:
    kind: str
    generator: int  # node id in N
    hid: int  # mint index, used for deterministic ordering

    def to_json(self) -> dict:
        return {"kind": self.kind, "generator": self.generator}


def k_check(poset: FinitePoset, chi: dict[int, int]) -> bool:
    """All clauses of the sort condition on a frozen snapshot."""
    els = poset.elements
    if set(chi) != set(els) or any(chi[e] not in (0, 1, 2) for e in els):
        return False
    for x in els:
        for y in els:
            if x == y:
                continue
            r = poset.rel(x, y)
            if r is Relation.LT and chi[x] not in _LEGAL_BELOW[chi[y]]:
                return False
            if chi[x] == chi[y] == 1 and r is not Relation.INC:
                return False
    return True


class MoietyEngine:
    def __init__(self, seed: int = 0):
        self.rng = random.Random((seed, "moiety"))
        self.sort: list[int] = []
        self.down: list[int] = []  # strictly-below bitmasks
        self.up: list[int] = []
        self.n1_nodes: list[int] = []  # s-index -> node id
        self.n1_index: dict[int, int] = {}
        self.handles: list[MoietyHandle] = []
        self._gen_handle: dict[int, MoietyHandle] = {}
        self.sep_certs: dict[tuple[int, int], int] = {}  # (hid,hid) -> s-index
        self.point_tags: list[str] = []
        self._agenda_cursor = 0
        self.agenda_counts: dict[int, list[int]] = {}  # hid -> [in, out]
        self.step_checks = 0

    # -- basic queries ----------------------------------------------------

    def node_count(self) -> int:
        return len(self.sort)

    def n1_count(self) -> int:
        return len(self.n1_nodes)

    def rel_nodes(self, x: int, y: int) -> Relation:
        if (self.down[y] >> x) & 1:
            return Relation.LT
        if (self.down[x] >> y) & 1:
            return Relation.GT
        return Relation.INC

    def member(self, h: MoietyHandle, s_index: int) -> bool:
        if s_index >= len(self.n1_nodes):
            raise UnknownElement(f"s_{s_index} not materialized")
        node = self.n1_nodes[s_index]
        if h.kind == SIGMA:
            return bool((self.down[h.generator] >> node) & 1)
        return bool((self.up[h.generator] >> node) & 1)

    def member_mask(self, h: MoietyHandle) -> int:
        """Membership of all materialized sort-1 points, as a bitmask over
        s-indices (not node ids)."""
        gen_row = self.down[h.generator] if h.kind == SIGMA else self.up[h.generator]
        mask = 0
        for j, node in enumerate(self.n1_nodes):
            if (gen_row >> node) & 1:
                mask |= 1 << j
        return mask

    def members(self, h: MoietyHandle) -> list[int]:
        mask = self.member_mask(h)
        out = []
        j = 0
        while mask:
            if mask & 1:
                out.append(j)
            mask >>= 1
            j += 1
        return out

    def subset_certified(self, inner: MoietyHandle, outer: MoietyHandle) -> bool:
        """Whether inner's set is provably contained in outer's, from the
        recorded generator relations alone."""
        if inner.hid == outer.hid:
            return True
        if inner.kind != outer.kind:
            return False
        if inner.kind == SIGMA:
            return self.rel_nodes(inner.generator, outer.generator) is Relation.LT
        return self.rel_nodes(outer.generator, inner.generator) is Relation.LT

    def intersects_certified(self, sigma_h: MoietyHandle, prime_h: MoietyHandle) -> bool:
        """Cross-kind intersection: nonempty iff the sort-0 generator sits
        below the sort-2 generator (a between-point then witnesses it)."""
        return self.rel_nodes(prime_h.generator, sigma_h.generator) is Relation.LT

    # -- one-point extension core ------------------------------------------

    def _legal_lower_mask(self, new_sort: int) -> int:
        mask = 0
        for x in range(len(self.sort)):
            if self.sort[x] in _LEGAL_BELOW[new_sort]:
                mask |= 1 << x
        return mask

    def _bits(self, mask: int):
        while mask:
            b = mask & -mask
            yield b.bit_length() - 1
            mask ^= b

    def _extend(self, new_sort: int, below, above, incomp, fill_policy: str, tag: str) -> int:
        """Add one point with pinned relations; every other relation is
        decided by `fill_policy` ('incomparable' or 'generic').  Raises
        InconsistentWithK when the pins cannot coexist with the recorded
        final relations and the sort rules."""
        lower = 0
        upper = 0
        inc = 0
        legal_lower = self._legal_lower_mask(new_sort)
        legal_upper = 0
        for y in range(len(self.sort)):
            if new_sort in _LEGAL_BELOW[self.sort[y]]:
                legal_upper |= 1 << y

        def add_lower(x: int) -> bool:
            nonlocal lower
            grp = self.down[x] | (1 << x)
            new = grp & ~lower
            if not new:
                return True
            if new & ~legal_lower or new & upper or new & inc:
                return False
            for b in self._bits(new):
                if upper & ~self.up[b]:
                    return False
            lower |= new
            return True

        def add_upper(y: int) -> bool:
            nonlocal upper
            grp = self.up[y] | (1 << y)
            new = grp & ~upper
            if not new:
                return True
            if new & ~legal_upper or new & lower or new & inc:
                return False
            for b in self._bits(new):
                if lower & ~self.down[b]:
                    return False
            upper |= new
            return True

        for x in below:
            if not add_lower(x):
                raise InconsistentWithK(f"cannot place node below target (pin {x})")
        for y in above:
            if not add_upper(y):
                raise InconsistentWithK(f"cannot place node above target (pin {y})")
        for x in incomp:
            if (lower >> x) & 1 or (upper >> x) & 1:
                raise InconsistentWithK(f"incomparability pin {x} already forced")
            inc |= 1 << x

        if fill_policy == "generic":
            for x in range(len(self.sort)):
                if (lower >> x) & 1 or (upper >> x) & 1 or (inc >> x) & 1:
                    continue
                sx = self.sort[x]
                if new_sort == 1 and sx == 0:
                    if ((1 << x) & legal_lower) and self.rng.random() < 0.5:
                        add_lower(x)
                elif new_sort == 1 and sx == 2:
                    if ((1 << x) & legal_upper) and self.rng.random() < 0.5:
                        add_upper(x)
                elif new_sort == 2 and sx == 1:
                    if self.rng.random() < 0.5:
                        add_lower(x)
                elif new_sort == 0 and sx == 1:
                    if self.rng.random() < 0.5:
                        add_upper(x)

        node = len(self.sort)
        self.sort.append(new_sort)
        self.down.append(lower)
        self.up.append(upper)
        self.point_tags.append(tag)
        for b in self._bits(lower):
            self.up[b] |= 1 << node
        for b in self._bits(upper):
            self.down[b] |= 1 << node
        if new_sort == 1:
            self.n1_index[node] = len(self.n1_nodes)
            self.n1_nodes.append(node)
        self._verify_row(node)
        if new_sort not in (1,):
            self._ensure_cross_witnesses(node)
        return node

    def _verify_row(self, node: int) -> None:
        """Independent recheck of the sort condition for a fresh row; with
        induction over the growth steps this is the full check."""
        lower, upper = self.down[node], self.up[node]
        sort = self.sort[node]
        if lower & upper:
            raise InconsistentWithK("new point both above and below an element")
        if lower & ~self._legal_lower_mask(sort):
            raise InconsistentWithK("sort rules violated below the new point")
        for y in self._bits(upper):
            if sort not in _LEGAL_BELOW[self.sort[y]]:
                raise InconsistentWithK("sort rules violated above the new point")
            if lower & ~self.down[y]:
                raise InconsistentWithK("transitivity broken through the new point")
        closure = 0
        for x in self._bits(lower):
            closure |= self.down[x]
        if closure & ~lower:
            raise InconsistentWithK("lower set of the new point is not downward closed")
        closure = 0
        for y in self._bits(upper):
            closure |= self.up[y]
        if closure & ~upper:
            raise InconsistentWithK("upper set of the new point is not upward closed")
        self.step_checks += 1

    def _ensure_cross_witnesses(self, node: int) -> None:
        # every sort0 < sort2 pair needs a sort-1 point in between, so that
        # cross-kind disjointness can always be refuted on materialized points
        if self.sort[node] == 2:
            pairs = [(x, node) for x in self._bits(self.down[node]) if self.sort[x] == 0]
        elif self.sort[node] == 0:
            pairs = [(node, y) for y in self._bits(self.up[node]) if self.sort[y] == 2]
        else:
            return
        for x, y in pairs:
            between = self.up[x] & self.down[y]
            has_n1 = any(self.sort[b] == 1 for b in self._bits(between))
            if not has_n1:
                self._extend(1, below=[x], above=[y], incomp=[], fill_policy="generic",
                             tag=f"cross-witness({x},{y})")

    # -- public growth ------------------------------------------------------

    def grow_N(self, below, above, sort: int, incomp=(), tag: str = "grow") -> int:
        """Add a point realizing the given triple over the current N.

        `below` and `above` are node ids; everything else is pinned
        incomparable unless listed in `incomp` (which is then redundant).
        Raises InconsistentWithK when the request violates the sort rules
        or the recorded relations.
        """
        if sort not in (0, 1, 2):
            raise InconsistentWithK(f"bad sort {sort}")
        for x in list(below) + list(above) + list(incomp):
            if not 0 <= x < len(self.sort):
                raise UnknownElement(str(x))
        pinned = set(below) | set(above) | set(incomp)
        rest = [x for x in range(len(self.sort)) if x not in pinned]
        return self._extend(sort, below, above, list(incomp) + rest, "pinned", tag)

    def materialize_n1(self, below=(), above=(), incomp=(), tag: str = "n1") -> int:
        """New sort-1 point; unpinned relations filled by the genericity
        policy.  Returns the s-index."""
        node = self._extend(1, below, above, incomp, "generic", tag)
        return self.n1_index[node]

    def mint_generator(self, kind: str, below=(), above=(), incomp=(), tag: str = "gen") -> MoietyHandle:
        sort = 2 if kind == SIGMA else 0
        node = self._extend(sort, below, above, incomp, "generic", tag)
        h = MoietyHandle(kind, node, len(self.handles))
        self.handles.append(h)
        self._gen_handle[node] = h
        self.agenda_counts[h.hid] = [0, 0]
        return h

    # -- find_Z -------------------------------------------------------------

    def find_Z(self, kind: str, U=(), W=(), V=(), C=(), D=(), avoid=(), tag: str = "find_Z") -> MoietyHandle:
        """The sandwich query of the moiety lemma.

        SIGMA: returns Z in Sigma with C u union(U) <= Z <= intersect(W) and
        Z disjoint from D u union(V); SIGMA_PRIME is the mirror image.  The
        guarantees are lazy: they hold on every sort-1 point ever
        materialized, because they are transitivity facts about the minted
        generator.  With U and W sharing a handle the answer is forced and
        must not be excluded by `avoid`.
        """
        U, W, V = list(U), list(W), list(V)
        C, D = sorted(set(C)), sorted(set(D))
        other = SIGMA_PRIME if kind == SIGMA else SIGMA
        if any(h.kind != kind for h in U + W) or any(h.kind != other for h in V):
            raise PreconditionViolated("handle of the wrong family")
        avoid_ids = {h.hid for h in avoid}

        common = [h for h in U if any(h.hid == w.hid for w in W)]
        if common:
            z = min(common, key=lambda h: h.hid)
            if z.hid in avoid_ids:
                raise ForcedZConflictsAvoid(f"forced Z is handle #{z.hid}")
            return z

        # extensional preconditions on materialized sort-1 points
        for j in C:
            if j >= len(self.n1_nodes):
                raise UnknownElement(f"s_{j}")
        lower_mask = 0
        for j in C:
            lower_mask |= 1 << j
        for h in U:
            lower_mask |= self.member_mask(h)
        excl_mask = 0
        for j in D:
            excl_mask |= 1 << j
        for h in V:
            excl_mask |= self.member_mask(h)
        for h in W:
            if lower_mask & ~self.member_mask(h):
                raise PreconditionViolated("C u union(U) not inside every W member (materialized witness)")
        if lower_mask & excl_mask:
            raise PreconditionViolated("required and excluded sets overlap (materialized witness)")

        c_nodes = [self.n1_nodes[j] for j in C]
        d_nodes = [self.n1_nodes[j] for j in D]
        gens = lambda hs: [h.generator for h in hs]
        try:
            if kind == SIGMA:
                h = self.mint_generator(
                    SIGMA,
                    below=gens(U) + c_nodes,
                    above=gens(W),
                    incomp=gens(V) + d_nodes,
                    tag=tag,
                )
            else:
                h = self.mint_generator(
                    SIGMA_PRIME,
                    below=gens(U),
                    above=gens(W) + c_nodes,
                    incomp=gens(V) + d_nodes,
                    tag=tag,
                )
        except InconsistentWithK as exc:
            raise PreconditionViolated(f"constraints conflict with recorded relations: {exc}") from exc
        for av in avoid:
            self.separate(h, av)
        return h

    # -- separation ----------------------------------------------------------

    def _pair_key(self, h1: MoietyHandle, h2: MoietyHandle) -> tuple[int, int]:
        return (min(h1.hid, h2.hid), max(h1.hid, h2.hid))

    def separation_cert(self, h1: MoietyHandle, h2: MoietyHandle):
        return self.sep_certs.get(self._pair_key(h1, h2))

    def separate(self, h1: MoietyHandle, h2: MoietyHandle) -> int:
        """Record (minting if needed) a sort-1 point in the symmetric
        difference of the two handles; returns its s-index."""
        if h1.hid == h2.hid:
            raise PreconditionViolated("cannot separate a handle from itself")
        key = self._pair_key(h1, h2)
        if key in self.sep_certs:
            return self.sep_certs[key]
        diff = self.member_mask(h1) ^ self.member_mask(h2)
        if diff:
            j = (diff & -diff).bit_length() - 1
            self.sep_certs[key] = j
            return j
        j = self._mint_separator(h1, h2)
        self.sep_certs[key] = j
        return j

    def _mint_separator(self, h1: MoietyHandle, h2: MoietyHandle) -> int:
        def pins_in(h):
            return dict(below=[h.generator]) if h.kind == SIGMA_PRIME else dict(above=[h.generator])

        # prefer a point inside h1 and outside h2; fall back to the mirror
        for inside, outside in ((h1, h2), (h2, h1)):
            pins = pins_in(inside)
            pins.setdefault("below", [])
            pins.setdefault("above", [])
            try:
                return self.materialize_n1(
                    below=pins["below"],
                    above=pins["above"],
                    incomp=[outside.generator],
                    tag=f"separator({inside.hid},{outside.hid})",
                )
            except InconsistentWithK:
                continue
        raise PreconditionViolated(
            f"handles #{h1.hid} and #{h2.hid} cannot be separated; generators force equality"
        )

    def ensure_all_separated(self) -> None:
        for i in range(len(self.handles)):
            for j in range(i + 1, len(self.handles)):
                self.separate(self.handles[i], self.handles[j])

    def unseparated_pairs(self) -> list[tuple[int, int]]:
        out = []
        for i in range(len(self.handles)):
            for j in range(i + 1, len(self.handles)):
                if (i, j) not in self.sep_certs:
                    out.append((i, j))
        return out

    # -- coinfiniteness agenda -----------------------------------------------

    def agenda_tick(self, visits: int = 2) -> int:
        """Round-robin over handles; each visit materializes one fresh
        in-point and one fresh out-point for the visited handle."""
        done = 0
        while done < visits and self.handles:
            h = self.handles[self._agenda_cursor % len(self.handles)]
            self._agenda_cursor += 1
            if h.kind == SIGMA:
                self.materialize_n1(above=[h.generator], tag=f"agenda-in({h.hid})")
            else:
                self.materialize_n1(below=[h.generator], tag=f"agenda-in({h.hid})")
            self.materialize_n1(incomp=[h.generator], tag=f"agenda-out({h.hid})")
            self.agenda_counts[h.hid][0] += 1
            self.agenda_counts[h.hid][1] += 1
            done += 1
        return done

    def ensure_n1_count(self, k: int) -> None:
        while len(self.n1_nodes) < k:
            self.materialize_n1(tag="sync")

    def ensure_inhabited(self, h: MoietyHandle) -> int:
        mask = self.member_mask(h)
        if mask:
            return (mask & -mask).bit_length() - 1
        if h.kind == SIGMA:
            return self.materialize_n1(above=[h.generator], tag=f"inhabit({h.hid})")
        return self.materialize_n1(below=[h.generator], tag=f"inhabit({h.hid})")

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> tuple[FinitePoset, dict[int, int]]:
        n = len(self.sort)
        m = bytearray(n * n)
        for x in range(n):
            row = self.down[x]
            for b in self._bits(row):
                m[x * n + b] = Relation.GT
                m[b * n + x] = Relation.LT
        poset = FinitePoset(range(n), bytes(m))
        return poset, {i: self.sort[i] for i in range(n)}

    def check_star_condition(self) -> bool:
        poset, chi = self.snapshot()
        return k_check(poset, chi)

    def to_json(self) -> dict:
        return {
            "sorts": list(self.sort),
            "down": [format(m, "x") for m in self.down],
            "n1_nodes": list(self.n1_nodes),
            "handles": [h.to_json() for h in self.handles],
            "sep_certs": {f"{a},{b}": j for (a, b), j in sorted(self.sep_certs.items())},
            "tags": list(self.point_tags),
            "agenda": {str(k): v for k, v in sorted(self.agenda_counts.items())},
        }

    def dump_kstructure(self) -> dict:
        poset, chi = self.snapshot()
        doc = poset.to_json()
        doc["chi"] = {str(e): chi[e] for e in poset.elements}
        return doc
