"""The staged universe M_0 = A u R u S u T plus constructed points.

Element ids are minted by a monotone counter, so every frozen stage is a
prefix of the id sequence and monotonicity of the relation is monotonicity
of a growing table.  Relations are computed intensionally: base sorts by
the M_0 rules, constructed points through the acceptable pair they were
built from, with the S-parts delegated to the moiety engine (sort-1 point
j of the engine *is* s_j).  Every answer is cached and never recomputed,
which makes append-only behaviour auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .adapters import CofinalityAdapter, Generator
from .errors import UnknownElement
from .limits import TripleDescriptor
from .moiety_engine import SIGMA_PRIME, MoietyEngine, MoietyHandle
from .poset_core import FinitePoset, Relation

ALL_S = "ALL_S"
_UNKNOWN = 255


@dataclass(frozen=True)
class Provenance:
    sort: str  # A | R | S | T | E
    index: int  # A/R/S position, T: index of its a in A, E: birth stage

    def to_json(self) -> dict:
        return {"sort": self.sort, "index": self.index}


@dataclass(frozen=True)
class AcceptablePair:
    """Support of a construction step: U = u_fin u u_moiety, W = w_fin u w_s.

    u_fin and w_fin are universe ids outside S; the S-parts are either a
    moiety handle, a finite id set, or the whole of S.
    """

    u_fin: tuple[int, ...]
    u_moiety: MoietyHandle | None
    w_fin: tuple[int, ...]
    w_s: object = None  # None | tuple[int, ...] | MoietyHandle | ALL_S

    def key(self) -> tuple:
        ws = self.w_s
        if isinstance(ws, MoietyHandle):
            ws = ("h", ws.hid)
        elif isinstance(ws, tuple):
            ws = ("f", ws)
        return (
            self.u_fin,
            None if self.u_moiety is None else self.u_moiety.hid,
            self.w_fin,
            ws,
        )

    def to_json(self) -> dict:
        if self.w_s is None:
            ws = {"kind": "none"}
        elif self.w_s == ALL_S:
            ws = {"kind": "all"}
        elif isinstance(self.w_s, MoietyHandle):
            ws = {"kind": "handle", **self.w_s.to_json(), "hid": self.w_s.hid}
        else:
            ws = {"kind": "fin", "ids": sorted(self.w_s)}
        return {
            "u_fin": sorted(self.u_fin),
            "u_moiety": None if self.u_moiety is None else {**self.u_moiety.to_json(), "hid": self.u_moiety.hid},
            "w_fin": sorted(self.w_fin),
            "w_s": ws,
        }


def make_pair(u_fin=(), u_moiety=None, w_fin=(), w_s=None) -> AcceptablePair:
    if isinstance(w_s, (set, frozenset, list)):
        w_s = tuple(sorted(w_s))
    return AcceptablePair(tuple(sorted(u_fin)), u_moiety, tuple(sorted(w_fin)), w_s)


@dataclass(frozen=True)
class TypeDescriptor:
    """What a constructed point remembers: its pair and birth stage."""

    pair: AcceptablePair
    stage: int


@dataclass
class SExpr:
    """The set {s in S | m < s} as a finite expression: a finite set of ids,
    some SIGMA_PRIME handles, possibly all of S."""

    all_s: bool = False
    fin: frozenset[int] = frozenset()
    primes: tuple[MoietyHandle, ...] = ()

    def is_empty(self) -> bool:
        return not self.all_s and not self.fin and not self.primes

    def union(self, other: "SExpr") -> "SExpr":
        if self.all_s or other.all_s:
            return SExpr(all_s=True)
        return SExpr(False, self.fin | other.fin, tuple({h.hid: h for h in self.primes + other.primes}.values()))


class StagedUniverse:
    def __init__(self, adapter: CofinalityAdapter, p: TripleDescriptor, engine: MoietyEngine, seed: int = 0):
        self.adapter = adapter
        self.p = p
        self.engine = engine
        self.seed = seed
        self.prov: list[Provenance] = []
        self.desc: dict[int, TypeDescriptor] = {}
        self.a_ids: list[int] = []  # position -> id
        self.r_ids: list[int] = []
        self.s_ids: list[int] = []
        self.t_ids: dict[int, int] = {}  # a-index -> id
        self.stage_sizes: list[int] = []  # element count at each freeze
        self.stage_meta: list[dict] = []
        self.orbit_registry: dict[tuple[int, tuple], int] = {}  # (stage, pair key) -> id
        self._cap = 256
        self._rel = bytearray([_UNKNOWN]) * 0
        self._rel = bytearray([_UNKNOWN] * (self._cap * self._cap))
        self._below_rt: dict[int, bool] = {}
        self._a0_cert: dict[int, frozenset[int]] = {}
        self._c_cert: dict[int, frozenset[int]] = {}
        self._up_expr: dict[int, SExpr] = {}
        self.generators: tuple[Generator, ...] = adapter.generators()

    # -- element minting -----------------------------------------------------

    def _mint(self, prov: Provenance) -> int:
        eid = len(self.prov)
        self.prov.append(prov)
        if eid >= self._cap:
            old_cap, old = self._cap, self._rel
            self._cap *= 2
            self._rel = bytearray([_UNKNOWN] * (self._cap * self._cap))
            for i in range(old_cap):
                self._rel[i * self._cap : i * self._cap + old_cap] = old[i * old_cap : (i + 1) * old_cap]
        return eid

    def materialize_a(self, upto: int) -> None:
        """Materialize a_0..a_upto (block-rounded) together with the t_a of
        every V_p member among them."""
        block = self.adapter.materialization_block()
        target = upto + 1
        if target % block:
            target += block - target % block
        while len(self.a_ids) < target:
            i = len(self.a_ids)
            self.a_ids.append(self._mint(Provenance("A", i)))
            if self.p.in_v(self.adapter, i):
                self.t_ids[i] = self._mint(Provenance("T", i))

    def materialize_r(self, upto: int) -> None:
        while len(self.r_ids) <= upto:
            self.r_ids.append(self._mint(Provenance("R", len(self.r_ids))))

    def materialize_s(self, upto: int) -> None:
        self.engine.ensure_n1_count(upto + 1)
        while len(self.s_ids) <= upto:
            self.s_ids.append(self._mint(Provenance("S", len(self.s_ids))))

    def mint_constructed(self, pair: AcceptablePair, stage: int) -> int:
        eid = self._mint(Provenance("E", stage))
        self.desc[eid] = TypeDescriptor(pair, stage)
        self.orbit_registry[(stage, pair.key())] = eid
        return eid

    def freeze_stage(self, meta: dict) -> int:
        self.stage_sizes.append(len(self.prov))
        self.stage_meta.append(meta)
        return len(self.stage_sizes) - 1

    def element_count(self) -> int:
        return len(self.prov)

    def s_index(self, eid: int) -> int:
        pv = self.prov[eid]
        if pv.sort != "S":
            raise UnknownElement(f"{eid} is not an S element")
        return pv.index

    def is_s(self, eid: int) -> bool:
        return self.prov[eid].sort == "S"

    # -- relation algebra ------------------------------------------------------

    def rel(self, x: int, y: int) -> Relation:
        if x == y:
            raise UnknownElement("rel(x,x) undefined")
        if x >= len(self.prov) or y >= len(self.prov):
            raise UnknownElement(f"({x},{y})")
        cached = self._rel[x * self._cap + y]
        if cached != _UNKNOWN:
            return Relation(cached)
        r = self._compute_rel(x, y)
        self._rel[x * self._cap + y] = int(r)
        self._rel[y * self._cap + x] = int(r.flip())
        return r

    def leq(self, x: int, y: int) -> bool:
        return x == y or self.rel(x, y) is Relation.LT

    def _compute_rel(self, x: int, y: int) -> Relation:
        px, py = self.prov[x], self.prov[y]
        if px.sort != "E" and py.sort != "E":
            return self._base_rel(x, y)
        if px.sort == "E" and py.sort == "E" and self.desc[x].stage == self.desc[y].stage:
            return self._same_stage_rel(x, y)
        # the relation is determined by the construction stage of the later
        # constructed point, applied to the other element
        if px.sort == "E" and (py.sort != "E" or self.desc[y].stage < self.desc[x].stage):
            return self._descriptor_rel(x, y).flip()
        return self._descriptor_rel(y, x)

    def _base_rel(self, x: int, y: int) -> Relation:
        px, py = self.prov[x], self.prov[y]
        if px.sort > py.sort:  # normalize to A<R<S<T order alphabetically
            return self._base_rel(y, x).flip()
        a, b = px.sort, py.sort
        if a == "A" and b == "A":
            return self.adapter.rel_indices(px.index, py.index)
        if a == "A" and b == "R":
            # r has type p = (empty, V_p, W_p) over A
            return Relation.GT if self.p.in_w(self.adapter, px.index) else Relation.INC
        if a == "A" and b == "S":
            return Relation.LT if self.p.in_v(self.adapter, px.index) else Relation.INC
        if a == "A" and b == "T":
            if self.p.in_v(self.adapter, px.index) and (
                px.index == py.index or self.adapter.rel_indices(px.index, py.index) is Relation.LT
            ):
                return Relation.LT
            return Relation.INC
        if a == "R" and b == "S":
            return Relation.LT if px.index >= py.index else Relation.INC
        # R-R, S-S, T-T, R-T, S-T are antichains / unrelated
        return Relation.INC

    def _descriptor_rel(self, e: int, m: int) -> Relation:
        """Relation of m to the constructed point e (as seen from m)."""
        pair = self.desc[e].pair
        if self._in_pair_down(m, pair):
            return Relation.LT
        if self._in_pair_up(m, pair):
            return Relation.GT
        return Relation.INC

    def _same_stage_rel(self, x: int, y: int) -> Relation:
        # orbit mates relate only through an intermediate supporting point
        px, py = self.desc[x].pair, self.desc[y].pair
        if self._supports_below(px, py):
            return Relation.LT
        if self._supports_below(py, px):
            return Relation.GT
        return Relation.INC

    def _supports_below(self, pa: AcceptablePair, pb: AcceptablePair) -> bool:
        # exists w in W(pa), u in U(pb) with w <= u; only the finite parts
        # can meet (any S-part of W faces U-parts that exclude S, see spec
        # of compare), so this is a finite scan
        for w in pa.w_fin:
            for u in pb.u_fin:
                if self.leq(w, u):
                    return True
        if pb.u_moiety is not None:
            for w in pa.w_fin:
                if self._lt_some_s_of_handle(w, pb.u_moiety):
                    return True
            ws = pa.w_s
            if isinstance(ws, tuple):
                if any(self.engine.member(pb.u_moiety, self.s_index(s)) for s in ws):
                    return True
            elif ws == ALL_S or isinstance(ws, MoietyHandle):
                # W meets S only when U has no moiety; guarded by AC shapes
                if ws == ALL_S:
                    return True
                if self.engine.intersects_certified(pb.u_moiety, ws):
                    return True
        return False

    # -- pair-side membership ----------------------------------------------------

    def _in_pair_down(self, m: int, pair: AcceptablePair) -> bool:
        """m in (u_fin u u_moiety)^- within the full staged poset."""
        for u in pair.u_fin:
            if self.leq(m, u):
                return True
        z = pair.u_moiety
        if z is not None:
            if self.is_s(m):
                return self.engine.member(z, self.s_index(m))
            return self._lt_some_s_of_handle(m, z)
        return False

    def _in_pair_up(self, m: int, pair: AcceptablePair) -> bool:
        for w in pair.w_fin:
            if self.leq(w, m):
                return True
        ws = pair.w_s
        if ws is None:
            return False
        if self.is_s(m):
            j = self.s_index(m)
            if ws == ALL_S:
                return True
            if isinstance(ws, MoietyHandle):
                return self.engine.member(ws, j)
            return m in ws
        # m above some s of the part: compare with m's S-fingerprint
        fp = self.fingerprint(m)
        if fp is None:
            return False
        if ws == ALL_S:
            return True
        if isinstance(ws, MoietyHandle):
            return self.engine.intersects_certified(fp, ws)
        return any(self.engine.member(fp, self.s_index(s)) for s in ws)

    def _lt_some_s_of_handle(self, m: int, z: MoietyHandle) -> bool:
        """Is m (not in S) strictly below some member of the handle's set?"""
        expr = self.up_s_expr(m)
        if expr.is_empty():
            return False
        if expr.all_s:
            return True
        for j in sorted(expr.fin):
            self.engine.ensure_n1_count(j + 1)
            if self.engine.member(z, j):
                return True
        return any(self.engine.intersects_certified(z, h) for h in expr.primes)

    # -- descriptor-level views -----------------------------------------------

    def fingerprint(self, m: int) -> MoietyHandle | None:
        """m^- cap S for m outside S: a moiety handle or None (= empty)."""
        pv = self.prov[m]
        if pv.sort == "S":
            raise UnknownElement("fingerprint is for elements outside S")
        if pv.sort != "E":
            return None
        return self.desc[m].pair.u_moiety

    def in_s_plus(self, m: int) -> bool:
        return self.prov[m].sort == "S" or (self.prov[m].sort == "E" and self.fingerprint(m) is not None)

    def up_s_expr(self, m: int) -> SExpr:
        """{s in S | m < s} as a finite expression; empty for S members."""
        if m in self._up_expr:
            return self._up_expr[m]
        pv = self.prov[m]
        if pv.sort == "S" or pv.sort == "T":
            out = SExpr()
        elif pv.sort == "A":
            out = SExpr(all_s=True) if self.p.in_v(self.adapter, pv.index) else SExpr()
        elif pv.sort == "R":
            # r_i < s_j exactly for j <= i; fin holds s-indices
            out = SExpr(fin=frozenset(range(pv.index + 1)))
        else:
            pair = self.desc[m].pair
            out = SExpr()
            ws = pair.w_s
            if ws == ALL_S:
                out = SExpr(all_s=True)
            elif isinstance(ws, MoietyHandle):
                out = out.union(SExpr(primes=(ws,)))
            elif isinstance(ws, tuple):
                out = out.union(SExpr(fin=frozenset(self.s_index(s) for s in ws)))
            for w in pair.w_fin:
                out = out.union(self.up_s_expr(w))
        self._up_expr[m] = out
        return out

    def below_meets_rt(self, m: int) -> bool:
        """Whether m^- meets R u T in the full staged poset (stable)."""
        if m in self._below_rt:
            return self._below_rt[m]
        pv = self.prov[m]
        if pv.sort in ("R", "T", "S"):
            out = True
        elif pv.sort == "A":
            out = self.p.in_w(self.adapter, pv.index)
        else:
            pair = self.desc[m].pair
            out = pair.u_moiety is not None or any(self.below_meets_rt(u) for u in pair.u_fin)
        self._below_rt[m] = out
        return out

    def a0_cert(self, m: int) -> frozenset[int]:
        """A finite subset A_0 of A (as a-indices) whose pointwise stabilizer
        fixes m; recorded constructively at birth."""
        if m in self._a0_cert:
            return self._a0_cert[m]
        pv = self.prov[m]
        if pv.sort == "A":
            out = frozenset([pv.index])
        elif pv.sort == "T":
            out = frozenset([pv.index])
        elif pv.sort in ("R", "S"):
            out = frozenset()
        else:
            pair = self.desc[m].pair
            out = frozenset()
            for u in pair.u_fin + pair.w_fin:
                out |= self.a0_cert(u)
        self._a0_cert[m] = out
        return out

    def a_downset_cert(self, m: int) -> frozenset[int] | None:
        """Finite C of a-indices with m^- cap A inside C^-, or None when the
        A-downset is not finitely bounded (exactly the S^+ points)."""
        pv = self.prov[m]
        if pv.sort in ("A", "T"):
            return frozenset([pv.index])
        if pv.sort == "R":
            return frozenset()
        if pv.sort == "S":
            return None
        pair = self.desc[m].pair
        if pair.u_moiety is not None:
            return None
        out: frozenset[int] = frozenset()
        for u in pair.u_fin:
            c = self.a_downset_cert(u)
            if c is None:
                return None
            out |= c
        return out

    def c_cert(self, m: int) -> frozenset[int]:
        """For m in S^- \\ S: finite C of V_p indices with m^- cap V_p = C^- cap V_p."""
        if m in self._c_cert:
            return self._c_cert[m]
        pv = self.prov[m]
        if pv.sort == "A":
            out = frozenset([pv.index])
        elif pv.sort == "R":
            out = frozenset()
        elif pv.sort == "E":
            out = frozenset()
            for u in self.desc[m].pair.u_fin:
                out |= self.c_cert(u)
        else:
            raise UnknownElement(f"c_cert undefined for sort {pv.sort}")
        self._c_cert[m] = out
        return out

    # -- G action ---------------------------------------------------------------

    def apply_generator(self, gen: Generator, eid: int, inverse: bool = False) -> int:
        f = gen.inv if inverse else gen.fwd
        pv = self.prov[eid]
        if pv.sort in ("R", "S"):
            return eid
        if pv.sort == "A":
            j = f(pv.index)
            if j >= len(self.a_ids):
                raise UnknownElement(f"a_{j} not materialized")
            return self.a_ids[j]
        if pv.sort == "T":
            j = f(pv.index)
            if j not in self.t_ids:
                raise UnknownElement(f"t_(a_{j}) not materialized")
            return self.t_ids[j]
        pair = self.translate_pair(gen, self.desc[eid].pair, inverse)
        key = (self.desc[eid].stage, pair.key())
        if key not in self.orbit_registry:
            raise UnknownElement("orbit mate not materialized")
        return self.orbit_registry[key]

    def translate_pair(self, gen: Generator, pair: AcceptablePair, inverse: bool = False) -> AcceptablePair:
        tr = lambda ids: tuple(sorted(self.apply_generator(gen, e, inverse) for e in ids))
        return AcceptablePair(tr(pair.u_fin), pair.u_moiety, tr(pair.w_fin), pair.w_s)

    def apply_word(self, word: Iterable[tuple[Generator, bool]], eid: int) -> int:
        for gen, inv in word:
            eid = self.apply_generator(gen, eid, inv)
        return eid

    # -- snapshots ----------------------------------------------------------------

    def snapshot(self, count: int | None = None) -> FinitePoset:
        n = len(self.prov) if count is None else count
        m = bytearray(n * n)
        for i in range(n):
            for j in range(i + 1, n):
                r = self.rel(i, j)
                m[i * n + j] = int(r)
                m[j * n + i] = int(r.flip())
        return FinitePoset(range(n), bytes(m), _checked=True)

    def provenance_labels(self) -> dict[int, str]:
        out = {}
        for eid, pv in enumerate(self.prov):
            if pv.sort == "E":
                out[eid] = f"e{eid}@{pv.index}"
            elif pv.sort == "T":
                out[eid] = f"t(a{pv.index})"
            else:
                out[eid] = f"{pv.sort.lower()}{pv.index}"
        return out
