"""Independent audits of the lemma-level properties on frozen runs.

Every audit is a pure function of a revived (or live) build result: it
reads the recorded relation table, the descriptors, the ledgers and the
auxiliary-structure masks, and emits a report whose failures carry minimal
certificates.  Stabilizer claims are checked against generator words up to
a stated bound; the reports say so.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import type_space
from .chain_builder import BuildResult, group_elements, in_basic_open
from .errors import PosetForgeError, SizeBound, UnknownElement
from .moiety_engine import MoietyHandle
from .oracles import (
    BruteOrder,
    oracle_pair_valid,
    oracle_triple_valid,
    plain_would_enqueue,
)
from .poset_core import FinitePoset, Relation, enumerate_posets
from .universe import StagedUniverse


@dataclass
class AuditReport:
    name: str
    stage_range: tuple[int, int]
    checks: int = 0
    failures: list = field(default_factory=list)
    pending: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def ok(self) -> bool:
        return self.checks > 0 and not self.failures

    def fail(self, **cert) -> None:
        self.failures.append(cert)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "stage_range": list(self.stage_range),
            "checks": self.checks,
            "failures": self.failures,
            "pending": self.pending,
            "notes": self.notes,
            "ok": self.ok(),
        }


def _fingerprint_key(U: StagedUniverse, m: int):
    if U.is_s(m):
        return ("s", m)
    fp = U.fingerprint(m)
    return ("empty",) if fp is None else ("h", fp.hid)


def _orbit_of(U: StagedUniverse, m: int) -> set[int]:
    if U.prov[m].sort != "E":
        return {m}
    stage = U.desc[m].stage
    return {e for e, d in U.desc.items() if d.stage == stage}


def _word_elements(U: StagedUniverse, bound: int):
    return group_elements(U, bound)


def audit_ac_props(result: BuildResult, word_bound: int | None = None) -> AuditReport:
    """The seven acceptable-chain properties over all materialized elements."""
    U = result.universe
    bound = word_bound or result.config.word_bound
    rep = AuditReport("ac_props", (0, len(U.stage_sizes) - 1))
    rep.notes["word_bound"] = bound
    words = _word_elements(U, bound)
    n = U.element_count()
    eng = U.engine

    for m in range(n):
        pv = U.prov[m]
        # (i) stabilizer certificate
        cert = U.a0_cert(m)
        for key, word in words:
            if all(i >= len(key) or key[i] == i for i in cert):
                rep.checks += 1
                try:
                    if U.apply_word(word, m) != m:
                        rep.fail(check="i", element=m, word=_word_name(word), a0=sorted(cert))
                except UnknownElement:
                    rep.fail(check="i", element=m, word=_word_name(word), note="orbit image missing")
        # (ii) finite C below V_p
        if pv.sort != "S" and not U.up_s_expr(m).is_empty():
            try:
                c = U.c_cert(m)
            except UnknownElement:
                rep.fail(check="ii", element=m, note="no C certificate")
                c = None
            if c is not None:
                rep.checks += 1
                got = {
                    i for i, aid in enumerate(U.a_ids)
                    if U.p.in_v(U.adapter, i) and U.leq(aid, m)
                }
                want = {
                    i for i, aid in enumerate(U.a_ids)
                    if U.p.in_v(U.adapter, i)
                    and any(i == ci or U.adapter.rel_indices(i, ci) is Relation.LT for ci in c)
                }
                if got != want:
                    rep.fail(check="ii", element=m, c=sorted(c),
                             extra=sorted(got ^ want))
        # (iii) up-S shape off (R u T)^+
        if not U.below_meets_rt(m):
            rep.checks += 1
            expr = U.up_s_expr(m)
            shape_ok = expr.all_s or len(expr.primes) >= 1
            if not shape_ok:
                rep.fail(check="iii", element=m, note="up-S set finite off (RuT)+")
            for s in U.s_ids:
                j = U.s_index(s)
                covered = expr.all_s or j in expr.fin or any(eng.member(h, j) for h in expr.primes)
                if (U.rel(m, s) is Relation.LT) != covered:
                    rep.fail(check="iii", element=m, s=s, note="expression disagrees with relation")
        # (iv) fingerprint shape off S
        if pv.sort != "S":
            rep.checks += 1
            fp = U.fingerprint(m)
            for s in U.s_ids:
                j = U.s_index(s)
                have = U.rel(s, m) is Relation.LT
                claimed = fp is not None and eng.member(fp, j)
                if have != claimed:
                    rep.fail(check="iv", element=m, s=s,
                             note="fingerprint disagrees with relation")
        # (v) orbit mates incomparable inside S^+
        if U.in_s_plus(m):
            for x in _orbit_of(U, m):
                if x != m:
                    rep.checks += 1
                    if U.rel(m, x) is not Relation.INC:
                        rep.fail(check="v", element=m, mate=x)
        # (vi) fingerprints separate non-orbit pairs
        if U.in_s_plus(m):
            orbit = _orbit_of(U, m)
            key_m = _fingerprint_key(U, m)
            for x in range(n):
                if x == m or x in orbit:
                    continue
                rep.checks += 1
                key_x = _fingerprint_key(U, x)
                if key_m == key_x:
                    rep.fail(check="vi", element=m, other=x, note="identical fingerprints")
                    continue
                if not _separation_witness(U, key_m, key_x):
                    rep.fail(check="vi", element=m, other=x, note="no separating point recorded")
    # (*) finitely many fingerprints
    fps = {_fingerprint_key(U, m) for m in range(n) if not U.is_s(m)}
    rep.checks += 1
    rep.notes["fingerprints"] = len(fps)
    if len(fps) > n + 1:
        rep.fail(check="star", note=f"{len(fps)} fingerprints for {n} elements")
    return rep


def _separation_witness(U: StagedUniverse, key_a, key_b) -> bool:
    eng = U.engine
    kinds = {key_a[0], key_b[0]}
    if kinds == {"h"}:
        h1, h2 = eng.handles[key_a[1]], eng.handles[key_b[1]]
        if eng.separation_cert(h1, h2) is not None:
            return True
        return bool(eng.member_mask(h1) ^ eng.member_mask(h2))
    if "empty" in kinds:
        other = key_a if key_b[0] == "empty" else key_b
        if other[0] == "s":
            return True
        return bool(eng.member_mask(eng.handles[other[1]]))
    if kinds == {"s"}:
        return True
    s_key = key_a if key_a[0] == "s" else key_b
    h_key = key_b if key_a[0] == "s" else key_a
    mask = eng.member_mask(eng.handles[h_key[1]])
    return mask != (1 << U.s_index(s_key[1]))


def _word_name(word) -> str:
    return ".".join(f"{g.name}{'^-1' if inv else ''}" for g, inv in word) or "id"


def _q_typed_at_truncation(U: StagedUniverse, m: int) -> bool:
    saw_v = False
    for i, aid in enumerate(U.a_ids):
        if aid == m:
            return False
        if U.p.in_v(U.adapter, i):
            saw_v = True
            if U.rel(aid, m) is not Relation.LT:
                return False
        else:
            if U.rel(aid, m) is not Relation.INC:
                return False
    return saw_v


def audit_minimality(result: BuildResult) -> AuditReport:
    U = result.universe
    rep = AuditReport("minimality", (0, len(U.stage_sizes) - 1))
    # (i): nothing below an s can look q-typed; certified through C
    for s in U.s_ids:
        for m in range(U.element_count()):
            if m == s or U.rel(m, s) is not Relation.LT:
                continue
            rep.checks += 1
            try:
                c = U.c_cert(m)
            except UnknownElement:
                rep.fail(part="i", element=m, below=s, note="no C certificate for element below S")
                continue
            if U.adapter.finite_set_dominates(c, U.p.v_rule):
                rep.fail(part="i", element=m, below=s, c=sorted(c),
                         note="C dominates V_p, so the point could be q-typed")
    # (ii): minimal points of the finite-S-trace set are exactly R u T
    members = []
    for m in range(U.element_count()):
        if U.is_s(m):
            members.append(m)
            continue
        if U.fingerprint(m) is not None:
            continue
        expr = U.up_s_expr(m)
        if expr.all_s or expr.primes:
            continue
        members.append(m)
    member_set = set(members)
    minimal = {
        m for m in members
        if not any(x != m and U.rel(x, m) is Relation.LT for x in member_set)
    }
    expected = {m for m in range(U.element_count()) if U.prov[m].sort in ("R", "T")}
    rep.checks += 1
    if minimal != expected:
        rep.fail(part="ii", extra=sorted(minimal - expected), missing=sorted(expected - minimal))
    return rep


def audit_genericity(result: BuildResult, support_bound: int | None = None) -> AuditReport:
    U = result.universe
    bound = support_bound or result.config.support_bound
    rep = AuditReport("genericity", (0, len(U.stage_sizes) - 1))
    rep.notes["support_bound"] = bound
    for task in result.task_ledger:
        if task["kind"] != "a":
            continue
        u0, v0, w0 = (list(task["u0"]), list(task["v0"]), list(task["w0"]))
        if len(u0) + len(v0) + len(w0) > bound:
            continue
        status = task["status"]
        if status in ("queued", "pending-budget"):
            rep.pending.append({"tid": task["tid"], "status": status})
            continue
        rep.checks += 1
        w = task.get("witness")
        if w is None or not in_basic_open(U, w, u0, v0, w0):
            rep.fail(tid=task["tid"], witness=w, triple=[u0, v0, w0],
                     note="completed task lacks a verified witness")
    return rep


def audit_uniqueness(result: BuildResult, word_bound: int | None = None,
                     rigidity_max: int = 7) -> AuditReport:
    U = result.universe
    bound = word_bound or result.config.word_bound
    rep = AuditReport("uniqueness", (0, len(U.stage_sizes) - 1))
    rep.notes["word_bound"] = bound
    words = _word_elements(U, bound)

    # (step i) q-typed points away from S need a scheduled minimality breaker
    breaker_by_target = {
        t.get("target"): t for t in result.task_ledger if t["kind"] == "breaker"
    }
    for m in range(U.element_count()):
        if U.is_s(m) or not _q_typed_at_truncation(U, m):
            continue
        rep.checks += 1
        if U.in_s_plus(m):
            fp = U.fingerprint(m)
            if not U.engine.member_mask(fp):
                rep.fail(step="i", element=m, note="q-typed point above S with uninhabited fingerprint")
            continue
        if not U.up_s_expr(m).is_empty():
            continue  # below S: the minimality audit covers it through C
        cert = U.a_downset_cert(m)
        if cert is not None and not U.adapter.finite_set_dominates(cert, U.p.v_rule):
            continue  # q-typed only at the truncation; the certificate refutes the limit type
        task = breaker_by_target.get(m)
        if task is None:
            rep.fail(step="i", element=m, note="no minimality breaker scheduled")
        elif task["status"] in ("queued", "pending-budget"):
            rep.pending.append({"tid": task["tid"], "target": m})
        elif task["status"] == "completed":
            w = task["witness"]
            if w is None or U.rel(w, m) is not Relation.LT or not _q_typed_at_truncation(U, w):
                rep.fail(step="i", element=m, witness=w, note="breaker witness invalid")
        else:
            rep.fail(step="i", element=m, note=f"breaker task {task['status']}")

    # (step ii) R u T identification
    mini = audit_minimality(result)
    rep.checks += mini.checks
    for f in mini.failures:
        rep.fail(step="ii", **f)

    # (step iii) rigidity of the R_n u S_n truncations
    for k in range(2, rigidity_max + 1):
        rep.checks += 1
        autos = rs_truncation(k).automorphisms(max_size=2 * k)
        if len(autos) != 1:
            rep.fail(step="iii", n=k, count=len(autos))

    # (step iv) fingerprint separation inside S^+ across orbits
    splus = [m for m in range(U.element_count()) if U.in_s_plus(m)]
    for i, m in enumerate(splus):
        orbit = _orbit_of(U, m)
        for x in splus[i + 1:]:
            if x in orbit:
                continue
            rep.checks += 1
            if _fingerprint_key(U, m) == _fingerprint_key(U, x) or not _separation_witness(
                U, _fingerprint_key(U, m), _fingerprint_key(U, x)
            ):
                rep.fail(step="iv", element=m, other=x)

    # (star) stabilizer claims on the witness-lemma stages
    for meta in U.stage_meta:
        for claim in meta.get("claims", []):
            e = claim.get("point")
            if e is None:
                continue
            rep.checks += 1
            if claim["kind"] == "stab-point":
                target = lambda key: key[claim["a_index"]] == claim["a_index"] if claim["a_index"] < len(key) else True
            else:
                target = lambda key: all(i >= len(key) or key[i] == i for i in claim["a_indices"])
            mismatch = _star_condition_mismatch(U, words, e, meta["stage"], target)
            if mismatch is not None:
                rep.fail(step="star", stage=meta["stage"], element=e, **mismatch)
    return rep


def _star_condition_mismatch(U: StagedUniverse, words, e: int, stage: int, target):
    """Check G_e = G_claim = G_{tp(e / M0 u S+_{k-1})} over the word list."""
    base = [
        m for m in range(U.element_count())
        if m != e and (U.prov[m].sort != "E" or (U.in_s_plus(m) and U.desc[m].stage < stage))
    ]
    for key, word in words:
        try:
            fixes_point = U.apply_word(word, e) == e
        except UnknownElement:
            return {"word": _word_name(word), "note": "orbit image missing"}
        in_target = target(key)
        if fixes_point != in_target:
            return {"word": _word_name(word), "fixes_point": fixes_point, "claim": in_target}
        fixes_type = True
        for m in base:
            try:
                gm = U.apply_word(word, m)
            except UnknownElement:
                fixes_type = False
                break
            if gm != m and gm != e and U.rel(m, e) is not U.rel(gm, e):
                fixes_type = False
                break
            if gm == e:
                fixes_type = False
                break
        if fixes_type != in_target:
            return {"word": _word_name(word), "fixes_type": fixes_type, "claim": in_target}
    return None


def rs_truncation(n: int) -> FinitePoset:
    """The poset R_n u S_n with r_i < s_j exactly when i >= j."""
    pairs = [(i, n + j) for i in range(n) for j in range(n) if i >= j]
    return FinitePoset.from_lt_pairs(range(2 * n), pairs)


# -- forcing certificates ----------------------------------------------------


def forcing_certificates(P: FinitePoset, v: int, samples: int = 20, seed: int = 0,
                         support_bound: int = 3) -> AuditReport:
    """The separating triples of the upward-closure uniqueness argument.

    For sampled points m incomparable to (resp. below) v and every candidate
    image m', emit the proof's valid triple for the case split and confirm a
    witness exists in the truncation or lies on the deterministic task
    stream.
    """
    rep = AuditReport("forcing", (0, 0))
    rng = random.Random((seed, "forcing"))
    incs = [m for m in P.elements if m != v and P.rel(m, v) is Relation.INC]
    lows = [m for m in P.elements if m != v and P.rel(m, v) is Relation.LT]
    rep.notes["incomparable"] = len(incs)
    rep.notes["below"] = len(lows)

    def witness(U0, V0):
        for w in P.elements:
            if w in U0 or w in V0:
                continue
            if all(P.rel(u, w) is Relation.LT for u in U0) and all(
                P.rel(x, w) is Relation.INC for x in V0
            ):
                return w
        return None

    def check(U0, V0):
        rep.checks += 1
        support = frozenset(U0) | frozenset(V0)
        sub = P.restrict(support)
        if not oracle_triple_valid(sub, frozenset(U0), frozenset(V0), frozenset()):
            rep.fail(triple=[sorted(U0), sorted(V0), []], note="separating triple invalid")
            return
        w = witness(U0, V0)
        if w is not None:
            return
        if not plain_would_enqueue(len(P), (frozenset(U0), frozenset(V0), frozenset()), support_bound):
            rep.fail(triple=[sorted(U0), sorted(V0), []], note="witness neither present nor enqueued")
        else:
            rep.pending.append({"triple": [sorted(U0), sorted(V0), []]})

    for m in rng.sample(incs, min(samples, len(incs))):
        for mp in incs:
            if mp == m:
                continue
            if P.rel(mp, m) in (Relation.INC, Relation.GT):
                check([v, m], [mp])
            else:
                check([v, mp], [m])
    for m in rng.sample(lows, min(samples, len(lows))):
        for mp in lows:
            if mp == m:
                continue
            if P.rel(mp, m) in (Relation.INC, Relation.GT):
                check([m], [mp, v])
            else:
                check([mp], [m, v])
    return rep


# -- exhaustive oracle suite --------------------------------------------------


def oracle_suite(n_max: int = 4, meet_fn=None, join_fn=None, fail_cap: int = 25) -> AuditReport:
    """Exhaustive agreement of the type-space formulas with the brute-force
    extension oracles, over every labelled poset up to n_max elements."""
    if n_max > 4:
        raise SizeBound("oracle suite is bounded at n_max = 4")
    meet_fn = meet_fn or type_space.meet
    join_fn = join_fn or type_space.join
    rep = AuditReport("oracles", (0, 0))
    from itertools import product as iproduct

    for n in range(1, n_max + 1):
        for host in enumerate_posets(n):
            # validity of every partition
            for codes in iproduct(range(3), repeat=n):
                U = frozenset(e for e, c in zip(host.elements, codes) if c == 0)
                V = frozenset(e for e, c in zip(host.elements, codes) if c == 1)
                W = frozenset(e for e, c in zip(host.elements, codes) if c == 2)
                rep.checks += 1
                if type_space.is_valid_triple(host, (U, V, W)) != oracle_triple_valid(host, U, V, W):
                    rep.fail(kind="validity", host=host.to_json(), triple=[sorted(U), sorted(V), sorted(W)])
            order = BruteOrder(host)
            op_host = host.opposite()
            op_order = BruteOrder(op_host)
            triples = order.triples
            tobj = {t: type_space.ValidTriple(host, *t) for t in triples}
            lam = [t for t in triples if not t[0]]
            idx = order.index
            op_idx = op_order.index

            def oll(p, q):
                return p != q and bool((order.above[idx[p]] >> idx[q]) & 1)

            for p in triples:
                ip = idx[p]
                for q in triples:
                    iq = idx[q]
                    rep.checks += 1
                    brute_lt = p == q or bool((order.above[ip] >> iq) & 1)
                    if type_space.lt_valid(tobj[p], tobj[q]) != brute_lt:
                        rep.fail(kind="lt_valid", host=host.to_json(), p=_tj(p), q=_tj(q))
                    if type_space.inc_valid(tobj[p], tobj[q]) != oracle_pair_valid(host, p, q, Relation.INC):
                        rep.fail(kind="inc_valid", host=host.to_json(), p=_tj(p), q=_tj(q))
                    got_meet = meet_fn(tobj[p], tobj[q]).parts()
                    want_meet = order.meet(p, q)
                    if want_meet is None or got_meet != want_meet:
                        rep.fail(kind="meet", host=host.to_json(), p=_tj(p), q=_tj(q),
                                 got=_tj(got_meet), want=None if want_meet is None else _tj(want_meet))
                    got_join = join_fn(tobj[p], tobj[q]).parts()
                    want_join = order.join(p, q)
                    if want_join is None or got_join != want_join:
                        rep.fail(kind="join", host=host.to_json(), p=_tj(p), q=_tj(q),
                                 got=_tj(got_join), want=None if want_join is None else _tj(want_join))
                    # opposite transport reverses the order
                    po = (p[2], p[1], p[0])
                    qo = (q[2], q[1], q[0])
                    op_ll = po != qo and bool((op_order.above[op_idx[qo]] >> op_idx[po]) & 1)
                    if oll(p, q) != op_ll:
                        rep.fail(kind="op-order", host=host.to_json(), p=_tj(p), q=_tj(q))
                    if len(rep.failures) > fail_cap:
                        return rep
            # shift map: order-preserving bijection lambda -> mu
            mu = {t for t in triples if not t[2]}
            shifted = []
            for p in lam:
                sp = type_space.shift_up(tobj[p]).parts()
                rep.checks += 1
                if sp not in mu:
                    rep.fail(kind="shift-range", host=host.to_json(), p=_tj(p))
                shifted.append(sp)
                if type_space.shift_down(type_space.ValidTriple(host, *sp)).parts() != p:
                    rep.fail(kind="shift-inverse", host=host.to_json(), p=_tj(p))
                if not oracle_pair_valid(host, p, sp, Relation.LT) or not oracle_pair_valid(
                    host, p, sp, Relation.INC
                ):
                    rep.fail(kind="shift-validity", host=host.to_json(), p=_tj(p))
            rep.checks += 1
            if len(set(shifted)) != len(lam) or set(shifted) != mu:
                rep.fail(kind="shift-bijection", host=host.to_json())
            for p in lam:
                for q in lam:
                    rep.checks += 1
                    sp = type_space.shift_up(tobj[p]).parts()
                    sq = type_space.shift_up(tobj[q]).parts()
                    if oll(p, q) != oll(sp, sq):
                        rep.fail(kind="shift-order", host=host.to_json(), p=_tj(p), q=_tj(q))
    return rep


def _tj(t) -> list:
    return [sorted(t[0]), sorted(t[1]), sorted(t[2])]
