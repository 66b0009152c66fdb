"""Acceptable pairs, acceptable extensions, witness lemmas, and the scheduler.

A stage adds one G-orbit of points typed by an acceptable pair over the
frozen previous stage.  The two witness routines mirror the proofs they
come from: the one for supports meeting S below threads a fresh moiety
through the sandwich query; the stabilizer-aware one adds d+2 stages and
records its stabilizer claims in the ledger for the word-bounded audit.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .adapters import get_adapter
from .errors import (
    BadConfig,
    NotAcceptable,
    NotAValidTriple,
    PosetForgeError,
)
from .limits import resolve_build_target
from .moiety_engine import SIGMA, SIGMA_PRIME, MoietyEngine, MoietyHandle
from .poset_core import Relation
from . import kernels
from .universe import (
    ALL_S,
    AcceptablePair,
    SExpr,
    StagedUniverse,
    TypeDescriptor,
    make_pair,
)

TRANSITIVITY_SCAN_CAP = 200


# -- acceptability ------------------------------------------------------------


def _up_s_certified(U: StagedUniverse, m: int):
    """Normalize m's up-S expression to 'all', a single covering SIGMA_PRIME
    handle, a finite id-free index set, or None when empty."""
    expr = U.up_s_expr(m)
    if expr.all_s:
        return "all"
    if not expr.primes:
        return ("fin", expr.fin) if expr.fin else None
    for cand in expr.primes:
        others_ok = all(
            h.hid == cand.hid or U.engine.subset_certified(h, cand) for h in expr.primes
        )
        fin_ok = all(U.engine.member(cand, j) for j in expr.fin)
        if others_ok and fin_ok:
            return cand
    return ("uncertified", expr)


def is_acceptable(U: StagedUniverse, pair: AcceptablePair) -> tuple[bool, list[str]]:
    """AC1-AC4, with every infinite clause reduced to engine certificates."""
    violations: list[str] = []
    eng = U.engine
    z = pair.u_moiety

    # AC1: U < W
    for u in pair.u_fin:
        for w in pair.w_fin:
            if U.rel(u, w) is not Relation.LT:
                violations.append(f"AC1: {u} not < {w}")
    if z is not None:
        for w in pair.w_fin:
            fp = U.fingerprint(w)
            if fp is None or not eng.subset_certified(z, fp):
                violations.append(f"AC1: moiety not certified below {w}")
        if pair.w_s is not None:
            violations.append("AC1: U has a moiety while W meets S")
    if pair.w_s is not None:
        for u in pair.u_fin:
            cert = _up_s_certified(U, u)
            if pair.w_s == ALL_S:
                if cert != "all":
                    violations.append(f"AC1: {u} not below all of S")
            elif isinstance(pair.w_s, MoietyHandle):
                ok = cert == "all" or (
                    isinstance(cert, MoietyHandle) and eng.subset_certified(pair.w_s, cert)
                )
                if not ok:
                    violations.append(f"AC1: {u} not certified below W's S-part")
            else:
                for s in pair.w_s:
                    if U.rel(u, s) is not Relation.LT:
                        violations.append(f"AC1: {u} not < {s}")

    # AC2 is structural (finite tuples), but S ids hiding in the finite parts
    # belong to the S-parts instead
    for u in pair.u_fin:
        if U.is_s(u) and z is None:
            violations.append(f"AC3: {u} lies in S but U^- cap S is not a moiety")
    for w in pair.w_fin:
        if U.is_s(w):
            violations.append(f"AC2: S element {w} belongs in the w_s part")

    # AC3
    fps = []
    for u in pair.u_fin:
        if not U.is_s(u):
            fp = U.fingerprint(u)
            if fp is not None:
                fps.append((u, fp))
    if z is None:
        for u, fp in fps:
            violations.append(f"AC3: {u} has S-fingerprint but the pair declares none")
    else:
        for u, fp in fps:
            if not eng.subset_certified(fp, z):
                violations.append(f"AC3: fingerprint of {u} not certified inside the moiety")
        for u in pair.u_fin:
            if U.is_s(u) and not eng.member(z, U.s_index(u)):
                violations.append(f"AC3: S member {u} outside the declared moiety")
        used = {
            U.fingerprint(m).hid
            for m in range(U.element_count())
            if not U.is_s(m) and U.fingerprint(m) is not None
        }
        if z.hid in used:
            violations.append("AC3: moiety equals an existing fingerprint (not fresh)")

    # AC4
    below_rt = z is not None or any(U.below_meets_rt(u) for u in pair.u_fin)
    if not below_rt:
        expr = SExpr()
        if pair.w_s == ALL_S:
            expr = SExpr(all_s=True)
        elif isinstance(pair.w_s, MoietyHandle):
            expr = SExpr(primes=(pair.w_s,))
        elif isinstance(pair.w_s, tuple):
            expr = SExpr(fin=frozenset(U.s_index(s) for s in pair.w_s))
        for w in pair.w_fin:
            expr = expr.union(U.up_s_expr(w))
        if expr.all_s:
            pass
        elif expr.primes:
            covered = False
            for cand in expr.primes:
                if all(h.hid == cand.hid or U.engine.subset_certified(h, cand) for h in expr.primes) and all(
                    U.engine.member(cand, j) for j in expr.fin
                ):
                    covered = True
                    break
            if not covered:
                violations.append("AC4: W^+ cap S is not certified as a single moiety")
        else:
            violations.append("AC4: W^+ cap S is finite, not in Sigma' nor all of S")

    return (not violations, violations)


def tau(U: StagedUniverse, pair: AcceptablePair) -> TypeDescriptor:
    ok, violations = is_acceptable(U, pair)
    if not ok:
        raise NotAcceptable(violations)
    return TypeDescriptor(pair, len(U.stage_sizes))


def tau_classify(U: StagedUniverse, pair: AcceptablePair, m: int) -> str:
    """Which side of tau(pair) the materialized element m falls on."""
    if U._in_pair_down(m, pair):
        return "U"
    if U._in_pair_up(m, pair):
        return "W"
    return "V"


# -- finite valid triples over the staged universe -----------------------------


def check_finite_triple(U: StagedUniverse, u0, v0, w0) -> None:
    u0, v0, w0 = set(u0), set(v0), set(w0)
    if u0 & v0 or u0 & w0 or v0 & w0:
        raise NotAValidTriple("support sets overlap")
    for u in u0:
        for w in w0:
            if U.rel(u, w) is not Relation.LT:
                raise NotAValidTriple(f"{u} not < {w}")
    for u in u0:
        for v in v0:
            if U.rel(u, v) is Relation.GT:
                raise NotAValidTriple(f"{u} > {v}")
    for w in w0:
        for v in v0:
            if U.rel(w, v) is Relation.LT:
                raise NotAValidTriple(f"{w} < {v}")


def triple_meets_s_below(U: StagedUniverse, u0) -> bool:
    return any(U.is_s(u) or U.fingerprint(u) is not None for u in u0)


def in_basic_open(U: StagedUniverse, m: int, u0, v0, w0) -> bool:
    """Does a materialized point witness the basic open set of the triple?"""
    if m in set(u0) | set(v0) | set(w0):
        return False
    for u in u0:
        if U.rel(u, m) is not Relation.LT:
            return False
    for v in v0:
        if U.rel(v, m) is not Relation.INC:
            return False
    for w in w0:
        if U.rel(w, m) is not Relation.GT:
            return False
    return True


# -- the witness lemma for arbitrary finite triples -----------------------------


def enough_aps(U: StagedUniverse, u0, v0, w0) -> AcceptablePair:
    """An acceptable pair whose type lands in the basic open of the triple."""
    check_finite_triple(U, u0, v0, w0)
    u0, v0, w0 = sorted(set(u0)), sorted(set(v0)), sorted(set(w0))
    eng = U.engine

    if triple_meets_s_below(U, u0):
        c = [U.s_index(u) for u in u0 if U.is_s(u)]
        fam_u = [U.fingerprint(u) for u in u0 if not U.is_s(u) and U.fingerprint(u) is not None]
        fam_w = []
        for w in w0:
            fp = U.fingerprint(w)
            if fp is None:
                raise NotAValidTriple(f"{w} lies above none of S yet bounds an S-meeting support")
            fam_w.append(fp)
        fam_v = []
        d_excl: set[int] = set()
        for v in v0:
            if U.below_meets_rt(v):
                expr = U.up_s_expr(v)
                d_excl |= set(expr.fin)
                if U.is_s(v):
                    d_excl.add(U.s_index(v))
                if expr.all_s or expr.primes:
                    raise PosetForgeError(f"element {v} above R/T has an infinite up-S set")
            else:
                cert = _up_s_certified(U, v)
                if not isinstance(cert, MoietyHandle):
                    raise PosetForgeError(f"element {v} outside (R u T)^+ lacks a Sigma' certificate")
                fam_v.append(cert)
        avoid = []
        seen = set()
        for m in range(U.element_count()):
            if not U.is_s(m):
                fp = U.fingerprint(m)
                if fp is not None and fp.hid not in seen:
                    seen.add(fp.hid)
                    avoid.append(fp)
        z = eng.find_Z(SIGMA, U=fam_u, W=fam_w, V=fam_v, C=c, D=sorted(d_excl), avoid=avoid,
                       tag="enough-aps")
        return make_pair(
            u_fin=[u for u in u0 if not U.is_s(u)],
            u_moiety=z,
            w_fin=w0,
        )

    # support meets S nowhere below
    if any(U.below_meets_rt(u) for u in u0):
        return make_pair(
            u_fin=u0,
            w_fin=[w for w in w0 if not U.is_s(w)],
            w_s=tuple(sorted(w for w in w0 if U.is_s(w))) or None,
        )
    certs = {w: _up_s_certified(U, w) for w in w0}
    if any(cert == "all" for cert in certs.values()):
        return make_pair(
            u_fin=u0,
            w_fin=[w for w in w0 if not U.is_s(w)],
            w_s=tuple(sorted(w for w in w0 if U.is_s(w))) or None,
        )
    fam_u = []
    for u in u0:
        cert = _up_s_certified(U, u)
        if cert == "all":
            continue
        if not isinstance(cert, MoietyHandle):
            raise PosetForgeError(f"element {u} outside (R u T)^+ lacks a Sigma' certificate")
        fam_u.append(cert)
    fam_v = [U.fingerprint(v) for v in v0 if not U.is_s(v) and U.fingerprint(v) is not None]
    d = sorted(U.s_index(v) for v in v0 if U.is_s(v))
    fam_w = []
    c_incl: set[int] = set()
    for w in w0:
        if U.is_s(w):
            c_incl.add(U.s_index(w))
        elif U.below_meets_rt(w):
            expr = U.up_s_expr(w)
            if expr.all_s or expr.primes:
                raise PosetForgeError(f"element {w} above R/T has an infinite up-S set")
            c_incl |= set(expr.fin)
        else:
            cert = certs[w]
            if not isinstance(cert, MoietyHandle):
                raise PosetForgeError(f"element {w} outside (R u T)^+ lacks a Sigma' certificate")
            fam_w.append(cert)
    eng.ensure_n1_count(max(c_incl, default=-1) + 1)
    z = eng.find_Z(SIGMA_PRIME, U=fam_u, W=fam_w, V=fam_v, C=sorted(c_incl), D=d,
                   tag="enough-aps")
    return make_pair(u_fin=u0, w_fin=[w for w in w0 if not U.is_s(w)], w_s=z)


# -- acceptable extension -------------------------------------------------------


def group_elements(U: StagedUniverse, word_bound: int):
    """Distinct generator-word actions up to the bound, identity first.

    Elements are keyed by their action on the materialized A-prefix, which
    is faithful for the built-in hosts.  Each entry is (key, word) with a
    word a list of (generator, inverted) steps.
    """
    gens = U.generators
    prefix = range(len(U.a_ids))

    def key_of(word):
        out = []
        for i in prefix:
            j = i
            for g, inv in word:
                j = g.inv(j) if inv else g.fwd(j)
            out.append(j)
        return tuple(out)

    identity = key_of([])
    seen = {identity: []}
    order = [(identity, [])]
    frontier = [[]]
    for _ in range(word_bound):
        new_frontier = []
        for word in frontier:
            for g in gens:
                for inv in (False, True):
                    w2 = word + [(g, inv)]
                    k = key_of(w2)
                    if k not in seen:
                        seen[k] = w2
                        order.append((k, w2))
                        new_frontier.append(w2)
        frontier = new_frontier
        if not frontier:
            break
    return order


def extend(U: StagedUniverse, pair: AcceptablePair, route: str, orbit_budget: int,
           word_bound: int = 6, claims=(), task_id=None) -> dict:
    """One acceptable extension: a point per orbit pair, then a stage freeze."""
    ok, violations = is_acceptable(U, pair)
    if not ok:
        raise NotAcceptable(violations)
    stage = len(U.stage_sizes)
    orbit_pairs = [pair]
    seen_keys = {pair.key()}
    queued = []
    for _, word in group_elements(U, word_bound)[1:]:
        q = pair
        try:
            for g, inv in word:
                q = U.translate_pair(g, q, inv)
        except PosetForgeError:
            continue
        if q.key() not in seen_keys:
            seen_keys.add(q.key())
            if len(orbit_pairs) < orbit_budget:
                orbit_pairs.append(q)
            else:
                queued.append(q)
    new_ids = [U.mint_constructed(q, stage) for q in orbit_pairs]
    U.freeze_stage(
        {
            "stage": stage,
            "route": route,
            "pair": pair.to_json(),
            "points": [{"id": e, "pair": q.to_json()} for e, q in zip(new_ids, orbit_pairs)],
            "new_ids": new_ids,
            "queued_orbit": len(queued),
            "claims": list(claims),
            "task": task_id,
        }
    )
    _scan_stage(U)
    return {"stage": stage, "new_ids": new_ids, "queued": queued, "point": new_ids[0]}


def _scan_stage(U: StagedUniverse) -> None:
    n = min(U.element_count(), TRANSITIVITY_SCAN_CAP)
    snap = U.snapshot(n)
    bad = kernels.check_strict(snap.matrix(), n)
    if bad >= 0:
        i, j = divmod(bad, n)
        raise PosetForgeError(f"stage scan: order violated at ({i},{j})")


# -- the stabilizer-aware witness lemma ------------------------------------------


def enough_aps2(U: StagedUniverse, u0, v0, w0, orbit_budget: int, word_bound: int,
                task_id=None) -> dict:
    """Append d+2 stages realizing the triple while pinning stabilizers.

    Requires the support to meet S from below.  Records, stage by stage,
    the claimed stabilizer identities for the uniqueness audit.
    """
    check_finite_triple(U, u0, v0, w0)
    if not triple_meets_s_below(U, u0):
        raise NotAValidTriple("support does not meet S from below; use enough_aps")
    u0, v0, w0 = sorted(set(u0)), sorted(set(v0)), sorted(set(w0))

    U.materialize_s(0)
    s0 = U.s_ids[0]
    a0_indices = sorted(set().union(*[U.a0_cert(x) for x in u0 + w0]) if (u0 or w0) else set())
    for i in a0_indices:
        U.materialize_a(i)

    e_points = []
    stages = []
    for ai in a0_indices:
        if U.p.in_v(U.adapter, ai):
            t_prime = U.t_ids[ai]
        else:
            t_prime = U.a_ids[ai]
        pair_i = enough_aps(U, [t_prime, s0], [], [])
        res = extend(
            U, pair_i, route="aps2-prefix", orbit_budget=orbit_budget,
            word_bound=word_bound,
            claims=[{"kind": "stab-point", "point": None, "a_index": ai}],
            task_id=task_id,
        )
        # claim recorded before the point exists; patch in the realized id
        U.stage_meta[res["stage"]]["claims"][0]["point"] = res["point"]
        e_points.append(res["point"])
        stages.append(res["stage"])

    pair_d = enough_aps(U, u0 + e_points, [], [])
    res_d = extend(
        U, pair_d, route="aps2-top", orbit_budget=orbit_budget, word_bound=word_bound,
        claims=[{"kind": "stab-set", "point": None, "a_indices": a0_indices}],
        task_id=task_id,
    )
    U.stage_meta[res_d["stage"]]["claims"][0]["point"] = res_d["point"]
    e_d = res_d["point"]
    stages.append(res_d["stage"])

    pair_w = enough_aps(U, u0, v0, [e_d] + w0)
    res_w = extend(
        U, pair_w, route="aps2-witness", orbit_budget=orbit_budget, word_bound=word_bound,
        claims=[{"kind": "stab-set", "point": None, "a_indices": a0_indices}],
        task_id=task_id,
    )
    U.stage_meta[res_w["stage"]]["claims"][0]["point"] = res_w["point"]
    stages.append(res_w["stage"])

    witness = res_w["point"]
    if not in_basic_open(U, witness, u0, v0, w0):
        raise PosetForgeError("aps2 witness missed its basic open set")
    return {"witness": witness, "stages": stages, "e_points": e_points, "e_d": e_d}


def aps2_stage_cost(U: StagedUniverse, u0, w0) -> int:
    certs = set().union(*[U.a0_cert(x) for x in list(u0) + list(w0)]) if (u0 or w0) else set()
    return len(certs) + 2


# -- scheduler --------------------------------------------------------------------


@dataclass
class RunConfig:
    adapter: str = "antichain"
    stages: int = 40
    orbit_budget: int = 8
    support_bound: int = 3
    word_bound: int = 6
    seed: int = 7

    def validate(self) -> None:
        if self.stages <= 0 or self.orbit_budget <= 0 or self.support_bound <= 0:
            raise BadConfig("budgets must be positive")
        if not (-(2**63) <= self.seed < 2**63):
            raise BadConfig("seed must fit in 64 bits")

    def to_json(self) -> dict:
        return {
            "adapter": self.adapter,
            "stages": self.stages,
            "orbit_budget": self.orbit_budget,
            "support_bound": self.support_bound,
            "word_bound": self.word_bound,
            "seed": self.seed,
        }


@dataclass
class BuildResult:
    universe: StagedUniverse
    config: RunConfig
    op_reduced: bool
    task_ledger: list = field(default_factory=list)
    stages_used: int = 0
    budget_exhausted: bool = False


class Scheduler:
    """Fair FIFO over witness tasks, realization tasks, materialization and
    the moiety coinfiniteness agenda.  Deterministic in the seed."""

    GEN_QUOTA = 16  # new tasks pulled per epoch
    PROC_QUOTA = 30  # tasks processed per epoch
    BREAKER_QUOTA = 2  # breaker tasks admitted to the FIFO per epoch

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        adapter = get_adapter(config.adapter)
        effective, p, self.op_reduced = resolve_build_target(adapter)
        self.engine = MoietyEngine(config.seed)
        self.U = StagedUniverse(effective, p, self.engine, config.seed)
        self.tasks: list[dict] = []
        self.fifo: deque[int] = deque()
        self.seen_tasks: set = set()
        self.stages_used = 0
        self._stream = None
        self._stream_upto = 0
        self._breaker_queue: deque[int] = deque()

    # -- task plumbing ------------------------------------------------

    def _enqueue(self, kind: str, payload: dict, key) -> int | None:
        if key in self.seen_tasks:
            return None
        self.seen_tasks.add(key)
        tid = len(self.tasks)
        self.tasks.append(
            {"tid": tid, "kind": kind, "status": "queued", "witness": None,
             "stage": None, "note": None, **payload}
        )
        self.fifo.append(tid)
        return tid

    def _task_stream(self, lo: int, hi: int):
        """Witness and realization tasks whose support's largest id lies in
        [lo, hi), ordered so that everything over a small prefix comes before
        anything touching a later element."""
        b = self.config.support_bound
        for top in range(lo, hi):
            for size in range(1, b + 1):
                for rest in itertools.combinations(range(top), size - 1):
                    combo = rest + (top,)
                    for codes in itertools.product((0, 1, 2), repeat=size):
                        u0 = [e for e, c in zip(combo, codes) if c == 0]
                        v0 = [e for e, c in zip(combo, codes) if c == 1]
                        w0 = [e for e, c in zip(combo, codes) if c == 2]
                        try:
                            check_finite_triple(self.U, u0, v0, w0)
                        except NotAValidTriple:
                            continue
                        yield ("a", {"u0": u0, "v0": v0, "w0": w0},
                               ("a", tuple(u0), tuple(v0), tuple(w0)))
                        if not v0:
                            # the same split doubles as a realization task
                            if triple_meets_s_below(self.U, u0):
                                continue
                            pair = make_pair(
                                u_fin=u0,
                                w_fin=[w for w in w0 if not self.U.is_s(w)],
                                w_s=tuple(sorted(w for w in w0 if self.U.is_s(w))) or None,
                            )
                            ok, _ = is_acceptable(self.U, pair)
                            if ok:
                                yield ("c", {"pair_ids": (tuple(u0), tuple(w0))},
                                       ("c", tuple(u0), tuple(w0)))

    def _pull_tasks(self, quota: int) -> None:
        pulled = 0
        while pulled < quota:
            if self._stream is None:
                frontier = self.U.stage_sizes[-1] if self.U.stage_sizes else self.U.element_count()
                if frontier <= self._stream_upto:
                    return
                self._stream = self._task_stream(self._stream_upto, frontier)
                self._stream_upto = frontier
            try:
                kind, payload, key = next(self._stream)
            except StopIteration:
                self._stream = None
                continue
            if self._enqueue(kind, payload, key) is not None:
                pulled += 1

    # -- build --------------------------------------------------------

    def _build_m0(self) -> None:
        U = self.U
        U.materialize_s(3)
        U.materialize_r(3)
        U.materialize_a(max(U.adapter.min_initial(), 4) - 1)
        U.freeze_stage({"stage": 0, "route": "m0", "pair": None, "points": [],
                        "new_ids": [], "queued_orbit": 0, "claims": [], "task": None})
        _scan_stage(U)

    def _materialization_tick(self, epoch: int) -> None:
        U = self.U
        U.materialize_a(len(U.a_ids))
        U.materialize_r(len(U.r_ids))
        U.materialize_s(len(U.s_ids))

    def _maybe_enqueue_breaker(self, eid: int) -> None:
        """Condition-(c) minimality breaker for a fresh point unrelated to S."""
        U = self.U
        pair = U.desc[eid].pair
        if pair.u_moiety is not None or pair.w_s is not None:
            return
        if not U.up_s_expr(eid).is_empty():
            return
        if any(U.fingerprint(u) is not None or U.is_s(u) for u in pair.u_fin):
            return
        tid = self._enqueue(
            "breaker",
            {"pair_ids": (pair.u_fin, tuple(sorted(pair.w_fin + (eid,)))), "target": eid},
            ("breaker", eid),
        )
        if tid is not None:
            self.fifo.pop()  # breakers wait in the side queue, admitted at a bounded rate
            self._breaker_queue.append(tid)

    def _stage_room(self, need: int) -> bool:
        return self.stages_used + need <= self.config.stages

    def _find_witness(self, u0, v0, w0) -> int | None:
        support = set(u0) | set(v0) | set(w0)
        for m in range(self.U.element_count()):
            if m in support:
                continue
            if in_basic_open(self.U, m, u0, v0, w0):
                return m
        return None

    def _process_task(self, tid: int) -> bool:
        """Returns False when the task was pushed back for lack of budget."""
        task = self.tasks[tid]
        U = self.U
        if task["kind"] == "a":
            u0, v0, w0 = task["u0"], task["v0"], task["w0"]
            m = self._find_witness(u0, v0, w0)
            if m is not None:
                task.update(status="completed", witness=m, note="existing-witness")
                return True
            if not triple_meets_s_below(U, u0):
                if not self._stage_room(1):
                    task["status"] = "pending-budget"
                    return False
                pair = enough_aps(U, u0, v0, w0)
                res = extend(U, pair, route="a", orbit_budget=self.config.orbit_budget,
                             word_bound=self.config.word_bound, task_id=tid)
                self.stages_used += 1
                self._after_stage(res)
                task.update(status="completed", witness=res["point"], stage=res["stage"])
                return True
            need = aps2_stage_cost(U, u0, w0)
            if not self._stage_room(need):
                task["status"] = "pending-budget"
                return False
            res = enough_aps2(U, u0, v0, w0, self.config.orbit_budget,
                              self.config.word_bound, task_id=tid)
            self.stages_used += len(res["stages"])
            for st in res["stages"]:
                self._after_stage({"stage": st, "new_ids": U.stage_meta[st]["new_ids"], "queued": []})
            task.update(status="completed", witness=res["witness"], stage=res["stages"][-1])
            return True
        if task["kind"] in ("c", "breaker"):
            if not self._stage_room(1):
                task["status"] = "pending-budget"
                return False
            u_ids, w_ids = task["pair_ids"]
            pair = make_pair(
                u_fin=u_ids,
                w_fin=[w for w in w_ids if not U.is_s(w)],
                w_s=tuple(sorted(w for w in w_ids if U.is_s(w))) or None,
            )
            ok, violations = is_acceptable(U, pair)
            if not ok:
                task.update(status="dropped", note="; ".join(violations))
                return True
            res = extend(U, pair, route=task["kind"], orbit_budget=self.config.orbit_budget,
                         word_bound=self.config.word_bound, task_id=tid)
            self.stages_used += 1
            self._after_stage(res)
            task.update(status="completed", witness=res["point"], stage=res["stage"])
            return True
        if task["kind"] == "orbit":
            stage = task["stage_ref"]
            pair = task["pair_obj"]
            eid = self.U.mint_constructed(pair, stage)
            meta = self.U.stage_meta[stage]
            meta["points"].append({"id": eid, "pair": pair.to_json()})
            meta["new_ids"].append(eid)
            task.update(status="completed", witness=eid, note="orbit-completed")
            return True
        task.update(status="dropped", note="unknown kind")
        return True

    def _after_stage(self, res: dict) -> None:
        for q in res.get("queued", []):
            self._enqueue("orbit", {"stage_ref": res["stage"], "pair_obj": q},
                          ("orbit", res["stage"], q.key()))
        for eid in res.get("new_ids", []):
            self._maybe_enqueue_breaker(eid)

    def run(self) -> BuildResult:
        self._build_m0()
        epoch = 0
        blocked = False
        max_epochs = 3 * self.config.stages
        while self.stages_used < self.config.stages and epoch < max_epochs:
            epoch += 1
            self._materialization_tick(epoch)
            self.engine.agenda_tick(visits=2)
            self._pull_tasks(self.GEN_QUOTA)
            for _ in range(min(self.BREAKER_QUOTA, len(self._breaker_queue))):
                self.fifo.append(self._breaker_queue.popleft())
            processed = 0
            blocked = False
            while self.fifo and processed < self.PROC_QUOTA:
                tid = self.fifo.popleft()
                if not self._process_task(tid):
                    self.fifo.appendleft(tid)
                    blocked = True
                    break
                processed += 1
            if blocked:
                break
        # drain: cheap witness checks only, no further stages
        self.fifo.extend(self._breaker_queue)
        self._breaker_queue.clear()
        for tid in list(self.fifo):
            task = self.tasks[tid]
            if task["kind"] == "a":
                m = self._find_witness(task["u0"], task["v0"], task["w0"])
                if m is not None:
                    task.update(status="completed", witness=m, note="existing-witness")
                    continue
            task["status"] = "pending-budget"
        self.fifo.clear()
        for h in list(self.engine.handles):
            self.engine.materialize_n1(
                above=[h.generator] if h.kind == "sigma" else [],
                below=[h.generator] if h.kind == "sigma_prime" else [],
                tag=f"drain-inhabit({h.hid})",
            )
        self.engine.ensure_all_separated()
        self.U.freeze_stage({"stage": len(self.U.stage_sizes), "route": "final", "pair": None,
                             "points": [], "new_ids": [], "queued_orbit": 0, "claims": [],
                             "task": None})
        _scan_stage(self.U)
        return BuildResult(
            universe=self.U,
            config=self.config,
            op_reduced=self.op_reduced,
            task_ledger=self.tasks,
            stages_used=self.stages_used,
            budget_exhausted=blocked,
        )


def build(config: RunConfig) -> BuildResult:
    return Scheduler(config).run()
