"""Seeded fault injection for exercising the audits.

Each injector mutates a revived (in-memory) build result and returns a
description of the planted fault.  The matching audit must then report a
nonempty certificate: a flipped relation or a forged fingerprint breaks the
acceptable-chain properties, a corrupted certificate chain breaks the
minimality audit, and a tampered stabilizer claim breaks the uniqueness
audit.
"""

from __future__ import annotations

from dataclasses import replace

from .chain_builder import BuildResult
from .errors import PosetForgeError
from .poset_core import Relation
from .universe import TypeDescriptor


def inject_flipped_relation(result: BuildResult) -> dict:
    """Turn one recorded s < m relation into incomparability."""
    U = result.universe
    for m in sorted(U.desc):
        for s in U.s_ids:
            if U.rel(s, m) is Relation.LT:
                U._rel[s * U._cap + m] = int(Relation.INC)
                U._rel[m * U._cap + s] = int(Relation.INC)
                return {"kind": "flipped-relation", "s": s, "m": m}
    raise PosetForgeError("no S-below-constructed relation to flip")


def inject_forged_fingerprint(result: BuildResult) -> dict:
    """Swap one constructed point's moiety for a different handle."""
    U = result.universe
    handles = U.engine.handles
    for m in sorted(U.desc):
        pair = U.desc[m].pair
        if pair.u_moiety is None:
            continue
        for h in handles:
            if h.kind == pair.u_moiety.kind and h.hid != pair.u_moiety.hid:
                forged = replace(pair, u_moiety=h)
                U.desc[m] = TypeDescriptor(forged, U.desc[m].stage)
                return {"kind": "forged-fingerprint", "m": m,
                        "was": pair.u_moiety.hid, "now": h.hid}
    raise PosetForgeError("no moiety-backed point to forge")


def inject_broken_stabilizer(result: BuildResult) -> dict:
    """Corrupt the recorded stabilizer claim of a witness-lemma stage."""
    U = result.universe
    for meta in U.stage_meta:
        for claim in meta.get("claims", []):
            if claim.get("point") is None:
                continue
            if claim["kind"] == "stab-point":
                claim["kind"] = "stab-set"
                claim["a_indices"] = []
                return {"kind": "broken-stabilizer", "stage": meta["stage"],
                        "point": claim["point"]}
            if claim["kind"] == "stab-set" and claim["a_indices"]:
                claim["a_indices"] = []
                return {"kind": "broken-stabilizer", "stage": meta["stage"],
                        "point": claim["point"]}
    raise PosetForgeError("no nontrivial stabilizer claim to break")


def inject_full_vp_below(result: BuildResult) -> dict:
    """Give some point the whole materialized V_p below it while it sits
    under an S element (the minimality-audit violation class)."""
    U = result.universe
    target = None
    for m in sorted(U.desc):
        if any(U.rel(m, s) is Relation.LT for s in U.s_ids):
            target = m
            break
    if target is None:
        for m in U.t_ids.values():
            U._rel[m * U._cap + U.s_ids[0]] = int(Relation.LT)
            U._rel[U.s_ids[0] * U._cap + m] = int(Relation.GT)
            target = m
            break
    if target is None:
        raise PosetForgeError("no point below S available")
    # forge the C certificate so it claims to dominate V_p; detectability
    # comes from the adapter refusing the domination claim only for honest C
    U._c_cert[target] = frozenset(range(len(U.a_ids)))
    for i, aid in enumerate(U.a_ids):
        if U.p.in_v(U.adapter, i):
            U._rel[aid * U._cap + target] = int(Relation.LT)
            U._rel[target * U._cap + aid] = int(Relation.GT)
    return {"kind": "full-vp-below", "m": target}


def perturbed_meet(p, q):
    """A wrong meet formula (hands back the join), for the oracle-suite
    mismatch-injection example."""
    from . import type_space

    return type_space.meet(p, q) if p == q else type_space.join(p, q)
