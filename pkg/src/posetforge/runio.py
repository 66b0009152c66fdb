"""Run artifacts: deterministic serialization and read-only revival.

An artifact holds everything an audit needs: elements with provenance,
the full materialized relation table (the certificates), both ledgers, and
the auxiliary structure's state.  Reviving reconstructs live objects with
the relation cache pre-filled from the artifact, so audits are pure
functions of the file.
"""

from __future__ import annotations

import json
from pathlib import Path

from .adapters import get_adapter
from .chain_builder import BuildResult, RunConfig
from .errors import CorruptArtifact
from .limits import TripleDescriptor
from .moiety_engine import MoietyEngine, MoietyHandle
from .universe import ALL_S, AcceptablePair, Provenance, StagedUniverse, TypeDescriptor

FORMAT = "posetforge-run-v1"


def _sanitize_tasks(tasks: list[dict]) -> list[dict]:
    out = []
    for t in tasks:
        doc = {}
        for k, v in t.items():
            if k == "pair_obj":
                doc["pair"] = v.to_json()
            elif isinstance(v, tuple):
                doc[k] = [list(x) if isinstance(x, tuple) else x for x in v]
            else:
                doc[k] = v
        out.append(doc)
    return out


def result_to_doc(result: BuildResult) -> dict:
    U = result.universe
    n = U.element_count()
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            row.append("0" if i == j else str(int(U.rel(i, j))))
        rows.append("".join(row))
    return {
        "format": FORMAT,
        "config": result.config.to_json(),
        "adapter_effective": U.adapter.name,
        "op_reduced": result.op_reduced,
        "p": U.p.to_json(),
        "elements": [pv.to_json() for pv in U.prov],
        "stage_sizes": list(U.stage_sizes),
        "stage_ledger": U.stage_meta,
        "task_ledger": _sanitize_tasks(result.task_ledger),
        "relations": rows,
        "engine": U.engine.to_json(),
        "stages_used": result.stages_used,
    }


def dumps_doc(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def write_run(result: BuildResult, path) -> dict:
    doc = result_to_doc(result)
    Path(path).write_text(dumps_doc(doc), encoding="utf-8")
    return doc


def load_run(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptArtifact(str(exc)) from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CorruptArtifact("not a posetforge run artifact")
    return doc


def _engine_from_json(doc: dict, seed: int) -> MoietyEngine:
    eng = MoietyEngine(seed)
    eng.sort = list(doc["sorts"])
    eng.down = [int(h, 16) for h in doc["down"]]
    eng.up = [0] * len(eng.sort)
    for x, row in enumerate(eng.down):
        m = row
        while m:
            b = (m & -m).bit_length() - 1
            m &= m - 1
            eng.up[b] |= 1 << x
    eng.n1_nodes = list(doc["n1_nodes"])
    eng.n1_index = {node: j for j, node in enumerate(eng.n1_nodes)}
    eng.handles = [
        MoietyHandle(h["kind"], h["generator"], hid) for hid, h in enumerate(doc["handles"])
    ]
    eng._gen_handle = {h.generator: h for h in eng.handles}
    eng.sep_certs = {
        tuple(int(x) for x in k.split(",")): v for k, v in doc["sep_certs"].items()
    }
    eng.point_tags = list(doc["tags"])
    eng.agenda_counts = {int(k): list(v) for k, v in doc["agenda"].items()}
    return eng


def _pair_from_json(doc: dict, handles: list[MoietyHandle]) -> AcceptablePair:
    ws_doc = doc["w_s"]
    if ws_doc["kind"] == "none":
        ws = None
    elif ws_doc["kind"] == "all":
        ws = ALL_S
    elif ws_doc["kind"] == "handle":
        ws = handles[ws_doc["hid"]]
    else:
        ws = tuple(ws_doc["ids"])
    um = None if doc["u_moiety"] is None else handles[doc["u_moiety"]["hid"]]
    return AcceptablePair(tuple(doc["u_fin"]), um, tuple(doc["w_fin"]), ws)


def revive(doc: dict) -> BuildResult:
    """Reconstruct live objects from an artifact, relations pre-filled."""
    config = RunConfig(**doc["config"])
    adapter = get_adapter(doc["adapter_effective"])
    engine = _engine_from_json(doc["engine"], config.seed)
    p = TripleDescriptor.from_json(doc["p"])
    U = StagedUniverse(adapter, p, engine, config.seed)
    for el in doc["elements"]:
        pv = Provenance(el["sort"], el["index"])
        eid = U._mint(pv)
        if pv.sort == "A":
            U.a_ids.append(eid)
        elif pv.sort == "R":
            U.r_ids.append(eid)
        elif pv.sort == "S":
            U.s_ids.append(eid)
        elif pv.sort == "T":
            U.t_ids[pv.index] = eid
    U.stage_sizes = list(doc["stage_sizes"])
    U.stage_meta = doc["stage_ledger"]
    for meta in U.stage_meta:
        for pt in meta["points"]:
            pair = _pair_from_json(pt["pair"], engine.handles)
            stage = meta["stage"]
            U.desc[pt["id"]] = TypeDescriptor(pair, stage)
            U.orbit_registry[(stage, pair.key())] = pt["id"]
    n = U.element_count()
    rows = doc["relations"]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise CorruptArtifact("relation table shape mismatch")
    for i in range(n):
        row = rows[i]
        for j in range(n):
            if i != j:
                U._rel[i * U._cap + j] = int(row[j])
    missing = [eid for eid in range(n) if U.prov[eid].sort == "E" and eid not in U.desc]
    if missing:
        raise CorruptArtifact(f"constructed elements without descriptors: {missing}")
    return BuildResult(
        universe=U,
        config=config,
        op_reduced=doc["op_reduced"],
        task_ledger=doc["task_ledger"],
        stages_used=doc["stages_used"],
        budget_exhausted=doc["stages_used"] >= config.stages,
    )
