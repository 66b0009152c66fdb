"""The forge command line: build runs, audit them, export structures.

Exit codes: 0 pass, 1 audit failure, 2 usage or config error, 3 budget
exhausted (partial artifact still written).  FORGE_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .chain_builder import RunConfig, build
from .errors import BadConfig, CorruptArtifact, PosetForgeError, StageOutOfRange
from . import runio, verifier
from .poset_core import FinitePoset

SUITES = ("all", "ac", "minimality", "genericity", "uniqueness", "oracles")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run the staged construction")
    b.add_argument("--adapter", default="antichain")
    b.add_argument("--stages", type=int, default=40)
    b.add_argument("--orbit-budget", type=int, default=8)
    b.add_argument("--support-bound", type=int, default=3)
    b.add_argument("--word-bound", type=int, default=6)
    b.add_argument("--seed", type=int, default=7)
    b.add_argument("--min-tasks", type=int, default=0,
                   help="exit 3 when fewer construction tasks completed")
    b.add_argument("--out", default="run.json")

    a = sub.add_parser("audit", help="audit a run artifact")
    a.add_argument("--run", required=True)
    a.add_argument("--suite", default="all", choices=SUITES)
    a.add_argument("--oracle-max", type=int, default=3)
    a.add_argument("--out", default=None)

    e = sub.add_parser("export", help="export a stage truncation")
    e.add_argument("--run", required=True)
    e.add_argument("--format", dest="fmt", default="json", choices=("json", "dot"))
    e.add_argument("--stage", type=int, default=-1)
    e.add_argument("--what", default="universe", choices=("universe", "engine"))
    e.add_argument("--out", default=None)
    return ap


def cmd_build(args) -> int:
    seed = int(os.environ["FORGE_SEED"]) if "FORGE_SEED" in os.environ else args.seed
    config = RunConfig(
        adapter=args.adapter,
        stages=args.stages,
        orbit_budget=args.orbit_budget,
        support_bound=args.support_bound,
        word_bound=args.word_bound,
        seed=seed,
    )
    config.validate()
    result = build(config)
    runio.write_run(result, args.out)
    completed = sum(1 for t in result.task_ledger if t["status"] == "completed")
    print(f"built {result.universe.element_count()} elements over "
          f"{len(result.universe.stage_sizes)} stages ({result.stages_used} extension stages); "
          f"{completed} tasks completed; artifact: {args.out}")
    if args.min_tasks and completed < args.min_tasks:
        print(f"budget exhausted before {args.min_tasks} tasks completed", file=sys.stderr)
        return 3
    return 0


_SUITE_RUNNERS = {
    "ac": lambda res, args: [verifier.audit_ac_props(res)],
    "minimality": lambda res, args: [verifier.audit_minimality(res)],
    "genericity": lambda res, args: [verifier.audit_genericity(res)],
    "uniqueness": lambda res, args: [verifier.audit_uniqueness(res)],
    "oracles": lambda res, args: [verifier.oracle_suite(args.oracle_max)],
}


def cmd_audit(args) -> int:
    doc = runio.load_run(args.run)
    result = runio.revive(doc)
    suites = SUITES[1:] if args.suite == "all" else (args.suite,)
    reports = []
    for name in suites:
        reports.extend(_SUITE_RUNNERS[name](result, args))
    ok = all(r.ok() for r in reports)
    out_doc = {"run": args.run, "ok": ok, "reports": [r.to_json() for r in reports]}
    text = json.dumps(out_doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    for r in reports:
        status = "pass" if r.ok() else "FAIL"
        extra = f", {len(r.pending)} pending" if r.pending else ""
        print(f"{r.name}: {status} ({r.checks} checks, {len(r.failures)} failures{extra})")
    return 0 if ok else 1


def cmd_export(args) -> int:
    doc = runio.load_run(args.run)
    result = runio.revive(doc)
    U = result.universe
    if args.what == "engine":
        text = json.dumps(U.engine.dump_kstructure(), sort_keys=True, indent=2) + "\n"
    else:
        sizes = U.stage_sizes
        stage = args.stage if args.stage >= 0 else len(sizes) - 1
        if stage >= len(sizes):
            raise StageOutOfRange(f"stage {stage} beyond last frozen stage {len(sizes) - 1}")
        count = sizes[stage]
        snap = U.snapshot(count)
        if args.fmt == "json":
            out = snap.to_json()
            out["provenance"] = {str(e): U.prov[e].to_json() for e in snap.elements}
            text = json.dumps(out, sort_keys=True, indent=2) + "\n"
        else:
            colors = {"A": "lightblue", "R": "lightgreen", "S": "gold", "T": "pink", "E": "white"}
            text = snap.to_dot(
                labels=U.provenance_labels(),
                colors={e: colors[U.prov[e].sort] for e in snap.elements},
            ) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "audit":
            return cmd_audit(args)
        return cmd_export(args)
    except (BadConfig, StageOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CorruptArtifact as exc:
        print(f"corrupt artifact: {exc}", file=sys.stderr)
        return 1
    except PosetForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
