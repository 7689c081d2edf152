"""Command-line interface.

Exit codes: 0 success / property holds, 1 type error, 2 parse or usage
error, 3 property violation or abnormal run outcome.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import check, corpus, harness, parser
from .printer import show_type


def _load(path: str):
    try:
        with open(path) as f:
            src = f.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return parser.parse_program(src)
    except parser.ParseError as e:
        print(json.dumps(e.diagnostic()), file=sys.stderr)
        raise SystemExit(2)


def _typecheck(prog, unsafe: bool):
    if unsafe:
        return None
    try:
        return check.type_check(prog)
    except check.PboTypeError as e:
        print(json.dumps(e.diagnostic()), file=sys.stderr)
        raise SystemExit(1)


def _emit(report: dict):
    print(json.dumps(report, indent=2, default=str))


def cmd_check(args):
    prog = _load(args.file)
    t = _typecheck(prog, False)
    print(f"ok: {show_type(t)}")
    return 0


def cmd_run(args):
    prog = _load(args.file)
    _typecheck(prog, args.unsafe)
    sched = harness.make_scheduler(args.scheduler, args.seed)
    outcome, trace, final = harness.run(
        prog.body, args.semantics, sched, args.budget, collect_trace=args.trace
    )
    report = {
        "outcome": outcome.to_json(),
        "semantics": args.semantics,
        "steps": len(trace) if args.trace else None,
        "mem_residue": len(final.mem),
    }
    if args.trace:
        report["trace"] = trace
    _emit(report)
    return 0 if outcome.kind in ("ReturnedInt", "NormalValue") else 3


def cmd_confluence(args):
    prog = _load(args.file)
    _typecheck(prog, args.unsafe)
    report = harness.check_diamond(prog.body, depth=args.depth)
    _emit(report)
    return 0 if report["verdict"] == "PASS" else 3


def cmd_uniq(args):
    prog = _load(args.file)
    _typecheck(prog, args.unsafe)
    report = harness.check_behavior_uniqueness(
        prog.body, n_schedules=args.schedules, budget=args.budget
    )
    _emit(report)
    return 0 if report["verdict"] == "PASS" else 3


def cmd_leak(args):
    prog = _load(args.file)
    _typecheck(prog, args.unsafe)
    report = harness.check_leak_freedom(
        prog.body, n_schedules=args.schedules, budget=args.budget
    )
    _emit(report)
    return 0 if report["verdict"] == "PASS" else 3


def cmd_graph(args):
    prog = _load(args.file)
    _typecheck(prog, args.unsafe)
    g = harness.reduction_graph(prog.body, args.semantics, args.depth)
    sem = harness.SEMANTICS[args.semantics]
    normal = [i for i, c in enumerate(g.nodes) if sem.is_normal_form(c)]
    if args.format == "dot":
        lines = ["digraph reduction {"]
        for i in range(len(g.nodes)):
            shape = "doublecircle" if i in normal else "circle"
            lines.append(f'  n{i} [label="{i}", shape={shape}];')
        for src, rule, target, dst in g.edges:
            lines.append(f'  n{src} -> n{dst} [label="{rule} {target}"];')
        lines.append("}")
        print("\n".join(lines))
    else:
        _emit({
            "semantics": args.semantics,
            "nodes": len(g.nodes),
            "edges": [[src, rule, target, dst] for src, rule, target, dst in g.edges],
            "normal_forms": normal,
            "depth": g.depth,
            "truncated": g.truncated,
        })
    return 0


def cmd_corpus(args):
    failures = 0
    for e in corpus.entries():
        row = {"name": e.name, "expect_check": e.check}
        try:
            prog = parser.parse_program(e.source())
        except parser.ParseError as ex:
            row["status"] = f"parse error: {ex}"
            failures += 1
            print(json.dumps(row))
            continue
        try:
            check.type_check(prog)
            got = "ok"
        except check.PboTypeError as ex:
            got = ex.code
        row["check"] = got
        bad = got != e.check
        if e.outcome and not bad:
            for sem in ("mut", "den"):
                out, _, final = harness.run(
                    prog.body, sem, harness.make_scheduler("random", args.seed)
                )
                row[sem] = out.to_json()
                if out.kind != e.outcome or (
                    e.value is not None and out.detail != e.value
                ):
                    bad = True
        if e.unsafe_mem_residue is not None and not bad:
            _, _, final = harness.run(
                prog.body, "mut", harness.make_scheduler("random", args.seed)
            )
            row["unsafe_mem_residue"] = len(final.mem)
            bad = len(final.mem) != e.unsafe_mem_residue
        row["status"] = "FAIL" if bad else "PASS"
        failures += bad
        print(json.dumps(row))
    print(f"{'FAIL' if failures else 'PASS'}: "
          f"{len(corpus.entries()) - failures}/{len(corpus.entries())} entries")
    return 3 if failures else 0


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="pbo", description="Linear borrow calculus toolchain"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, run=True):
        p.add_argument("file", help="program file (.pbo)")
        p.add_argument("--unsafe", action="store_true",
                       help="skip type checking before running")
        if run:
            p.add_argument("--semantics", choices=("mut", "den"), default="mut")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--budget", type=int, default=harness.DEFAULT_BUDGET)

    p = sub.add_parser("check", help="parse and type-check a program")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="reduce a program under one scheduler")
    common(p)
    p.add_argument("--scheduler", default="random",
                   choices=("random", "first", "last", "round-robin"))
    p.add_argument("--trace", action="store_true", help="include a step trace")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("confluence", help="diamond property on the reduction graph")
    common(p, run=False)
    p.add_argument("--depth", type=int, default=20)
    p.set_defaults(fn=cmd_confluence)

    p = sub.add_parser("uniq", help="behavioural uniqueness across schedules")
    common(p, run=False)
    p.add_argument("--schedules", type=int, default=100)
    p.add_argument("--budget", type=int, default=harness.DEFAULT_BUDGET)
    p.set_defaults(fn=cmd_uniq)

    p = sub.add_parser("leak", help="memory-leak freedom across schedules")
    common(p, run=False)
    p.add_argument("--schedules", type=int, default=100)
    p.add_argument("--budget", type=int, default=harness.DEFAULT_BUDGET)
    p.set_defaults(fn=cmd_leak)

    p = sub.add_parser("graph", help="explore the reduction graph")
    common(p, run=False)
    p.add_argument("--semantics", choices=("mut", "den"), default="mut")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("corpus", help="validate the bundled example programs")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_corpus)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
