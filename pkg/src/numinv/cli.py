"""Command-line front end.

Two subcommands: ``run`` analyzes one program with one technique and
prints the invariants found at each cut point; ``compare`` runs several
techniques on several programs and aggregates pointwise comparisons.

Exit codes: 0 success, 1 parse or configuration error, 2 solver
failure, 3 inductiveness self-check failure (an analyzer bug).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

from .domains import DOMAINS
from .engine import (
    TECHNIQUES,
    AnalysisResult,
    EngineError,
    RunConfig,
    analyze_source,
    check_inductive,
    compare_invariants,
)
from .ir import cfg_to_json
from .lang import ParseError
from .smt import SolverError, default_solver_spec

COMPARE_PAIRS = [
    ("G", "S"),
    ("PF", "S"),
    ("PF", "G"),
    ("G+PF", "PF"),
    ("G+PF", "G"),
    ("G+PF", "S"),
    ("DIS", "G+PF"),
]


class _ArgumentParser(argparse.ArgumentParser):
    """Exit with code 1 on bad usage; code 2 is reserved for solver failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="numinv", description="numerical invariant inference"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--domain", choices=sorted(DOMAINS), default="intervals")
        p.add_argument(
            "--solver",
            default=None,
            help="'internal' or 'cmd:<exe args>' for an SMT-LIB2 process "
            "(default: PAGAI_LITE_SOLVER or internal)",
        )
        p.add_argument("--max-disjuncts", type=int, default=2)
        p.add_argument("--widening-delay", type=int, default=1)
        p.add_argument("--narrowing", type=int, default=2)
        p.add_argument("--format", choices=["text", "json"], default="text")

    run = sub.add_parser("run", help="analyze one program")
    run.add_argument("input", help="program file")
    run.add_argument("--technique", choices=TECHNIQUES, default="S")
    common(run)
    run.add_argument("--dump-cfg", action="store_true")
    run.add_argument("--dump-pathset", action="store_true")
    run.add_argument("--events", metavar="FILE", help="write the event log as JSON lines")

    cmp_ = sub.add_parser("compare", help="compare techniques on programs")
    cmp_.add_argument("inputs", nargs="+", help="program files")
    cmp_.add_argument(
        "--techniques",
        default="S,G,PF,G+PF,DIS",
        help="comma-separated subset of S,G,PF,G+PF,DIS",
    )
    common(cmp_)
    cmp_.add_argument("--csv", metavar="FILE", help="also write the table as CSV")
    cmp_.add_argument("--parallel", action="store_true", help="one thread per run")
    return parser


def _config(args, technique: str) -> RunConfig:
    solver = args.solver if args.solver is not None else default_solver_spec()
    if args.max_disjuncts < 1:
        raise EngineError("--max-disjuncts must be >= 1")
    if args.widening_delay < 0:
        raise EngineError("--widening-delay must be >= 0")
    if args.narrowing < 0:
        raise EngineError("--narrowing must be >= 0")
    return RunConfig(
        technique=technique,
        domain=args.domain,
        solver=solver,
        widening_delay=args.widening_delay,
        narrowing=args.narrowing,
        max_disjuncts=args.max_disjuncts,
    )


def _result_dict(result: AnalysisResult, inductive: bool, with_time: bool) -> dict:
    stats = asdict(result.stats)
    if not with_time:
        stats.pop("wall_time")
    data = {
        "program": result.cfg.name,
        "technique": result.technique,
        "domain": result.domain,
        "cut_points": list(result.sel.cut_points),
        "widening_points": list(result.sel.widening_points),
        "invariants": {
            str(p): [str(c) for c in result.values[p].constraints()]
            if not result.values[p].is_bottom
            else None
            for p in result.sel.cut_points
        },
        "rendered": {
            str(p): result.values[p].render() for p in result.sel.cut_points
        },
        "inductive": inductive,
        "stats": stats,
    }
    if result.disjuncts is not None:
        data["disjuncts"] = {
            str(p): [v.render() for v in result.disjuncts[p]]
            for p in result.sel.cut_points
        }
    if result.pathset is not None:
        data["pathset_size"] = result.pathset.size()
    return data


def _print_run_text(result: AnalysisResult, inductive: bool):
    print(f"program: {result.cfg.name}")
    print(f"technique: {result.technique}  domain: {result.domain}")
    print(f"cut points: {list(result.sel.cut_points)}")
    for p in result.sel.cut_points:
        kind = []
        if p == result.cfg.entry:
            kind.append("entry")
        if p == result.cfg.exit:
            kind.append("exit")
        if p in result.sel.widening_points:
            kind.append("loop head")
        label = f" ({', '.join(kind)})" if kind else ""
        print(f"  node {p}{label}: {result.values[p].render()}")
        if result.disjuncts is not None and len(result.disjuncts[p]) > 1:
            for k, v in enumerate(result.disjuncts[p]):
                print(f"    disjunct {k}: {v.render()}")
    s = result.stats
    print(
        f"stats: queries={s.queries} paths={s.paths_added} "
        f"widenings={s.widenings} narrowings={s.narrowings}"
    )
    print(f"inductive: {'yes' if inductive else 'NO'}")


def cmd_run(args) -> int:
    with open(args.input) as fh:
        src = fh.read()
    config = _config(args, args.technique)
    events: list[dict] = []
    result = analyze_source(src, config, events=events)
    ok, violations = check_inductive(result)
    if args.events:
        with open(args.events, "w") as fh:
            for ev in events:
                fh.write(json.dumps(ev) + "\n")
    if args.dump_cfg:
        print(cfg_to_json(result.cfg, result.sel))
    if args.dump_pathset and result.pathset is not None:
        print(result.pathset.to_dot())
    if args.format == "json":
        print(json.dumps(_result_dict(result, ok, with_time=True), indent=2))
    else:
        _print_run_text(result, ok)
        if not ok:
            for v in violations:
                print(f"  violation: {v}")
    return 0 if ok else 3


def _run_one(src, config):
    return analyze_source(src, config)


def cmd_compare(args) -> int:
    techniques = [t.strip() for t in args.techniques.split(",") if t.strip()]
    for t in techniques:
        if t not in TECHNIQUES:
            raise EngineError(f"unknown technique {t!r}")
    if len(techniques) < 2:
        raise EngineError("compare needs at least 2 techniques")
    sources = {}
    for path in args.inputs:
        with open(path) as fh:
            sources[path] = fh.read()
    runs: dict[tuple[str, str], AnalysisResult] = {}
    jobs = [(path, t) for path in args.inputs for t in techniques]
    if args.parallel:
        with ThreadPoolExecutor() as pool:
            futs = {
                (path, t): pool.submit(_run_one, sources[path], _config(args, t))
                for path, t in jobs
            }
            for key, fut in futs.items():
                runs[key] = fut.result()
    else:
        for path, t in jobs:
            runs[(path, t)] = analyze_source(sources[path], _config(args, t))
    pairs = [(a, b) for a, b in COMPARE_PAIRS if a in techniques and b in techniques]
    rows = []
    for a, b in pairs:
        counts = {"stronger": 0, "weaker": 0, "equal": 0, "incomparable": 0}
        total = 0
        for path in args.inputs:
            verdicts, _ = compare_invariants(runs[(path, a)], runs[(path, b)])
            for v in verdicts.values():
                counts[v] += 1
                total += 1
        pct = {k: (100.0 * c / total if total else 0.0) for k, c in counts.items()}
        rows.append({"pair": f"{a}/{b}", "points": total, **pct})
    stats_rows = [
        {
            "program": path,
            "technique": t,
            **asdict(runs[(path, t)].stats),
        }
        for path, t in jobs
    ]
    if args.format == "json":
        print(json.dumps({"pairs": rows, "runs": stats_rows}, indent=2))
    else:
        print(f"{'pair':<12}{'stronger':>10}{'weaker':>10}{'equal':>10}{'incomp':>10}")
        for row in rows:
            print(
                f"{row['pair']:<12}{row['stronger']:>9.1f}%{row['weaker']:>9.1f}%"
                f"{row['equal']:>9.1f}%{row['incomparable']:>9.1f}%"
            )
        print()
        print(f"{'program':<28}{'technique':<10}{'queries':>8}{'paths':>7}{'widen':>7}")
        for r in stats_rows:
            print(
                f"{r['program']:<28}{r['technique']:<10}{r['queries']:>8}"
                f"{r['paths_added']:>7}{r['widenings']:>7}"
            )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("pair,stronger,weaker,equal,incomparable\n")
            for row in rows:
                fh.write(
                    f"{row['pair']},{row['stronger']:.3f},{row['weaker']:.3f},"
                    f"{row['equal']:.3f},{row['incomparable']:.3f}\n"
                )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_compare(args)
    except (ParseError, EngineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
