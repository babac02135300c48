"""Command-line interface: a thin client over the synthesis service.

Every subcommand marshals its flags into a service request; by default the
service runs in-process, `--server` targets a remote `typesmith serve`.

Exit codes: 0 ran clean, 1 candidates found (or an ill-typed `check`),
2 configuration error, 3 internal oracle gate violation.
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from pathlib import Path

from .client import GateViolation, ServiceClient, ServiceError

EXIT_OK = 0
EXIT_CANDIDATES = 1
EXIT_CONFIG = 2
EXIT_GATE = 3


def _read_documents(patterns: list[str]) -> list[dict]:
    paths: list[str] = []
    for pattern in patterns:
        paths.extend(glob.glob(pattern))
    if not paths:
        raise FileNotFoundError(f"no API files match {patterns}")
    docs = []
    for p in sorted(paths):
        with open(p, "r", encoding="utf-8") as fh:
            docs.append(json.load(fh))
    return docs


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--api", action="append", required=True, metavar="GLOB",
        help="JSON API description files (repeatable glob)",
    )
    parser.add_argument("--server", default=None, help="remote service URL")


def _add_campaign_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dialect", default="ir",
                        choices=["ir", "scala-like", "kotlin-like", "groovy-like"])
    parser.add_argument("--modes", default="well",
                        help="comma-separated subset of well,well-erased,ill,ill-erased")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--max-sequences", type=int, default=500,
                        help="sequence cap per definition")
    parser.add_argument("--depth", type=int, default=2,
                        help="substitution nesting depth")
    parser.add_argument("--path-limit", type=int, default=1,
                        help="feasible paths kept per inhabitant search")
    parser.add_argument("--program-depth", type=int, default=2)
    parser.add_argument("--substitutions", type=int, default=1,
                        help="substitution draws per definition")
    parser.add_argument("--incompatible-per-slot", type=int, default=5)
    parser.add_argument("--max-programs", type=int, default=None)
    parser.add_argument("--dump-graph", action="store_true")


def _caps(args: argparse.Namespace) -> dict:
    return {
        "max_sequences_per_def": args.max_sequences,
        "incompatible_per_slot": args.incompatible_per_slot,
        "path_limit": args.path_limit,
        "substitution_depth": args.depth,
        "program_depth": args.program_depth,
        "substitutions_per_def": args.substitutions,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="typesmith",
        description="Synthesize type-intensive client programs from API "
        "descriptions and differentially test type checkers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate programs only")
    _add_common(p_synth)
    _add_campaign_flags(p_synth)

    p_check = sub.add_parser("check", help="run the reference checker on an IR dump")
    _add_common(p_check)
    p_check.add_argument("file", help="program in canonical IR form")

    p_fuzz = sub.add_parser("fuzz", help="run a full campaign")
    _add_common(p_fuzz)
    _add_campaign_flags(p_fuzz)
    p_fuzz.add_argument("--compiler-cmd", default=None,
                        help="command template with {files} and {classpath}")
    p_fuzz.add_argument("--classpath", default="")
    p_fuzz.add_argument("--batch-size", type=int, default=45)
    p_fuzz.add_argument("--workers", type=int, default=1)
    p_fuzz.add_argument("--timeout", type=float, default=60.0,
                        help="seconds per compiler batch")
    p_fuzz.add_argument("--no-compile", action="store_true",
                        help="internal oracle only, skip the external compiler")

    p_stats = sub.add_parser("stats", help="API graph statistics")
    _add_common(p_stats)
    p_stats.add_argument("--dump-graph", metavar="PATH", default=None,
                         help="write a dot rendering of the graph")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def cmd_synth(args: argparse.Namespace, client: ServiceClient) -> int:
    docs = _read_documents(args.api)
    loaded = client.load_spec(docs, depth=args.depth)
    result = client.synth(
        loaded["spec_id"],
        modes=args.modes.split(","),
        seed=args.seed,
        dialect=args.dialect,
        caps=_caps(args),
        max_programs=args.max_programs,
    )
    if args.out:
        out = Path(args.out) / args.dialect / f"synth-{loaded['spec_id']}"
        out.mkdir(parents=True, exist_ok=True)
        for rec in result["programs"]:
            (out / rec["filename"]).write_text(rec["text"])
        if args.dump_graph:
            (out / "api-graph.dot").write_text(
                client.graph_dot(loaded["spec_id"])
            )
        print(f"wrote {result['count']} programs under {out}")
    else:
        for rec in result["programs"]:
            print(rec["ir"], end="")
    return EXIT_OK


def cmd_check(args: argparse.Namespace, client: ServiceClient) -> int:
    docs = _read_documents(args.api)
    loaded = client.load_spec(docs, prune=False)
    text = Path(args.file).read_text(encoding="utf-8")
    verdict = client.check_program(loaded["spec_id"], text)
    if verdict["well_typed"]:
        print("well-typed")
        return EXIT_OK
    print(
        f"type error at statement {verdict['stmt_index']}, "
        f"{verdict['slot']}: {verdict['reason']}"
    )
    return EXIT_CANDIDATES


def cmd_fuzz(args: argparse.Namespace, client: ServiceClient) -> int:
    docs = _read_documents(args.api)
    out_dir = str(Path(args.out).resolve()) if args.out else None
    result = client.campaign(
        documents=docs,
        dialect=args.dialect,
        modes=args.modes.split(","),
        seed=args.seed,
        caps=_caps(args),
        compiler_cmd=args.compiler_cmd,
        classpath=args.classpath,
        batch_size=args.batch_size,
        out_dir=out_dir,
        workers=args.workers,
        no_compile=args.no_compile,
        timeout_s=args.timeout,
        dump_graph=args.dump_graph,
        max_programs=args.max_programs,
    )
    print(json.dumps(result["summary"], indent=2, sort_keys=True))
    if result.get("report_path"):
        print(f"report: {result['report_path']}")
    return result["exit_code"]


def cmd_stats(args: argparse.Namespace, client: ServiceClient) -> int:
    docs = _read_documents(args.api)
    loaded = client.load_spec(docs, prune=False)
    stats = client.stats(loaded["spec_id"])
    print(json.dumps(stats, indent=2, sort_keys=True))
    if args.dump_graph:
        Path(args.dump_graph).write_text(client.graph_dot(loaded["spec_id"]))
        print(f"graph written to {args.dump_graph}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    handlers = {
        "synth": cmd_synth,
        "check": cmd_check,
        "fuzz": cmd_fuzz,
        "stats": cmd_stats,
    }
    try:
        with ServiceClient(args.server) as client:
            return handlers[args.command](args, client)
    except GateViolation as exc:
        print(f"internal gate violation: {exc.detail}", file=sys.stderr)
        return EXIT_GATE
    except (ServiceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
