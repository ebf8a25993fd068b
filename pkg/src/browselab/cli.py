"""Operator entry point: build/validate an index, run the service, simulate, evaluate.

Exit codes: 0 success, 1 data error (bad corpus, missing file, bad config),
2 usage error (argparse), 3 unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import IngestError, ingest_corpus
from .metrics import evaluate_log
from .simlab import ExperimentConfig, run_experiment, write_experiment_outputs

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _cmd_index(args: argparse.Namespace) -> int:
    result = ingest_corpus(args.corpus)
    index = result.index
    for lineno, reason in result.skipped:
        print(f"line {lineno}: skipped ({reason})", file=sys.stderr)
    if index.doc_count == 0:
        print("warning: corpus contains no valid records", file=sys.stderr)
    summary = {
        "doc_count": index.doc_count,
        "skipped_lines": len(result.skipped),
        "terms_per_field": {k.value: v for k, v in index.term_counts().items()},
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    if args.out:
        Path(args.out).write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app_from_config

    if args.config:
        config = ServiceConfig.from_file(args.config)
    elif args.corpus:
        config = ServiceConfig(corpus_path=args.corpus)
    else:
        print("serve needs --config or --corpus", file=sys.stderr)
        return EXIT_USAGE
    overrides = {}
    if args.corpus:
        overrides["corpus_path"] = args.corpus
    if args.thesaurus:
        overrides["thesaurus_path"] = args.thesaurus
    if args.port is not None:
        overrides["port"] = args.port
    if args.seed is not None:
        overrides["arm_seed"] = args.seed
    if args.arm_force:
        overrides["forced_arm"] = args.arm_force
    if args.log:
        overrides["log_path"] = args.log
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    config = config.with_env_overrides()
    app = create_app_from_config(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.sessions is not None:
        overrides["sessions"] = args.sessions
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    if config.corpus_path is not None and not Path(config.corpus_path).exists():
        print(f"corpus not found: {config.corpus_path}", file=sys.stderr)
        return EXIT_DATA
    result = run_experiment(config)
    paths = write_experiment_outputs(result, args.out)
    print(result.report.to_text())
    print(f"log: {paths['log']}")
    print(f"report: {paths['report_json']}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if not Path(args.log).exists():
        print(f"log not found: {args.log}", file=sys.stderr)
        return EXIT_DATA
    report = evaluate_log(args.log)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    if args.history_bins:
        print(report.history_text())
    else:
        print(report.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="browselab",
        description="contextual stratagem browsing: index, serve, simulate, evaluate",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="validate a corpus and report statistics")
    p_index.add_argument("--corpus", required=True, help="line-delimited corpus file")
    p_index.add_argument("--out", help="write the JSON summary to this path")
    p_index.set_defaults(fn=_cmd_index)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", help="service config file (JSON)")
    p_serve.add_argument("--corpus", help="corpus path (overrides config)")
    p_serve.add_argument("--thesaurus", help="thesaurus path (overrides config)")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--seed", type=int, help="arm-assignment seed")
    p_serve.add_argument(
        "--arm-force",
        choices=["A_baseline", "B_similarity", "C_session_context"],
        help="force every session onto one arm (test hook)",
    )
    p_serve.add_argument("--log", help="transaction log path (appended)")
    p_serve.set_defaults(fn=_cmd_serve)

    p_sim = sub.add_parser("simulate", help="run a seeded living-lab simulation")
    p_sim.add_argument("--config", help="experiment config file (JSON)")
    p_sim.add_argument("--sessions", type=int, help="override session count")
    p_sim.add_argument("--seed", type=int, help="override experiment seed")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="compute the metric report for a log")
    p_eval.add_argument("--log", required=True, help="transaction log path")
    p_eval.add_argument("--out", help="directory for report.json / report.txt")
    p_eval.add_argument(
        "--history-bins",
        action="store_true",
        help="print only the history-size segmentation",
    )
    p_eval.set_defaults(fn=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (IngestError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
