"""Command-line entry point: ``qrs-stream run``.

Events are written one per line as ``key=value`` pairs.  With ``--eval`` the
confusion matrix and per-class metrics follow as CSV blocks introduced by
``# <name>`` lines, and a readable table goes to stderr.  The per-stage
timing block is always written.

Exit codes: 0 success, 2 input error, 3 config error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

from .config import ConfigError, load_config
from .evaluate import LABEL_SPACES
from .io import AnnotationOrderError, ParseError
from .pipeline import run_record

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrs-stream", description="Streaming QRS morphology clustering.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="cluster the beats of one record")
    run.add_argument("--signal", required=True, help="signal CSV (fs header, lead names, samples)")
    run.add_argument("--annotations", required=True, help="annotation CSV (sample,label)")
    run.add_argument("--config", help="key = value parameter file")
    run.add_argument("--eval", action="store_true", help="score the grouping against the annotations")
    run.add_argument("--labels", choices=LABEL_SPACES, default="mitbih", help="label space for --eval")
    run.add_argument("--max-groups", type=int, help="group cap for --eval (default from config)")
    run.add_argument("--out", help="write events here instead of stdout")
    run.add_argument("--snapshot", help="write the final cluster templates as CSV")
    return parser


def _write_block(stream: TextIO, name: str, body: str) -> None:
    stream.write(f"# {name}\n{body}")


def _run(args: argparse.Namespace, stdout: TextIO, stderr: TextIO) -> int:
    try:
        config = load_config(args.config)
        if args.max_groups is not None and args.max_groups < 1:
            raise ConfigError(f"--max-groups must be >= 1, got {args.max_groups}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"input error: {exc}", file=stderr)
        return EXIT_INPUT

    try:
        result = run_record(args.signal, args.annotations, config, args.eval, args.labels, args.max_groups)
    except (ParseError, AnnotationOrderError) as exc:
        print(f"input error: {exc}", file=stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=stderr)
        return EXIT_INPUT

    lines = "".join(event.to_line() + "\n" for event in result.events)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(lines)
        except OSError as exc:
            print(f"input error: {exc}", file=stderr)
            return EXIT_INPUT
    else:
        stdout.write(lines)

    if result.report is not None:
        matrix = result.report.matrix
        _write_block(stdout, "confusion", matrix.to_csv())
        _write_block(stdout, "metrics", matrix.metrics_csv())
        stdout.write(f"# excluded={result.report.excluded} groups={len(result.report.groups)}\n")
        stderr.write(matrix.to_table())
    _write_block(stdout, "timing", result.timing.to_csv())
    if args.snapshot:
        with open(args.snapshot, "w", encoding="utf-8") as fh:
            fh.write(result.engine.clusters.snapshot_csv())
    return EXIT_OK


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    return _run(args, stdout or sys.stdout, stderr or sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
