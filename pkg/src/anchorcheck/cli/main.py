"""Command-line entry point: ``anchorcheck verify`` and ``anchorcheck parse-only``."""

from __future__ import annotations

import argparse
import sys

from .loader import SemanticError, load
from .runner import emit, env_caps, run
from .syntax import ParseError, parse, print_file

EXIT_PARSE = 3


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_file(path: str):
    text = _read(path)
    pf = parse(text)
    return pf, load(pf)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anchorcheck", description="Exact verification of anchor, conservation and symmetry claims.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run every task in a problem file")
    v.add_argument("file", help="problem file ('-' for stdin)")
    v.add_argument("--format", choices=("human", "structured"), default="human")
    v.add_argument("--jobs", type=int, default=1, help="tasks to run concurrently")
    v.add_argument("--no-timing", action="store_true", help="omit timings (byte-identical reports)")
    po = sub.add_parser("parse-only", help="parse and validate a file, then print it in canonical form")
    po.add_argument("file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        pf, loaded = load_file(args.file)
    except (ParseError, SemanticError) as err:
        kind = "syntax error" if isinstance(err, ParseError) else "error"
        print(f"{args.file}:{err}" if getattr(err, "line", 0) or getattr(err, "loc", None) else f"{args.file}: {err}",
              file=sys.stderr)
        print(f"{kind}; nothing was run", file=sys.stderr)
        return EXIT_PARSE
    except OSError as err:
        print(f"cannot read {args.file}: {err}", file=sys.stderr)
        return EXIT_PARSE
    if args.command == "parse-only":
        sys.stdout.write(print_file(pf))
        return 0
    try:
        defaults = env_caps()
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return EXIT_PARSE
    report = run(loaded, args.file, max(1, args.jobs), defaults)
    sys.stdout.write(emit(report, args.format, timing=not args.no_timing))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
