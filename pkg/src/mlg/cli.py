"""Command-line driver: check, run, explore, fmt.

Exit codes are part of the stable interface:
  0 success / property holds     3 deadlock (run or explore)
  1 usage error                  4 step limit reached
  2 check failure                5 exploration budget cut, no verdict
"""

from __future__ import annotations

import argparse
import json
import sys

from .diagnostics import MlgError
from .engine import DEADLOCK, STEP_LIMIT, TERMINATED, render_trace, run
from .explorer import explore, find_deadlocks
from .prelude import load_program
from .pretty import pretty_program
from .typecheck import check_program

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_DEADLOCK = 3
EXIT_STEP_LIMIT = 4
EXIT_BUDGET_CUT = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="source file path, or - for stdin")
        p.add_argument("--unchecked", action="store_true",
                       help="skip static checking")
        p.add_argument("--no-prelude", action="store_true",
                       help="do not bring the prelude into scope")
        p.add_argument("--no-repl", action="store_true",
                       help="reject programs that use replication")
        p.add_argument("--block-size", type=_positive, default=None,
                       help="override the prelude's blockSize constant")
        p.add_argument("--format", choices=["text", "records"],
                       default="text", dest="fmt")

    p_check = sub.add_parser("check", help="statically check a program")
    common(p_check)

    p_run = sub.add_parser("run", help="run a program with the seeded engine")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--max-steps", type=_positive, default=10**5)

    p_explore = sub.add_parser(
        "explore", help="bounded exploration for deadlocks"
    )
    common(p_explore)
    p_explore.add_argument("--depth", type=_positive, default=32)
    p_explore.add_argument("--states", type=_positive, default=10**5)
    p_explore.add_argument("--repl-budget", type=_positive, default=2)
    p_explore.add_argument("--dot", default=None,
                           help="write the state graph in DOT form "
                                "(path, or - for stdout)")

    p_fmt = sub.add_parser("fmt", help="pretty-print a program")
    common(p_fmt)
    return parser


def _read_input(path: str) -> tuple[str, str]:
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read(), path
    except OSError as exc:
        print(f"mlg: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None


def _emit_diagnostics(diags, fmt: str) -> None:
    for diag in diags:
        if fmt == "records":
            print(json.dumps(diag.to_record(), sort_keys=True),
                  file=sys.stderr)
        else:
            print(diag.render(), file=sys.stderr)


def _load_checked(args):
    """Parse + check per the flags; returns (program, annotations)."""
    text, filename = _read_input(args.input)
    try:
        program = load_program(
            text, filename,
            include_prelude=not args.no_prelude,
            block_size=args.block_size,
        )
    except MlgError as exc:
        _emit_diagnostics(exc.diagnostics, args.fmt)
        raise SystemExit(EXIT_CHECK) from None
    if args.no_repl and program.uses_replication():
        print(f"{filename}:1:1: error: replication is disabled (--no-repl)",
              file=sys.stderr)
        raise SystemExit(EXIT_CHECK)
    annotations = {}
    if not args.unchecked:
        result = check_program(program)
        annotations = result.obj_annotations
        if not result.ok:
            _emit_diagnostics(result.diagnostics, args.fmt)
            raise SystemExit(EXIT_CHECK)
    return program, annotations


def cmd_check(args) -> int:
    _load_checked(args)
    return EXIT_OK


def cmd_run(args) -> int:
    program, annotations = _load_checked(args)
    try:
        _, verdict, trace = run(
            program, seed=args.seed, max_steps=args.max_steps,
            annotations=annotations,
        )
    except MlgError as exc:
        _emit_diagnostics(exc.diagnostics, args.fmt)
        return EXIT_CHECK
    sys.stdout.write(render_trace(trace, args.fmt))
    if verdict == TERMINATED:
        return EXIT_OK
    if verdict == DEADLOCK:
        return EXIT_DEADLOCK
    return EXIT_STEP_LIMIT


def cmd_explore(args) -> int:
    program, annotations = _load_checked(args)
    graph = explore(
        program, max_depth=args.depth, max_states=args.states,
        repl_budget=args.repl_budget, annotations=annotations,
    )
    if args.dot:
        dot = graph.to_dot()
        if args.dot == "-":
            sys.stdout.write(dot)
        else:
            with open(args.dot, "w", encoding="utf-8") as handle:
                handle.write(dot)
    deadlocks = find_deadlocks(graph)
    print(f"states={len(graph.states)} edges={len(graph.edges)} "
          f"deadlocks={len(deadlocks)} terminals={len(graph.terminals)} "
          f"frontier={len(graph.frontier)}")
    if deadlocks:
        _, path = deadlocks[0]
        print(f"deadlock witness (length {len(path)}):")
        for i, label in enumerate(path):
            print(f"#{i} {label}")
        return EXIT_DEADLOCK
    if graph.frontier:
        print("warning: exploration budget cut before a verdict",
              file=sys.stderr)
        return EXIT_BUDGET_CUT
    return EXIT_OK


def cmd_fmt(args) -> int:
    text, filename = _read_input(args.input)
    try:
        from .parser import parse_program

        program = parse_program(text, filename)
    except MlgError as exc:
        _emit_diagnostics(exc.diagnostics, args.fmt)
        return EXIT_CHECK
    sys.stdout.write(pretty_program(program))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handler = {
        "check": cmd_check,
        "run": cmd_run,
        "explore": cmd_explore,
        "fmt": cmd_fmt,
    }[args.command]
    try:
        return handler(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except MlgError as exc:
        _emit_diagnostics(exc.diagnostics, getattr(args, "fmt", "text"))
        return EXIT_CHECK


if __name__ == "__main__":
    raise SystemExit(main())
