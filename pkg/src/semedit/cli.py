"""Command line interface: replay, convert, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ScriptSyntax, SemEditError
from .evaluator import evaluate_chain
from .mathml import export_presentation, parse_content, serialize_content
from .script import replay
from .templates import load_registry


def _load_registry_arg(path):
    if path is None:
        return load_registry()
    with open(path, encoding="utf-8") as fh:
        return load_registry(fh.read())


def cmd_replay(args):
    with open(args.script, encoding="utf-8") as fh:
        text = fh.read()
    try:
        outcome = replay(text, stop_on_rejected=not args.allow_rejected,
                         source=args.script)
    except ScriptSyntax as exc:
        print(f"{args.script}: {exc}", file=sys.stderr)
        return 1
    if args.trace:
        for lineno, cmd, result in outcome.results:
            events = ",".join(e.name for e in result.transform_log) or "-"
            print(f"# line {lineno}: {result.status} {events}",
                  file=sys.stderr)
    session = outcome.session
    print(session.export_content())
    if args.presentation:
        print(export_presentation(session.doc, session.registry))
    if args.eval:
        results = evaluate_chain(session.doc, session.registry)
        print(json.dumps([out.as_dict() for _i, out, _env in results]))
    if outcome.rejected and not args.allow_rejected:
        lineno, _cmd, reason = outcome.rejected[0]
        print(f"{args.script}:{lineno}: command rejected: {reason}",
              file=sys.stderr)
        return 2
    return 0


def cmd_convert(args):
    reg = load_registry()
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    diagnostics = []
    try:
        doc = parse_content(text, reg, diagnostics)
    except SemEditError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 1
    for d in diagnostics:
        print(f"{args.file}: warning: {d}", file=sys.stderr)
    print(serialize_content(doc, reg))
    if args.presentation:
        print(export_presentation(doc, reg))
    return 0


def cmd_eval(args):
    reg = load_registry()
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = parse_content(text, reg)
    except SemEditError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 1
    results = evaluate_chain(doc, reg)
    print(json.dumps([out.as_dict() for _i, out, _env in results]))
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    host, _, port = args.bind.rpartition(":")
    reg = _load_registry_arg(args.templates)
    app = create_app(reg, idle_timeout_min=args.idle_timeout,
                     frontend_dir=args.frontend)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="semedit",
        description="Structure-editing engine for Content MathML")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="replay an edit script")
    p.add_argument("script")
    p.add_argument("--trace", action="store_true",
                   help="print per-command transform events to stderr")
    p.add_argument("--presentation", action="store_true")
    p.add_argument("--eval", action="store_true")
    p.add_argument("--allow-rejected", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("convert", help="canonicalize Content MathML")
    p.add_argument("file")
    p.add_argument("--presentation", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("eval", help="evaluate a formula chain")
    p.add_argument("file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--bind", default="127.0.0.1:8601")
    p.add_argument("--templates", default=None,
                   help="template definition overrides")
    p.add_argument("--idle-timeout", type=int, default=30, metavar="MINS")
    p.add_argument("--frontend", default=None, metavar="DIR",
                   help="serve the browser UI from this directory")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
