"""Edit script parsing and replay.

One command per line, ``#`` starts a comment:

    key <char> | press <name> | template <id> | bracket open|close |
    select <path:off> <path:off> | cut | copy | paste | undo | redo |
    mode legacy|basic

Script verbs mirror the wire protocol command types one to one, so a
replayed script and a streamed session run the identical command objects.
"""

from __future__ import annotations

from .document import CaretPosition
from .engine import (BracketCmd, Copy, Cut, InsertTemplate, Key, Paste,
                     Press, Redo, SetMode, SetSelection, Session, Undo,
                     APPLIED, REJECTED)
from .errors import PathInvalid, ScriptSyntax

PRESS_NAMES = {"backspace", "delete", "left", "right", "up", "down",
               "home", "end"}


def parse_line(line, lineno):
    verb, _, rest = line.partition(" ")
    rest = rest.strip()
    if verb == "key":
        if len(rest) != 1:
            raise ScriptSyntax(f"key expects one character, got {rest!r}",
                               lineno)
        return Key(rest)
    if verb == "press":
        if rest not in PRESS_NAMES:
            raise ScriptSyntax(f"unknown press name {rest!r}", lineno)
        return Press(rest)
    if verb == "template":
        if not rest:
            raise ScriptSyntax("template expects an id", lineno)
        return InsertTemplate(rest)
    if verb == "bracket":
        if rest not in ("open", "close"):
            raise ScriptSyntax(f"bracket expects open|close, got {rest!r}",
                               lineno)
        return BracketCmd(rest)
    if verb == "select":
        parts = rest.split()
        if len(parts) != 2:
            raise ScriptSyntax("select expects two positions", lineno)
        try:
            return SetSelection(CaretPosition.parse(parts[0]),
                                CaretPosition.parse(parts[1]))
        except PathInvalid as exc:
            raise ScriptSyntax(str(exc), lineno)
    if verb == "mode":
        if rest not in ("legacy", "basic"):
            raise ScriptSyntax(f"mode expects legacy|basic, got {rest!r}",
                               lineno)
        return SetMode(rest)
    if verb in ("cut", "copy", "paste", "undo", "redo") and not rest:
        return {"cut": Cut(), "copy": Copy(), "paste": Paste(),
                "undo": Undo(), "redo": Redo()}[verb]
    raise ScriptSyntax(f"unknown verb {verb!r}", lineno)


def parse_script(text, source="<script>"):
    commands = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        commands.append((lineno, parse_line(line, lineno)))
    return commands


def command_to_dict(cmd):
    """Wire-protocol form of a command (types mirror script verbs)."""
    if isinstance(cmd, Key):
        return {"type": "key", "char": cmd.char}
    if isinstance(cmd, Press):
        return {"type": "press", "name": cmd.name}
    if isinstance(cmd, InsertTemplate):
        return {"type": "template", "id": cmd.template_id}
    if isinstance(cmd, BracketCmd):
        return {"type": "bracket", "side": cmd.side}
    if isinstance(cmd, SetSelection):
        return {"type": "select", "anchor": cmd.anchor.text_form(),
                "focus": cmd.focus.text_form()}
    if isinstance(cmd, SetMode):
        return {"type": "mode", "mode": cmd.mode}
    for name, klass in (("cut", Cut), ("copy", Copy), ("paste", Paste),
                        ("undo", Undo), ("redo", Redo)):
        if isinstance(cmd, klass):
            return {"type": name}
    raise ValueError(f"unknown command {cmd!r}")


def command_from_dict(data):
    kind = data.get("type")
    if kind == "key":
        return Key(data["char"])
    if kind == "press":
        if data["name"] not in PRESS_NAMES:
            raise ValueError(f"unknown press name {data['name']!r}")
        return Press(data["name"])
    if kind == "template":
        return InsertTemplate(data["id"])
    if kind == "bracket":
        if data["side"] not in ("open", "close"):
            raise ValueError(f"bad bracket side {data['side']!r}")
        return BracketCmd(data["side"])
    if kind == "select":
        return SetSelection(CaretPosition.parse(data["anchor"]),
                            CaretPosition.parse(data["focus"]))
    if kind == "mode":
        if data["mode"] not in ("legacy", "basic"):
            raise ValueError(f"bad mode {data['mode']!r}")
        return SetMode(data["mode"])
    simple = {"cut": Cut, "copy": Copy, "paste": Paste,
              "undo": Undo, "redo": Redo}
    if kind in simple:
        return simple[kind]()
    raise ValueError(f"unknown command type {kind!r}")


class ReplayOutcome:
    def __init__(self):
        self.session = None
        self.results = []          # (lineno, command, EditResult)
        self.rejected = []         # (lineno, command, reason)

    @property
    def content(self):
        return self.session.export_content()


def replay(text, registry=None, auto_replace=None, stop_on_rejected=True,
           source="<script>"):
    """Apply a script's commands in order to a fresh session."""
    commands = parse_script(text, source)
    outcome = ReplayOutcome()
    outcome.session = Session(registry=registry, auto_replace=auto_replace)
    for lineno, cmd in commands:
        result = outcome.session.apply(cmd)
        outcome.results.append((lineno, cmd, result))
        if result.status == REJECTED:
            outcome.rejected.append((lineno, cmd, result.reason))
            if stop_on_rejected:
                break
    return outcome
