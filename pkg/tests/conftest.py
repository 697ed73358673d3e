import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semedit.document import caret_positions
from semedit.engine import (BracketCmd, Copy, Cut, InsertTemplate, Key,
                            Paste, Press, Redo, Session, SetMode,
                            SetSelection, Undo)
from semedit.templates import load_registry

collect_ignore = ["oracles.py"]


@pytest.fixture(scope="session")
def registry():
    return load_registry()


@pytest.fixture
def session(registry):
    return Session(registry=registry)


def type_keys(session, text):
    for ch in text:
        session.apply(Key(ch))
    return session


def legacy_session(registry, text):
    s = Session(registry=registry)
    s.apply(SetMode("legacy"))
    type_keys(s, text)
    return s


FUZZ_KEYS = (list("0123456789") + list("abcxyesin") + list("+-*/^=<>")
             + ["(", ")", "."])
FUZZ_TEMPLATES = ["divide", "power", "sqrt", "sin", "bracket-round",
                  "plus", "abs"]
PRESS_NAMES = ["left", "right", "up", "down", "home", "end",
               "backspace", "delete"]


def random_command(rng, session, include_history=True):
    """One random command, weighted; selections drawn from live positions."""
    r = rng.random()
    if r < 0.52:
        return Key(rng.choice(FUZZ_KEYS))
    if r < 0.67:
        return Press(rng.choice(PRESS_NAMES))
    if r < 0.73:
        return InsertTemplate(rng.choice(FUZZ_TEMPLATES))
    if r < 0.76:
        return BracketCmd(rng.choice(["open", "close"]))
    if r < 0.82:
        positions = caret_positions(session.doc)
        return SetSelection(rng.choice(positions), rng.choice(positions))
    if r < 0.86:
        return Cut()
    if r < 0.89:
        return Copy()
    if r < 0.92:
        return Paste()
    if include_history and r < 0.95:
        return Undo()
    if include_history and r < 0.97:
        return Redo()
    return SetMode(rng.choice(["basic", "legacy"]))
