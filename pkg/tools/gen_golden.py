#!/usr/bin/env python3
"""Regenerate the golden script corpus under tests/golden/.

The corpus freezes the script grammar and the engine's canonical Content
MathML output so it can serve as a cross-implementation conformance suite.
Hand-written scripts cover the worked examples; the rest are seeded random
command sequences.
"""

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from conftest import random_command  # noqa: E402
from semedit.engine import Session  # noqa: E402
from semedit.script import command_to_dict, replay  # noqa: E402

HANDWRITTEN = {
    "000-fig1-2x3plus4": "mode legacy\nkey 2\nkey ×\nkey 3\nkey +\nkey 4\n",
    "001-fig2-blackbox-pm": ("key 3\nkey +\nkey 2\npress left\n"
                             "press backspace\nkey +\nkey -\n"),
    "002-sin": "mode legacy\nkey y\nkey =\nkey s\nkey i\nkey n\nkey x\n",
    "003-2aab": "mode legacy\nkey y\nkey =\nkey 2\nkey a\nkey a\nkey b\n",
    "004-legacy-1-over-x-plus-1":
        "mode legacy\nkey y\nkey =\nkey 1\nkey /\nkey x\nkey +\nkey 1\n",
    "005-basic-1-over-x-plus-1":
        "key y\nkey =\nkey 1\nkey /\nkey x\nkey +\nkey 1\n",
    "006-enclose-brackets": ("key 1\nkey +\nkey 2\npress home\n"
                             "bracket open\npress end\nbracket close\n"),
    "007-bracket-revert": ("key 1\nkey +\nkey 2\npress home\n"
                           "bracket open\npress end\nbracket close\n"
                           "press backspace\n"),
    "008-leq-autoreplace": "key a\nkey <\nkey =\nkey b\n",
    "009-divide-template": ("template divide\nkey x\npress right\nkey 2\n"),
}


def script_text(seed, length):
    rng = random.Random(seed)
    session = Session()
    lines = []
    for _ in range(length):
        cmd = random_command(rng, session)
        d = command_to_dict(cmd)
        session.apply(cmd)
        if d["type"] == "key":
            lines.append(f"key {d['char']}")
        elif d["type"] == "press":
            lines.append(f"press {d['name']}")
        elif d["type"] == "template":
            lines.append(f"template {d['id']}")
        elif d["type"] == "bracket":
            lines.append(f"bracket {d['side']}")
        elif d["type"] == "select":
            lines.append(f"select {d['anchor']} {d['focus']}")
        elif d["type"] == "mode":
            lines.append(f"mode {d['mode']}")
        else:
            lines.append(d["type"])
    return "\n".join(lines) + "\n"


def main():
    scripts_dir = ROOT / "tests" / "golden" / "scripts"
    expected_dir = ROOT / "tests" / "golden" / "expected"
    scripts_dir.mkdir(parents=True, exist_ok=True)
    expected_dir.mkdir(parents=True, exist_ok=True)
    corpus = dict(HANDWRITTEN)
    for i in range(len(HANDWRITTEN), 100):
        corpus[f"{i:03d}-random"] = script_text(seed=1000 + i,
                                                length=10 + (i % 31))
    for name, text in sorted(corpus.items()):
        (scripts_dir / f"{name}.sed").write_text(text, encoding="utf-8")
        outcome = replay(text, stop_on_rejected=False)
        (expected_dir / f"{name}.xml").write_text(outcome.content + "\n",
                                                  encoding="utf-8")
    print(f"wrote {len(corpus)} scripts + expected outputs")


if __name__ == "__main__":
    main()
