#!/usr/bin/env python3
"""Record wire-protocol responses for the frontend's fixture-driven tests.

Replays the Fig. 2 editing sequence through the real service handler and
stores every response, so the UI tests render exactly what the server
sends.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from semedit.service import SessionHost, handle_message  # noqa: E402

FIG2_COMMANDS = [
    {"type": "key", "char": "3"},
    {"type": "key", "char": "+"},
    {"type": "key", "char": "2"},
    {"type": "press", "name": "left"},
    {"type": "press", "name": "backspace"},
    {"type": "key", "char": "+"},
    {"type": "key", "char": "-"},
]


def main():
    host = SessionHost()
    responses = []
    for seq, command in enumerate(FIG2_COMMANDS, start=1):
        response, closed = handle_message(
            host, {"session": "fixture", "seq": seq, "command": command})
        assert not closed
        responses.append(response)
    listing, _ = handle_message(
        host, {"session": "fixture2", "seq": 1, "command": {"type": "templates"}})
    out = {"fig2": responses, "templates": listing}
    target = ROOT / "frontend" / "test" / "fixtures" / "fig2.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(out, indent=2, ensure_ascii=False) + "\n",
                      encoding="utf-8")
    print(f"wrote {target} ({len(responses)} responses)")


if __name__ == "__main__":
    main()
