import json
import subprocess
import sys

import pytest

from semedit.engine import Key, Press, SetMode
from semedit.errors import ScriptSyntax
from semedit.script import (command_from_dict, command_to_dict, parse_script,
                            replay)

FIG26_SIN = """\
mode legacy
key y
key =
key s
key i
key n
key x
"""

FIG2 = """\
# Fig. 2: delete the operator, then retype it with auto-replacement
key 3
key +
key 2
press left
press backspace
key +
key -
"""


def test_replay_sin_example():
    out = replay(FIG26_SIN)
    assert out.content == ("<math><apply><eq/><ci>y</ci><apply><sin/>"
                           "<ci>x</ci></apply></apply></math>")


def test_replay_trace_events():
    out = replay(FIG2)
    names = [[e.name for e in r.transform_log] for _l, _c, r in out.results]
    assert names == [[], [], [], [], ["OperatorBlackBoxed"],
                     ["OperatorFilled"], ["AutoReplaced"]]


def test_empty_script_is_empty_math():
    assert replay("").content == "<math/>"


def test_unknown_verb_is_load_error():
    with pytest.raises(ScriptSyntax) as err:
        parse_script("key 1\nfrobnicate\n")
    assert err.value.line == 2


def test_bad_key_argument():
    with pytest.raises(ScriptSyntax):
        parse_script("key ab")


def test_select_verb_round_trip():
    cmds = parse_script("select 0/0:0 0/0:1")
    d = command_to_dict(cmds[0][1])
    assert d == {"type": "select", "anchor": "0/0:0", "focus": "0/0:1"}
    assert command_from_dict(d) == cmds[0][1]


def test_command_dict_round_trip_all_verbs():
    script = ("key x\npress left\ntemplate divide\nbracket open\n"
              "bracket close\nselect 0/0:0 0/0:1\ncut\ncopy\npaste\n"
              "undo\nredo\nmode legacy\nmode basic\n")
    for _lineno, cmd in parse_script(script):
        assert command_from_dict(command_to_dict(cmd)) == cmd


def test_rejected_stops_replay_by_default():
    script = "key 3\nkey +\nkey 2\npress left\npress backspace\npress backspace\nkey 9\n"
    out = replay(script)
    assert out.rejected and out.rejected[0][2] == "ProtectedNoOp"
    assert len(out.results) == 6  # stopped at the rejected command
    out = replay(script, stop_on_rejected=False)
    assert len(out.results) == 7


def _run_cli(tmp_path, script_text, *flags):
    path = tmp_path / "script.sed"
    path.write_text(script_text, encoding="utf-8")
    return subprocess.run(
        [sys.executable, "-m", "semedit.cli", "replay", str(path), *flags],
        capture_output=True, text=True)


def test_cli_replay_stdout(tmp_path):
    proc = _run_cli(tmp_path, FIG26_SIN)
    assert proc.returncode == 0
    assert proc.stdout.strip() == (
        "<math><apply><eq/><ci>y</ci><apply><sin/><ci>x</ci></apply>"
        "</apply></math>")


def test_cli_trace_goes_to_stderr(tmp_path):
    proc = _run_cli(tmp_path, FIG2, "--trace")
    assert proc.returncode == 0
    assert "OperatorBlackBoxed" in proc.stderr
    assert "OperatorBlackBoxed" not in proc.stdout


def test_cli_rejected_exit_code(tmp_path):
    script = "key 3\nkey +\nkey 2\npress left\npress backspace\npress backspace\n"
    proc = _run_cli(tmp_path, script)
    assert proc.returncode == 2
    proc = _run_cli(tmp_path, script, "--allow-rejected")
    assert proc.returncode == 0


def test_cli_eval_flag(tmp_path):
    proc = _run_cli(tmp_path, "key 2\nkey +\nkey 3\n", "--eval")
    lines = proc.stdout.strip().splitlines()
    assert json.loads(lines[1]) == [{"kind": "value", "value": 5.0}]


def test_cli_convert_round_trip(tmp_path):
    xml = ("<math><apply><plus/><apply><times/><cn>2</cn><cn>3</cn></apply>"
           "<cn>4</cn></apply></math>")
    path = tmp_path / "f.xml"
    path.write_text(xml, encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "semedit.cli", "convert", str(path)],
        capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == xml
    proc = subprocess.run(
        [sys.executable, "-m", "semedit.cli", "convert", str(path),
         "--presentation"],
        capture_output=True, text=True)
    assert "<mn>2</mn>" in proc.stdout


def test_cli_convert_error_position(tmp_path):
    path = tmp_path / "bad.xml"
    path.write_text("<math><cn>1", encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "semedit.cli", "convert", str(path)],
        capture_output=True, text=True)
    assert proc.returncode == 1
    assert "at 1:" in proc.stderr
