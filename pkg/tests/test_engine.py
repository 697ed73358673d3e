import random

from conftest import random_command, type_keys
from semedit.document import (CaretPosition, Role, caret_positions,
                              validate_document)
from semedit.engine import (BracketCmd, Copy, Cut, InsertTemplate, Key,
                            Paste, Press, Redo, Session, SetMode,
                            SetSelection, Undo, load_auto_replace)
from semedit.mathml import serialize_content


def content(session):
    return session.export_content()


def events(result):
    return [e.name for e in result.transform_log]


# -- basic typing ----------------------------------------------------------

def test_first_character_insertion(session):
    r = session.apply(Key("3"))
    assert r.status == "applied"
    token = session.doc.root.children[0].children[0]
    assert token.text == "3" and token.role is Role.AUTO_DETECT


def test_press_left_at_start_is_no_effect(session):
    assert session.apply(Press("left")).status == "no_effect"


def test_applied_commands_push_one_snapshot(session):
    assert len(session.doc.undo_stack) == 0
    session.apply(Key("1"))
    assert len(session.doc.undo_stack) == 1
    session.apply(Press("left"))
    assert len(session.doc.undo_stack) == 2
    session.apply(Press("left"))  # boundary no-op: no snapshot
    assert len(session.doc.undo_stack) == 2


def test_undo_restores_prior_snapshot(session):
    type_keys(session, "1+2")
    before = session.doc.root.clone()
    session.apply(Key("3"))
    session.apply(Undo())
    assert session.doc.root.structurally_equal(before)


def test_rejected_leaves_no_snapshot_and_no_change(session):
    type_keys(session, "3+2")
    session.apply(Press("left"))
    session.apply(Press("backspace"))
    depth = len(session.doc.undo_stack)
    before = session.doc.root.clone()
    r = session.apply(Press("backspace"))  # protected noop
    assert r.status == "rejected" and r.reason == "ProtectedNoOp"
    assert len(session.doc.undo_stack) == depth
    assert session.doc.root.structurally_equal(before)


# -- black box / auto replace (Fig. 2) --------------------------------------

def fig2_blackbox(session):
    type_keys(session, "3+2")
    session.apply(Press("left"))
    return session.apply(Press("backspace"))


def test_backspace_blackboxes_operator(session):
    r = fig2_blackbox(session)
    assert events(r) == ["OperatorBlackBoxed"]
    assert r.transform_log[0].detail["symbol"] == "+"
    assert content(session) == ("<math><apply><csymbol cd=\"semedit\">noop"
                                "</csymbol><cn>3</cn><cn>2</cn></apply></math>")


def test_blackbox_preserves_operands(session):
    type_keys(session, "3+2")
    operands = [s.clone() for s in
                session.doc.root.children[0].children[0].slots()]
    session.apply(Press("left"))
    session.apply(Press("backspace"))
    after = session.doc.root.children[0].children[0].slots()
    assert all(a.structurally_equal(b) for a, b in zip(after, operands))


def test_fill_then_auto_replace(session):
    fig2_blackbox(session)
    r = session.apply(Key("+"))
    assert events(r) == ["OperatorFilled"]
    r = session.apply(Key("-"))
    assert events(r) == ["AutoReplaced"]
    assert r.transform_log[0].detail == {"from": "+", "to": "±"}
    assert "<csymbol cd=\"semedit\">pm</csymbol>" in content(session)


def test_auto_replace_lt_eq(session):
    type_keys(session, "a<")
    r = session.apply(Key("="))
    assert events(r) == ["AutoReplaced"]
    assert "<leq/>" in content(session)
    session.apply(Undo())
    assert "<lt/>" in content(session)


def test_auto_replace_single_step(session):
    # table acyclicity: one replacement per keystroke, no chains
    type_keys(session, "a<")
    session.apply(Key("="))
    r = session.apply(Key("="))
    assert "AutoReplaced" not in events(r)


def test_auto_replace_table_loader():
    table = load_auto_replace("# rules\n< = -> ≤\n+ - -> ±\n")
    assert table[("<", "=")] == "≤"
    s = Session(auto_replace=table)
    type_keys(s, "a<")
    s.apply(Key("="))
    assert "<leq/>" in content(s)


def test_forward_delete_blackboxes_too(session):
    type_keys(session, "3+2")
    session.apply(Press("left"))
    session.apply(Press("left"))  # caret after '3', just before '+'
    r = session.apply(Press("delete"))
    assert events(r) == ["OperatorBlackBoxed"]


def test_nary_blackbox_splits_chain(registry):
    s = Session(registry=registry)
    s.apply(SetMode("legacy"))
    type_keys(s, "2aab")
    r = s.apply(Press("backspace"))  # deletes nothing: caret after b token
    assert r.status == "applied"
    s.apply(Key("b"))
    s.apply(Press("left"))
    r = s.apply(Press("backspace"))  # target: implicit times before b
    assert events(r) == ["OperatorBlackBoxed"]
    out = content(s)
    assert "noop" in out
    validate_document(s.doc)


# -- brackets ----------------------------------------------------------------

def test_balanced_enclosure(session):
    type_keys(session, "1+2")
    session.apply(Press("home"))
    session.apply(BracketCmd("open"))
    session.apply(Press("end"))
    r = session.apply(BracketCmd("close"))
    assert r.status == "applied"
    assert content(session) == (
        '<math xmlns:semedit="urn:x-semedit">'
        '<apply semedit:bracket="round"><plus/><cn>1</cn><cn>2</cn>'
        "</apply></math>")
    pair = session.doc.root.children[0].children[0]
    assert pair.role is Role.BRACKET_PAIR
    assert pair.children[0].read_only and pair.children[2].read_only


def test_unclosed_open_exports_marker(session):
    type_keys(session, "(1+2")
    out = content(session)
    assert 'semedit:unbalanced="open"' in out


def test_fig3_split_reassociates(registry):
    s = Session(registry=registry)
    type_keys(s, "(2+3)*4")
    for _ in range(5):
        s.apply(Press("left"))
    s.apply(BracketCmd("open"))
    s.apply(Press("end"))
    r = s.apply(BracketCmd("close"))
    assert events(r) == ["BracketReassociated"]
    out = content(s)
    # the old pair was split at the new pair's left edge: two groups remain
    assert out.count('semedit:bracket="round"') == 2
    assert ("<apply semedit:bracket=\"round\"><times/><cn>3</cn><cn>4</cn>"
            "</apply>") in out
    assert ("<apply semedit:bracket=\"round\"><plus/><cn>2</cn>"
            "<ci>□</ci></apply>") in out
    validate_document(s.doc)


def test_fig4_close_then_backspace_reverts(registry):
    s = Session(registry=registry)
    type_keys(s, "(2+3)*4")
    for _ in range(5):
        s.apply(Press("left"))
    s.apply(BracketCmd("open"))
    before_close = serialize_content(s.doc, registry)
    tree_before = s.doc.root.clone()
    s.apply(Press("end"))
    s.apply(BracketCmd("close"))
    r = s.apply(Press("backspace"))
    assert events(r) == ["StructureReverted"]
    assert serialize_content(s.doc, registry) == before_close
    assert s.doc.root.structurally_equal(tree_before)


def test_generic_pair_dissolve_leaves_pending(registry):
    from semedit.mathml import parse_content
    s = Session(registry=registry)
    s.doc = parse_content(
        '<math xmlns:semedit="urn:x-semedit">'
        '<apply semedit:bracket="round"><plus/><cn>1</cn><cn>2</cn></apply>'
        "</math>", registry)
    s.doc.caret = CaretPosition((0, 0), 1)
    r = s.apply(Press("backspace"))
    assert events(r) == ["StructureReverted"]
    assert 'semedit:unbalanced="open"' in content(s)


def test_forward_delete_before_pair_dissolves(registry):
    from semedit.mathml import parse_content
    s = Session(registry=registry)
    s.doc = parse_content(
        '<math xmlns:semedit="urn:x-semedit">'
        '<apply semedit:bracket="round"><plus/><cn>1</cn><cn>2</cn></apply>'
        "</math>", registry)
    s.doc.caret = CaretPosition((0, 0), 0)
    r = s.apply(Press("delete"))
    assert events(r) == ["StructureReverted"]
    assert 'semedit:unbalanced="close"' in content(s)


def test_bracket_glyph_inside_pair_is_protected(session):
    type_keys(session, "(1)")
    session.apply(Press("left"))
    session.apply(Press("left"))
    r = session.apply(Press("backspace"))
    assert r.status == "rejected" and r.reason == "ReadOnlyTarget"


# -- templates ----------------------------------------------------------------

def test_insert_divide_into_empty(session):
    r = session.apply(InsertTemplate("divide"))
    assert r.status == "applied"
    assert session.doc.caret == CaretPosition((0, 0, 0, 0, 0), 0)
    assert content(session) == ("<math><apply><divide/><ci>□</ci>"
                                "<ci>□</ci></apply></math>")


def test_unknown_template_rejected(session):
    r = session.apply(InsertTemplate("nosuch"))
    assert r.status == "rejected" and r.reason == "UnknownTemplate"


def _select_all_items(session):
    line = session.doc.root.children[0]
    return session.apply(SetSelection(
        CaretPosition((0, 0), 0), CaretPosition((0, 0), len(line.children))))


def test_selection_into_divide_numerator(session):
    type_keys(session, "x+1")
    _select_all_items(session)
    session.apply(InsertTemplate("divide"))
    assert content(session) == (
        "<math><apply><divide/><apply><plus/><ci>x</ci><cn>1</cn></apply>"
        "<ci>□</ci></apply></math>")
    # caret lands in the first empty slot: the denominator
    assert session.doc.caret == CaretPosition((0, 0, 0, 2, 0), 0)


def test_selection_into_brackets(session):
    type_keys(session, "x+1")
    _select_all_items(session)
    session.apply(InsertTemplate("bracket-round"))
    assert content(session) == (
        '<math xmlns:semedit="urn:x-semedit">'
        '<apply semedit:bracket="round"><plus/><ci>x</ci><cn>1</cn></apply>'
        "</math>")
    assert session.doc.selection is not None


def test_selection_into_power_exponent(session):
    type_keys(session, "a")
    _select_all_items(session)
    session.apply(InsertTemplate("power"))
    assert content(session) == ("<math><apply><power/><ci>a</ci>"
                                "<ci>□</ci></apply></math>")
    assert session.doc.caret == CaretPosition((0, 0, 0, 2, 0), 0)


# -- selection edits -----------------------------------------------------------

def test_cut_paste_round_trip(registry):
    s = Session(registry=registry)
    s.apply(SetMode("legacy"))
    type_keys(s, "2*3+4")
    original = content(s)
    _select_all_items(s)
    r = s.apply(Cut())
    assert r.status == "applied"
    assert content(s) == "<math/>"
    r = s.apply(Paste())
    assert r.status == "applied"
    assert content(s) == original


def test_cut_operand_leaves_placeholder(session):
    type_keys(session, "3+2")
    session.apply(SetSelection(CaretPosition((0, 0, 0, 0, 0, 0), 0),
                               CaretPosition((0, 0, 0, 0, 0, 0), 1)))
    session.apply(Cut())
    assert content(session) == ("<math><apply><plus/><ci>□</ci>"
                                "<cn>2</cn></apply></math>")


def test_copy_is_non_consuming(session):
    type_keys(session, "7")
    _select_all_items(session)
    session.apply(Copy())
    session.apply(Press("end"))
    session.apply(Paste())
    session.apply(Press("end"))
    session.apply(Paste())
    out = content(session)
    assert out.count("7") == 3
    validate_document(session.doc)


def test_cut_without_selection_rejected(session):
    assert session.apply(Cut()).reason == "NoSelection"


def test_paste_with_empty_clipboard_rejected(session):
    assert session.apply(Paste()).reason == "EmptyClipboard"


def test_selection_delete_removes_noop_apply(session):
    fig2_blackbox(session)
    _select_all_items(session)
    session.apply(Press("delete"))
    assert content(session) == "<math/>"


def test_typing_operator_with_selection_wraps(session):
    type_keys(session, "12")
    _select_all_items(session)
    session.apply(Key("+"))
    assert content(session) == ("<math><apply><plus/><cn>12</cn>"
                                "<ci>□</ci></apply></math>")


# -- mid-token edits ------------------------------------------------------------

def test_operator_splits_token(session):
    type_keys(session, "123")
    session.apply(Press("left"))
    session.apply(Key("+"))
    assert content(session) == ("<math><apply><plus/><cn>12</cn>"
                                "<cn>3</cn></apply></math>")


def test_char_delete_and_token_removal(session):
    type_keys(session, "12")
    session.apply(Press("backspace"))
    assert content(session) == "<math><cn>1</cn></math>"
    session.apply(Press("backspace"))
    assert content(session) == "<math/>"
    assert session.apply(Press("backspace")).status == "no_effect"


# -- undo / redo ------------------------------------------------------------------

def test_redo_restores_and_new_command_clears(session):
    type_keys(session, "1+2")
    after = session.doc.root.clone()
    session.apply(Undo())
    session.apply(Redo())
    assert session.doc.root.structurally_equal(after)
    session.apply(Undo())
    session.apply(Key("9"))
    assert session.apply(Redo()).status == "no_effect"


def test_undo_on_fresh_session_is_no_effect(session):
    assert session.apply(Undo()).status == "no_effect"


def test_undo_redo_cycles_random(registry):
    for seed in range(25):
        rng = random.Random(seed * 7 + 1)
        s = Session(registry=registry)
        n = rng.randint(1, 25)
        for _ in range(n):
            s.apply(random_command(rng, s, include_history=False))
        final = s.doc.root.clone()
        applied = len(s.doc.undo_stack)
        for _ in range(applied):
            s.apply(Undo())
        assert content(s) == "<math/>"
        for _ in range(applied):
            s.apply(Redo())
        assert s.doc.root.structurally_equal(final)


# -- transform log contract ---------------------------------------------------

def test_transform_log_empty_for_plain_edits(session):
    r = session.apply(Key("5"))
    assert r.transform_log == []
    r = session.apply(Key("+"))
    assert r.transform_log == []


def test_auto_replace_lookup_is_pure():
    from semedit.engine import DEFAULT_AUTO_REPLACE, auto_replace_lookup
    assert auto_replace_lookup(DEFAULT_AUTO_REPLACE, "<", "=") == "≤"
    assert auto_replace_lookup(DEFAULT_AUTO_REPLACE, "+", "-") == "±"
    assert auto_replace_lookup(DEFAULT_AUTO_REPLACE, "≤", "=") is None


def _read_only_nodes(root):
    out = []

    def walk(node):
        if node.read_only:
            out.append(node)
        for child in node.children:
            walk(child)

    walk(root)
    return out


def test_read_only_preservation(registry):
    # every read-only leaf survives each command, unless it was removed by
    # an explicit selection deletion / history restore or the command
    # logged a structural transform
    from semedit.engine import Cut, Paste, Press, Redo, Undo

    def exists(root, target):
        if root is target:
            return True
        return any(exists(c, target) for c in root.children)

    for seed in range(60):
        rng = random.Random(31_000 + seed)
        s = Session(registry=registry)
        for _ in range(rng.randint(1, 30)):
            cmd = random_command(rng, s)
            before = _read_only_nodes(s.doc.root)
            had_selection = s.doc.selection is not None
            result = s.apply(cmd)
            if result.status != "applied":
                continue
            exempt = (isinstance(cmd, (Undo, Redo, Cut, Paste))
                      or (had_selection
                          and isinstance(cmd, (Key, Press, InsertTemplate)))
                      or result.transform_log)
            if exempt:
                continue
            for node in before:
                assert exists(s.doc.root, node), (seed, cmd)
