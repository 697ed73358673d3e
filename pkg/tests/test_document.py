import random

import pytest

from conftest import legacy_session, type_keys
from semedit.document import (CaretPosition, NodeKind, Role, caret_move,
                              caret_positions, new_document, node_at,
                              validate_document)
from semedit.engine import Key, Session
from semedit.errors import NoHistory, PathInvalid, SnapshotForeign


def test_new_document_shape():
    doc = new_document()
    assert doc.root.kind is NodeKind.SLOT
    assert len(doc.root.children) == 1
    assert doc.root.children[0].kind is NodeKind.LINE
    assert doc.root.children[0].children == []
    assert doc.caret == CaretPosition((0, 0), 0)
    assert doc.undo_stack == []
    validate_document(doc)


def test_new_document_undo_is_no_history():
    with pytest.raises(NoHistory):
        new_document().undo()


def test_node_at_root_child_is_slot():
    doc = new_document()
    assert node_at(doc, [0]).kind is NodeKind.SLOT
    assert node_at(doc, [0, 0]).kind is NodeKind.LINE


def test_node_at_out_of_range():
    doc = new_document()
    with pytest.raises(PathInvalid):
        node_at(doc, [0, 5])


def test_node_at_times_apply(registry):
    s = legacy_session(registry, "2×3+4")
    times = node_at(s.doc, (0, 0, 0, 0, 0, 0))
    assert times.kind is NodeKind.FORMULA
    assert times.role is Role.APPLY
    assert times.head_glyph().symbol == "×"


def test_caret_text_form_round_trip():
    pos = CaretPosition((0, 0, 2), 1)
    assert pos.text_form() == "0/0/2:1"
    assert CaretPosition.parse("0/0/2:1") == pos


def test_right_successor_at_operator_boundary(registry):
    # caret after '3' inside the left operand of 3+2: the next document
    # order position is the operator boundary at the right operand's start
    s = Session(registry=registry)
    type_keys(s, "3+2")
    positions = caret_positions(s.doc)
    after_three = CaretPosition((0, 0, 0, 0, 0, 0), 1)
    idx = positions.index(after_three)
    assert positions[idx + 1] == CaretPosition((0, 0, 0, 2, 0, 0), 0)


def test_boundary_moves_are_no_ops(registry):
    s = Session(registry=registry)
    type_keys(s, "12")
    s.doc.caret = caret_positions(s.doc)[-1]
    assert caret_move(s.doc, "right") == s.doc.caret
    s.doc.caret = caret_positions(s.doc)[0]
    assert caret_move(s.doc, "left") == s.doc.caret


def _docs_for_navigation(registry):
    streams = ["3+2", "1/x+1", "((a+b))*c", "sin", "2^x-4"]
    docs = []
    for text in streams:
        docs.append(type_keys(Session(registry=registry), text).doc)
        docs.append(legacy_session(registry, text).doc)
    return docs


def test_navigation_reversibility(registry):
    for doc in _docs_for_navigation(registry):
        positions = caret_positions(doc)
        for i, pos in enumerate(positions):
            doc.caret = pos
            right = caret_move(doc, "right")
            if i + 1 < len(positions):
                doc.caret = right
                assert caret_move(doc, "left") == pos
            else:
                assert right == pos


def test_navigation_strictly_advances(registry):
    # no fake moves: successive Rights walk the position list in order
    for doc in _docs_for_navigation(registry):
        positions = caret_positions(doc)
        doc.caret = positions[0]
        seen = [doc.caret]
        while True:
            nxt = caret_move(doc, "right")
            if nxt == doc.caret:
                break
            assert positions.index(nxt) == positions.index(doc.caret) + 1
            doc.caret = nxt
            seen.append(nxt)
        assert seen == positions


def test_navigation_deterministic(registry):
    s = legacy_session(registry, "1/x+1")
    doc = s.doc
    for pos in caret_positions(doc):
        doc.caret = pos
        moves = [caret_move(doc, "right") for _ in range(3)]
        assert moves[0] == moves[1] == moves[2]


def test_up_down_between_statement_lines(registry):
    from semedit.mathml import parse_content
    doc = parse_content("<math><cn>1</cn><cn>2</cn></math>", registry)
    doc.caret = CaretPosition((0, 0, 0), 0)
    down = caret_move(doc, "down")
    assert down.path[1] == 1
    doc.caret = down
    assert caret_move(doc, "up").path[1] == 0
    assert caret_move(doc, "up") != down or len(doc.root.children) == 1


def test_up_down_at_boundary_is_no_op(registry):
    s = type_keys(Session(registry=registry), "12")
    s.doc.caret = caret_positions(s.doc)[0]
    assert caret_move(s.doc, "up") == s.doc.caret
    assert caret_move(s.doc, "down") == s.doc.caret


def test_snapshot_restore_identity(registry):
    s = type_keys(Session(registry=registry), "1+2")
    snap = s.doc.snapshot()
    before = s.doc.root.clone()
    s.apply(Key("9"))
    assert not s.doc.root.structurally_equal(before)
    s.doc.restore(snap)
    assert s.doc.root.structurally_equal(before)
    assert s.doc.caret == snap.caret


def test_snapshot_foreign_lineage(registry):
    a, b = new_document(), new_document()
    with pytest.raises(SnapshotForeign):
        a.restore(b.snapshot())


def test_positions_include_gaps_around_formulas(registry):
    s = type_keys(Session(registry=registry), "1+2")
    positions = caret_positions(s.doc)
    assert CaretPosition((0, 0), 0) in positions
    assert CaretPosition((0, 0), 1) in positions


def test_random_docs_stay_valid(registry):
    from conftest import random_command
    for seed in range(40):
        rng = random.Random(seed)
        s = Session(registry=registry)
        for _ in range(rng.randint(1, 30)):
            s.apply(random_command(rng, s))
            validate_document(s.doc)
