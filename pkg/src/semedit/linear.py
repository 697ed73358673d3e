"""Legacy (linear) input mode.

Interprets a plain keystroke stream as textual math entry: function-name
recognition with a wait-and-see letter buffer, repeated-letter
exponentiation, implicit multiplication, and precedence-driven caret
widening, so that ``y = 1/x+1`` typed as characters means what a user of
linear input systems expects.
"""

from __future__ import annotations

import re

from .document import CaretPosition, DocNode, NodeKind, Role, \
    canonical_boundary
from .grouping import is_implicit_times, precedence_of
from .templates import (IMPLICIT_TIMES, make_binary_apply,
                        make_function_apply, make_unary_minus)

UNARY_MINUS_LEVEL = 5
FUNCTION_LEVEL = 7
IMPLICIT_LEVEL = 4

_NUMERAL_PREFIX = re.compile(r"^\d+\.?\d*$|^\.\d*$")

APPLIED = "applied"
NO_EFFECT = "no_effect"


def classify_letter_run(buffer, reg):
    """("function", name) when the whole buffer is a registered name,
    else ("product", [(letter, count), ...]) with maximal equal-letter runs.
    """
    if buffer in reg.function_names():
        return ("function", buffer)
    factors = []
    for ch in buffer:
        if factors and factors[-1][0] == ch:
            factors[-1] = (ch, factors[-1][1] + 1)
        else:
            factors.append((ch, 1))
    return ("product", factors)


def _is_name_prefix(text, reg):
    return any(name.startswith(text) for name in reg.function_names())


def legacy_type(session, ch):
    if ch.isalpha():
        return _letter(session, ch)
    flushed = flush_pending(session) if session.pending else False
    status, reason = _nonletter(session, ch)
    if flushed and status == NO_EFFECT:
        return APPLIED, None
    return status, reason


def _letter(session, ch):
    candidate = session.pending + ch
    if _is_name_prefix(candidate, session.registry):
        session.pending = candidate
        return NO_EFFECT, None
    if session.pending in session.registry.function_names():
        name = session.pending
        session.pending = ""
        _commit_function(session, name)
        legacy_type(session, ch)
        return APPLIED, None
    session.pending = ""
    _insert_classified(session, candidate)
    return APPLIED, None


def flush_pending(session):
    """Commit the undecided letter buffer; True if the document changed."""
    buffer, session.pending = session.pending, ""
    if not buffer:
        return False
    _insert_classified(session, buffer)
    return True


def _insert_classified(session, buffer):
    kind, payload = classify_letter_run(buffer, session.registry)
    if kind == "function":
        _commit_function(session, payload)
        return
    for letter, count in payload:
        if count == 1:
            insert_operand(session, DocNode.token(letter), "token-end")
        else:
            node = make_binary_apply(
                session.registry, "^",
                [DocNode.token(letter)], [DocNode.token(str(count))])
            insert_operand(session, node, "after")


def _commit_function(session, name):
    node = make_function_apply(session.registry, name, [])
    insert_operand(session, node, "first-slot")


def _nonletter(session, ch):
    if ch.isdigit() or ch == ".":
        return _digit(session, ch)
    handled = session._fill_or_replace(ch)
    if handled is not None:
        return handled
    if session._is_operator_char(ch):
        return _operator(session, ch)
    return session._insert_token_char(ch)


def _digit(session, ch):
    caret = session.doc.caret
    node = session.doc.resolve(caret.path)
    if node.kind is NodeKind.TEXT and node.is_enterable_text() \
            and _NUMERAL_PREFIX.match(node.text) \
            and not (ch == "." and "." in node.text):
        node.text = node.text[:caret.offset] + ch + node.text[caret.offset:]
        node.role = Role.AUTO_DETECT
        session.doc.caret = CaretPosition(caret.path, caret.offset + 1)
        return APPLIED, None
    insert_operand(session, DocNode.token(ch), "token-end")
    return APPLIED, None


def _operator(session, ch):
    sym = session._display_char(ch)
    line_path, idx, split = session._boundary(session.doc.caret)
    if sym == "-" and split is None \
            and session._left_operand(line_path, idx) is None:
        return session._wrap_operator(sym)
    level, assoc = precedence_of(session.registry, sym)
    precedence_widen(session, level, assoc)
    return session._wrap_operator(sym)


def precedence_widen(session, level, assoc="left"):
    """Exit enclosing constructs that bind tighter than the incoming
    operator (equal levels widen too when the operator is left-associative,
    so chains like a-b-c group left).  Bracket pairs, equations and noop
    heads are hard boundaries."""
    while True:
        line_path, idx, _split = session._boundary(session.doc.caret)
        line = session.doc.resolve(line_path)
        if any(line.children[j].is_pending_bracket()
               and line.children[j].symbol == "("
               for j in range(min(idx, len(line.children)))):
            # inside an unclosed bracket: its scope is a hard boundary
            return session.doc.caret
        if len(line_path) < 3:
            return session.doc.caret
        slot_path = line_path[:-1]
        formula_path = slot_path[:-1]
        formula = session.doc.resolve(formula_path)
        if formula.role is Role.BRACKET_PAIR:
            return session.doc.caret
        head = formula.head_glyph()
        if head is None or head.role is Role.NOOP:
            return session.doc.caret
        if head.role is Role.FUNCTION:
            f_level = FUNCTION_LEVEL
        elif head.symbol == "=":
            return session.doc.caret
        elif head.symbol == "-" and len(formula.slots()) == 1:
            f_level = UNARY_MINUS_LEVEL
        else:
            f_level = precedence_of(session.registry, head.symbol)[0]
        if f_level > level or (f_level == level and assoc == "left"):
            parent_line = formula_path[:-1]
            fidx = formula_path[-1]
            session._set_caret(canonical_boundary(
                session.doc, parent_line, fidx + 1))
            continue
        return session.doc.caret


def insert_operand(session, node, caret_into="after"):
    """Place an operand at the caret, joining a left neighbor with
    implicit multiplication (flat n-ary) after precedence widening."""
    line_path, idx, split = session._boundary(session.doc.caret)
    if split is not None:
        idx = session._split_token(line_path, idx, split)
        line = session.doc.resolve(line_path)
        line.children.insert(idx, node)
        _place(session, line_path, idx, node, caret_into)
        return
    if session._left_operand(line_path, idx) is None:
        line = session.doc.resolve(line_path)
        line.children.insert(idx, node)
        _place(session, line_path, idx, node, caret_into)
        return
    precedence_widen(session, IMPLICIT_LEVEL, "left")
    line_path, idx, _ = session._boundary(session.doc.caret)
    line = session.doc.resolve(line_path)
    left = session._left_operand(line_path, idx)
    if left is None:
        line.children.insert(idx, node)
        _place(session, line_path, idx, node, caret_into)
        return
    left_node = line.children[left]
    if is_implicit_times(left_node) and idx == left + 1:
        left_node.children.append(DocNode.glyph(
            IMPLICIT_TIMES, Role.OPERATOR, IMPLICIT_TIMES))
        left_node.children.append(
            DocNode.slot([DocNode.line([node])]))
        slot_line = line_path + (left, len(left_node.children) - 1, 0)
        _place_in_slot_line(session, slot_line, node, caret_into)
        return
    apply_node = make_binary_apply(session.registry, IMPLICIT_TIMES,
                                   [left_node], [node])
    line.children[left:left + 1] = [apply_node]
    _place_in_slot_line(session, line_path + (left, 2, 0), node, caret_into)


def _place(session, line_path, idx, node, caret_into):
    if caret_into == "first-slot":
        _caret_first_empty_slot(session, line_path + (idx,), node)
    else:
        session._set_caret(canonical_boundary(session.doc, line_path,
                                              idx + 1))


def _place_in_slot_line(session, slot_line, node, caret_into):
    if caret_into == "first-slot":
        _caret_first_empty_slot(session, slot_line + (0,), node)
    else:
        session._set_caret(canonical_boundary(session.doc, slot_line, 1))


def _caret_first_empty_slot(session, node_path, node):
    for i, child in enumerate(node.children):
        if child.kind is NodeKind.SLOT and not child.children[0].children:
            session._set_caret(CaretPosition(node_path + (i, 0), 0))
            return
    session._set_caret(canonical_boundary(
        session.doc, node_path[:-1], node_path[-1] + 1))
