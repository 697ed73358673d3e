"""Precedence grouping of loose line items into proper apply structures.

A Line may transiently hold a mix of operand items (tokens, formulas) and
loose operator glyphs (left behind when a construct is dissolved during
bracket re-association, or brought in by paste).  This module folds such a
sequence into apply formulas using the operator precedence table, inserting
invisible-times applies for plain juxtaposition and empty slots for missing
operands.  Pending (unbalanced) bracket leaves act as separators and are
never grouped.
"""

from __future__ import annotations

from .document import DocNode, NodeKind, Role, NOOP_GLYPH
from .templates import IMPLICIT_TIMES, make_binary_apply, make_unary_minus

_NOOP = object()   # sentinel symbol for loose black-box glyphs


def precedence_of(reg, symbol):
    t = reg.operator_template(symbol)
    if t is None:
        return 3, "left"
    return t.precedence, ("right" if symbol == "^" else "left")


def is_loose_operator(item):
    return (item.kind is NodeKind.TEXT
            and item.role in (Role.OPERATOR, Role.NOOP)
            and item.no_move and not item.is_pending_bracket())


def _wrap_operand(node):
    return [] if node is None else [node]


def _make_noop_apply(left, right):
    glyph = DocNode.glyph(NOOP_GLYPH, Role.NOOP, None)
    return DocNode.formula(
        [DocNode.slot([DocNode.line(_wrap_operand(left))]), glyph,
         DocNode.slot([DocNode.line(_wrap_operand(right))])],
        Role.APPLY, "mrow")


def _append_implicit(apply_node, operand):
    """Flat invisible-times apply with one more operand (input unchanged)."""
    children = list(apply_node.children)
    children.append(DocNode.glyph(IMPLICIT_TIMES, Role.OPERATOR,
                                  IMPLICIT_TIMES))
    children.append(DocNode.slot([DocNode.line(_wrap_operand(operand))]))
    return DocNode.formula(children, Role.APPLY,
                           apply_node.presentation_tag)


def is_implicit_times(node):
    if node is None or node.kind is not NodeKind.FORMULA:
        return False
    head = node.head_glyph()
    return (node.role is Role.APPLY and head is not None
            and head.symbol == IMPLICIT_TIMES)


def group_run(items, reg):
    """Shunting-yard over one separator-free run; returns 0 or 1 items."""
    if not items:
        return []
    output = []
    ops = []  # (symbol, level, assoc, unary)
    expect_operand = True

    def pop_operand():
        return output.pop() if output else None

    def reduce_top():
        sym, _level, _assoc, unary = ops.pop()
        if unary:
            output.append(make_unary_minus(reg, _wrap_operand(pop_operand())))
            return
        right = pop_operand()
        left = pop_operand()
        if sym is _NOOP:
            output.append(_make_noop_apply(left, right))
        elif sym == IMPLICIT_TIMES and is_implicit_times(left):
            output.append(_append_implicit(left, right))
        else:
            output.append(make_binary_apply(reg, sym,
                                            _wrap_operand(left),
                                            _wrap_operand(right)))

    def push_binary(sym, level, assoc):
        while ops and (ops[-1][1] > level
                       or (ops[-1][1] == level and assoc == "left")):
            reduce_top()
        ops.append((sym, level, assoc, False))

    for item in items:
        if is_loose_operator(item):
            if item.role is Role.NOOP:
                sym, (level, assoc) = _NOOP, (3, "left")
            else:
                sym = item.symbol
                level, assoc = precedence_of(reg, sym)
            if expect_operand:
                if sym == "-":
                    ops.append((sym, 5, "right", True))
                    continue
                output.append(None)  # missing left operand -> empty slot
            push_binary(sym, level, assoc)
            expect_operand = True
        else:
            if not expect_operand:
                push_binary(IMPLICIT_TIMES, *precedence_of(reg, IMPLICIT_TIMES))
            output.append(item)
            expect_operand = False

    if expect_operand and ops:
        output.append(None)  # trailing dangling operator
    while ops:
        reduce_top()
    return [n for n in output if n is not None]


def group_items(items, reg):
    """Group a full item list, keeping pending brackets as separators."""
    out = []
    run = []
    for item in items:
        if item.is_pending_bracket():
            out.extend(group_run(run, reg))
            run = []
            out.append(item)
        else:
            run.append(item)
    out.extend(group_run(run, reg))
    return out
