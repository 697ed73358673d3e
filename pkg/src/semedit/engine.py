"""Free-style editing state machine.

Every command transforms one proper document structure into another:
typing builds applies eagerly, deleting an operator black-boxes it instead
of tearing the construct down, brackets may be left pending and are
re-associated on close, and each applied command pushes exactly one undo
snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .document import (CaretPosition, DocNode, NodeKind, NOOP_GLYPH, Role,
                       Selection, canonical_boundary, canonicalize_caret,
                       caret_move, line_of_caret, new_document)
from .errors import NoHistory, PathInvalid, UnknownTemplate
from .grouping import group_items, is_implicit_times
from .mathml import parse_content, serialize_content
from .templates import (IMPLICIT_TIMES, KEY_ALIASES, instantiate,
                        load_registry, make_binary_apply, make_unary_minus)

# -- commands -------------------------------------------------------------


@dataclass(frozen=True)
class Key:
    char: str


@dataclass(frozen=True)
class Press:
    name: str  # backspace delete left right up down home end


@dataclass(frozen=True)
class InsertTemplate:
    template_id: str


@dataclass(frozen=True)
class BracketCmd:
    side: str  # "open" | "close"


@dataclass(frozen=True)
class SetSelection:
    anchor: CaretPosition
    focus: CaretPosition


@dataclass(frozen=True)
class SetMode:
    mode: str  # "basic" | "legacy"


@dataclass(frozen=True)
class Cut:
    pass


@dataclass(frozen=True)
class Copy:
    pass


@dataclass(frozen=True)
class Paste:
    pass


@dataclass(frozen=True)
class Undo:
    pass


@dataclass(frozen=True)
class Redo:
    pass


APPLIED = "applied"
NO_EFFECT = "no_effect"
REJECTED = "rejected"


@dataclass
class TransformEvent:
    name: str
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, **self.detail}


@dataclass
class EditResult:
    status: str
    reason: str | None
    transform_log: list
    caret: CaretPosition


DEFAULT_AUTO_REPLACE = {("<", "="): "≤", (">", "="): "≥",
                        ("+", "-"): "±", ("=", "/"): "≠"}


def load_auto_replace(text):
    """Parse an auto-replacement table: one `old typed -> new` per line."""
    table = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            lhs, new = line.split("->")
            old, typed = lhs.split()
            table[(old.strip(), typed.strip())] = new.strip()
        except ValueError:
            raise ValueError(f"bad auto-replace rule on line {lineno}: {raw!r}")
    _check_acyclic(table)
    return table


def _check_acyclic(table):
    for (old, typed) in table:
        seen = {old}
        cur = old
        while (cur, typed) in table:
            cur = table[(cur, typed)]
            if cur in seen:
                raise ValueError(
                    f"auto-replace table cycles on {old!r} + {typed!r}")
            seen.add(cur)


def auto_replace_lookup(table, operator, typed_char):
    """Replacement operator for typing ``typed_char`` right after
    ``operator``, or None."""
    return table.get((operator, typed_char))


class Session:
    """One logical editing session: document, mode, pending input state."""

    def __init__(self, registry=None, auto_replace=None):
        self.registry = registry if registry is not None else load_registry()
        self.auto_replace = dict(DEFAULT_AUTO_REPLACE if auto_replace is None
                                 else auto_replace)
        _check_acyclic(self.auto_replace)
        self.doc = new_document()
        self.mode = "basic"
        self.pending = ""          # undecided legacy letter buffer
        self.clipboard = None      # serialized content fragment
        self._events = []
        self._close_memory = None  # (pair node, pre-close snapshot)

    # -- public ----------------------------------------------------------

    def apply(self, cmd):
        self._events = []
        pre = self.doc.snapshot()
        pre_pending = self.pending
        memory, self._close_memory = self._close_memory, None
        status, reason = self._dispatch(cmd, memory)
        if status == APPLIED and not isinstance(cmd, (Undo, Redo)):
            self.doc.push_undo(pre)
        elif status == REJECTED:
            self.doc.root = pre.root
            self.doc.caret = pre.caret
            self.doc.selection = pre.selection
            self.pending = pre_pending
            self._events = []
        return EditResult(status, reason, list(self._events), self.doc.caret)

    def export_content(self):
        return serialize_content(self.doc, self.registry)

    # -- dispatch ----------------------------------------------------------

    def _dispatch(self, cmd, memory):
        flushed = self._flush_before(cmd)
        status, reason = self._dispatch_inner(cmd, memory)
        if flushed and status == NO_EFFECT:
            return APPLIED, reason
        return status, reason

    def _flush_before(self, cmd):
        """Commit or drop the pending legacy letter buffer where a command
        must not act over an undecided token.  Returns True if the flush
        changed the document."""
        if not self.pending:
            return False
        if isinstance(cmd, (Undo, Redo)):
            self.pending = ""  # buffered keystrokes are simply abandoned
            return False
        if isinstance(cmd, Press) and cmd.name == "backspace":
            return False  # backspace eats the last buffered letter instead
        needs_flush = (isinstance(cmd, (Press, InsertTemplate, SetSelection,
                                        Cut, Copy, Paste, BracketCmd))
                       or (isinstance(cmd, Key) and cmd.char in "()"))
        if not needs_flush:
            return False
        from .linear import flush_pending
        return flush_pending(self)

    def _dispatch_inner(self, cmd, memory):
        if isinstance(cmd, Key):
            if len(cmd.char) != 1:
                return REJECTED, "BadKey"
            if cmd.char == "(":
                return self._open_bracket()
            if self.doc.selection is not None and cmd.char != ")":
                if self._is_operator_char(cmd.char) \
                        and self._normalized_selection() is not None:
                    return self._wrap_operator(self._display_char(cmd.char),
                                               use_selection=True)
                self._delete_selection()
            if cmd.char == ")":
                self.doc.selection = None
                return self._close_bracket()
            if self.mode == "legacy":
                from .linear import legacy_type
                return legacy_type(self, cmd.char)
            return self._basic_key(cmd.char)
        if isinstance(cmd, Press):
            if cmd.name == "backspace":
                return self._delete(backward=True, memory=memory)
            if cmd.name == "delete":
                return self._delete(backward=False, memory=memory)
            return self._navigate(cmd.name)
        if isinstance(cmd, BracketCmd):
            return (self._open_bracket() if cmd.side == "open"
                    else self._close_bracket())
        if isinstance(cmd, InsertTemplate):
            return self._insert_template(cmd.template_id)
        if isinstance(cmd, SetSelection):
            return self._set_selection(cmd.anchor, cmd.focus)
        if isinstance(cmd, SetMode):
            return self._set_mode(cmd.mode)
        if isinstance(cmd, Cut):
            return self._cut_copy(cut=True)
        if isinstance(cmd, Copy):
            return self._cut_copy(cut=False)
        if isinstance(cmd, Paste):
            return self._paste()
        if isinstance(cmd, Undo):
            try:
                self.doc.undo()
            except NoHistory:
                return NO_EFFECT, None
            return APPLIED, None
        if isinstance(cmd, Redo):
            try:
                self.doc.redo()
            except NoHistory:
                return NO_EFFECT, None
            return APPLIED, None
        return REJECTED, "UnknownCommand"

    def _emit(self, name, **detail):
        self._events.append(TransformEvent(name, detail))

    # -- caret geometry helpers -------------------------------------------

    def _boundary(self, caret):
        """(line_path, boundary_index, split_offset | None)."""
        node = self.doc.resolve(caret.path)
        if node.kind is NodeKind.LINE:
            return caret.path, caret.offset, None
        line_path, tidx = caret.path[:-1], caret.path[-1]
        if caret.offset == 0:
            return line_path, tidx, None
        if caret.offset >= len(node.text):
            return line_path, tidx + 1, None
        return line_path, tidx, caret.offset

    def _split_token(self, line_path, tidx, offset):
        """Split a token at offset; returns boundary index between halves."""
        line = self.doc.resolve(line_path)
        tok = line.children[tidx]
        left = DocNode.token(tok.text[:offset], tok.role)
        right = DocNode.token(tok.text[offset:], tok.role)
        line.children[tidx:tidx + 1] = [left, right]
        return tidx + 1

    def _set_caret(self, caret):
        self.doc.caret = canonicalize_caret(self.doc, caret)

    def _caret_after_item(self, line_path, idx):
        self._set_caret(canonical_boundary(self.doc, line_path, idx + 1))

    # -- what lies next to the caret ----------------------------------------

    def _thing_before(self, caret):
        node = self.doc.resolve(caret.path)
        if node.kind is NodeKind.TEXT and caret.offset > 0:
            return ("char", caret.path, caret.offset)
        line_path, idx, _ = self._boundary(caret)
        return self._before_boundary(line_path, idx)

    def _before_boundary(self, line_path, idx):
        line = self.doc.resolve(line_path)
        if idx > 0:
            item = line.children[idx - 1]
            ipath = line_path + (idx - 1,)
            if item.kind is NodeKind.TEXT:
                if item.is_pending_bracket():
                    return ("pending", line_path, idx - 1)
                if item.is_enterable_text():
                    return ("char", ipath, len(item.text))
                return ("loose-glyph", line_path, idx - 1)
            if item.role is Role.BRACKET_PAIR:
                return ("pair-after", line_path, idx - 1)
            return ("apply-after", line_path, idx - 1)
        if len(line_path) < 3:
            return ("none",)
        slot_path = line_path[:-1]
        formula_path = slot_path[:-1]
        formula = self.doc.resolve(formula_path)
        slot_idx = slot_path[-1]
        if slot_idx > 0:
            prev = formula.children[slot_idx - 1]
            if prev.kind is NodeKind.TEXT:
                if formula.role is Role.BRACKET_PAIR:
                    return ("pair-inner", formula_path)
                return ("glyph", formula_path, slot_idx - 1)
            return ("slot-gap", formula_path, slot_idx - 1)
        return self._before_boundary(formula_path[:-1], formula_path[-1])

    def _thing_after(self, caret):
        node = self.doc.resolve(caret.path)
        if node.kind is NodeKind.TEXT and caret.offset < len(node.text):
            return ("char", caret.path, caret.offset)
        line_path, idx, _ = self._boundary(caret)
        return self._after_boundary(line_path, idx)

    def _after_boundary(self, line_path, idx):
        line = self.doc.resolve(line_path)
        if idx < len(line.children):
            item = line.children[idx]
            ipath = line_path + (idx,)
            if item.kind is NodeKind.TEXT:
                if item.is_pending_bracket():
                    return ("pending", line_path, idx)
                if item.is_enterable_text():
                    return ("char", ipath, 0)
                return ("loose-glyph", line_path, idx)
            if item.role is Role.BRACKET_PAIR:
                return ("pair-before", line_path, idx)
            return ("apply-before", line_path, idx)
        if len(line_path) < 3:
            return ("none",)
        slot_path = line_path[:-1]
        formula_path = slot_path[:-1]
        formula = self.doc.resolve(formula_path)
        slot_idx = slot_path[-1]
        if slot_idx + 1 < len(formula.children):
            nxt = formula.children[slot_idx + 1]
            if nxt.kind is NodeKind.TEXT:
                if formula.role is Role.BRACKET_PAIR:
                    return ("pair-inner", formula_path)
                return ("glyph", formula_path, slot_idx + 1)
            return ("slot-gap", formula_path, slot_idx + 1)
        return self._after_boundary(formula_path[:-1], formula_path[-1] + 1)

    # -- navigation ----------------------------------------------------------

    def _navigate(self, direction):
        target = caret_move(self.doc, direction)
        moved = target != self.doc.caret
        had_selection = self.doc.selection is not None
        self.doc.selection = None
        self.doc.caret = target
        if moved or had_selection:
            return APPLIED, None
        return NO_EFFECT, None

    # -- typing ----------------------------------------------------------------

    def _display_char(self, ch):
        return KEY_ALIASES.get(ch, ch)

    def _is_operator_char(self, ch):
        sym = self._display_char(ch)
        return self.registry.operator_template(sym) is not None

    def _fill_or_replace(self, ch):
        """Black-box filling and automatic replacement; None if untriggered."""
        before = self._thing_before(self.doc.caret)
        if before[0] != "glyph":
            return None
        formula = self.doc.resolve(before[1])
        glyph = formula.children[before[2]]
        if glyph.role is Role.NOOP and self._is_operator_char(ch):
            sym = self._display_char(ch)
            glyph.role = Role.OPERATOR
            glyph.symbol = sym
            glyph.text = sym
            self._emit("OperatorFilled", symbol=sym)
            return APPLIED, None
        if glyph.role is Role.OPERATOR:
            new_sym = self.auto_replace.get((glyph.symbol, ch))
            if new_sym is not None:
                old = glyph.symbol
                glyph.symbol = new_sym
                glyph.text = new_sym
                self._emit("AutoReplaced", **{"from": old, "to": new_sym})
                return APPLIED, None
        return None

    def _basic_key(self, ch):
        handled = self._fill_or_replace(ch)
        if handled is not None:
            return handled
        if self._is_operator_char(ch):
            return self._wrap_operator(self._display_char(ch))
        return self._insert_token_char(ch)

    def _insert_token_char(self, ch):
        caret = self.doc.caret
        node = self.doc.resolve(caret.path)
        if node.kind is NodeKind.TEXT and node.is_enterable_text():
            node.text = node.text[:caret.offset] + ch + node.text[caret.offset:]
            node.role = Role.AUTO_DETECT
            self.doc.caret = CaretPosition(caret.path, caret.offset + 1)
            return APPLIED, None
        line_path, idx, _ = self._boundary(caret)
        line = self.doc.resolve(line_path)
        line.children.insert(idx, DocNode.token(ch))
        self.doc.caret = CaretPosition(line_path + (idx,), 1)
        return APPLIED, None

    def _left_operand(self, line_path, idx):
        """Index of the item serving as left operand at a boundary, if any."""
        line = self.doc.resolve(line_path)
        if idx > 0 and not line.children[idx - 1].is_pending_bracket():
            return idx - 1
        return None

    def _wrap_operator(self, sym, use_selection=False):
        """Structural transform: wrap the caret-adjacent operand in an apply."""
        if use_selection:
            sel = self._normalized_selection()
            if sel is None:
                use_selection = False
        if use_selection:
            line_path, start, end = self._materialize_selection(sel)
            line = self.doc.resolve(line_path)
            left_items = line.children[start:end]
            node = make_binary_apply(self.registry, sym, left_items, [])
            line.children[start:end] = [node]
            self.doc.selection = None
            self._set_caret(CaretPosition(line_path + (start, 2, 0), 0))
            return APPLIED, None

        caret = self.doc.caret
        line_path, idx, split = self._boundary(caret)
        line = self.doc.resolve(line_path)
        if split is not None:
            tok = line.children[idx]
            left_tok = DocNode.token(tok.text[:split], tok.role)
            right_tok = DocNode.token(tok.text[split:], tok.role)
            node = make_binary_apply(self.registry, sym, [left_tok],
                                     [right_tok])
            line.children[idx:idx + 1] = [node]
            self._set_caret(CaretPosition(line_path + (idx, 2, 0), 0))
            return APPLIED, None
        left = self._left_operand(line_path, idx)
        if left is None:
            if sym == "-":
                node = make_unary_minus(self.registry, [])
                line.children.insert(idx, node)
                self._set_caret(CaretPosition(line_path + (idx, 1, 0), 0))
                return APPLIED, None
            node = make_binary_apply(self.registry, sym, [], [])
            line.children.insert(idx, node)
            self._set_caret(CaretPosition(line_path + (idx, 2, 0), 0))
            return APPLIED, None
        node = make_binary_apply(self.registry, sym, [line.children[left]], [])
        line.children[left:left + 1] = [node]
        self._set_caret(CaretPosition(line_path + (left, 2, 0), 0))
        return APPLIED, None

    # -- deletion -----------------------------------------------------------

    def _delete(self, backward, memory):
        if backward and self.pending:
            self.pending = self.pending[:-1]
            return NO_EFFECT, None
        if self.doc.selection is not None:
            if self._normalized_selection() is not None:
                self._delete_selection()
                return APPLIED, None
            self.doc.selection = None
        thing = (self._thing_before(self.doc.caret) if backward
                 else self._thing_after(self.doc.caret))
        kind = thing[0]
        if kind == "none":
            return NO_EFFECT, None
        if kind == "char":
            return self._delete_char(thing[1], thing[2], backward)
        if kind == "pending" or kind == "loose-glyph":
            line = self.doc.resolve(thing[1])
            leaf = line.children[thing[2]]
            if memory is not None and memory[0] is leaf:
                snap = memory[1]
                self.doc.root = snap.root
                self.doc.caret = snap.caret
                self.doc.selection = snap.selection
                return APPLIED, None
            del line.children[thing[2]]
            self._merge_adjacent_texts(thing[1], thing[2])
            return APPLIED, None
        if kind == "glyph":
            return self._black_box(thing[1], thing[2])
        if kind == "pair-inner":
            return REJECTED, "ReadOnlyTarget"
        if kind == "pair-after" and backward:
            return self._revert_pair(thing[1], thing[2], memory,
                                     leave="open")
        if kind == "pair-before" and not backward:
            return self._revert_pair(thing[1], thing[2], memory,
                                     leave="close")
        if kind in ("pair-after", "apply-after"):
            # step into the construct instead of deleting across it
            end = self._last_position_inside(thing[1] + (thing[2],))
            self.doc.caret = end
            return APPLIED, None
        if kind in ("pair-before", "apply-before"):
            start = self._first_position_inside(thing[1] + (thing[2],))
            self.doc.caret = start
            return APPLIED, None
        if kind == "slot-gap":
            formula_path, sidx = thing[1], thing[2]
            slot = self.doc.resolve(formula_path).children[sidx]
            lcount = len(slot.children)
            if backward:
                last_line = formula_path + (sidx, max(0, lcount - 1))
                n = len(self.doc.resolve(last_line).children)
                self._set_caret(canonical_boundary(self.doc, last_line, n))
            else:
                self._set_caret(canonical_boundary(
                    self.doc, formula_path + (sidx, 0), 0))
            return APPLIED, None
        return NO_EFFECT, None

    def _delete_char(self, text_path, offset, backward):
        node = self.doc.resolve(text_path)
        cut = offset - 1 if backward else offset
        node.text = node.text[:cut] + node.text[cut + 1:]
        node.role = Role.AUTO_DETECT
        line_path, tidx = text_path[:-1], text_path[-1]
        if not node.text:
            line = self.doc.resolve(line_path)
            del line.children[tidx]
            self._merge_adjacent_texts(line_path, tidx)
        else:
            self._set_caret(CaretPosition(text_path, cut))
        return APPLIED, None

    def _merge_adjacent_texts(self, line_path, idx):
        """After removing an item, rejoin token halves it had separated and
        leave the caret at the junction."""
        line = self.doc.resolve(line_path)
        if 0 < idx < len(line.children):
            left, right = line.children[idx - 1], line.children[idx]
            if left.is_enterable_text() and right.is_enterable_text():
                junction = len(left.text)
                left.text += right.text
                if left.role is not right.role:
                    left.role = Role.AUTO_DETECT
                del line.children[idx]
                self.doc.caret = CaretPosition(line_path + (idx - 1,),
                                               junction)
                return
        self._set_caret(canonical_boundary(self.doc, line_path, idx))

    def _black_box(self, formula_path, glyph_idx):
        formula = self.doc.resolve(formula_path)
        glyph = formula.children[glyph_idx]
        if glyph.role is Role.NOOP:
            return REJECTED, "ProtectedNoOp"
        symbol = glyph.symbol
        if len(formula.slots()) > 2:
            # split the n-ary chain at the deleted operator first
            left = formula.children[:glyph_idx]
            right = formula.children[glyph_idx + 1:]
            left_node = (DocNode.formula(left, Role.APPLY,
                                         formula.presentation_tag)
                         if len(left) > 1 else None)
            right_node = (DocNode.formula(right, Role.APPLY,
                                          formula.presentation_tag)
                          if len(right) > 1 else None)
            left_items = [left_node] if left_node is not None else \
                list(left[0].children[0].children)
            right_items = [right_node] if right_node is not None else \
                list(right[0].children[0].children)
            noop = DocNode.glyph(NOOP_GLYPH, Role.NOOP, None)
            node = DocNode.formula(
                [DocNode.slot([DocNode.line(left_items)]), noop,
                 DocNode.slot([DocNode.line(right_items)])],
                Role.APPLY, "mrow")
            parent_line = formula_path[:-1]
            fidx = formula_path[-1]
            self.doc.resolve(parent_line).children[fidx] = node
            self._set_caret(canonical_boundary(
                self.doc, parent_line + (fidx, 2, 0), 0))
        else:
            glyph.role = Role.NOOP
            glyph.symbol = None
            glyph.text = NOOP_GLYPH
        self._emit("OperatorBlackBoxed", symbol=symbol)
        return APPLIED, None

    def _first_position_inside(self, item_path):
        node = self.doc.resolve(item_path)
        for i, ch in enumerate(node.children):
            if ch.kind is NodeKind.SLOT:
                return canonical_boundary(self.doc, item_path + (i, 0), 0)
        return canonicalize_caret(self.doc, self.doc.caret)

    def _last_position_inside(self, item_path):
        node = self.doc.resolve(item_path)
        for i in range(len(node.children) - 1, -1, -1):
            if node.children[i].kind is NodeKind.SLOT:
                slot = node.children[i]
                lidx = max(0, len(slot.children) - 1)
                line = item_path + (i, lidx)
                n = len(self.doc.resolve(line).children)
                return canonical_boundary(self.doc, line, n)
        return canonicalize_caret(self.doc, self.doc.caret)

    def _revert_pair(self, line_path, idx, memory, leave):
        pair = self.doc.resolve(line_path).children[idx]
        if memory is not None and memory[0] is pair:
            snap = memory[1]
            self.doc.root = snap.root
            self.doc.caret = snap.caret
            self.doc.selection = snap.selection
            self._emit("StructureReverted")
            return APPLIED, None
        slot = pair.slots()[0]
        contents = list(slot.children[0].children) if slot.children else []
        line = self.doc.resolve(line_path)
        if leave == "open":
            replacement = [DocNode.pending_bracket("(")] + contents
            line.children[idx:idx + 1] = replacement
            self._set_caret(canonical_boundary(
                self.doc, line_path, idx + len(replacement)))
        else:
            replacement = contents + [DocNode.pending_bracket(")")]
            line.children[idx:idx + 1] = replacement
            self._set_caret(canonical_boundary(self.doc, line_path, idx))
        self._emit("StructureReverted")
        return APPLIED, None

    # -- brackets -------------------------------------------------------------

    def _open_bracket(self):
        if self.doc.selection is not None:
            return self._insert_template("bracket-round")
        caret = self.doc.caret
        line_path, idx, split = self._boundary(caret)
        if split is not None:
            idx = self._split_token(line_path, idx, split)
        line = self.doc.resolve(line_path)
        line.children.insert(idx, DocNode.pending_bracket("("))
        self._set_caret(canonical_boundary(self.doc, line_path, idx + 1))
        return APPLIED, None

    def _close_bracket(self):
        pre = self.doc.snapshot()
        caret = self.doc.caret
        line_path, idx, split = self._boundary(caret)
        if split is not None:
            idx = self._split_token(line_path, idx, split)
            self.doc.caret = canonical_boundary(self.doc, line_path, idx)
        found = self._find_pending_open(line_path, idx)
        if found is None:
            line = self.doc.resolve(line_path)
            leaf = DocNode.pending_bracket(")")
            line.children.insert(idx, leaf)
            self._set_caret(canonical_boundary(self.doc, line_path, idx + 1))
            self._close_memory = (leaf, pre)
            return APPLIED, None
        open_line, open_idx = found
        if open_line == line_path[:len(open_line)]:
            pair = self._close_simple(open_line, open_idx, line_path, idx)
        else:
            pair = self._close_split(open_line, open_idx, line_path, idx)
        self._close_memory = (pair, pre)
        return APPLIED, None

    def _find_pending_open(self, line_path, idx):
        """Nearest pending '(' before the caret, in reverse document order."""
        found = self._scan_items_rev(line_path, idx)
        if found is not None:
            return found
        if len(line_path) < 3:
            return None
        slot_path = line_path[:-1]
        formula_path = slot_path[:-1]
        formula = self.doc.resolve(formula_path)
        for j in range(slot_path[-1] - 1, -1, -1):
            child = formula.children[j]
            if child.kind is NodeKind.SLOT:
                found = self._scan_slot_rev(child, formula_path + (j,))
                if found is not None:
                    return found
        return self._find_pending_open(formula_path[:-1], formula_path[-1])

    def _scan_items_rev(self, line_path, upto):
        line = self.doc.resolve(line_path)
        for j in range(upto - 1, -1, -1):
            item = line.children[j]
            if item.is_pending_bracket() and item.symbol == "(":
                return (line_path, j)
            if item.kind is NodeKind.FORMULA:
                found = self._scan_formula_rev(item, line_path + (j,))
                if found is not None:
                    return found
        return None

    def _scan_formula_rev(self, node, path):
        for j in range(len(node.children) - 1, -1, -1):
            child = node.children[j]
            if child.kind is NodeKind.SLOT:
                found = self._scan_slot_rev(child, path + (j,))
                if found is not None:
                    return found
        return None

    def _scan_slot_rev(self, slot, path):
        for j in range(len(slot.children) - 1, -1, -1):
            line = slot.children[j]
            found = self._scan_items_rev_in(line, path + (j,))
            if found is not None:
                return found
        return None

    def _scan_items_rev_in(self, line, line_path):
        for j in range(len(line.children) - 1, -1, -1):
            item = line.children[j]
            if item.is_pending_bracket() and item.symbol == "(":
                return (line_path, j)
            if item.kind is NodeKind.FORMULA:
                found = self._scan_formula_rev(item, line_path + (j,))
                if found is not None:
                    return found
        return None

    def _make_pair(self, items):
        pair = instantiate(self.registry, "bracket-round")
        pair.slots()[0].children[0].children = list(items)
        return pair

    def _close_simple(self, open_line, open_idx, caret_line, caret_idx):
        """Wrap the span from a pending open up to the (projected) caret."""
        if caret_line == open_line:
            jc = caret_idx
        else:
            jc = caret_line[len(open_line)] + 1
        line = self.doc.resolve(open_line)
        span = line.children[open_idx + 1:jc]
        pair = self._make_pair(span)
        line.children[open_idx:jc] = [pair]
        self._set_caret(canonical_boundary(self.doc, open_line, open_idx + 1))
        return pair

    def _close_split(self, open_line, open_idx, caret_line, caret_idx):
        """Close whose span crosses construct boundaries (bracket
        re-association): crossed pairs split at the new pair's left edge,
        crossed applies dissolve, and precedence grouping re-runs in both
        resulting spans."""
        lca = self._common_line(open_line, caret_line)
        if caret_line == lca:
            jc = caret_idx
        else:
            jc = caret_line[len(lca)] + 1

        cur = open_line
        cur_node = self.doc.resolve(cur)
        left = list(cur_node.children[:open_idx])
        collected = list(cur_node.children[open_idx + 1:])

        def linearize(children):
            out = []
            for child in children:
                if child.kind is NodeKind.SLOT:
                    for ln in child.children:
                        out.extend(ln.children)
                else:
                    out.append(child)
            return out

        while True:
            slot_path = cur[:-1]
            formula_path = slot_path[:-1]
            formula = self.doc.resolve(formula_path)
            slot_idx = slot_path[-1]
            if formula.role is Role.BRACKET_PAIR:
                left = [self._make_pair(group_items(left, self.registry))]
            else:
                left = linearize(formula.children[:slot_idx]) + left
                collected = collected + linearize(
                    formula.children[slot_idx + 1:])
            parent_path = formula_path[:-1]
            fidx = formula_path[-1]
            parent = self.doc.resolve(parent_path)
            if parent_path == lca:
                pre_items = list(parent.children[:fidx])
                mid = list(parent.children[fidx + 1:jc])
                post = list(parent.children[jc:])
                collected = collected + mid
                pair = self._make_pair(group_items(collected, self.registry))
                grouped = group_items(pre_items + left + [pair],
                                      self.registry)
                parent.children = grouped + post
                # caret directly after the new closing bracket, wherever
                # grouping nested the pair
                pair_path = self._path_of(pair)
                self._set_caret(canonical_boundary(
                    self.doc, pair_path[:-1], pair_path[-1] + 1))
                self._emit("BracketReassociated")
                return pair
            collected = collected + list(parent.children[fidx + 1:])
            left = list(parent.children[:fidx]) + left
            cur = parent_path

    def _common_line(self, a, b):
        common = []
        for x, y in zip(a, b):
            if x != y:
                break
            common.append(x)
        path = tuple(common)
        while path:
            try:
                if self.doc.resolve(path).kind is NodeKind.LINE:
                    return path
            except PathInvalid:
                pass
            path = path[:-1]
        return (0, a[1] if len(a) > 1 else 0)

    def _path_of(self, target):
        def walk(node, path):
            for i, child in enumerate(node.children):
                if child is target:
                    return path + (i,)
                found = walk(child, path + (i,))
                if found is not None:
                    return found
            return None

        found = walk(self.doc.root, (0,))
        if found is None:
            raise PathInvalid("node is not in the document")
        return found

    # -- templates -------------------------------------------------------------

    def _insert_template(self, template_id):
        try:
            node = instantiate(self.registry, template_id)
        except UnknownTemplate:
            return REJECTED, "UnknownTemplate"
        sel = self._normalized_selection()
        if sel is not None:
            line_path, start, end = self._materialize_selection(sel)
            line = self.doc.resolve(line_path)
            moved = line.children[start:end]
            slots = node.slots()
            slots[0].children[0].children = moved
            line.children[start:end] = [node]
            first_slot_idx = node.children.index(slots[0])
            if len(moved) == 1:
                self.doc.selection = Selection(
                    CaretPosition(line_path + (start, first_slot_idx, 0), 0),
                    CaretPosition(line_path + (start, first_slot_idx, 0), 1))
            else:
                self.doc.selection = None
            self._place_caret_in_template(line_path, start, node)
            return APPLIED, None
        caret = self.doc.caret
        line_path, idx, split = self._boundary(caret)
        if split is not None:
            idx = self._split_token(line_path, idx, split)
        line = self.doc.resolve(line_path)
        line.children.insert(idx, node)
        self.doc.selection = None
        self._place_caret_in_template(line_path, idx, node)
        return APPLIED, None

    def _place_caret_in_template(self, line_path, idx, node):
        base = line_path + (idx,)
        for i, child in enumerate(node.children):
            if child.kind is NodeKind.SLOT and not child.children[0].children:
                self._set_caret(CaretPosition(base + (i, 0), 0))
                return
        slots = [i for i, c in enumerate(node.children)
                 if c.kind is NodeKind.SLOT]
        last = slots[-1]
        n = len(node.children[last].children[0].children)
        self._set_caret(canonical_boundary(self.doc, base + (last, 0), n))

    # -- selection -------------------------------------------------------------

    def _set_selection(self, anchor, focus):
        for pos in (anchor, focus):
            try:
                node = self.doc.resolve(pos.path)
            except PathInvalid:
                return REJECTED, "PathInvalid"
            if node.kind not in (NodeKind.LINE, NodeKind.TEXT) or node.no_move:
                return REJECTED, "PathInvalid"
            limit = (len(node.text) if node.kind is NodeKind.TEXT
                     else len(node.children))
            if not 0 <= pos.offset <= limit:
                return REJECTED, "PathInvalid"
        self.doc.selection = Selection(anchor, focus)
        self.doc.caret = canonicalize_caret(self.doc, focus)
        return APPLIED, None

    def _line_ancestors(self, path):
        """All prefixes of a path that resolve to Line nodes."""
        out = []
        for i in range(1, len(path) + 1):
            prefix = path[:i]
            try:
                if self.doc.resolve(prefix).kind is NodeKind.LINE:
                    out.append(prefix)
            except PathInvalid:
                break
        return out

    def _normalized_selection(self):
        """(line_path, start, end) item range, or ('text', ...) char range,
        or None for an empty/absent selection."""
        sel = self.doc.selection
        if sel is None:
            return None
        a, f = sel.anchor, sel.focus
        try:
            if a.path == f.path and a.offset != f.offset:
                node = self.doc.resolve(a.path)
                if node.kind is NodeKind.TEXT \
                        and max(a.offset, f.offset) <= len(node.text):
                    k1, k2 = sorted((a.offset, f.offset))
                    return ("text", a.path, k1, k2)
            lines_a = self._line_ancestors(a.path)
            lines_f = self._line_ancestors(f.path)
            common = [p for p in lines_a if p in lines_f]
            if not common:
                return None
            lca = common[-1]

            def span_at(pos):
                if pos.path == lca:
                    return (pos.offset, pos.offset)
                idx = pos.path[len(lca)]
                node = self.doc.resolve(pos.path)
                if pos.path == lca + (idx,) and node.kind is NodeKind.TEXT:
                    if pos.offset == 0:
                        return (idx, idx)
                    if pos.offset >= len(node.text):
                        return (idx + 1, idx + 1)
                return (idx, idx + 1)

            s1, e1 = span_at(a)
            s2, e2 = span_at(f)
        except PathInvalid:
            # selection went stale under an intervening structural edit
            return None
        limit = len(self.doc.resolve(lca).children)
        start = max(0, min(s1, s2))
        end = min(limit, max(e1, e2))
        if start >= end:
            return None
        return ("items", lca, start, end)

    def _materialize_selection(self, sel):
        """Reduce any normalized selection to a whole-item range, splitting
        a partially selected token first."""
        if sel[0] == "items":
            return sel[1], sel[2], sel[3]
        _, text_path, k1, k2 = sel
        line_path, tidx = text_path[:-1], text_path[-1]
        line = self.doc.resolve(line_path)
        tok = line.children[tidx]
        pieces = []
        if k1 > 0:
            pieces.append(DocNode.token(tok.text[:k1], tok.role))
        sel_tok = DocNode.token(tok.text[k1:k2], tok.role)
        pieces.append(sel_tok)
        if k2 < len(tok.text):
            pieces.append(DocNode.token(tok.text[k2:], tok.role))
        line.children[tidx:tidx + 1] = pieces
        start = tidx + (1 if k1 > 0 else 0)
        return line_path, start, start + 1

    def _delete_selection(self):
        sel = self._normalized_selection()
        if sel is None:
            self.doc.selection = None
            return
        line_path, start, end = self._materialize_selection(sel)
        line = self.doc.resolve(line_path)
        del line.children[start:end]
        self.doc.selection = None
        self._merge_adjacent_texts(line_path, start)

    def _selected_items_view(self, sel):
        """Cloned selected items without touching the document."""
        if sel[0] == "text":
            _, text_path, k1, k2 = sel
            tok = self.doc.resolve(text_path)
            return [DocNode.token(tok.text[k1:k2], tok.role)]
        _, line_path, start, end = sel
        line = self.doc.resolve(line_path)
        return [c.clone() for c in line.children[start:end]]

    def _cut_copy(self, cut):
        sel = self._normalized_selection()
        if sel is None:
            return REJECTED, "NoSelection"
        fragment_doc = new_document()
        fragment_doc.root.children[0].children = \
            self._selected_items_view(sel)
        self.clipboard = serialize_content(fragment_doc, self.registry)
        if not cut:
            return NO_EFFECT, None  # copy leaves the document untouched
        self._delete_selection()
        return APPLIED, None

    def _paste(self):
        if not self.clipboard:
            return REJECTED, "EmptyClipboard"
        try:
            fragment = parse_content(self.clipboard, self.registry)
        except Exception:
            return REJECTED, "EmptyClipboard"
        items = []
        for ln in fragment.root.children:
            items.extend(ln.children)
        caret = self.doc.caret
        line_path, idx, split = self._boundary(caret)
        if split is not None:
            idx = self._split_token(line_path, idx, split)
        line = self.doc.resolve(line_path)
        n_after = len(line.children) - idx
        line.children[idx:idx] = items
        line.children = group_items(line.children, self.registry)
        self.doc.selection = None
        pos = max(0, len(line.children) - n_after)
        self._set_caret(canonical_boundary(self.doc, line_path, pos))
        return APPLIED, None

    # -- mode ----------------------------------------------------------------

    def _set_mode(self, mode):
        if mode not in ("basic", "legacy"):
            return REJECTED, "UnknownMode"
        changed_doc = False
        if self.pending:
            from .linear import flush_pending
            changed_doc = flush_pending(self)
        self.mode = mode
        return (APPLIED, None) if changed_doc else (NO_EFFECT, None)
