"""Attributed document tree: four node kinds, caret, selection, snapshots.

The tree shape is Slot -> Line -> {Formula, Text}; Formula children are
operand Slots interleaved with glyph Text leaves (operator signs, fences,
function names).  Glyph leaves are flagged read_only + no_move so user
commands cannot delete them directly and the caret never lands inside them.

Node paths are rooted at the virtual document level: path (0,) is the root
Slot, (0, 0) its first Line, and so on down child indices.  The textual
form used by scripts and the wire protocol is ``0/0/2:1`` (path plus caret
offset).
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass
from enum import Enum

from .errors import NoHistory, PathInvalid, SnapshotForeign


class NodeKind(Enum):
    SLOT = "slot"
    LINE = "line"
    FORMULA = "formula"
    TEXT = "text"


class Role(Enum):
    NUMBER = "number"
    IDENTIFIER = "identifier"
    OPERATOR = "operator"
    FUNCTION = "function"
    APPLY = "apply"
    BRACKET_PAIR = "bracket-pair"
    NOOP = "noop"
    AUTO_DETECT = "auto-detect"
    NONE = "none"


NOOP_GLYPH = "■"  # black square shown where an operator was deleted
PLACEHOLDER = "□"  # white square exported for empty slots


class DocNode:
    """One node of the document tree.

    ``symbol`` carries the operator character for OPERATOR glyphs and the
    function name for FUNCTION glyphs; ``text`` is the rendered character
    data (token text or glyph string).
    """

    __slots__ = ("kind", "children", "text", "role", "symbol",
                 "presentation_tag", "read_only", "no_move")

    def __init__(self, kind, children=None, text="", role=Role.NONE,
                 symbol=None, presentation_tag="", read_only=False,
                 no_move=False):
        self.kind = kind
        self.children = children if children is not None else []
        self.text = text
        self.role = role
        self.symbol = symbol
        self.presentation_tag = presentation_tag
        self.read_only = read_only
        self.no_move = no_move

    # -- constructors ---------------------------------------------------

    @staticmethod
    def slot(lines=None):
        return DocNode(NodeKind.SLOT, lines if lines is not None else [],
                       presentation_tag="mrow")

    @staticmethod
    def line(items=None):
        return DocNode(NodeKind.LINE, items if items is not None else [],
                       presentation_tag="mrow")

    @staticmethod
    def token(text, role=Role.AUTO_DETECT):
        tag = "mn" if role is Role.NUMBER else "mi"
        return DocNode(NodeKind.TEXT, [], text=text, role=role,
                       presentation_tag=tag)

    @staticmethod
    def glyph(text, role=Role.OPERATOR, symbol=None):
        return DocNode(NodeKind.TEXT, [], text=text, role=role,
                       symbol=symbol if symbol is not None else text,
                       presentation_tag="mo", read_only=True, no_move=True)

    @staticmethod
    def pending_bracket(char):
        # Deletable by the user, hence not read_only; no_move keeps the
        # caret from addressing the leaf itself.
        return DocNode(NodeKind.TEXT, [], text=char, role=Role.OPERATOR,
                       symbol=char, presentation_tag="mo", no_move=True)

    @staticmethod
    def formula(children, role, presentation_tag="mrow"):
        return DocNode(NodeKind.FORMULA, children, role=role,
                       presentation_tag=presentation_tag)

    # -- structure ------------------------------------------------------

    def clone(self):
        n = DocNode(self.kind, [c.clone() for c in self.children],
                    self.text, self.role, self.symbol,
                    self.presentation_tag, self.read_only, self.no_move)
        return n

    def is_glyph(self):
        return (self.kind is NodeKind.TEXT
                and self.role in (Role.OPERATOR, Role.FUNCTION, Role.NOOP)
                and self.no_move)

    def is_pending_bracket(self):
        return (self.kind is NodeKind.TEXT and self.symbol in ("(", ")")
                and not self.read_only and self.no_move)

    def is_enterable_text(self):
        return self.kind is NodeKind.TEXT and not self.no_move

    def slots(self):
        return [c for c in self.children if c.kind is NodeKind.SLOT]

    def head_glyph(self):
        """First operator/function/noop leaf of an apply formula."""
        for c in self.children:
            if c.is_glyph():
                return c
        return None

    def structurally_equal(self, other):
        if (self.kind is not other.kind or self.text != other.text
                or self.role is not other.role or self.symbol != other.symbol
                or self.read_only != other.read_only
                or self.no_move != other.no_move
                or len(self.children) != len(other.children)):
            return False
        return all(a.structurally_equal(b)
                   for a, b in zip(self.children, other.children))

    def __repr__(self):
        if self.kind is NodeKind.TEXT:
            return f"Text({self.text!r},{self.role.value})"
        inner = ",".join(repr(c) for c in self.children)
        return f"{self.kind.value.capitalize()}[{inner}]"


@dataclass(frozen=True)
class CaretPosition:
    path: tuple
    offset: int

    def text_form(self):
        return "/".join(str(i) for i in self.path) + f":{self.offset}"

    @staticmethod
    def parse(text):
        try:
            loc, off = text.rsplit(":", 1)
            path = tuple(int(p) for p in loc.split("/"))
            return CaretPosition(path, int(off))
        except ValueError as exc:
            raise PathInvalid(f"bad caret position {text!r}") from exc


@dataclass(frozen=True)
class Selection:
    anchor: CaretPosition
    focus: CaretPosition


@dataclass
class Snapshot:
    root: DocNode
    caret: CaretPosition
    selection: Selection | None
    seq: int
    lineage: str


class Document:
    """A document confined to one logical session: tree + caret + history."""

    def __init__(self, root=None, caret=None):
        self.root = root if root is not None else DocNode.slot([DocNode.line()])
        self.caret = caret if caret is not None else CaretPosition((0, 0), 0)
        self.selection = None
        self.lineage = uuid.uuid4().hex
        self._snapshot_seq = 0
        self.undo_stack = []
        self.redo_stack = []

    # -- addressing -----------------------------------------------------

    def resolve(self, path):
        if not path or path[0] != 0:
            raise PathInvalid(f"path {path!r} does not start at the root slot")
        node = self.root
        for idx in path[1:]:
            if not 0 <= idx < len(node.children):
                raise PathInvalid(f"index {idx} out of range in path {path!r}")
            node = node.children[idx]
        return node

    def parent_of(self, path):
        if len(path) < 2:
            raise PathInvalid("root slot has no parent")
        return self.resolve(path[:-1])

    # -- snapshots / undo ------------------------------------------------

    def snapshot(self):
        self._snapshot_seq += 1
        return Snapshot(self.root.clone(), self.caret, self.selection,
                        self._snapshot_seq, self.lineage)

    def restore(self, snap):
        if snap.lineage != self.lineage:
            raise SnapshotForeign("snapshot belongs to another document")
        self.root = snap.root.clone()
        self.caret = snap.caret
        self.selection = snap.selection
        return self

    def push_undo(self, snap):
        self.undo_stack.append(snap)
        self.redo_stack.clear()

    def undo(self):
        if not self.undo_stack:
            raise NoHistory("nothing to undo")
        self.redo_stack.append(self.snapshot())
        self.restore(self.undo_stack.pop())

    def redo(self):
        if not self.redo_stack:
            raise NoHistory("nothing to redo")
        self.undo_stack.append(self.snapshot())
        self.restore(self.redo_stack.pop())


def new_document():
    return Document()


def node_at(doc, path):
    """Read view of the node at ``path`` (PathInvalid if out of range)."""
    return doc.resolve(tuple(path))


# -- caret position enumeration -----------------------------------------
#
# Caret-eligible positions live on Line nodes (child gaps) and enterable
# Text nodes (character offsets).  Gaps adjacent to an enterable Text are
# canonicalized into the Text so that no two successive positions render
# at the same place; NoMove subtrees contribute no positions at all.


def caret_positions(doc):
    out = []

    def walk_line(node, path):
        n = len(node.children)
        for i in range(n + 1):
            prev = node.children[i - 1] if i > 0 else None
            nxt = node.children[i] if i < n else None
            if not (prev is not None and prev.is_enterable_text()) and \
               not (nxt is not None and nxt.is_enterable_text()):
                out.append(CaretPosition(path, i))
            if i < n:
                child = node.children[i]
                cpath = path + (i,)
                if child.is_enterable_text():
                    start = 1 if (prev is not None
                                  and prev.is_enterable_text()) else 0
                    for k in range(start, len(child.text) + 1):
                        out.append(CaretPosition(cpath, k))
                elif child.kind is NodeKind.FORMULA:
                    walk_formula(child, cpath)

    def walk_formula(node, path):
        for i, ch in enumerate(node.children):
            if ch.kind is NodeKind.SLOT:
                walk_slot(ch, path + (i,))

    def walk_slot(node, path):
        for i, ch in enumerate(node.children):
            walk_line(ch, path + (i,))

    walk_slot(doc.root, (0,))
    return out


def canonical_boundary(doc, line_path, index):
    """Canonical caret position for the gap before child ``index``."""
    line = doc.resolve(line_path)
    index = max(0, min(index, len(line.children)))
    prev = line.children[index - 1] if index > 0 else None
    nxt = line.children[index] if index < len(line.children) else None
    if prev is not None and prev.is_enterable_text():
        return CaretPosition(line_path + (index - 1,), len(prev.text))
    if nxt is not None and nxt.is_enterable_text():
        return CaretPosition(line_path + (index,), 0)
    return CaretPosition(line_path, index)


def line_of_caret(doc, caret):
    """(line_path, boundary_index) for the caret's enclosing line.

    For a caret inside a Text node the boundary index is the item index
    (offset 0) or item index + 1 (offset == len); mid-token carets report
    the item index of the token itself.
    """
    node = doc.resolve(caret.path)
    if node.kind is NodeKind.LINE:
        return caret.path, caret.offset
    line_path = caret.path[:-1]
    idx = caret.path[-1]
    if caret.offset == 0:
        return line_path, idx
    if caret.offset >= len(node.text):
        return line_path, idx + 1
    return line_path, idx


def caret_move(doc, direction):
    """Deterministic caret navigation; boundary moves are explicit no-ops."""
    positions = caret_positions(doc)
    try:
        cur = positions.index(doc.caret)
    except ValueError:
        raise PathInvalid(f"caret {doc.caret} is not a valid position")
    if direction == "right":
        return positions[cur + 1] if cur + 1 < len(positions) else doc.caret
    if direction == "left":
        return positions[cur - 1] if cur > 0 else doc.caret
    line_path, idx = line_of_caret(doc, doc.caret)
    line = doc.resolve(line_path)
    if direction in ("home", "end"):
        # the visual line is the root-level statement line
        statement = line_path[:2]
        if direction == "home":
            return canonical_boundary(doc, statement, 0)
        n = len(doc.resolve(statement).children)
        return canonical_boundary(doc, statement, n)
    if direction in ("up", "down"):
        if len(line_path) < 2:
            return doc.caret
        slot_path, line_idx = line_path[:-1], line_path[-1]
        slot = doc.resolve(slot_path)
        target = line_idx - 1 if direction == "up" else line_idx + 1
        if not 0 <= target < len(slot.children):
            return doc.caret
        ordinal = min(idx, len(slot.children[target].children))
        return canonical_boundary(doc, slot_path + (target,), ordinal)
    raise ValueError(f"unknown direction {direction!r}")


def canonicalize_caret(doc, caret):
    """Snap a (possibly non-canonical) caret to its canonical form."""
    node = doc.resolve(caret.path)
    if node.kind is NodeKind.LINE:
        return canonical_boundary(doc, caret.path, caret.offset)
    if node.is_enterable_text():
        if caret.offset == 0:
            return canonical_boundary(doc, caret.path[:-1], caret.path[-1])
        if caret.offset >= len(node.text):
            return canonical_boundary(doc, caret.path[:-1],
                                      caret.path[-1] + 1)
        return caret
    raise PathInvalid(f"caret may not address a {node.kind.value} node")


# -- well-formedness ------------------------------------------------------


def validate_document(doc, check_caret=True):
    """Raise AssertionError on any structural invariant violation."""
    root = doc.root
    assert root.kind is NodeKind.SLOT, "root must be a Slot"

    def check(node):
        if node.kind is NodeKind.SLOT:
            for c in node.children:
                assert c.kind is NodeKind.LINE, "Slot children must be Lines"
                check(c)
        elif node.kind is NodeKind.LINE:
            for c in node.children:
                assert c.kind in (NodeKind.FORMULA, NodeKind.TEXT), \
                    "Line children must be Formula or Text"
                assert c.role is not Role.NOOP, \
                    "NoOp only appears on operator-position leaves"
                check(c)
        elif node.kind is NodeKind.FORMULA:
            assert node.role in (Role.APPLY, Role.BRACKET_PAIR), \
                "Formula role must be Apply or BracketPair"
            for c in node.children:
                assert c.kind in (NodeKind.SLOT, NodeKind.TEXT), \
                    "Formula children must be Slots or leaves"
                check(c)
            if node.role is Role.APPLY:
                assert node.head_glyph() is not None, "apply needs a head"
                assert node.slots(), "apply needs at least one operand slot"
            else:
                kinds = [c.kind for c in node.children]
                assert kinds == [NodeKind.TEXT, NodeKind.SLOT, NodeKind.TEXT], \
                    "bracket pair must be glyph/slot/glyph"
                assert all(node.children[i].read_only for i in (0, 2)), \
                    "bracket glyphs must be read-only"
        else:
            assert not node.children, "Text nodes have no children"
            if node.role is Role.NOOP:
                assert node.no_move, "NoOp leaves are never caret targets"

    check(root)
    if check_caret:
        node = doc.resolve(doc.caret.path)
        assert node.kind in (NodeKind.LINE, NodeKind.TEXT)
        assert not node.no_move, "caret on a NoMove node"
        limit = len(node.text) if node.kind is NodeKind.TEXT \
            else len(node.children)
        assert 0 <= doc.caret.offset <= limit, "caret offset out of range"
        assert doc.caret == canonicalize_caret(doc, doc.caret), \
            f"caret {doc.caret} is not canonical"
    return True
