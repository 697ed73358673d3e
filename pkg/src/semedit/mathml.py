"""Content MathML input/output and Presentation MathML export.

Serialization is total: every reachable editing state produces well-formed
Content MathML.  Deleted operators export as ``<csymbol cd="semedit">noop
</csymbol>`` heads, empty slots as ``<ci>□</ci>``, unbalanced brackets
as if closed at the slot edge with a ``semedit:unbalanced`` attribute, and
explicit (balanced) bracket pairs carry ``semedit:bracket="round"`` so that
reload restores the editing state.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from .document import (CaretPosition, DocNode, Document, NodeKind,
                       PLACEHOLDER, Role)
from .errors import ShapeError, UnsupportedElement, XmlSyntax
from .grouping import group_items, is_loose_operator
from .templates import IMPLICIT_TIMES, instantiate

MATHML_NS = "http://www.w3.org/1998/Math/MathML"
SEMEDIT_NS = "urn:x-semedit"

OP_ELEMENTS = {"+": "plus", "-": "minus", "×": "times",
               IMPLICIT_TIMES: "times", "÷": "divide", "^": "power",
               "=": "eq", "<": "lt", ">": "gt", "≤": "leq",
               "≥": "geq"}
OP_CSYMBOLS = {"±": "pm", "≠": "neq"}
FN_ELEMENTS = {"sin": "sin", "cos": "cos", "tan": "tan", "ln": "ln",
               "log": "log", "exp": "exp", "abs": "abs", "sqrt": "root"}

_ELEMENT_OPS = {v: k for k, v in OP_ELEMENTS.items() if k != IMPLICIT_TIMES}
_CSYMBOL_OPS = {v: k for k, v in OP_CSYMBOLS.items()}
_ELEMENT_FNS = {v: k for k, v in FN_ELEMENTS.items()}

_NUMERAL = re.compile(r"^(\d+(\.\d+)?|\.\d+)$")

PRESENTATION_TAGS = {"mrow", "mi", "mn", "mo", "mfrac", "msup", "msub",
                     "msqrt", "mroot", "mtext", "mspace", "mstyle",
                     "mfenced", "msubsup", "munder", "mover", "mtable",
                     "mtr", "mtd"}


def resolve_auto_detect(raw, reg):
    """Classify deferred token text: (Role, resolved_value)."""
    if _NUMERAL.match(raw):
        return Role.NUMBER, raw
    if len(raw) == 1 and raw.isalpha():
        return Role.IDENTIFIER, raw
    if raw in reg.function_names():
        return Role.FUNCTION, raw
    if len(raw) == 1 and reg.operator_template(raw) is not None:
        return Role.OPERATOR, raw
    return Role.IDENTIFIER, raw


# -- content element tree -------------------------------------------------


@dataclass
class CElem:
    tag: str
    text: str = ""
    children: list = field(default_factory=list)
    attrs: dict = field(default_factory=dict)

    def prepend_marker(self, key, value):
        existing = self.attrs.get(key)
        self.attrs[key] = f"{value} {existing}" if existing else value


def _placeholder():
    return CElem("ci", PLACEHOLDER)


def _uses_semedit_attrs(elem):
    if any(k.startswith("semedit:") for k in elem.attrs):
        return True
    return any(_uses_semedit_attrs(c) for c in elem.children)


def render_content(elem):
    out = []

    def emit(e):
        attrs = "".join(f" {k}={quoteattr(v)}" for k, v in e.attrs.items())
        if not e.children and not e.text:
            out.append(f"<{e.tag}{attrs}/>")
            return
        out.append(f"<{e.tag}{attrs}>")
        if e.text:
            out.append(escape(e.text))
        for c in e.children:
            emit(c)
        out.append(f"</{e.tag}>")

    emit(elem)
    return "".join(out)


class _ContentBuilder:
    """Turns document nodes into content elements; total on every state.

    Pending bracket leaves are wrapped into transient marker groups first
    (closes as if opened at the slot start, opens as if closed at the slot
    end, innermost scopes bounded by enclosing groups), then precedence
    grouping folds each line to a single expression.
    """

    def __init__(self, reg):
        self.reg = reg
        self._groups = {}  # marker token (identity) -> (items, "open"/"close")

    def _group_marker(self, inner_items, kind):
        marker = DocNode.token("\0group", Role.IDENTIFIER)
        self._groups[marker] = (inner_items, kind)
        return marker

    def _resolve_pendings(self, items):
        items = list(items)
        for i, item in enumerate(items):
            if item.is_pending_bracket() and item.symbol == ")":
                inner = self._resolve_pendings(items[:i])
                marker = self._group_marker(inner, "close")
                return self._resolve_pendings([marker] + items[i + 1:])
        for i in range(len(items) - 1, -1, -1):
            if items[i].is_pending_bracket() and items[i].symbol == "(":
                inner = self._resolve_pendings(items[i + 1:])
                return self._resolve_pendings(
                    items[:i] + [self._group_marker(inner, "open")])
        return items

    def line_elem(self, items):
        if len(items) == 1 and not items[0].is_pending_bracket() \
                and not is_loose_operator(items[0]):
            return self.node_elem(items[0])
        if not items:
            return _placeholder()
        resolved = self._resolve_pendings(items)
        grouped = group_items(resolved, self.reg)
        if not grouped:
            return _placeholder()
        return self.node_elem(grouped[0])

    def node_elem(self, node):
        group = self._groups.get(node)
        if group is not None:
            inner_items, kind = group
            elem = self.line_elem(inner_items)
            elem.prepend_marker("semedit:unbalanced", kind)
            return elem
        if node.kind is NodeKind.TEXT:
            return _token_elem(node, self.reg)
        if node.role is Role.BRACKET_PAIR:
            slot = node.slots()[0]
            items = slot.children[0].children if slot.children else []
            elem = self.line_elem(items)
            elem.prepend_marker("semedit:bracket", "round")
            return elem
        head = node.head_glyph()
        operands = [self.slot_elem(s) for s in node.slots()]
        if head is None or not operands:
            return _placeholder()
        return CElem("apply", children=[_head_elem(head, self.reg)] + operands)

    def slot_elem(self, slot):
        if not slot.children:
            return _placeholder()
        return self.line_elem(slot.children[0].children)


def _head_elem(head, reg):
    if head.role is Role.NOOP:
        return CElem("csymbol", "noop", attrs={"cd": "semedit"})
    if head.role is Role.FUNCTION:
        name = head.symbol
        if name in FN_ELEMENTS:
            return CElem(FN_ELEMENTS[name])
        return CElem("csymbol", f"fn-{name}", attrs={"cd": "semedit"})
    sym = head.symbol
    if sym in OP_ELEMENTS:
        return CElem(OP_ELEMENTS[sym])
    if sym in OP_CSYMBOLS:
        return CElem("csymbol", OP_CSYMBOLS[sym], attrs={"cd": "semedit"})
    return CElem("csymbol", f"op-{sym}", attrs={"cd": "semedit"})


def _token_elem(node, reg):
    role, value = node.role, node.text
    if role is Role.AUTO_DETECT:
        role, value = resolve_auto_detect(node.text, reg)
    if role is Role.NUMBER:
        return CElem("cn", node.text)
    if role is Role.FUNCTION:
        # a bare function token is an application still awaiting its
        # argument: export with a placeholder operand
        head = (CElem(FN_ELEMENTS[value]) if value in FN_ELEMENTS
                else CElem("csymbol", f"fn-{value}", attrs={"cd": "semedit"}))
        return CElem("apply", children=[head, _placeholder()])
    if role is Role.OPERATOR:
        return CElem("csymbol", f"op-{value}", attrs={"cd": "semedit"})
    return CElem("ci", node.text)


def content_tree(doc, reg):
    lines = doc.root.children
    if len(lines) == 1 and not lines[0].children:
        return CElem("math")
    builder = _ContentBuilder(reg)
    children = [builder.line_elem(line.children) for line in lines]
    return CElem("math", children=children)


def serialize_content(doc, reg):
    tree = content_tree(doc, reg)
    if _uses_semedit_attrs(tree):
        tree.attrs = {"xmlns:semedit": SEMEDIT_NS, **tree.attrs}
    return render_content(tree)


# -- parsing --------------------------------------------------------------


def _local(tag):
    return tag.rsplit("}", 1)[-1] if tag.startswith("{") else tag


def _attr_map(elem):
    out = {}
    for k, v in elem.attrib.items():
        if k.startswith("{" + SEMEDIT_NS + "}"):
            out["semedit:" + k.rsplit("}", 1)[-1]] = v
        else:
            out[_local(k)] = v
    return out


def _is_head_elem(elem):
    tag = _local(elem.tag)
    return (tag in _ELEMENT_OPS or tag in _ELEMENT_FNS
            or tag == "csymbol")


def parse_content(text, reg, diagnostics=None):
    """Parse a Content MathML document (supported subset) to a Document."""
    diagnostics = diagnostics if diagnostics is not None else []
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlSyntax(str(exc), exc.position)
    if _local(root.tag) != "math":
        raise ShapeError(f"root element is <{_local(root.tag)}>, not <math>")

    def parse_items(elem):
        """Item list for one expression element."""
        tag = _local(elem.tag)
        attrs = _attr_map(elem)
        if tag in PRESENTATION_TAGS:
            diagnostics.append(
                f"dropped presentation fragment <{tag}> (out of scope)")
            return []
        items = _parse_core(elem, tag)
        # innermost unbalanced markers first, then bracket wrapping
        for token in reversed(attrs.get("semedit:unbalanced", "").split()):
            if token == "open":
                items = [DocNode.pending_bracket("(")] + items
            elif token == "close":
                items = items + [DocNode.pending_bracket(")")]
        for _ in attrs.get("semedit:bracket", "").split():
            pair = instantiate(reg, "bracket-round")
            pair.slots()[0].children[0].children = items
            items = [pair]
        return items

    def _parse_core(elem, tag):
        text_ = (elem.text or "").strip()
        if tag == "cn":
            if not _NUMERAL.match(text_):
                raise ShapeError(f"cn text {text_!r} is not a decimal numeral")
            return [DocNode.token(text_, Role.AUTO_DETECT)]
        if tag == "ci":
            if not text_:
                raise ShapeError("ci must have nonempty text")
            if text_ == PLACEHOLDER:
                return []
            # keep the deferred role when re-resolution reproduces it, so
            # parsed documents are structurally identical to typed ones;
            # pin it otherwise (<ci>sin</ci> must stay an identifier)
            role, _v = resolve_auto_detect(text_, reg)
            return [DocNode.token(text_, Role.AUTO_DETECT
                                  if role is Role.IDENTIFIER
                                  else Role.IDENTIFIER)]
        if tag == "apply":
            return [_parse_apply(elem)]
        if tag == "csymbol":
            raise ShapeError("csymbol is only valid as an apply head")
        if tag in _ELEMENT_OPS or tag in _ELEMENT_FNS:
            raise ShapeError(f"<{tag}> is only valid as an apply head")
        raise UnsupportedElement(tag)

    def _parse_apply(elem):
        children = list(elem)
        if not children or not _is_head_elem(children[0]):
            raise ShapeError("apply requires an operator/function head")
        head, operands = children[0], children[1:]
        if not operands:
            raise ShapeError("apply requires at least one operand")
        head_tag = _local(head.tag)
        slot_items = [parse_items(op) for op in operands]

        def slots():
            return [DocNode.slot([DocNode.line(items)])
                    for items in slot_items]

        if head_tag == "csymbol":
            name = (head.text or "").strip()
            if _attr_map(head).get("cd") != "semedit":
                raise UnsupportedElement("csymbol")
            if name == "noop":
                return _infix(None, slots())
            if name in _CSYMBOL_OPS:
                sym = _CSYMBOL_OPS[name]
            elif name.startswith("op-"):
                sym = name[3:]
            elif name.startswith("fn-"):
                return _fn_apply(name[3:], slots())
            else:
                raise ShapeError(f"unknown semedit csymbol {name!r}")
            _require(len(operands) == 2, f"csymbol {name} expects 2 operands")
            return _infix(sym, slots())
        if head_tag in _ELEMENT_FNS:
            name = _ELEMENT_FNS[head_tag]
            t = reg.function_template(name)
            _require(t is not None and len(operands) == t.arity,
                     f"<{head_tag}> expects a registered arity match")
            return _fn_apply(name, slots())
        sym = _ELEMENT_OPS[head_tag]
        if head_tag in ("plus", "times"):
            _require(len(operands) >= 2, f"<{head_tag}> expects >= 2 operands")
        elif head_tag == "minus":
            _require(len(operands) in (1, 2), "<minus> expects 1 or 2 operands")
            if len(operands) == 1:
                glyph = DocNode.glyph("-", Role.OPERATOR, "-")
                return DocNode.formula([glyph] + slots(), Role.APPLY, "mrow")
        else:
            _require(len(operands) == 2, f"<{head_tag}> expects 2 operands")
        if head_tag == "times" and len(operands) > 2:
            # flat n-ary times round-trips as the invisible-times apply the
            # editor builds for juxtaposition
            sym = IMPLICIT_TIMES
        return _infix(sym, slots())

    def _fn_apply(name, slot_nodes):
        t = reg.function_template(name)
        if t is not None and len(t.glyphs) == 2:
            glyph_l = DocNode.glyph(t.glyphs[0], Role.FUNCTION, name)
            glyph_r = DocNode.glyph(t.glyphs[1], Role.FUNCTION, name)
            return DocNode.formula([glyph_l] + slot_nodes + [glyph_r],
                                   Role.APPLY, "mrow")
        glyph_text = t.glyphs[0] if t is not None and t.glyphs else name
        glyph = DocNode.glyph(glyph_text, Role.FUNCTION, name)
        return DocNode.formula([glyph] + slot_nodes, Role.APPLY, "mrow")

    def _infix(sym, slot_nodes):
        def glyph():
            if sym is None:
                return DocNode.glyph("■", Role.NOOP, None)
            return DocNode.glyph(sym, Role.OPERATOR, sym)

        if len(slot_nodes) == 1:
            return DocNode.formula([glyph(), slot_nodes[0]],
                                   Role.APPLY, "mrow")
        children = [slot_nodes[0]]
        for s in slot_nodes[1:]:
            children.append(glyph())
            children.append(s)
        return DocNode.formula(children, Role.APPLY, "mrow")

    def _require(cond, message):
        if not cond:
            raise ShapeError(message)

    lines = []
    for child in root:
        items = parse_items(child)
        lines.append(DocNode.line(items))
    if not lines:
        lines = [DocNode.line()]
    doc = Document(DocNode.slot(lines))
    doc.caret = CaretPosition((0, 0), 0)
    from .document import canonicalize_caret
    doc.caret = canonicalize_caret(doc, doc.caret)
    return doc


# -- presentation export ---------------------------------------------------


_MARKER = re.compile(r"%(\d+)")


def _skeleton_fill(skeleton, operand_elems):
    template = ET.fromstring(skeleton)

    def rebuild(src):
        dst = ET.Element(src.tag, dict(src.attrib))
        _fill_text(dst, src.text, prepend=True)
        for child in src:
            sub = rebuild(child)
            dst.append(sub)
            _fill_text(dst, child.tail, prepend=False)
        return dst

    def _fill_text(dst, text, prepend):
        if not text:
            return
        pos = 0
        for m in _MARKER.finditer(text):
            literal = text[pos:m.start()].strip()
            if literal:
                _append_text(dst, literal)
            dst.append(_copy_elem(operand_elems[int(m.group(1)) - 1]))
            pos = m.end()
        literal = text[pos:].strip()
        if literal:
            _append_text(dst, literal)

    def _append_text(dst, text):
        if len(dst):
            dst[-1].tail = (dst[-1].tail or "") + text
        else:
            dst.text = (dst.text or "") + text

    return rebuild(template)


def _copy_elem(elem):
    new = ET.Element(elem.tag, dict(elem.attrib))
    new.text = elem.text
    new.tail = None
    for c in elem:
        new.append(_copy_elem(c))
    return new


def _mo(char):
    e = ET.Element("mo")
    e.text = char
    return e


def _mi(text):
    e = ET.Element("mi")
    e.text = text
    return e


def _mrow(children):
    row = ET.Element("mrow")
    for c in children:
        row.append(c)
    return row


def presentation_of_node(node, reg):
    if node.kind is NodeKind.TEXT:
        if node.is_pending_bracket():
            return _mo(node.text)
        role, _value = node.role, node.text
        if role is Role.AUTO_DETECT:
            role, _value = resolve_auto_detect(node.text, reg)
        tag = "mn" if role is Role.NUMBER else "mi"
        e = ET.Element(tag)
        e.text = node.text
        return e
    if node.role is Role.BRACKET_PAIR:
        t = reg.get("bracket-round")
        return _skeleton_fill(t.skeleton,
                              [presentation_of_slot(node.slots()[0], reg)])
    head = node.head_glyph()
    operands = [presentation_of_slot(s, reg) for s in node.slots()]
    if head is None:
        return _mrow(operands)
    if head.role is Role.NOOP:
        parts = [operands[0]]
        for op in operands[1:]:
            parts.append(_mo("■"))
            parts.append(op)
        if len(operands) == 1:
            parts = [_mo("■"), operands[0]]
        return _mrow(parts)
    if head.role is Role.FUNCTION:
        t = reg.function_template(head.symbol)
        if t is not None and len(operands) == t.arity:
            return _skeleton_fill(t.skeleton, operands)
        return _mrow([_mi(head.symbol), _mo("⁡")] + operands)
    t = reg.operator_template(head.symbol)
    if len(operands) == 1:
        return _mrow([_mo(head.text), operands[0]])
    if t is not None and t.arity == 2:
        result = _skeleton_fill(t.skeleton, operands[:2])
        for op in operands[2:]:
            result = _skeleton_fill(t.skeleton, [result, op])
        return result
    parts = [operands[0]]
    for op in operands[1:]:
        parts.append(_mo(head.text))
        parts.append(op)
    return _mrow(parts)


def presentation_of_slot(slot, reg):
    items = slot.children[0].children if slot.children else []
    return presentation_of_items(items, reg)


def presentation_of_items(items, reg):
    if not items:
        return _mi(PLACEHOLDER)
    elems = [presentation_of_node(i, reg) for i in items]
    return elems[0] if len(elems) == 1 else _mrow(elems)


def _collapse_mrows(elem):
    for child in list(elem):
        _collapse_mrows(child)
    if elem.tag in ("mrow", "math", "mtd"):
        merged = []
        for child in list(elem):
            if child.tag == "mrow" and not child.attrib and not child.tail:
                merged.extend(list(child))
            else:
                merged.append(child)
        for child in list(elem):
            elem.remove(child)
        for child in merged:
            elem.append(child)
    return elem


def export_presentation(doc, reg):
    math = ET.Element("math", {"xmlns": MATHML_NS})
    lines = doc.root.children
    if len(lines) == 1:
        row = presentation_of_items(lines[0].children, reg)
        if not lines[0].children:
            row = None
        if row is not None:
            if row.tag == "mrow" and not row.attrib:
                for c in list(row):
                    math.append(c)
            else:
                math.append(row)
    else:
        table = ET.SubElement(math, "mtable")
        for line in lines:
            tr = ET.SubElement(table, "mtr")
            td = ET.SubElement(tr, "mtd")
            td.append(presentation_of_items(line.children, reg))
    _collapse_mrows(math)
    return ET.tostring(math, encoding="unicode")
