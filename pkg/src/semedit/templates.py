"""Template dictionary: declarative palette of construct blueprints.

Templates are loaded from line-oriented text (see ``data/builtin_templates.txt``)
so the glyph set and rendering skeletons can be changed without touching
code.  A registry is immutable after load and shared freely.
"""

from __future__ import annotations

import importlib.resources
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .document import DocNode, Role
from .errors import ArityMismatch, DefinitionSyntax, DuplicateId, UnknownTemplate

# Keyboard characters that stand for a canonical operator glyph.
KEY_ALIASES = {"*": "×", "/": "÷"}

IMPLICIT_TIMES = "⁢"  # invisible times, used for juxtaposition

_RECORD = re.compile(
    r'^template\s+(?P<id>\S+)\s+arity=(?P<arity>\d+)\s+role=(?P<role>\S+)'
    r'\s+prec=(?P<prec>-?\d+)\s+glyphs="(?P<glyphs>[^"]*)"'
    r'\s+skeleton="(?P<skeleton>[^"]*)"\s*$')


@dataclass(frozen=True)
class Template:
    id: str
    arity: int
    role_kind: str            # "op" | "fn" | "bracket"
    role_value: str           # operator char or function name ("" for bracket)
    precedence: int
    glyphs: tuple
    skeleton: str

    def definition_line(self):
        if self.role_kind == "bracket":
            role = "bracket"
        else:
            role = f"{self.role_kind}:{self.role_value}"
        glyphs = " ".join(self.glyphs)
        return (f'template {self.id} arity={self.arity} role={role} '
                f'prec={self.precedence} glyphs="{glyphs}" '
                f'skeleton="{self.skeleton}"')


@dataclass
class TemplateRegistry:
    templates: dict = field(default_factory=dict)
    by_operator: dict = field(default_factory=dict)   # char -> template id
    by_function: dict = field(default_factory=dict)   # name -> template id

    def get(self, template_id):
        t = self.templates.get(template_id)
        if t is None:
            raise UnknownTemplate(f"no template {template_id!r}")
        return t

    def operator_template(self, char):
        tid = self.by_operator.get(char)
        return self.templates[tid] if tid else None

    def function_template(self, name):
        tid = self.by_function.get(name)
        return self.templates[tid] if tid else None

    def function_names(self):
        return set(self.by_function)

    def _index(self):
        self.by_operator.clear()
        self.by_function.clear()
        for t in self.templates.values():
            if t.role_kind == "op":
                claimed = self.by_operator.get(t.role_value)
                if claimed and claimed != t.id:
                    raise DuplicateId(
                        f"operator {t.role_value!r} claimed by "
                        f"{claimed!r} and {t.id!r}")
                self.by_operator[t.role_value] = t.id
            elif t.role_kind == "fn":
                claimed = self.by_function.get(t.role_value)
                if claimed and claimed != t.id:
                    raise DuplicateId(
                        f"function {t.role_value!r} claimed by "
                        f"{claimed!r} and {t.id!r}")
                self.by_function[t.role_value] = t.id


def _parse_record(line, lineno):
    m = _RECORD.match(line)
    if m is None:
        raise DefinitionSyntax("unrecognized template record", lineno)
    role = m.group("role")
    if role == "bracket":
        role_kind, role_value = "bracket", ""
    elif role.startswith("op:") and len(role) > 3:
        role_kind, role_value = "op", role[3:]
    elif role.startswith("fn:") and len(role) > 3:
        role_kind, role_value = "fn", role[3:]
    else:
        raise DefinitionSyntax(f"bad role {role!r}", lineno,
                               m.start("role") + 1)
    arity = int(m.group("arity"))
    skeleton = m.group("skeleton")
    try:
        ET.fromstring(skeleton)
    except ET.ParseError as exc:
        raise DefinitionSyntax(f"skeleton is not well-formed: {exc}",
                               lineno, m.start("skeleton") + 1)
    for n in range(1, arity + 1):
        if f"%{n}" not in skeleton:
            raise ArityMismatch(
                f"template {m.group('id')!r}: arity {arity} but no "
                f"%{n} marker in skeleton")
    if re.search(r"%(\d+)", skeleton) and \
       max(int(x) for x in re.findall(r"%(\d+)", skeleton)) > arity:
        raise ArityMismatch(
            f"template {m.group('id')!r}: skeleton references a slot "
            f"beyond arity {arity}")
    glyphs = tuple(m.group("glyphs").split()) if m.group("glyphs") else ()
    return Template(m.group("id"), arity, role_kind, role_value,
                    int(m.group("prec")), glyphs, skeleton)


def _parse_definitions(text, source="<definitions>"):
    seen = set()
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        t = _parse_record(line, lineno)
        if t.id in seen:
            raise DuplicateId(f"duplicate template id {t.id!r} in {source}")
        seen.add(t.id)
        out.append(t)
    return out


def builtin_definitions():
    return importlib.resources.files("semedit.data") \
        .joinpath("builtin_templates.txt").read_text(encoding="utf-8")


def load_registry(definitions=None):
    """Built-in templates plus (optional) user overrides, keyed by id."""
    reg = TemplateRegistry()
    for t in _parse_definitions(builtin_definitions(), "builtins"):
        reg.templates[t.id] = t
    if definitions:
        for t in _parse_definitions(definitions, "user definitions"):
            reg.templates[t.id] = t
    reg._index()
    return reg


def dump_registry(reg):
    return "\n".join(t.definition_line() for t in reg.templates.values()) + "\n"


def instantiate(reg, template_id):
    """Fresh Formula subtree for a template: empty slots, read-only glyphs."""
    t = reg.get(template_id)
    skeleton_tag = ET.fromstring(t.skeleton).tag

    def empty_slot():
        return DocNode.slot([DocNode.line()])

    if t.role_kind == "bracket":
        if len(t.glyphs) != 2 or t.arity != 1:
            raise ArityMismatch(f"bracket template {t.id!r} must have "
                                f"two glyphs and one slot")
        children = [DocNode.glyph(t.glyphs[0]), empty_slot(),
                    DocNode.glyph(t.glyphs[1])]
        return DocNode.formula(children, Role.BRACKET_PAIR, skeleton_tag)

    if t.role_kind == "op":
        if len(t.glyphs) == t.arity - 1:          # infix
            children = [empty_slot()]
            for g in t.glyphs:
                children.append(DocNode.glyph(g, Role.OPERATOR, t.role_value))
                children.append(empty_slot())
        elif len(t.glyphs) == 1:                  # prefix
            children = [DocNode.glyph(t.glyphs[0], Role.OPERATOR,
                                      t.role_value)]
            children += [empty_slot() for _ in range(t.arity)]
        else:
            raise ArityMismatch(f"template {t.id!r}: cannot lay out "
                                f"{len(t.glyphs)} glyphs around {t.arity} slots")
        return DocNode.formula(children, Role.APPLY, skeleton_tag)

    # function templates: name glyph(s) plus operand slots; two glyphs
    # form a fence (abs bars).
    if len(t.glyphs) == 2 and t.arity == 1:
        children = [DocNode.glyph(t.glyphs[0], Role.FUNCTION, t.role_value),
                    empty_slot(),
                    DocNode.glyph(t.glyphs[1], Role.FUNCTION, t.role_value)]
    else:
        children = [DocNode.glyph(t.glyphs[0], Role.FUNCTION, t.role_value)]
        children += [empty_slot() for _ in range(t.arity)]
    return DocNode.formula(children, Role.APPLY, skeleton_tag)


def make_binary_apply(reg, symbol, left_items, right_items):
    """Infix apply for ``symbol`` with slots filled from item lists."""
    t = reg.operator_template(symbol)
    node = instantiate(reg, t.id if t else "plus")
    if t is None:
        # unknown operator symbol: reuse the plus layout with a fresh glyph
        node.children[1] = DocNode.glyph(symbol, Role.OPERATOR, symbol)
    node.children[0].children[0].children = list(left_items)
    node.children[2].children[0].children = list(right_items)
    return node


def make_unary_minus(reg, items):
    glyph = DocNode.glyph("-", Role.OPERATOR, "-")
    slot = DocNode.slot([DocNode.line(list(items))])
    return DocNode.formula([glyph, slot], Role.APPLY, "mrow")


def make_function_apply(reg, name, arg_items):
    t = reg.function_template(name)
    if t is None:
        raise UnknownTemplate(f"no function template {name!r}")
    node = instantiate(reg, t.id)
    node.slots()[0].children[0].children = list(arg_items)
    return node
