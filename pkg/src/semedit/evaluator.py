"""Numeric evaluation of resolved documents and formula chains.

Arithmetic is binary64; relations yield booleans; every failure mode maps
to a total Undefined outcome rather than an exception.  In a chain, a
statement of shape ``identifier = expression`` binds the identifier for
the statements after it (later bindings shadow earlier ones).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mathml import content_tree
from .templates import load_registry

VALUE = "value"
BOOLEAN = "boolean"
UNDEFINED = "undefined"

DEFAULT_EQ_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EvalOutcome:
    kind: str
    value: float | bool | None = None
    reason: str | None = None
    detail: str | None = None

    @staticmethod
    def of(value):
        return EvalOutcome(VALUE, value)

    @staticmethod
    def truth(flag):
        return EvalOutcome(BOOLEAN, flag)

    @staticmethod
    def undefined(reason, detail=None):
        return EvalOutcome(UNDEFINED, None, reason, detail)

    def as_dict(self):
        if self.kind == UNDEFINED:
            d = {"kind": self.kind, "reason": self.reason}
            if self.detail:
                d["detail"] = self.detail
            return d
        return {"kind": self.kind, "value": self.value}


class _Undefined(Exception):
    def __init__(self, reason, detail=None):
        self.outcome = EvalOutcome.undefined(reason, detail)


_UNARY_FNS = {"sin": math.sin, "cos": math.cos, "tan": math.tan,
              "exp": math.exp, "abs": abs}


def _num(elem, env):
    e = _eval(elem, env)
    if e.kind == BOOLEAN:
        raise _Undefined("DomainError", "boolean operand")
    if e.kind == UNDEFINED:
        raise _Undefined(e.reason, e.detail)
    return e.value


def _eval(elem, env):
    tag = elem.tag
    if tag == "cn":
        return EvalOutcome.of(float(elem.text))
    if tag == "ci":
        name = elem.text
        if name == "□":
            return EvalOutcome.undefined("UnresolvedNode", "empty slot")
        if name not in env:
            return EvalOutcome.undefined("UnboundVariable", name)
        return EvalOutcome.of(env[name])
    if tag != "apply" or not elem.children:
        return EvalOutcome.undefined("UnresolvedNode", tag)
    head = elem.children[0]
    args = elem.children[1:]
    try:
        return _apply(head, args, env)
    except _Undefined as u:
        return u.outcome
    except ZeroDivisionError:
        return EvalOutcome.undefined("DivisionByZero")
    except (ValueError, OverflowError):
        return EvalOutcome.undefined("DomainError", head.tag)


def _apply(head, args, env):
    tag = head.tag
    if tag == "csymbol":
        return EvalOutcome.undefined("UnresolvedNode", head.text)
    values = lambda: [_num(a, env) for a in args]  # noqa: E731
    if tag == "plus":
        return EvalOutcome.of(math.fsum(values()))
    if tag == "minus":
        v = values()
        return EvalOutcome.of(-v[0] if len(v) == 1 else v[0] - v[1])
    if tag == "times":
        out = 1.0
        for v in values():
            out *= v
        return EvalOutcome.of(out)
    if tag == "divide":
        a, b = values()
        return EvalOutcome.of(a / b)
    if tag == "power":
        a, b = values()
        r = a ** b
        if isinstance(r, complex):
            raise _Undefined("DomainError", "power")
        return EvalOutcome.of(r)
    if tag == "eq":
        a, b = values()
        tol = max(1.0, abs(a), abs(b)) * DEFAULT_EQ_TOLERANCE
        return EvalOutcome.truth(abs(a - b) <= tol)
    if tag in ("lt", "gt", "leq", "geq"):
        a, b = values()
        op = {"lt": a < b, "gt": a > b, "leq": a <= b, "geq": a >= b}
        return EvalOutcome.truth(op[tag])
    if tag in _UNARY_FNS:
        return EvalOutcome.of(_UNARY_FNS[tag](values()[0]))
    if tag == "ln":
        return EvalOutcome.of(math.log(values()[0]))
    if tag == "log":
        return EvalOutcome.of(math.log10(values()[0]))
    if tag == "root":
        v = values()[0]
        return EvalOutcome.of(math.sqrt(v))
    return EvalOutcome.undefined("UnresolvedNode", tag)


def _statements(doc, reg):
    tree = content_tree(doc, reg)
    return tree.children


def evaluate(doc, env=None, reg=None):
    """Evaluate a single-statement document against variable bindings."""
    reg = reg if reg is not None else load_registry()
    env = dict(env or {})
    stmts = _statements(doc, reg)
    if len(stmts) != 1:
        return EvalOutcome.undefined("UnresolvedNode",
                                     "expected exactly one statement")
    return _eval(stmts[0], env)


def evaluate_chain(doc, reg=None):
    """Evaluate statements in order; `x = expr` binds x for later ones.

    Returns a list of (index, EvalOutcome, env-after) tuples.
    """
    reg = reg if reg is not None else load_registry()
    env = {}
    out = []
    for i, stmt in enumerate(_statements(doc, reg)):
        if (stmt.tag == "apply" and len(stmt.children) == 3
                and stmt.children[0].tag == "eq"
                and stmt.children[1].tag == "ci"
                and stmt.children[1].text != "□"):
            name = stmt.children[1].text
            rhs = _eval(stmt.children[2], env)
            if rhs.kind == VALUE:
                env[name] = rhs.value
            out.append((i, rhs, dict(env)))
            continue
        out.append((i, _eval(stmt, env), dict(env)))
    return out
