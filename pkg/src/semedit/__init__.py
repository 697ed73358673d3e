"""semedit: headless structure-editing engine for Content MathML."""

from .document import (CaretPosition, DocNode, Document, NodeKind, Role,
                       Selection, caret_move, new_document, node_at,
                       validate_document)
from .engine import (BracketCmd, Copy, Cut, EditResult, InsertTemplate, Key,
                     Paste, Press, Redo, Session, SetMode, SetSelection,
                     Undo)
from .evaluator import EvalOutcome, evaluate, evaluate_chain
from .mathml import (export_presentation, parse_content,
                     resolve_auto_detect, serialize_content)
from .templates import (Template, TemplateRegistry, dump_registry,
                        instantiate, load_registry)

__all__ = [
    "BracketCmd", "CaretPosition", "Copy", "Cut", "DocNode", "Document",
    "EditResult", "EvalOutcome", "InsertTemplate", "Key", "NodeKind",
    "Paste", "Press", "Redo", "Role", "Selection", "Session", "SetMode",
    "SetSelection", "Template", "TemplateRegistry", "Undo", "caret_move",
    "dump_registry", "evaluate", "evaluate_chain", "export_presentation",
    "instantiate", "load_registry", "new_document", "node_at",
    "parse_content", "resolve_auto_detect", "serialize_content",
    "validate_document",
]
