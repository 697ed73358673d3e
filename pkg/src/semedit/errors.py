"""Exception types shared across the engine."""


class SemEditError(Exception):
    """Base class for all engine errors."""


class PathInvalid(SemEditError):
    """A node path does not address an existing node."""


class NoHistory(SemEditError):
    """Undo or redo was requested with an empty history."""


class SnapshotForeign(SemEditError):
    """A snapshot was restored into a document of a different lineage."""


class DefinitionSyntax(SemEditError):
    """Template definition text failed to parse."""

    def __init__(self, message, line, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DuplicateId(SemEditError):
    """Two templates in one definition source share an id."""


class ArityMismatch(SemEditError):
    """Template arity disagrees with its presentation skeleton slots."""


class UnknownTemplate(SemEditError):
    """A template id is not present in the registry."""


class XmlSyntax(SemEditError):
    """Input text is not well-formed XML."""

    def __init__(self, message, position):
        super().__init__(f"{message} at {position[0]}:{position[1]}")
        self.position = position


class UnsupportedElement(SemEditError):
    """A MathML element falls outside the supported content subset."""

    def __init__(self, tag):
        super().__init__(f"unsupported element <{tag}>")
        self.tag = tag


class ShapeError(SemEditError):
    """Content MathML input violates the apply/token shape rules."""


class ScriptSyntax(SemEditError):
    """An edit script line failed to parse."""

    def __init__(self, message, line):
        super().__init__(f"{message} (line {line})")
        self.line = line
