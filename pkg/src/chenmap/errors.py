"""Exception hierarchy.

Engine errors derive from :class:`EngineError`; malformed input derives from
:class:`ConfigurationError`. The CLI maps the two families to distinct exit
codes.
"""


class ChenmapError(Exception):
    """Base class for all errors raised by chenmap."""


class EngineError(ChenmapError):
    pass


class ConfigurationError(ChenmapError):
    pass


class SingularMetric(EngineError):
    pass


class OutOfDomain(EngineError):
    pass


class DegeneratePlane(EngineError):
    pass


class NonOrthonormalFrame(EngineError):
    pass


class RankDeficient(EngineError):
    pass


class IsometryViolation(EngineError):
    """The map is not a Riemannian map at the requested point."""


class StructureViolation(EngineError):
    pass


class XiMixed(EngineError):
    """The Reeb field is neither tangent to the range nor normal to it."""


class XiCaseMismatch(EngineError):
    pass


class DimensionMismatch(EngineError):
    pass


class NotHarmonic(EngineError):
    pass


class UnknownFamily(ConfigurationError):
    pass


class UnknownBuiltin(ConfigurationError):
    pass


class ParseError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SchemaError(ConfigurationError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class IoError(ConfigurationError):
    """A scenario or report path could not be read or written."""
