"""Exception hierarchy.

Everything raised on purpose derives from :class:`SubspaceLabError`, so the CLI
can map failures onto exit codes without catching unrelated bugs.
"""


class SubspaceLabError(Exception):
    pass


class DataFormatError(SubspaceLabError, ValueError):
    """Malformed input file (ragged CSV rows, bad headers)."""


class ParseError(DataFormatError):
    pass


class EmptyInputError(DataFormatError):
    pass


class DecodeError(DataFormatError):
    pass


class ShapeError(SubspaceLabError, ValueError):
    pass


class DomainError(SubspaceLabError, ValueError):
    pass


class ProtocolError(SubspaceLabError):
    """The requested experiment cannot be run on this data."""


class DegenerateDataError(SubspaceLabError):
    pass


class DegenerateConstraintError(SubspaceLabError):
    pass


class InsufficientRankError(SubspaceLabError):
    def __init__(self, message, available=None):
        super().__init__(message)
        self.available = available


class ConfigError(SubspaceLabError):
    pass
