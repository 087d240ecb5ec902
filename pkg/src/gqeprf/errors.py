"""Exception types shared across the engine."""


class GqeprfError(Exception):
    """Base class for all engine errors."""


class ParseError(GqeprfError):
    """A data file could not be parsed. Carries path and 1-based line number."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f" in {path}"
        if line_no is not None:
            where += f" at line {line_no}"
        super().__init__(f"{message}{where}")


class DuplicateKeyError(GqeprfError):
    """An identifier that must be unique appeared more than once."""


class ContractError(GqeprfError):
    """A documented precondition was violated by the caller."""


class IndexFormatError(GqeprfError):
    """Base class for index file problems."""


class UnsupportedVersionError(IndexFormatError):
    """Index file has an unknown magic string or format version."""


class CorruptIndexError(IndexFormatError):
    """Index file ended early or contains inconsistent data."""


class TransportError(GqeprfError):
    """The connection to an external generator/scorer failed.

    ``payload`` holds whatever raw bytes/text were received, for diagnostics.
    """

    def __init__(self, message, payload=None):
        self.payload = payload
        super().__init__(message)


class ProtocolError(GqeprfError):
    """The external service answered, but not with a valid protocol message."""

    def __init__(self, message, payload=None):
        self.payload = payload
        super().__init__(message)
