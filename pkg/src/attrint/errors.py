"""Exception hierarchy shared by every stage.

Anything derived from :class:`AttrIntError` is a data problem (bad file,
inconsistent inputs) and maps to exit code 2 on the command line.
"""


class AttrIntError(Exception):
    pass


class ParseError(AttrIntError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class AlignmentError(AttrIntError):
    pass


class UnknownEntityError(AttrIntError, LookupError):
    pass


class MatrixFormatError(AttrIntError):
    pass


class HeaderError(MatrixFormatError):
    pass


class TruncatedPayloadError(MatrixFormatError):
    pass


class DimensionMismatchError(MatrixFormatError):
    pass


class UnresolvedSurfaceError(MatrixFormatError):
    pass


class ConfigError(AttrIntError):
    pass


class StageError(AttrIntError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
