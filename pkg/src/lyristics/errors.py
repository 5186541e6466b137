"""Exception taxonomy shared across the toolkit.

Errors fall into two families: DataError for anything wrong with inputs
(files, corpora, configs, degenerate numerics) and PluginError for failures
of an external classifier process. The CLI maps these to exit codes 2 and 3;
anything else that escapes is a bug.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PLUGIN = 3


class LyristicsError(Exception):
    """Base class for all toolkit errors."""

    exit_code = EXIT_DATA
    kind = "data"


class DataError(LyristicsError):
    """Invalid or inconsistent input data."""


class CorpusFormatError(DataError):
    """A corpus file failed to parse; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateSongIdError(DataError):
    pass


class EmptyLyricsError(DataError):
    pass


class UnknownLyricistError(DataError):
    pass


class EmptyDistributionError(DataError):
    pass


class TooFewLyricistsError(DataError):
    pass


class GroupTooSmallError(DataError):
    pass


class NonConvergenceError(DataError):
    """Iterative fit ran out of iterations; carries the last assignment."""

    def __init__(self, message, assignment=None):
        self.assignment = assignment
        super().__init__(message)


class DegenerateFeaturesError(DataError):
    pass


class MissingGroupError(DataError):
    pass


class ConstantVectorError(DataError):
    pass


class InvalidParamsError(DataError):
    pass


class ConfigError(DataError):
    pass


class PluginError(LyristicsError):
    """External classifier process failed."""

    exit_code = EXIT_PLUGIN
    kind = "plugin"


class HandshakeError(PluginError):
    pass


class ProtocolViolationError(PluginError):
    pass


class PluginExitError(PluginError):
    pass


class PluginTimeoutError(PluginError):
    pass
