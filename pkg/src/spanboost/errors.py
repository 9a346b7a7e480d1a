"""Exception hierarchy shared by all modules."""


class SpanBoostError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(SpanBoostError, ValueError):
    """Invalid parameter or configuration value."""


class ParseError(SpanBoostError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(SpanBoostError, ValueError):
    """Annotation surface text disagrees with the document text."""


class RangeError(SpanBoostError, ValueError):
    """Annotation offsets fall outside the document."""


class OverlapError(SpanBoostError, ValueError):
    """Annotations overlap in a way the data model forbids."""


class EncodingError(SpanBoostError, ValueError):
    """Spans cannot be encoded as a flat tag sequence."""


class DecodeError(SpanBoostError, ValueError):
    def __init__(self, message, index):
        self.index = index
        super().__init__(f"index {index}: {message}")


class FormatError(SpanBoostError, ValueError):
    """Binary or text file does not follow the expected layout."""


class VersionError(FormatError):
    """File was written by a newer, unsupported format version."""


class ZeroVarianceError(SpanBoostError, ValueError):
    pass


class TrainingError(SpanBoostError, RuntimeError):
    pass
