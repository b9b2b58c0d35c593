"""Exception types shared across the toolkit."""


class VersemetryError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(VersemetryError):
    """Fatal problem with corpus files: missing data, malformed annotations,
    inconsistent part ranges."""


class AnalysisError(VersemetryError):
    """An analysis was asked to run on degenerate or insufficient input."""
