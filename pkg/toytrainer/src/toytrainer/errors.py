"""Error hierarchy: everything raised on purpose derives from ToyError."""


class ToyError(Exception):
    """Base class for all trainer errors."""


class ToyDataError(ToyError):
    """Malformed input files or incompatible artifacts."""
