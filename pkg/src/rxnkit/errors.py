"""Exception hierarchy.

Everything raised on bad *input* derives from :class:`RxnkitError` so the CLI
can map it to a data-error exit code in one place.
"""
from __future__ import annotations


class RxnkitError(Exception):
    """Base class for all errors raised on invalid input."""


class SmilesError(RxnkitError):
    """SMILES cannot be parsed; carries the byte offset of the problem."""

    def __init__(self, message: str, text: str = "", offset: int | None = None):
        self.text = text
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset} in {text!r})"
        super().__init__(message)


class ValenceError(RxnkitError):
    """An atom ends up with an impossible valence or hydrogen count."""


class KekulizeError(RxnkitError):
    """An aromatic system admits no alternating single/double assignment."""


class SmartsError(RxnkitError):
    """SMARTS pattern cannot be parsed or uses an unsupported primitive."""

    def __init__(self, message: str, text: str = "", offset: int | None = None):
        self.text = text
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset} in {text!r})"
        super().__init__(message)


class ReactionError(RxnkitError):
    """Reaction SMARTS is malformed (sides, atom maps, registry ids)."""


class AugmentError(RxnkitError):
    """A template augmentation request cannot be satisfied (bad site,
    incompatible mirror target, degenerate variant)."""


class DataError(RxnkitError):
    """A data file (molecule list, records, vocab, predictions) is invalid."""
