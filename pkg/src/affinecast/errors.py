"""Exception types shared across the package."""

from __future__ import annotations


class UnsupportedShapeError(ValueError):
    """An argument has a shape or size the operation cannot handle."""


class NumericalError(RuntimeError):
    """A numerical routine failed or produced an internally inconsistent result."""


class NotAffineError(ValueError):
    """Probed function is not in the requested affine class."""


class ExpressivityError(ValueError):
    """Requested target lies outside the expressible class for the given sizes."""


class EmptyDataError(ValueError):
    """A fit or iteration was requested on an empty dataset."""


class DegenerateDataError(ValueError):
    """Input data is degenerate (zero variance, constant rows, ...)."""


class IngestionError(ValueError):
    """A data file could not be parsed."""
