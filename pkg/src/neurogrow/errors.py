"""Typed errors raised across the pipeline.

Degenerate inputs surface as one of these exceptions rather than NaN or
silent defaults, so batch drivers can decide per-case what to skip.
"""


class NeurogrowError(Exception):
    """Base class for every error this package raises deliberately."""


# --- file I/O -------------------------------------------------------------

class MissingFile(NeurogrowError):
    pass


class UnsupportedFormat(NeurogrowError):
    pass


class CorruptData(NeurogrowError):
    pass


class IoFailure(NeurogrowError):
    pass


# --- rasters and geometry -------------------------------------------------

class DimensionMismatch(NeurogrowError):
    pass


class ClassMismatch(NeurogrowError):
    """Operation applied to a mask with the wrong positive class."""


class OutOfBounds(NeurogrowError):
    """A pixel coordinate (typically a seed) falls outside the raster."""


class DegenerateHistogram(NeurogrowError):
    """Automatic thresholding needs at least two distinct intensities."""


# --- click-point files ----------------------------------------------------

class SchemaViolation(NeurogrowError):
    pass


class DuplicateId(SchemaViolation):
    pass


class DuplicateCoordinate(SchemaViolation):
    pass


class MismatchedPointFile(NeurogrowError):
    pass


# --- metrics --------------------------------------------------------------

class EmptyUnion(NeurogrowError):
    """No positive pixel in either mask: Jaccard/Dice undefined."""


class DegenerateAgreement(NeurogrowError):
    """All probability mass in one confusion cell: kappa undefined."""


class NoNegatives(NeurogrowError):
    """fp + tn = 0: false-positive rate undefined."""


class NoPositives(NeurogrowError):
    """fn + tp = 0: false-negative rate undefined."""


# --- batch evaluation -----------------------------------------------------

class UnmatchedFiles(NeurogrowError):
    pass


class MalformedRunFile(NeurogrowError):
    pass
