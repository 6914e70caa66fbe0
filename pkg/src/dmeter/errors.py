"""Exception types shared across dmeter modules.

Argument errors (bad shapes, out-of-range parameters, empty inputs) raise
plain ValueError.  The classes here cover the remaining failure modes that
callers may want to handle separately from bad arguments.
"""


class MeasurementError(Exception):
    """Base class for dmeter-specific failures."""


class UndefinedValueError(MeasurementError):
    """The requested measurement has no defined value for this input.

    Raised e.g. for cosine similarity of a zero-norm vector, perplexity of
    an empty corpus, or a readability score over a corpus with no scoreable
    records.  The caller decides policy (skip, flag, abort).
    """


class KernelInvalidError(MeasurementError):
    """A similarity kernel violates positive semidefiniteness beyond tolerance."""
