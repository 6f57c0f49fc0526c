"""Exception hierarchy shared across the package."""


class TusLabError(Exception):
    """Base class for all tuslab errors."""


class LoadError(TusLabError):
    """A table file could not be read from disk."""


class FormatError(TusLabError):
    """Malformed input: bad CSV structure, benchmark layout, or ground truth."""


class EmptyCorpusError(TusLabError):
    """An operation that needs at least one table received none."""


class DegenerateInputError(TusLabError):
    """Input is structurally valid but too small or empty for the operation."""


class EmptySelectionError(TusLabError):
    """A distribution was requested over a field with no present values."""


class DimensionError(TusLabError):
    """Vectors of mismatched dimensionality were combined."""


class MissingGroundTruthError(TusLabError):
    """A query has rankings but no ground-truth entry."""


class EmptyGroundTruthError(TusLabError):
    """No query has a usable (non-empty) ground-truth set."""


class ProviderError(TusLabError):
    """An external provider failed after retries or is misconfigured."""


class ProviderContractError(ProviderError):
    """A provider returned a response violating its wire contract."""


class TemplateError(TusLabError):
    """A prompt template override is missing required placeholders."""


class AdjudicationFailedError(TusLabError):
    """Every adjudication run for a pair was unparseable."""
