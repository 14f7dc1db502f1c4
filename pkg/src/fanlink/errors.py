"""Exception types shared across the pipeline.

ConfigError signals a configuration or I/O problem (CLI exit code 2);
every other FanlinkError subclass is a data error (CLI exit code 3).
"""


class FanlinkError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(FanlinkError):
    """Bad configuration value or unusable input/output path."""


class MalformedInput(FanlinkError):
    """Input file cannot be parsed (bad XML, bad JSON line, bad TSV row)."""


class MissingField(MalformedInput):
    """A required field is absent from an input record."""


class DuplicatePageId(FanlinkError):
    """Two fanpage records share the same page_id."""


class EmptyQuery(FanlinkError):
    """Search query is empty after normalization."""


class MissingChannel(FanlinkError):
    """A show's channel has no entry in the channel directory."""


class DegenerateData(FanlinkError):
    """Training data is unusable (empty, or single-class where two are needed)."""


class KindMismatch(FanlinkError):
    """Feature vector arity does not match the model's training arity."""


class TooFewExamples(FanlinkError):
    """Not enough examples per class to build the requested fold plan."""


class EmptyInput(FanlinkError):
    """An operation that needs at least one element received none."""


class WeightOutOfRange(FanlinkError):
    """An edge weight falls outside the [0, 1] interval."""
