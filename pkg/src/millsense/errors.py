"""Exception types shared across the package."""


class MillsenseError(Exception):
    """Base class for every error raised by this package."""


class MissingFile(MillsenseError):
    """A referenced metadata or signal file does not exist."""


class SchemaError(MillsenseError):
    """A file does not conform to its documented format."""


class InvariantViolation(MillsenseError):
    """A domain-type invariant failed validation."""


class TooFewRecords(MillsenseError):
    """Dataset has too few records for the requested operation."""


class EmptySeries(MillsenseError):
    """A summary statistic was requested for an empty series."""


class EmptyInput(MillsenseError):
    """A metric was requested for empty vectors."""


class NonFiniteSample(MillsenseError):
    """A series contains NaN or infinite samples."""


class SeriesTooShort(MillsenseError):
    """A series is shorter than the minimum for spectrum computation."""


class UnknownGroupPrefix(MillsenseError):
    """A feature-group prefix matches no feature name."""


class TooFewExtrema(MillsenseError):
    """A profile has fewer than five peaks or five valleys."""


class ZeroVariance(MillsenseError):
    """A moment ratio is undefined because the RMS deviation is zero."""


class ConfigError(MillsenseError):
    """A generator or CLI configuration value is invalid."""


class DimensionMismatch(MillsenseError):
    """Matrix/vector shapes do not agree."""


class NonFiniteInput(MillsenseError):
    """Training or prediction input contains NaN or infinity."""


class TooFewSamples(MillsenseError):
    """Not enough samples to fit a model under the given hyperparameters."""


class UnknownTarget(MillsenseError):
    """A requested roughness target is not present in the dataset."""


class NearZeroActual(MillsenseError):
    """MAPE is undefined because an actual value is (near) zero."""


class UnfittedModel(MillsenseError):
    """An operation requires a fitted forest."""


class SubsetTooSmall(MillsenseError):
    """A data-subset predicate selected fewer than five rows."""


class FeatureSetMismatch(MillsenseError):
    """Two importance reports cover different feature sets."""
