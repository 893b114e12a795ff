"""Exception taxonomy.

Exceptions are grouped by failure class so the CLI can map them to exit
codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
"""


class PvdayError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PvdayError):
    """Invalid configuration, parameters or preconditions on settings."""


class DataError(PvdayError):
    """Malformed, missing or inconsistent input data."""


class NumericError(PvdayError):
    """Numeric failure during computation (divergence, singularity)."""


# core
class EmptyIntersection(DataError):
    pass


class DuplicateColumn(DataError):
    pass


class SpanTooShort(DataError):
    pass


# ingest
class MissingColumn(DataError):
    pass


class MalformedTimestamp(DataError):
    pass


class MisalignedStart(DataError):
    pass


# features
class ZeroIrradiance(DataError):
    pass


class OutOfRange(DataError):
    pass


class DegenerateColumn(DataError):
    pass


class UnknownCategory(DataError):
    pass


class Misaligned(DataError):
    pass


# decomp
class SeriesTooShort(DataError):
    pass


class PeriodsNotAscending(ConfigError):
    pass


class TooShort(DataError):
    pass


class SingularFit(NumericError):
    pass


class NoConvergence(NumericError):
    pass


# forecast
class ShapeMismatch(DataError):
    pass


class NoWindows(DataError):
    pass


class DivergedLoss(NumericError):
    pass


class MissingKnownFeatures(DataError):
    pass


class ModelFormatError(DataError):
    pass


# eval
class ZeroYMax(DataError):
    pass


class UnlabeledDay(DataError):
    pass


class IncompleteGrid(DataError):
    pass
