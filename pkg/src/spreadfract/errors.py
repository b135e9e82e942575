"""Exception hierarchy shared by the library and the CLI.

Exit-code contract: usage and I/O problems exit 1, data that is unfit for
the requested analysis exits 2, internal invariant breaches exit 3. Each
class carries its code so the CLI maps exceptions without a lookup table.
"""


class SpreadfractError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(SpreadfractError):
    """Invalid option, parameter, or generator specification."""

    exit_code = 1


class FormatError(ConfigError):
    """Malformed input file: bad header, unparseable line, invalid field."""


class OrderingError(ConfigError):
    """Timestamps out of order under strict ordering mode."""


class CalendarError(ConfigError):
    """Invalid session calendar, or a tick outside every session in strict mode."""


class DataError(SpreadfractError):
    """Input data is structurally valid but unfit for the requested analysis."""

    exit_code = 2


class InsufficientDataError(DataError):
    """Too few usable points for the requested operation."""


class DegenerateSeriesError(DataError):
    """Series has zero variance or zero residuals everywhere."""


class KindMismatchError(DataError):
    """Operation received a series or pattern of the wrong kind."""


class WindowError(DataError):
    """Window grid incompatible with the series length or detrend order."""


class FitError(DataError):
    """Too few valid points to fit, or the fit is otherwise degenerate."""


class SpectrumError(DataError):
    """Singularity spectrum cannot be computed from the available grid."""


class InternalInvariantError(SpreadfractError):
    """A condition the library guarantees was violated; indicates a bug."""

    exit_code = 3
