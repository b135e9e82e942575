"""Scaling analysis of bid-ask spreads.

Builds rescaled per-minute spread series from quote ticks, derives return
and volatility series with the intraday pattern removed, and measures
their temporal structure: autocorrelation, detrended fluctuation analysis,
and the multifractal spectrum. Synthetic generators with known exponents
are included for validation.
"""

__version__ = "0.1.0"

from .errors import (
    CalendarError,
    ConfigError,
    DataError,
    DegenerateSeriesError,
    FitError,
    FormatError,
    InsufficientDataError,
    InternalInvariantError,
    KindMismatchError,
    OrderingError,
    SpectrumError,
    SpreadfractError,
    WindowError,
)
from .fluctuation import (
    Crossover,
    FluctuationCurve,
    PowerLawFit,
    Profile,
    WindowGrid,
    build_profile,
    classify_exponent,
    detect_crossover,
    dfa,
    fit_power_law,
    mfdfa,
    read_fluctuation_csv,
    window_fluctuations,
    write_fluctuation_csv,
)
from .ingest import (
    SessionCalendar,
    SpreadSeries,
    TickRecord,
    instantaneous_spread,
    parse_ticks,
    read_spread_csv,
    rescale_to_minutes,
    write_spread_csv,
)
from .multifractal import (
    MultifractalSummary,
    legendre_spectrum,
    multifractal_width,
    scaling_exponents,
    summarize,
)
from .series import (
    AdjustmentResult,
    AutocorrelationCurve,
    IntradayPattern,
    SignalSeries,
    autocorrelation,
    intraday_pattern,
    read_signal_csv,
    remove_intraday_pattern,
    spread_return,
    spread_volatility,
    write_acf_csv,
    write_signal_csv,
)
from .synth import (
    GENERATOR_KINDS,
    GeneratorSpec,
    fgn_autocovariance,
    generate,
    piecewise_curve,
    shuffle_surrogate,
)

__all__ = [
    "__version__",
    "SpreadfractError",
    "ConfigError",
    "FormatError",
    "OrderingError",
    "CalendarError",
    "DataError",
    "InsufficientDataError",
    "DegenerateSeriesError",
    "KindMismatchError",
    "WindowError",
    "FitError",
    "SpectrumError",
    "InternalInvariantError",
    "TickRecord",
    "SessionCalendar",
    "SpreadSeries",
    "instantaneous_spread",
    "parse_ticks",
    "rescale_to_minutes",
    "read_spread_csv",
    "write_spread_csv",
    "SignalSeries",
    "IntradayPattern",
    "AdjustmentResult",
    "AutocorrelationCurve",
    "spread_return",
    "spread_volatility",
    "intraday_pattern",
    "remove_intraday_pattern",
    "autocorrelation",
    "read_signal_csv",
    "write_signal_csv",
    "write_acf_csv",
    "Profile",
    "WindowGrid",
    "FluctuationCurve",
    "PowerLawFit",
    "Crossover",
    "build_profile",
    "window_fluctuations",
    "dfa",
    "mfdfa",
    "fit_power_law",
    "detect_crossover",
    "classify_exponent",
    "read_fluctuation_csv",
    "write_fluctuation_csv",
    "MultifractalSummary",
    "scaling_exponents",
    "legendre_spectrum",
    "multifractal_width",
    "summarize",
    "GENERATOR_KINDS",
    "GeneratorSpec",
    "generate",
    "shuffle_surrogate",
    "piecewise_curve",
    "fgn_autocovariance",
]
