"""Synthetic series with known exponents and spectra, for calibrating and
testing the whole pipeline.

All randomness flows through numpy's Philox counter-based generator keyed
by the spec seed, so identical specs produce bitwise-identical output on
every platform, run, and thread count. The fractional Gaussian noise
generator uses circulant embedding, which realizes the target
autocovariance gamma(k) = ((k+1)^(2H) - 2 k^(2H) + |k-1|^(2H)) / 2 exactly
in distribution, so estimator tests inherit no generator bias.
"""
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InternalInvariantError
from .fluctuation import FluctuationCurve
from .series import SignalSeries

GENERATOR_KINDS = (
    "white_noise",
    "fgn",
    "binomial_cascade",
    "piecewise_power_law",
    "shuffle_surrogate",
)

_PIECEWISE_DEFAULTS = {
    "t_break": 64.0,
    "exponent_left": 0.7,
    "exponent_right": 1.0,
    "t_min": 8.0,
    "t_max": 8192.0,
    "amplitude": 1.0,
}

_ALLOWED_PARAMS = {
    "white_noise": set(),
    "fgn": {"h"},
    "binomial_cascade": {"p"},
    "piecewise_power_law": set(_PIECEWISE_DEFAULTS),
    "shuffle_surrogate": set(),
}

MIN_LENGTH = 256


@dataclass(frozen=True)
class GeneratorSpec:
    """Kind, length, seed, and kind-specific parameters of one generator."""

    kind: str
    length: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ConfigError(
                f"unknown generator kind {self.kind!r}; one of {GENERATOR_KINDS}"
            )
        length = int(self.length)
        object.__setattr__(self, "length", length)
        if length < MIN_LENGTH:
            raise ConfigError(f"length must be at least {MIN_LENGTH}, got {length}")
        seed = int(self.seed)
        object.__setattr__(self, "seed", seed)
        if not (0 <= seed < 2 ** 64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        unknown = set(self.params) - _ALLOWED_PARAMS[self.kind]
        if unknown:
            raise ConfigError(
                f"{self.kind} does not accept parameter(s) {sorted(unknown)}"
            )
        params = {key: float(value) for key, value in self.params.items()}
        object.__setattr__(self, "params", params)
        if self.kind == "fgn":
            h = params.get("h")
            if h is None or not (0.0 < h < 1.0):
                raise ConfigError("fgn requires parameter h strictly inside (0, 1)")
        if self.kind == "binomial_cascade":
            p = params.get("p")
            if p is None or not (0.5 < p < 1.0):
                raise ConfigError(
                    "binomial_cascade requires parameter p strictly inside (0.5, 1)"
                )
            if length & (length - 1):
                raise ConfigError("binomial_cascade length must be a power of two")
        if self.kind == "piecewise_power_law":
            merged = dict(_PIECEWISE_DEFAULTS, **params)
            if not (0 < merged["t_min"] < merged["t_break"] < merged["t_max"]):
                raise ConfigError(
                    "piecewise_power_law needs 0 < t_min < t_break < t_max"
                )
            if merged["amplitude"] <= 0:
                raise ConfigError("piecewise_power_law amplitude must be positive")
            object.__setattr__(self, "params", merged)

    def to_dict(self):
        return {
            "kind": self.kind,
            "length": self.length,
            "seed": self.seed,
            "params": dict(self.params),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, payload):
        try:
            return cls(
                kind=payload["kind"],
                length=payload["length"],
                seed=payload.get("seed", 0),
                params=dict(payload.get("params", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid generator spec payload: {exc}")

    @classmethod
    def from_json(cls, text):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"generator spec is not valid JSON: {exc}")
        return cls.from_dict(payload)


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def fgn_autocovariance(h, lags):
    """Exact autocovariance of unit-variance fractional Gaussian noise."""
    k = np.asarray(lags, dtype=np.float64)
    return 0.5 * (
        np.abs(k + 1) ** (2 * h)
        - 2.0 * np.abs(k) ** (2 * h)
        + np.abs(k - 1) ** (2 * h)
    )


def _fgn(h, n, rng):
    """Circulant-embedding sampler; H = 0.5 is plain white noise."""
    if h == 0.5:
        return rng.standard_normal(n)
    gamma = fgn_autocovariance(h, np.arange(n))
    row = np.concatenate([gamma, [0.0], gamma[-1:0:-1]])
    eigenvalues = np.fft.fft(row).real
    scale = max(float(eigenvalues.max()), 1.0)
    if eigenvalues.min() < -1e-9 * scale:
        raise InternalInvariantError(
            "circulant embedding produced significantly negative eigenvalues"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    main = rng.standard_normal(n + 1)
    mirror = rng.standard_normal(n - 1)
    weights = np.zeros(2 * n, dtype=complex)
    weights[0] = math.sqrt(eigenvalues[0] / (2 * n)) * main[0]
    weights[1:n] = np.sqrt(eigenvalues[1:n] / (4 * n)) * (main[1:n] + 1j * mirror)
    weights[n] = math.sqrt(eigenvalues[n] / (2 * n)) * main[n]
    weights[n + 1:] = np.conj(weights[1:n][::-1])
    return np.fft.fft(weights).real[:n]


def _binomial_cascade(p, n):
    """Deterministic dyadic multiplicative measure at the finest scale.

    Index i receives mass p^(ones in i) * (1-p)^(levels - ones in i); the
    total mass is exactly (p + (1-p))^levels = 1.
    """
    levels = n.bit_length() - 1
    index = np.arange(n, dtype=np.uint64)
    ones = np.zeros(n, dtype=np.int64)
    while index.any():
        ones += (index & np.uint64(1)).astype(np.int64)
        index >>= np.uint64(1)
    return p ** ones * (1.0 - p) ** (levels - ones)


def piecewise_curve(t_break=64, exponent_left=0.7, exponent_right=1.0,
                    t_min=8, t_max=8192, n_points=17, amplitude=1.0):
    """Continuous piecewise power-law curve on a log-spaced integer grid.

    F(t) = amplitude * t^exponent_left up to t_break, then switches slope
    continuously. Returned as a q = 2 FluctuationCurve (window counts are
    zero: the curve is synthetic, no windows were reduced).
    """
    raw = np.exp(np.linspace(math.log(t_min), math.log(t_max), n_points))
    sizes = np.unique(np.round(raw).astype(np.int64))
    t = sizes.astype(np.float64)
    left = amplitude * t ** exponent_left
    right = (
        amplitude
        * float(t_break) ** (exponent_left - exponent_right)
        * t ** exponent_right
    )
    values = np.where(t <= t_break, left, right)
    zeros = np.zeros(sizes.shape[0], dtype=np.int64)
    return FluctuationCurve(
        q=2.0,
        sizes=sizes,
        values=values,
        windows_used=zeros,
        floored=zeros.copy(),
        unreliable=np.zeros(sizes.shape[0], dtype=bool),
    )


def generate(spec):
    """Generate the series described by the spec, deterministically.

    white_noise: i.i.d. standard normal. fgn: exact-covariance fractional
    Gaussian noise with Hurst parameter h. binomial_cascade: the
    deterministic dyadic measure (the seed is unused and recorded only for
    provenance). piecewise_power_law: samples of the piecewise curve on a
    log grid in t, stored as plain values. shuffle_surrogate is not
    generable from a spec alone; use shuffle_surrogate() on a source
    series.
    """
    rng = _rng(spec.seed)
    n = spec.length
    if spec.kind == "white_noise":
        values = rng.standard_normal(n)
    elif spec.kind == "fgn":
        values = _fgn(spec.params["h"], n, rng)
    elif spec.kind == "binomial_cascade":
        values = _binomial_cascade(spec.params["p"], n)
    elif spec.kind == "piecewise_power_law":
        p = spec.params
        curve = piecewise_curve(
            t_break=p["t_break"],
            exponent_left=p["exponent_left"],
            exponent_right=p["exponent_right"],
            t_min=p["t_min"],
            t_max=p["t_max"],
            n_points=n,
            amplitude=p["amplitude"],
        )
        values = curve.values
    else:
        raise ConfigError(
            "shuffle_surrogate needs a source series; call shuffle_surrogate()"
        )
    return SignalSeries(values=values, kind="generic")


def shuffle_surrogate(signal, seed):
    """Uniform random permutation of the values; exact multiset preservation.

    Alignment metadata is kept as positional labels: the value at each
    (day, minute) slot changes, the slots themselves do not.
    """
    values = signal.values
    if values.shape[0] == 0:
        raise ConfigError("cannot shuffle an empty series")
    shuffled = _rng(seed).permutation(values)
    return replace(signal, values=shuffled)
