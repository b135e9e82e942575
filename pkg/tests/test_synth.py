"""Synthetic generators: determinism, analytic moments, and spec validation."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import cascade_h_closed_form, cascade_partition_h
from spreadfract.errors import ConfigError
from spreadfract.synth import (
    GeneratorSpec,
    fgn_autocovariance,
    generate,
    piecewise_curve,
    shuffle_surrogate,
)


def test_generate_is_deterministic_per_seed():
    spec = GeneratorSpec(kind="white_noise", length=1024, seed=11)
    a = generate(spec).values
    b = generate(spec).values
    assert a.tobytes() == b.tobytes()
    c = generate(GeneratorSpec(kind="white_noise", length=1024, seed=12)).values
    assert a.tobytes() != c.tobytes()


def test_white_noise_moments():
    values = generate(GeneratorSpec(kind="white_noise", length=1 << 16, seed=0)).values
    assert abs(float(np.mean(values))) < 0.02
    assert abs(float(np.var(values)) - 1.0) < 0.02


def test_fgn_matches_analytic_autocovariance():
    h = 0.8
    values = generate(
        GeneratorSpec(kind="fgn", length=1 << 16, seed=5, params={"h": h})
    ).values
    lags = np.arange(6)
    target = fgn_autocovariance(h, lags)
    n = values.shape[0]
    x = values - np.mean(values)
    measured = np.array([float(np.mean(x[: n - k] * x[k:])) for k in lags])
    np.testing.assert_allclose(measured, target, atol=0.03)
    # gamma(0) is the variance, exactly 1 for this parameterization
    assert abs(target[0] - 1.0) < 1e-12


def test_fgn_autocovariance_closed_form_values():
    h = 0.7
    k = np.arange(4)
    gamma = fgn_autocovariance(h, k)
    expected = 0.5 * (
        np.abs(k + 1) ** (2 * h) - 2 * np.abs(k) ** (2 * h) + np.abs(k - 1) ** (2 * h)
    )
    np.testing.assert_allclose(gamma, expected, rtol=1e-12)


def test_fgn_half_is_plain_white_noise():
    spec = GeneratorSpec(kind="fgn", length=512, seed=9, params={"h": 0.5})
    white = GeneratorSpec(kind="white_noise", length=512, seed=9)
    assert generate(spec).values.tobytes() == generate(white).values.tobytes()


@pytest.mark.parametrize("h", [0.1, 0.3, 0.6, 0.9])
def test_fgn_embedding_stays_positive_definite(h):
    values = generate(
        GeneratorSpec(kind="fgn", length=4096, seed=1, params={"h": h})
    ).values
    assert np.isfinite(values).all()
    assert 0.5 < float(np.var(values)) < 2.0


def test_cascade_weights_form_the_exact_measure():
    p = 0.7
    n = 1 << 12
    weights = generate(
        GeneratorSpec(kind="binomial_cascade", length=n, seed=0, params={"p": p})
    ).values
    assert weights.shape == (n,)
    assert (weights > 0).all()
    assert abs(math.fsum(weights) - 1.0) < 1e-12
    levels = 12
    # every weight is p^k (1-p)^(levels-k); check the extremes exist
    assert np.isclose(weights.max(), p ** levels)
    assert np.isclose(weights.min(), (1 - p) ** levels)


@pytest.mark.parametrize("q", [-4.0, -2.0, 1.0, 2.0, 4.0])
def test_cascade_partition_sums_verify_closed_form(q):
    p = 0.7
    weights = generate(
        GeneratorSpec(kind="binomial_cascade", length=1 << 12, params={"p": p})
    ).values
    oracle = cascade_partition_h(weights, q)
    closed = cascade_h_closed_form(q, p)
    assert abs(oracle - closed) < 1e-9


def test_cascade_is_seed_independent():
    spec_a = GeneratorSpec(kind="binomial_cascade", length=512, seed=1, params={"p": 0.6})
    spec_b = GeneratorSpec(kind="binomial_cascade", length=512, seed=2, params={"p": 0.6})
    assert generate(spec_a).values.tobytes() == generate(spec_b).values.tobytes()


def test_piecewise_curve_slopes_and_continuity():
    curve = piecewise_curve(
        t_break=64, exponent_left=0.7, exponent_right=1.0, t_min=8, t_max=8192
    )
    t = curve.sizes.astype(float)
    left = t <= 64
    log_t, log_f = np.log(t), np.log(curve.values)
    slope_left = np.polyfit(log_t[left], log_f[left], 1)[0]
    slope_right = np.polyfit(log_t[~left], log_f[~left], 1)[0]
    assert abs(slope_left - 0.7) < 1e-9
    assert abs(slope_right - 1.0) < 1e-9
    # continuity at the break: both branches agree there
    at_break = 1.0 * 64.0 ** 0.7
    assert np.isclose(np.interp(64.0, t, curve.values), at_break, rtol=0.03)


def test_generate_piecewise_series_is_positive():
    series = generate(GeneratorSpec(kind="piecewise_power_law", length=256))
    assert len(series) > 50
    assert (series.values > 0).all()
    assert series.kind == "generic"


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_shuffle_preserves_multiset(seed):
    base = generate(GeneratorSpec(kind="white_noise", length=256, seed=3))
    shuffled = shuffle_surrogate(base, seed)
    assert shuffled.kind == base.kind
    assert np.sort(shuffled.values).tobytes() == np.sort(base.values).tobytes()


def test_shuffle_is_deterministic_and_moves_values():
    base = generate(GeneratorSpec(kind="white_noise", length=512, seed=4))
    a = shuffle_surrogate(base, 7)
    b = shuffle_surrogate(base, 7)
    c = shuffle_surrogate(base, 8)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.values.tobytes() != c.values.tobytes()
    assert a.values.tobytes() != base.values.tobytes()


def test_spec_validation():
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="brownian", length=1024)
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="white_noise", length=16)
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="white_noise", length=1024, seed=-1)
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="fgn", length=1024, params={"h": 1.0})
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="fgn", length=1024)
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="binomial_cascade", length=1000, params={"p": 0.7})
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="binomial_cascade", length=1024, params={"p": 0.5})
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="white_noise", length=1024, params={"h": 0.5})
    with pytest.raises(ConfigError):
        GeneratorSpec(
            kind="piecewise_power_law", length=256, params={"t_break": 4.0}
        )


def test_spec_json_round_trip():
    spec = GeneratorSpec(kind="fgn", length=2048, seed=42, params={"h": 0.75})
    clone = GeneratorSpec.from_json(spec.to_json())
    assert clone == spec
    payload = json.loads(spec.to_json())
    assert payload["kind"] == "fgn"
    with pytest.raises(ConfigError):
        GeneratorSpec.from_json("{not json")
    with pytest.raises(ConfigError):
        GeneratorSpec.from_dict({"length": 512})


def test_surrogate_kind_is_not_generable():
    from spreadfract.series import SignalSeries

    with pytest.raises(ConfigError):
        generate(GeneratorSpec(kind="shuffle_surrogate", length=512))
    with pytest.raises(ConfigError):
        shuffle_surrogate(SignalSeries(values=np.empty(0)), seed=0)
