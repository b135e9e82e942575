"""Acceptance gate: ten numbered criteria with pinned tolerances.

Each test measures one criterion and records a PASS/FAIL line through the
`criterion` fixture; the lines are printed in the terminal summary. The
tolerances are frozen here on purpose: loosening them to make a failing
build pass is never acceptable.

Synthetic targets with known exponents stand in for proprietary tick data:
white noise (H = 1/2), fractional Gaussian noise (H prescribed), the
binomial cascade (h(q) in closed form, verified against brute-force
partition sums), and a piecewise power-law curve with a planted break.
"""
import json
import time

import numpy as np
import pytest

from _oracles import cascade_h_closed_form, cascade_partition_h
from spreadfract.cli import main
from spreadfract.fluctuation import DEFAULT_Q_GRID, WindowGrid, detect_crossover, dfa, mfdfa
from spreadfract.ingest import SpreadSeries
from spreadfract.multifractal import summarize
from spreadfract.series import (
    autocorrelation,
    intraday_pattern,
    remove_intraday_pattern,
    spread_return,
    spread_volatility,
)
from spreadfract.synth import GeneratorSpec, generate, piecewise_curve, shuffle_surrogate

SEEDS = range(10)
LENGTH = 1 << 16


def fitted_h(series, **kwargs):
    _, fit = dfa(series, **kwargs)
    return fit.exponent


def test_criterion_01_white_noise_hurst(criterion):
    start = time.monotonic()
    estimates = []
    per_seed_budget_ok = True
    for seed in SEEDS:
        tick = time.monotonic()
        series = generate(GeneratorSpec(kind="white_noise", length=LENGTH, seed=seed))
        estimates.append(fitted_h(series))
        per_seed_budget_ok &= (time.monotonic() - tick) < 5.0
    mean_h = float(np.mean(estimates))
    lo, hi = min(estimates), max(estimates)
    passed = (
        0.48 <= mean_h <= 0.52
        and all(0.45 <= h <= 0.55 for h in estimates)
        and per_seed_budget_ok
    )
    criterion(
        1,
        "white-noise Hurst: mean in [0.48, 0.52], seeds in [0.45, 0.55], < 5 s/seed",
        passed,
        f"mean H = {mean_h:.4f}, range [{lo:.4f}, {hi:.4f}], "
        f"total {time.monotonic() - start:.1f} s",
    )


def test_criterion_02_fgn_recovery(criterion):
    start = time.monotonic()
    report = []
    passed = True
    for target in (0.3, 0.6, 0.7, 0.8):
        estimates = []
        for seed in SEEDS:
            series = generate(
                GeneratorSpec(kind="fgn", length=LENGTH, seed=seed, params={"h": target})
            )
            estimates.append(fitted_h(series))
        mean_h = float(np.mean(estimates))
        passed &= abs(mean_h - target) <= 0.03
        passed &= all(abs(h - target) <= 0.05 for h in estimates)
        report.append(f"{target}: {mean_h:.4f}")
    elapsed = time.monotonic() - start
    passed &= elapsed < 60.0
    criterion(
        2,
        "fGn recovery: |mean - target| <= 0.03, per-seed <= 0.05, < 1 min",
        passed,
        "; ".join(report) + f"; {elapsed:.1f} s",
    )


def test_criterion_03_q2_reduces_to_dfa(criterion):
    series_set = [
        generate(GeneratorSpec(kind="white_noise", length=1 << 14, seed=0)),
        generate(GeneratorSpec(kind="fgn", length=1 << 14, seed=1, params={"h": 0.8})),
        generate(
            GeneratorSpec(kind="binomial_cascade", length=1 << 12, params={"p": 0.7})
        ),
    ]
    q_index = [i for i, q in enumerate(DEFAULT_Q_GRID) if q == 2.0][0]
    passed = True
    for flags in ({}, {"bidirectional": True}):
        for series in series_set:
            curve, fit = dfa(series, **flags)
            curves, fits = mfdfa(series, **flags)
            twin, twin_fit = curves[q_index], fits[q_index]
            passed &= twin.values.tobytes() == curve.values.tobytes()
            passed &= twin.sizes.tobytes() == curve.sizes.tobytes()
            passed &= twin_fit.exponent == fit.exponent
            passed &= twin_fit.intercept == fit.intercept
            passed &= twin_fit.residual == fit.residual
    criterion(
        3,
        "q = 2 member of the multi-q run is bit-for-bit the plain DFA output",
        passed,
        "3 series kinds, forward and bidirectional",
    )


def test_criterion_04_cascade_multifractality(criterion):
    start = time.monotonic()
    p = 0.7
    n = 1 << 14
    weights = generate(GeneratorSpec(kind="binomial_cascade", length=n, params={"p": p}))
    probes = [-4.0, -2.0, 2.0, 4.0]
    # independent oracle first: brute-force partition sums must agree with
    # the closed form before it is trusted as the target
    oracle_ok = all(
        abs(cascade_partition_h(weights.values, q) - cascade_h_closed_form(q, p)) < 1e-9
        for q in probes
    )
    grid = WindowGrid.dyadic(n, t_min=32)
    curves, fits = mfdfa(weights, q_grid=DEFAULT_Q_GRID, grid=grid)
    by_q = {fit.q: fit.exponent for fit in fits if fit is not None}
    errors = {q: by_q[q] - float(cascade_h_closed_form(q, p)) for q in probes}
    summary = summarize([f for f in fits if f is not None])
    elapsed = time.monotonic() - start
    passed = (
        oracle_ok
        and all(abs(err) <= 0.05 for err in errors.values())
        and summary.delta_h >= 0.5
        and summary.delta_alpha >= 0.8
        and elapsed < 30.0
    )
    criterion(
        4,
        "binomial cascade: h(q) within 0.05 of closed form at q = +/-2, +/-4; "
        "delta_h >= 0.5, delta_alpha >= 0.8, < 30 s",
        passed,
        "errors "
        + ", ".join(f"q={q:+.0f}: {err:+.4f}" for q, err in sorted(errors.items()))
        + f"; delta_h = {summary.delta_h:.3f}, delta_alpha = {summary.delta_alpha:.3f}"
        + f", oracle {'ok' if oracle_ok else 'BROKEN'}, {elapsed:.1f} s",
    )


def test_criterion_05_monofractal_collapse(criterion):
    series = generate(GeneratorSpec(kind="white_noise", length=LENGTH, seed=3))
    curves, fits = mfdfa(series)
    summary = summarize([f for f in fits if f is not None])
    passed = summary.delta_h <= 0.1 and summary.delta_alpha <= 0.15
    criterion(
        5,
        "white noise collapses to a monofractal: delta_h <= 0.1, delta_alpha <= 0.15",
        passed,
        f"delta_h = {summary.delta_h:.4f}, delta_alpha = {summary.delta_alpha:.4f}",
    )


def test_criterion_06_shuffle_destroys_memory(criterion):
    estimates = []
    for seed in SEEDS:
        series = generate(
            GeneratorSpec(kind="fgn", length=LENGTH, seed=seed, params={"h": 0.8})
        )
        shuffled = shuffle_surrogate(series, seed=seed + 1000)
        estimates.append(fitted_h(shuffled))
    mean_h = float(np.mean(estimates))
    # the +/- 0.03 tolerance binds the 10-seed mean; individual seeds get
    # the same [0.45, 0.55] allowance as criterion 1
    passed = abs(mean_h - 0.5) <= 0.03 and all(0.45 <= h <= 0.55 for h in estimates)
    criterion(
        6,
        "shuffled fGn(0.8) loses its memory: fitted H = 0.5 +/- 0.03 over 10 seeds",
        passed,
        f"mean H = {mean_h:.4f}, range [{min(estimates):.4f}, {max(estimates):.4f}]",
    )


def test_criterion_07_legendre_consistency(criterion):
    summaries = []
    for spec, grid in (
        (GeneratorSpec(kind="binomial_cascade", length=1 << 14, params={"p": 0.7}),
         WindowGrid.dyadic(1 << 14, t_min=32)),
        (GeneratorSpec(kind="white_noise", length=1 << 14, seed=2), None),
        (GeneratorSpec(kind="fgn", length=1 << 14, seed=5, params={"h": 0.7}), None),
    ):
        _, fits = mfdfa(generate(spec), grid=grid)
        summaries.append(summarize([f for f in fits if f is not None]))
    worst_identity = 0.0
    worst_apex = 0.0
    for summary in summaries:
        # q alpha - f must reproduce tau; the identity is algebraic, so it
        # holds far inside the 2x truncation-error allowance
        residual = summary.q_grid * summary.alpha - summary.f_alpha - summary.tau
        worst_identity = max(worst_identity, float(np.max(np.abs(residual))))
        at_zero = np.flatnonzero(summary.q_grid == 0.0)
        apex_error = abs(float(summary.f_alpha[at_zero[0]]) - summary.d_f)
        worst_apex = max(worst_apex, apex_error)
    passed = worst_identity <= 1e-12 and worst_apex <= 1e-9
    criterion(
        7,
        "Legendre consistency: q.alpha - f == tau; f at q = 0 equals D_f = 1",
        passed,
        f"max identity residual {worst_identity:.2e}, max apex error {worst_apex:.2e}",
    )


def test_criterion_08_intraday_pattern_removal(criterion):
    start = time.monotonic()
    days, slots = 250, 240
    rng = np.random.default_rng(99)
    modulation = 1.0 + 0.8 * np.sin(2.0 * np.pi * np.arange(slots) / slots)
    day_index = np.repeat(np.arange(days, dtype=np.int64), slots)
    minute_of_day = np.tile(np.arange(slots, dtype=np.int64), days)
    returns = 0.02 * np.tile(modulation, days) * rng.standard_normal(days * slots)
    # spreads integrate the planted returns within each day
    log_spread = np.cumsum(returns.reshape(days, slots), axis=1)
    spread = SpreadSeries(
        values=np.exp(log_spread).ravel(),
        day_index=day_index,
        minute_of_day=minute_of_day,
        slots_per_day=slots,
    )
    raw_vol = spread_volatility(spread_return(spread))
    adjusted = remove_intraday_pattern(raw_vol, intraday_pattern(raw_vol)).adjusted
    raw_acf = autocorrelation(raw_vol, max_lag=2 * slots)
    adj_acf = autocorrelation(adjusted, max_lag=2 * slots)
    reductions = {}
    passed = True
    for lag in (slots, 2 * slots):
        raw_peak = float(raw_acf.values[lag])
        adj_peak = float(adj_acf.values[lag])
        reductions[lag] = 1.0 - adj_peak / raw_peak
        passed &= raw_peak > 0.05
        passed &= reductions[lag] >= 0.80
    elapsed = time.monotonic() - start
    passed &= elapsed < 10.0
    criterion(
        8,
        "intraday-pattern removal cuts the periodic volatility-ACF peaks at "
        "lags 240 and 480 by >= 80%",
        passed,
        ", ".join(f"lag {lag}: {cut:.1%}" for lag, cut in reductions.items())
        + f"; {elapsed:.1f} s",
    )


def test_criterion_09_crossover_detection(criterion):
    curve = piecewise_curve(
        t_break=64, exponent_left=0.7, exponent_right=1.0, t_min=8, t_max=8192
    )
    fit = detect_crossover(curve)
    cross = fit.crossover
    passed = (
        cross is not None
        and cross.detected
        and 48 <= cross.t_break <= 96
        and abs(cross.exponent_left - 0.7) <= 0.02
        and abs(cross.exponent_right - 1.0) <= 0.02
    )
    detail = "no crossover object"
    if cross is not None:
        detail = (
            f"break at t = {cross.t_break}, slopes {cross.exponent_left:.4f} / "
            f"{cross.exponent_right:.4f}, detected = {cross.detected}"
        )
    criterion(
        9,
        "planted crossover (0.7 -> 1.0 at t = 64) recovered in [48, 96] "
        "with slopes within 0.02",
        passed,
        detail,
    )


def test_criterion_10_determinism(criterion, tmp_path, monkeypatch, capsys):
    argv = [
        "mfdfa",
        "--input", "synth:binomial_cascade:p=0.7,n=4096",
        "--windows", "dyadic:32",
    ]
    names = ("fluctuation.csv", "summary.csv", "spectrum.csv",
             "summary.json", "manifest.json")
    blobs = {}
    runs = (
        ("first", "2"),
        ("second", "2"),
        ("threads1", "1"),
        ("threads4", "4"),
    )
    for label, threads in runs:
        monkeypatch.setenv("SPREADFRACT_THREADS", threads)
        out = tmp_path / label
        assert main(argv + ["--out", str(out)]) == 0
        blobs[label] = {name: (out / name).read_bytes() for name in names}
    capsys.readouterr()
    same_rerun = blobs["first"] == blobs["second"]
    same_threads = blobs["threads1"] == blobs["threads4"] == blobs["first"]

    synth_blobs = []
    for label in ("g1", "g2"):
        out = tmp_path / label
        assert main(["synth", "--input", "synth:fgn:h=0.8,n=4096", "--seed", "7",
                     "--out", str(out)]) == 0
        synth_blobs.append((out / "signal.csv").read_bytes())
    capsys.readouterr()
    passed = same_rerun and same_threads and synth_blobs[0] == synth_blobs[1]
    criterion(
        10,
        "byte-identical outputs across reruns and thread counts {1, 4}",
        passed,
        f"{len(names)} files x {len(runs)} runs compared",
    )
