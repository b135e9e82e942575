"""Command-line front end: ingest, acf, dfa, mfdfa, synth, surrogate.

Every command writes its artifacts plus a manifest.json capturing the
resolved configuration, diagnostics, and a sha256 per output file. Writes
are atomic and the output directory is locked for the duration of the run.
Exit codes: 0 success, 1 usage or I/O problems, 2 data unfit for the
analysis, 3 internal invariant breach.
"""
import os
import pathlib
import warnings
from contextlib import contextmanager
from dataclasses import replace

import click
import numpy as np
from filelock import FileLock, Timeout

from . import __version__
from .errors import ConfigError, FormatError, SpreadfractError
from .fluctuation import (
    WindowGrid,
    classify_exponent,
    detect_crossover,
    dfa,
    fit_to_dict,
    mfdfa,
    write_fluctuation_csv,
)
from .ingest import (
    SessionCalendar,
    parse_ticks,
    read_spread_csv,
    rescale_to_minutes,
    write_spread_csv,
)
from .ioutil import sha256_of_file, write_json
from .multifractal import (
    summarize,
    write_spectrum_csv,
    write_summary_csv,
    write_summary_json,
)
from .series import (
    autocorrelation,
    intraday_pattern,
    read_signal_csv,
    remove_intraday_pattern,
    spread_return,
    spread_volatility,
    write_acf_csv,
    write_signal_csv,
)
from .synth import GeneratorSpec, generate, shuffle_surrogate

_LOCK_NAME = ".spreadfract.lock"


# ---------------------------------------------------------------- helpers


@contextmanager
def _surfaced_warnings(sink):
    """Collect library warnings, echo them to stderr, and record them."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        yield
    for item in caught:
        message = str(item.message)
        click.echo(f"warning: {message}", err=True)
        sink.append(message)


def _parse_synth_scheme(text, default_seed):
    """synth:KIND[:key=value[,key=value...]] -> GeneratorSpec.

    `n` (or `length`) selects the length, `seed` overrides the command
    seed; remaining keys are generator parameters.
    """
    parts = text.split(":", 2)
    if len(parts) < 2 or parts[0] != "synth" or not parts[1]:
        raise ConfigError(f"synthetic input must look like synth:KIND[:k=v,...], got {text!r}")
    kind = parts[1]
    length = 65536
    seed = default_seed
    params = {}
    if len(parts) == 3 and parts[2]:
        for pair in parts[2].split(","):
            if "=" not in pair:
                raise ConfigError(f"synthetic parameter {pair!r} must look like key=value")
            key, _, value = pair.partition("=")
            key = key.strip()
            try:
                if key in ("n", "length"):
                    length = int(value)
                elif key == "seed":
                    seed = int(value)
                else:
                    params[key] = float(value)
            except ValueError:
                raise ConfigError(f"synthetic parameter {pair!r} has a non-numeric value")
    return GeneratorSpec(kind=kind, length=length, seed=seed, params=params)


def _sniff_csv(path):
    """Classify a CSV input by its header: tick, spread, or signal."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        first = handle.readline()
    names = [cell.strip().lower() for cell in first.strip().split(",")]
    if {"timestamp", "ask", "bid"} <= set(names):
        return "tick"
    if names == ["day", "minute", "spread"]:
        return "spread"
    if names == ["day", "minute", "value", "kind"]:
        return "signal"
    raise FormatError(
        f"unrecognized input header {first.strip()!r}: expected a tick CSV "
        "(timestamp,ask,bid), a spread CSV (day,minute,spread), or a signal "
        "CSV (day,minute,value,kind)"
    )


def _calendar_from(option):
    return SessionCalendar.from_string(option) if option else SessionCalendar()


def _market_pipeline(spread, bridge_gaps, diagnostics):
    """Adjusted return and volatility series from a spread series."""
    raw_return = spread_return(spread, bridge_gaps=bridge_gaps)
    raw_volatility = spread_volatility(raw_return)
    adjusted_return = remove_intraday_pattern(
        raw_return, intraday_pattern(raw_return)
    )
    adjusted_volatility = remove_intraday_pattern(
        raw_volatility, intraday_pattern(raw_volatility)
    )
    diagnostics["return_points"] = int(len(raw_return))
    diagnostics["pattern_skips_return"] = adjusted_return.skipped
    diagnostics["pattern_skips_volatility"] = adjusted_volatility.skipped
    if adjusted_return.skipped:
        click.echo(
            f"note: {adjusted_return.skipped} return element(s) skipped by the "
            "near-zero intraday-pattern guard",
            err=True,
        )
    if adjusted_volatility.skipped:
        click.echo(
            f"note: {adjusted_volatility.skipped} volatility element(s) skipped "
            "by the near-zero intraday-pattern guard",
            err=True,
        )
    return {
        "raw_return": raw_return,
        "raw_volatility": raw_volatility,
        "adjusted_return": adjusted_return.adjusted,
        "adjusted_volatility": adjusted_volatility.adjusted,
    }


def _load_spread(path, kind, calendar, delta_t, diagnostics):
    if kind == "tick":
        ticks = parse_ticks(path)
        spread = rescale_to_minutes(ticks, calendar, delta_t=delta_t)
        diagnostics["ticks"] = len(ticks)
    else:
        spread = read_spread_csv(path, delta_t=delta_t)
    diagnostics["spread_points"] = int(len(spread))
    diagnostics["empty_minutes"] = spread.empty_minutes
    diagnostics["zero_spread_minutes"] = spread.zero_spread_minutes
    diagnostics["partial_days"] = len(spread.partial_days)
    return spread


def _resolve_analysis_input(input_, calendar, delta_t, bridge_gaps, seed, diagnostics):
    """-> list of (label, SignalSeries) to analyze.

    Market inputs (tick or spread CSV) yield the adjusted return and the
    adjusted volatility; a signal CSV or synth: scheme yields itself.
    """
    if input_.startswith("synth:"):
        spec = _parse_synth_scheme(input_, seed)
        diagnostics["generator"] = spec.to_dict()
        return [(None, generate(spec))]
    kind = _sniff_csv(input_)
    if kind == "signal":
        return [(None, read_signal_csv(input_))]
    spread = _load_spread(input_, kind, calendar, delta_t, diagnostics)
    signals = _market_pipeline(spread, bridge_gaps, diagnostics)
    return [
        ("adjusted_return", signals["adjusted_return"]),
        ("adjusted_volatility", signals["adjusted_volatility"]),
    ]


def _parse_q_grid(text):
    if text is None:
        return None
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            grid = np.linspace(float(lo), float(hi), int(count))
        else:
            grid = np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise ConfigError(
            f"--q-grid must be lo:hi:count or a comma list of numbers, got {text!r}"
        )
    if grid.shape[0] < 1:
        raise ConfigError("--q-grid is empty")
    return grid


def _parse_windows(text, length, detrend_order):
    if text is None:
        return WindowGrid.log_spaced(length, detrend_order=detrend_order)
    try:
        if text.startswith("dyadic"):
            parts = text.split(":")
            t_min = int(parts[1]) if len(parts) > 1 and parts[1] else 16
            t_max = int(parts[2]) if len(parts) > 2 and parts[2] else None
            return WindowGrid.dyadic(length, t_min=t_min, t_max=t_max)
        if ":" in text:
            lo, hi, count = text.split(":")
            return WindowGrid.log_spaced(
                length, count=int(count), t_min=int(lo), t_max=int(hi),
                detrend_order=detrend_order,
            )
        return WindowGrid.explicit(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(
            "--windows must be lo:hi:count, dyadic[:lo[:hi]], or a comma list "
            f"of sizes, got {text!r}"
        )


def _parse_fit_range(text):
    if text is None:
        return None
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"--fit-range must be lo:hi, got {text!r}")
    if hi <= lo:
        raise ConfigError("--fit-range upper bound must exceed the lower bound")
    return (lo, hi)


def _emit(out, command, config, diagnostics, writers):
    """Write artifacts under a directory lock, then the manifest.

    writers: list of (filename, callable(path)). The manifest stores the
    configuration, diagnostics, library versions, and a sha256 per file;
    it carries no timestamps or host details, so reruns are byte-identical.
    """
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out_dir / _LOCK_NAME))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise ConfigError(f"output directory {out} is locked by another run")
    try:
        outputs = {}
        for name, writer in writers:
            path = out_dir / name
            writer(path)
            outputs[name] = {
                "sha256": sha256_of_file(path),
                "bytes": os.path.getsize(path),
            }
        manifest = {
            "command": command,
            "config": config,
            "diagnostics": diagnostics,
            "versions": {
                "spreadfract": __version__,
                "numpy": np.__version__,
            },
            "outputs": outputs,
        }
        write_json(out_dir / "manifest.json", manifest)
    finally:
        lock.release()


# ---------------------------------------------------------------- commands


@click.group()
@click.version_option(version=__version__, prog_name="spreadfract")
def cli():
    """Bid-ask-spread scaling toolkit: spread construction, autocorrelation,
    detrended fluctuation analysis, and multifractal spectra."""


@cli.command()
@click.option("--input", "input_", required=True, help="Tick CSV (timestamp,ask,bid).")
@click.option("--calendar", default=None, help="Sessions, e.g. 09:30-11:30,13:00-15:00.")
@click.option("--delta-t", default=1, type=int, show_default=True,
              help="Bin width in minutes; must divide the trading day.")
@click.option("--out", required=True, help="Output directory.")
def ingest(input_, calendar, delta_t, out):
    """Aggregate ticks into the per-minute rescaled spread series."""
    cal = _calendar_from(calendar)
    notes = []
    diagnostics = {"warnings": notes}
    with _surfaced_warnings(notes):
        ticks = parse_ticks(input_)
        spread = rescale_to_minutes(ticks, cal, delta_t=delta_t)
    diagnostics.update(
        ticks=len(ticks),
        spread_points=int(len(spread)),
        empty_minutes=spread.empty_minutes,
        zero_spread_minutes=spread.zero_spread_minutes,
        partial_days=len(spread.partial_days),
    )
    config = {
        "input": input_,
        "calendar": cal.as_string(),
        "delta_t": delta_t,
        "minutes_per_day": cal.minutes_per_day,
    }
    _emit(out, "ingest", config, diagnostics,
          [("spread.csv", lambda p: write_spread_csv(spread, p))])
    click.echo(
        f"ingested {len(ticks)} ticks into {len(spread)} spread bins "
        f"({spread.empty_minutes} empty, {spread.zero_spread_minutes} zero-spread)"
    )


@cli.command()
@click.option("--input", "input_", required=True,
              help="Tick, spread, or signal CSV, or synth:KIND[:k=v,...].")
@click.option("--calendar", default=None)
@click.option("--delta-t", default=1, type=int, show_default=True)
@click.option("--bridge-gaps", is_flag=True,
              help="Take returns across excluded-minute gaps inside a day.")
@click.option("--seed", default=0, type=int, show_default=True,
              help="Seed for synth: inputs.")
@click.option("--out", required=True)
def acf(input_, calendar, delta_t, bridge_gaps, seed, out):
    """Autocorrelation curves.

    Market inputs produce three curves: raw return, raw volatility (which
    exposes the intraday periodicity), and adjusted volatility with the
    intraday pattern divided out. Signal inputs produce one curve.
    """
    cal = _calendar_from(calendar)
    notes = []
    diagnostics = {"warnings": notes}
    writers = []
    printed = []
    with _surfaced_warnings(notes):
        if input_.startswith("synth:") or _sniff_csv(input_) == "signal":
            [(label, series)] = _resolve_analysis_input(
                input_, cal, delta_t, bridge_gaps, seed, diagnostics
            )
            curve = autocorrelation(series)
            writers.append(("acf.csv", lambda p, c=curve: write_acf_csv(c, p)))
            printed.append(f"acf.csv: {int(len(series))} points, kind {series.kind}")
        else:
            kind = _sniff_csv(input_)
            spread = _load_spread(input_, kind, cal, delta_t, diagnostics)
            signals = _market_pipeline(spread, bridge_gaps, diagnostics)
            for name, key in (
                ("acf_raw_return.csv", "raw_return"),
                ("acf_raw_volatility.csv", "raw_volatility"),
                ("acf_adjusted_volatility.csv", "adjusted_volatility"),
            ):
                curve = autocorrelation(signals[key])
                writers.append((name, lambda p, c=curve: write_acf_csv(c, p)))
                printed.append(f"{name}: kind {key}")
    config = {
        "input": input_,
        "calendar": cal.as_string(),
        "delta_t": delta_t,
        "bridge_gaps": bridge_gaps,
        "seed": seed,
    }
    _emit(out, "acf", config, diagnostics, writers)
    for line in printed:
        click.echo(line)


def _analysis_options(command):
    options = [
        click.option("--input", "input_", required=True,
                     help="Tick, spread, or signal CSV, or synth:KIND[:k=v,...]."),
        click.option("--calendar", default=None),
        click.option("--delta-t", default=1, type=int, show_default=True),
        click.option("--windows", default=None,
                     help="lo:hi:count (log), dyadic[:lo[:hi]], or comma list."),
        click.option("--fit-range", default=None, help="lo:hi window-size bounds."),
        click.option("--bridge-gaps", is_flag=True),
        click.option("--bidirectional", is_flag=True,
                     help="Add the backward window pass (doubles window count)."),
        click.option("--detrend-order", default=1, type=int, show_default=True),
        click.option("--seed", default=0, type=int, show_default=True),
        click.option("--out", required=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _check_detrend_order(detrend_order):
    if not 1 <= detrend_order <= 3:
        raise ConfigError("--detrend-order must be 1, 2, or 3")


@cli.command(name="dfa")
@click.option("--crossover", "crossover_", is_flag=True,
              help="Search for a two-segment scaling break.")
@_analysis_options
def dfa_command(input_, calendar, delta_t, windows, fit_range, bridge_gaps,
                bidirectional, detrend_order, seed, out, crossover_):
    """Detrended fluctuation analysis (the q = 2 curve and exponent)."""
    _check_detrend_order(detrend_order)
    cal = _calendar_from(calendar)
    fit_bounds = _parse_fit_range(fit_range)
    notes = []
    diagnostics = {"warnings": notes}
    writers = []
    printed = []
    with _surfaced_warnings(notes):
        targets = _resolve_analysis_input(
            input_, cal, delta_t, bridge_gaps, seed, diagnostics
        )
        for label, series in targets:
            grid = _parse_windows(windows, int(len(series)), detrend_order)
            curve, fit = dfa(
                series, grid=grid, detrend_order=detrend_order,
                bidirectional=bidirectional, fit_range=fit_bounds,
            )
            if crossover_:
                fit = detect_crossover(curve, fit_bounds)
                fit = replace(fit, classification=classify_exponent(fit.exponent))
            suffix = f"_{label}" if label else ""
            payload = {
                "series": label or "signal",
                "fit": fit_to_dict(fit),
                "curve_diagnostics": {
                    "sizes": curve.sizes.tolist(),
                    "windows_used": curve.windows_used.tolist(),
                    "floored": curve.floored.tolist(),
                    "unreliable": curve.unreliable.tolist(),
                },
            }
            writers.append(
                (f"fluctuation{suffix}.csv",
                 lambda p, c=curve: write_fluctuation_csv(c, p))
            )
            writers.append(
                (f"fit{suffix}.json", lambda p, d=payload: write_json(p, d))
            )
            name = label or "signal"
            line = f"{name}: H = {fit.exponent:.4f} ({fit.classification})"
            if fit.crossover is not None and fit.crossover.detected:
                c = fit.crossover
                line += (
                    f"; crossover at t = {c.t_break}: "
                    f"{c.exponent_left:.4f} -> {c.exponent_right:.4f}"
                )
            printed.append(line)
    config = {
        "input": input_,
        "calendar": cal.as_string(),
        "delta_t": delta_t,
        "windows": windows or "default",
        "fit_range": fit_range or "full",
        "crossover": crossover_,
        "bridge_gaps": bridge_gaps,
        "bidirectional": bidirectional,
        "detrend_order": detrend_order,
        "seed": seed,
    }
    _emit(out, "dfa", config, diagnostics, writers)
    for line in printed:
        click.echo(line)


@cli.command(name="mfdfa")
@click.option("--q-grid", default=None,
              help="lo:hi:count or comma list; default -6:6:25.")
@_analysis_options
def mfdfa_command(input_, calendar, delta_t, windows, fit_range, bridge_gaps,
                  bidirectional, detrend_order, seed, out, q_grid):
    """Multifractal analysis: F_q(t), h(q), tau(q), and f(alpha)."""
    _check_detrend_order(detrend_order)
    cal = _calendar_from(calendar)
    fit_bounds = _parse_fit_range(fit_range)
    q_values = _parse_q_grid(q_grid)
    if q_values is not None and not np.any(np.isclose(q_values, 2.0)):
        click.echo(
            "note: the q grid does not include q = 2, so the standard "
            "detrended-fluctuation cross-check point is absent; proceeding",
            err=True,
        )
    notes = []
    diagnostics = {"warnings": notes}
    writers = []
    printed = []
    with _surfaced_warnings(notes):
        targets = _resolve_analysis_input(
            input_, cal, delta_t, bridge_gaps, seed, diagnostics
        )
        for label, series in targets:
            grid = _parse_windows(windows, int(len(series)), detrend_order)
            curves, fits = mfdfa(
                series, grid=grid, q_grid=q_values,
                detrend_order=detrend_order, bidirectional=bidirectional,
                fit_range=fit_bounds,
            )
            summary = summarize([f for f in fits if f is not None])
            suffix = f"_{label}" if label else ""
            payload = {
                "series": label or "signal",
                "summary": summary.to_dict(),
                "fits": [None if f is None else fit_to_dict(f) for f in fits],
                "flooring": [
                    {
                        "q": c.q,
                        "floored": c.floored.tolist(),
                        "unreliable": c.unreliable.tolist(),
                    }
                    for c in curves
                    if c.floored.any()
                ],
            }
            writers.append(
                (f"fluctuation{suffix}.csv",
                 lambda p, cs=curves: write_fluctuation_csv(cs, p))
            )
            writers.append(
                (f"summary{suffix}.csv",
                 lambda p, s=summary: write_summary_csv(s, p))
            )
            writers.append(
                (f"spectrum{suffix}.csv",
                 lambda p, s=summary: write_spectrum_csv(s, p))
            )
            writers.append(
                (f"summary{suffix}.json", lambda p, d=payload: write_json(p, d))
            )
            name = label or "signal"
            warn_text = f"; warnings: {', '.join(summary.warnings)}" if summary.warnings else ""
            printed.append(
                f"{name}: delta_h = {summary.delta_h:.4f}, "
                f"delta_alpha = {summary.delta_alpha:.4f}{warn_text}"
            )
    config = {
        "input": input_,
        "calendar": cal.as_string(),
        "delta_t": delta_t,
        "q_grid": q_grid or "default",
        "windows": windows or "default",
        "fit_range": fit_range or "full",
        "bridge_gaps": bridge_gaps,
        "bidirectional": bidirectional,
        "detrend_order": detrend_order,
        "seed": seed,
    }
    _emit(out, "mfdfa", config, diagnostics, writers)
    for line in printed:
        click.echo(line)


@cli.command()
@click.option("--input", "input_", required=True,
              help="Generator scheme synth:KIND[:k=v,...].")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True)
def synth(input_, seed, out):
    """Generate a synthetic series and write it as a signal CSV."""
    spec = _parse_synth_scheme(input_, seed)
    series = generate(spec)
    config = {"input": input_, "seed": seed, "generator": spec.to_dict()}
    _emit(out, "synth", config, {"length": spec.length},
          [("signal.csv", lambda p: write_signal_csv(series, p))])
    click.echo(f"generated {spec.kind} series of length {spec.length}")


@cli.command()
@click.option("--input", "input_", required=True,
              help="Signal CSV or synth:KIND[:k=v,...] to shuffle.")
@click.option("--seed", default=0, type=int, show_default=True,
              help="Seed of the permutation (generation uses the scheme's own seed).")
@click.option("--out", required=True)
def surrogate(input_, seed, out):
    """Shuffle a series into its distribution-preserving surrogate."""
    diagnostics = {}
    if input_.startswith("synth:"):
        spec = _parse_synth_scheme(input_, default_seed=0)
        diagnostics["generator"] = spec.to_dict()
        series = generate(spec)
    else:
        if _sniff_csv(input_) != "signal":
            raise FormatError("surrogate needs a signal CSV or a synth: scheme")
        series = read_signal_csv(input_)
    shuffled = shuffle_surrogate(series, seed)
    config = {"input": input_, "seed": seed}
    diagnostics["length"] = int(len(shuffled))
    _emit(out, "surrogate", config, diagnostics,
          [("signal.csv", lambda p: write_signal_csv(shuffled, p))])
    click.echo(f"shuffled {len(shuffled)} values (seed {seed})")


def main(argv=None):
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except SpreadfractError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 -- map anything unexpected to 3
        click.echo(f"internal error: {exc!r}", err=True)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
