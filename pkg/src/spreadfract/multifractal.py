"""Multifractal descriptors from per-q scaling fits.

h(q) comes from the per-q power-law fits; tau(q) = q h(q) - D_f; the
singularity spectrum is the Legendre transform alpha = dtau/dq (finite
differences, no parametric model) with f(alpha) = q alpha - tau evaluated
pointwise on the q-grid. The widths are delta_h = h(q_min) - h(q_max) and
delta_alpha = max(alpha) - min(alpha).
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FitError, SpectrumError
from .ioutil import fmt_float, write_csv, write_json

CONCAVITY_TOLERANCE = 1e-6
F_ALPHA_CAP_TOLERANCE = 0.05
DELTA_H_NOISE_FLOOR = -0.02


@dataclass(frozen=True)
class MultifractalSummary:
    """h(q), tau(q), (alpha, f(alpha)), widths, and data-quality warnings.

    h_spread is max(h) - min(h), a diagnostic alongside the endpoint
    difference delta_h; they differ only when h is non-monotone in q.
    """

    q_grid: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    delta_h: float
    delta_alpha: float
    d_f: float
    h_spread: float
    warnings: tuple

    def to_dict(self):
        return {
            "q_grid": self.q_grid.tolist(),
            "h": self.h.tolist(),
            "tau": self.tau.tolist(),
            "alpha": self.alpha.tolist(),
            "f_alpha": self.f_alpha.tolist(),
            "delta_h": self.delta_h,
            "delta_alpha": self.delta_alpha,
            "d_f": self.d_f,
            "h_spread": self.h_spread,
            "warnings": list(self.warnings),
        }


def scaling_exponents(fits, d_f=1.0):
    """(q, h, tau) arrays from per-q fits; invalid fits are dropped loudly.

    Each fit must carry its q. tau(q) = q h(q) - d_f elementwise.
    """
    fits = list(fits)
    rows = []
    for fit in fits:
        if fit is None:
            continue
        if fit.q is None:
            raise DataError("every fit must carry its q to build h(q)")
        if np.isfinite(fit.exponent):
            rows.append((float(fit.q), float(fit.exponent)))
        else:
            warnings.warn(f"q={fit.q}: non-finite exponent dropped")
    dropped = len(fits) - len(rows)
    if dropped:
        warnings.warn(f"{dropped} of {len(fits)} q values dropped from h(q)")
    if not rows:
        raise FitError("no valid fits to build h(q) from")
    rows.sort(key=lambda pair: pair[0])
    q = np.array([pair[0] for pair in rows])
    h = np.array([pair[1] for pair in rows])
    tau = q * h - d_f
    return q, h, tau


def legendre_spectrum(q_grid, tau):
    """alpha = dtau/dq and f(alpha) = q alpha - tau on the q-grid.

    The derivative uses second-order central differences on the possibly
    non-uniform grid, with second-order one-sided stencils at the ends
    (exact for quadratic tau).
    """
    q_grid = np.asarray(q_grid, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if q_grid.shape != tau.shape:
        raise SpectrumError("q grid and tau must align")
    if q_grid.shape[0] < 5:
        raise SpectrumError(
            f"singularity spectrum needs at least 5 q points, got {q_grid.shape[0]}"
        )
    if (np.diff(q_grid) <= 0).any():
        raise SpectrumError("q grid must be strictly increasing")
    if not np.isfinite(tau).all():
        raise SpectrumError("tau must be finite to transform")
    alpha = np.gradient(tau, q_grid, edge_order=2)
    f_alpha = q_grid * alpha - tau
    return alpha, f_alpha


def multifractal_width(h, alpha):
    """(delta_h, delta_alpha): endpoint difference of h and full span of alpha.

    h must be ordered by increasing q: delta_h = h at q_min minus h at
    q_max, positive when small fluctuations scale harder than large ones.
    """
    h = np.asarray(h, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    delta_h = float(h[0] - h[-1])
    delta_alpha = float(alpha.max() - alpha.min())
    return delta_h, delta_alpha


def summarize(fits, d_f=1.0):
    """Full multifractal summary from per-q fits, with quality warnings.

    Warnings (never silent corrections): non-concave tau, f(alpha)
    exceeding d_f beyond tolerance, and negative delta_h beyond the noise
    floor.
    """
    q, h, tau = scaling_exponents(fits, d_f)
    alpha, f_alpha = legendre_spectrum(q, tau)
    delta_h, delta_alpha = multifractal_width(h, alpha)
    notes = []
    if q.shape[0] >= 2:
        slopes = np.diff(tau) / np.diff(q)
        if (np.diff(tau) < -CONCAVITY_TOLERANCE).any():
            notes.append("tau not non-decreasing")
        if (np.diff(slopes) > CONCAVITY_TOLERANCE).any():
            notes.append("non-concave")
    if float(f_alpha.max()) > d_f + F_ALPHA_CAP_TOLERANCE:
        notes.append("f_alpha exceeds the fractal dimension")
    if delta_h < DELTA_H_NOISE_FLOOR:
        notes.append("negative delta_h beyond noise floor")
    return MultifractalSummary(
        q_grid=q,
        h=h,
        tau=tau,
        alpha=alpha,
        f_alpha=f_alpha,
        delta_h=delta_h,
        delta_alpha=delta_alpha,
        d_f=d_f,
        h_spread=float(h.max() - h.min()),
        warnings=tuple(notes),
    )


def write_summary_csv(summary, path):
    """Exponent CSV: header q,h,tau."""
    rows = (
        (fmt_float(q), fmt_float(h), fmt_float(tau))
        for q, h, tau in zip(summary.q_grid, summary.h, summary.tau)
    )
    write_csv(path, ("q", "h", "tau"), rows)


def write_spectrum_csv(summary, path):
    """Spectrum CSV: header alpha,f_alpha."""
    rows = (
        (fmt_float(a), fmt_float(f))
        for a, f in zip(summary.alpha, summary.f_alpha)
    )
    write_csv(path, ("alpha", "f_alpha"), rows)


def write_summary_json(summary, path):
    write_json(path, summary.to_dict())
