"""Vectorized numpy implementation of the windowed detrending kernel.

Both kernels compute, for non-overlapping windows of size t taken from the
start of a profile, the mean squared residual of a least-squares polynomial
fit inside each window. This module is the portable fallback and the only
implementation of orders above 1.
"""
import numpy as np


def fk2_order1(profile, t):
    """Mean squared residuals of per-window linear fits.

    Uses the closed form for a least-squares line on the centered abscissa
    x = i - (t-1)/2, where the normal equations decouple: intercept is the
    window mean and slope is (W @ x) / sum(x^2) with sum(x^2) = t(t^2-1)/12.
    """
    n_w = profile.shape[0] // t
    windows = profile[: n_w * t].reshape(n_w, t)
    x = np.arange(t) - (t - 1) / 2.0
    mean = windows.sum(axis=1) / t
    slope = (windows @ x) / (t * (t * t - 1.0) / 12.0)
    resid = windows - mean[:, None] - slope[:, None] * x
    return np.einsum("ij,ij->i", resid, resid) / t


def fk2_poly(profile, t, order):
    """Mean squared residuals of per-window polynomial fits of given order.

    Projects each window onto an orthonormal basis (QR of the Vandermonde
    matrix on x normalized to [-1, 1]) so high orders stay well conditioned.
    Requires t >= order + 2 so the fit leaves residual freedom.
    """
    n_w = profile.shape[0] // t
    windows = profile[: n_w * t].reshape(n_w, t)
    x = np.linspace(-1.0, 1.0, t)
    basis, _ = np.linalg.qr(np.vander(x, order + 1, increasing=True))
    resid = windows - (windows @ basis) @ basis.T
    return np.einsum("ij,ij->i", resid, resid) / t
