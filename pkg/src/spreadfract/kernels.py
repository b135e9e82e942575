"""Detrending-kernel dispatch and the threaded residual tensor.

The compiled kernel is used for linear detrending when the extension built;
the numpy kernel is the fallback and the only path for orders >= 2. Set
SPREADFRACT_KERNEL=py or =cy to force a backend. Results for a fixed
backend are bitwise deterministic regardless of thread count: each window
size is reduced by exactly one task and written to its own slot, so no
floating-point reduction order ever depends on scheduling.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernel_py
from .errors import ConfigError, WindowError

try:
    from . import _kernel_cy
except ImportError:
    _kernel_cy = None


def _select_backend():
    forced = os.environ.get("SPREADFRACT_KERNEL", "").strip().lower()
    if forced == "py":
        return "py"
    if forced == "cy":
        if _kernel_cy is None:
            raise ConfigError(
                "SPREADFRACT_KERNEL=cy but the compiled kernel is not installed"
            )
        return "cy"
    if forced:
        raise ConfigError(f"SPREADFRACT_KERNEL must be 'py' or 'cy', got {forced!r}")
    return "cy" if _kernel_cy is not None else "py"


BACKEND = _select_backend()


def resolve_threads(threads=None):
    """Worker count: explicit argument, else SPREADFRACT_THREADS, else CPU count."""
    if threads is None:
        env = os.environ.get("SPREADFRACT_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"SPREADFRACT_THREADS must be an integer, got {env!r}")
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


def window_residuals(profile, t, detrend_order=1):
    """Per-window mean squared residuals f_k(t)^2 for one window size.

    Windows are non-overlapping, taken from the start of the profile; the
    trailing remainder shorter than t is discarded.
    """
    profile = np.ascontiguousarray(profile, dtype=np.float64)
    t = int(t)
    if detrend_order < 1:
        raise ConfigError("detrend order must be >= 1")
    if t < detrend_order + 2:
        raise WindowError(
            f"window size {t} too small for detrend order {detrend_order}: "
            f"need at least {detrend_order + 2} points per window"
        )
    if t > profile.shape[0]:
        raise WindowError(
            f"window size {t} exceeds series length {profile.shape[0]}"
        )
    if detrend_order == 1 and BACKEND == "cy":
        out = np.empty(profile.shape[0] // t, dtype=np.float64)
        _kernel_cy.fk2_order1_into(profile, t, out)
        return out
    if detrend_order == 1:
        return _kernel_py.fk2_order1(profile, t)
    return _kernel_py.fk2_poly(profile, t, detrend_order)


def residual_tensor(profile, sizes, detrend_order=1, threads=None):
    """window_residuals for every size, one result slot per size.

    Sizes are independent, so they are distributed over a thread pool; both
    kernels release the GIL inside their heavy loops (the numpy kernel via
    numpy's own released-GIL primitives).
    """
    profile = np.ascontiguousarray(profile, dtype=np.float64)
    sizes = [int(t) for t in sizes]
    threads = min(resolve_threads(threads), max(len(sizes), 1))
    if threads == 1 or len(sizes) < 2:
        return [window_residuals(profile, t, detrend_order) for t in sizes]
    results = [None] * len(sizes)

    def run(slot):
        results[slot] = window_residuals(profile, sizes[slot], detrend_order)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run, range(len(sizes))))
    return results
