# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled windowed linear-detrending kernel.

Single-pass C loop over non-overlapping windows; same contract as
_kernel_py.fk2_order1 but writes into a caller-allocated buffer and runs
without the GIL so window sizes can be processed on real threads.
"""


def fk2_order1_into(const double[::1] profile, Py_ssize_t t, double[::1] out):
    """Fill out[k] with the mean squared linear-fit residual of window k.

    out must have length profile.shape[0] // t.
    """
    cdef Py_ssize_t n_w = profile.shape[0] // t
    cdef Py_ssize_t k, i, base
    cdef double x_mid = (t - 1) / 2.0
    cdef double sum_x2 = t * ((<double> t) * t - 1.0) / 12.0
    cdef double s, sx, mean, slope, r, acc
    if out.shape[0] != n_w:
        raise ValueError("output buffer length must equal the window count")
    with nogil:
        for k in range(n_w):
            base = k * t
            s = 0.0
            sx = 0.0
            for i in range(t):
                s += profile[base + i]
                sx += profile[base + i] * (i - x_mid)
            mean = s / t
            slope = sx / sum_x2
            acc = 0.0
            for i in range(t):
                r = profile[base + i] - mean - slope * (i - x_mid)
                acc += r * r
            out[k] = acc / t
