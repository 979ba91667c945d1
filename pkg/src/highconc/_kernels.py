"""Hot inner loops of the sampler and the Monte Carlo harness.

Each kernel has a numpy implementation (``*_numpy``) and a numba one
(``*_numba``).  The public names dispatch to numba unless it is missing or
``HIGHCONC_DISABLE_JIT=1`` is set in the environment at import time.
"""

import numpy as np

from . import _config

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None


def pchip_slopes(x, y):
    """Fritsch-Carlson monotone slopes at the knots ``x`` (strictly increasing)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = np.diff(x)
    delta = np.diff(y) / h
    d = np.zeros_like(y)
    if x.size == 2:
        d[:] = delta[0]
        return d
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    same = (np.sign(delta[1:]) * np.sign(delta[:-1]) > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = (w1 + w2) / (w1 / delta[:-1] + w2 / delta[1:])
    d[1:-1] = np.where(same, hm, 0.0)
    # one-sided three-point ends, clipped to keep monotonicity
    for end, (h0, h1, m0, m1) in ((0, (h[0], h[1], delta[0], delta[1])),
                                  (-1, (h[-1], h[-2], delta[-1], delta[-2]))):
        e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
        if np.sign(e) != np.sign(m0):
            e = 0.0
        elif np.sign(m0) != np.sign(m1) and abs(e) > abs(3.0 * m0):
            e = 3.0 * m0
        d[end] = e
    return d


# --- numpy implementations -------------------------------------------------

def hermite_eval_numpy(xk, yk, dk, xq):
    """Evaluate the cubic Hermite interpolant with knot slopes ``dk`` at ``xq``."""
    xq = np.asarray(xq, dtype=float)
    i = np.clip(np.searchsorted(xk, xq, side="right") - 1, 0, xk.size - 2)
    h = xk[i + 1] - xk[i]
    t = (xq - xk[i]) / h
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * yk[i] + (t3 - 2 * t2 + t) * h * dk[i]
            + (-2 * t3 + 3 * t2) * yk[i + 1] + (t3 - t2) * h * dk[i + 1])


def tangent_rows_numpy(w, z, pole, frame):
    """Rows ``(1 - w) pole + sqrt(w (2 - w)) S`` with ``S`` the normalized ``z @ frame``."""
    s = z @ frame
    s /= np.sqrt(np.einsum("ij,ij->i", s, s))[:, None]
    v = np.sqrt(w * (2.0 - w))
    return (1.0 - w)[:, None] * pole[None, :] + v[:, None] * s


def projection_summary_numpy(x, a):
    """``(mean row, mean of 1 - x'a, mean of 1 - (x'a)^2)`` with the last two cancellation-free."""
    d = x - a[None, :]
    w = 0.5 * np.einsum("ij,ij->i", d, d)
    return x.mean(axis=0), w.mean(), (w * (2.0 - w)).mean()


# --- numba implementations -------------------------------------------------

def _hermite_eval_loop(xk, yk, dk, xq):
    n = xq.size
    m = xk.size
    out = np.empty(n)
    for j in range(n):
        x = xq[j]
        lo, hi = 0, m - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if xk[mid] <= x:
                lo = mid
            else:
                hi = mid
        h = xk[lo + 1] - xk[lo]
        t = (x - xk[lo]) / h
        t2 = t * t
        t3 = t2 * t
        out[j] = ((2 * t3 - 3 * t2 + 1) * yk[lo] + (t3 - 2 * t2 + t) * h * dk[lo]
                  + (-2 * t3 + 3 * t2) * yk[lo + 1] + (t3 - t2) * h * dk[lo + 1])
    return out


def _tangent_rows_loop(w, z, pole, frame):
    n, q = z.shape
    p = pole.size
    out = np.empty((n, p))
    s = np.empty(p)
    for i in range(n):
        for k in range(p):
            acc = 0.0
            for j in range(q):
                acc += z[i, j] * frame[j, k]
            s[k] = acc
        nrm = 0.0
        for k in range(p):
            nrm += s[k] * s[k]
        nrm = np.sqrt(nrm)
        wi = w[i]
        v = np.sqrt(wi * (2.0 - wi))
        for k in range(p):
            out[i, k] = (1.0 - wi) * pole[k] + v * s[k] / nrm
    return out


def _projection_summary_loop(x, a):
    n, p = x.shape
    mean = np.zeros(p)
    sw = 0.0
    sv = 0.0
    for i in range(n):
        d2 = 0.0
        for k in range(p):
            mean[k] += x[i, k]
            d = x[i, k] - a[k]
            d2 += d * d
        w = 0.5 * d2
        sw += w
        sv += w * (2.0 - w)
    for k in range(p):
        mean[k] /= n
    return mean, sw / n, sv / n


if numba is not None:
    _jit = numba.njit(cache=True, nogil=True)
    hermite_eval_numba = _jit(_hermite_eval_loop)
    tangent_rows_numba = _jit(_tangent_rows_loop)
    projection_summary_numba = _jit(_projection_summary_loop)
else:  # pragma: no cover
    hermite_eval_numba = tangent_rows_numba = projection_summary_numba = None

USE_NUMBA = numba is not None and not _config.DISABLE_JIT
BACKEND = "numba" if USE_NUMBA else "numpy"


def hermite_eval(xk, yk, dk, xq):
    if USE_NUMBA:
        return hermite_eval_numba(xk, yk, dk, np.ascontiguousarray(xq, dtype=float))
    return hermite_eval_numpy(xk, yk, dk, xq)


def tangent_rows(w, z, pole, frame):
    if USE_NUMBA:
        return tangent_rows_numba(np.ascontiguousarray(w), np.ascontiguousarray(z),
                                  np.ascontiguousarray(pole), np.ascontiguousarray(frame))
    return tangent_rows_numpy(w, z, pole, frame)


def projection_summary(x, a):
    x = np.ascontiguousarray(x, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    if USE_NUMBA:
        m, w, v = projection_summary_numba(x, a)
        return m, float(w), float(v)
    m, w, v = projection_summary_numpy(x, a)
    return m, float(w), float(v)
