"""Vectorized adaptive Gauss-Kronrod (7/15) quadrature.

Panels are refined in batches; every panel of one pass is evaluated with a
single call of the integrand, so integrands should be numpy-vectorized.
The integrand may return several components at once, shape ``(k, m)``;
refinement continues until each component meets its own tolerance.
"""

import numpy as np

from . import _config

# QUADPACK qk15 abscissae (positive half) and weights
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Adaptive refinement hit the panel cap or met a non-finite integrand."""

    def __init__(self, message, panel=None):
        super().__init__(message)
        self.panel = panel


def _gk15(fun, a, b):
    """Apply GK15 to panels ``[a_i, b_i]``; returns (result, error, single)."""
    hl = 0.5 * (b - a)
    c = 0.5 * (b + a)
    x = c[:, None] + hl[:, None] * NODES[None, :]
    fx = np.asarray(fun(x.ravel()), dtype=float)
    single = fx.ndim == 1
    fx = fx.reshape((-1,) + x.shape)  # (k, npanel, 15)
    if not np.all(np.isfinite(fx)):
        bad = np.nonzero(~np.all(np.isfinite(fx), axis=(0, 2)))[0][0]
        raise QuadratureError(
            "non-finite integrand on panel [%r, %r]" % (a[bad], b[bad]),
            panel=(float(a[bad]), float(b[bad])))
    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    reskh = 0.5 * resk
    resasc = np.abs(fx - reskh[..., None]) @ KRONROD_WEIGHTS * np.abs(hl)
    resabs = np.abs(fx) @ KRONROD_WEIGHTS * np.abs(hl)
    err = np.abs((resk - resg) * hl)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return resk * hl, err, single


def integrate(fun, breakpoints, rtol=_config.QUAD_RTOL, atol=_config.QUAD_ATOL,
              max_panels=_config.QUAD_MAX_PANELS, segments=False):
    """Integrate ``fun`` over ``[breakpoints[0], breakpoints[-1]]``.

    Parameters
    ----------
    fun : callable
        Vectorized integrand, ``fun(x) -> (m,)`` or ``(k, m)``.
    breakpoints : array_like
        Increasing initial panel edges; place them where the integrand
        changes scale.
    segments : bool
        If true, also return the integral over each initial panel, shape
        ``(k, len(breakpoints) - 1)``.

    Returns
    -------
    value, error : ndarray
        Per-component integral and error estimate (scalars for a 1-D
        integrand).
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("breakpoints must be strictly increasing with >= 2 entries")
    a, b = edges[:-1].copy(), edges[1:].copy()
    owner = np.arange(a.size)
    val, err, scalar = _gk15(fun, a, b)

    done_val = np.zeros((val.shape[0], 0))
    done_err = np.zeros((val.shape[0], 0))
    done_owner = np.zeros(0, dtype=int)
    while True:
        total = done_val.sum(axis=1) + val.sum(axis=1)
        total_err = done_err.sum(axis=1) + err.sum(axis=1)
        tol = np.maximum(atol, rtol * np.abs(total))
        if np.all(total_err <= tol):
            break
        npanel = a.size + done_owner.size
        # a panel is worth splitting if its error is a visible share of the budget
        share = tol[:, None] / (2.0 * npanel)
        tiny = (b - a) <= 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        noise = np.all(err <= 100 * _EPS * np.abs(val) + 1e-300, axis=0)
        split = np.any(err > share, axis=0) & ~tiny & ~noise
        if not np.any(split):
            if np.all(total_err <= 100 * tol):
                # remaining error is rounding noise spread across panels
                break
            worst = np.argmax(err.max(axis=0))
            raise QuadratureError(
                "no further refinement possible (error %.3g > tol %.3g)"
                % (total_err.max(), tol.max()),
                panel=(float(a[worst]), float(b[worst])))
        keep = ~split
        done_val = np.concatenate([done_val, val[:, keep]], axis=1)
        done_err = np.concatenate([done_err, err[:, keep]], axis=1)
        done_owner = np.concatenate([done_owner, owner[keep]])
        sa, sb, so = a[split], b[split], owner[split]
        mid = 0.5 * (sa + sb)
        a = np.concatenate([sa, mid])
        b = np.concatenate([mid, sb])
        owner = np.concatenate([so, so])
        if a.size + done_owner.size > max_panels:
            raise QuadratureError(
                "panel cap %d exceeded" % max_panels,
                panel=(float(sa[0]), float(sb[0])))
        val, err, _ = _gk15(fun, a, b)

    all_val = np.concatenate([done_val, val], axis=1)
    all_err = np.concatenate([done_err, err], axis=1)
    all_owner = np.concatenate([done_owner, owner])
    value = all_val.sum(axis=1)
    error = all_err.sum(axis=1)
    if scalar:
        value, error = float(value[0]), float(error[0])
    if not segments:
        return value, error
    seg = np.zeros((all_val.shape[0], edges.size - 1))
    for k in range(all_val.shape[0]):
        seg[k] = np.bincount(all_owner, weights=all_val[k], minlength=edges.size - 1)
    return value, error, (seg[0] if scalar else seg)
