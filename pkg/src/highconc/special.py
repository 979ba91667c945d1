"""Central and noncentral chi-square tail probabilities and quantiles."""

import math

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln


class ConvergenceError(RuntimeError):
    pass


def _check_df(df):
    if int(df) != df or df < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    return int(df)


def chi2_cdf(df, x):
    df = _check_df(df)
    x = np.asarray(x, dtype=float)
    out = gammainc(0.5 * df, 0.5 * np.maximum(x, 0.0))
    return float(out) if out.ndim == 0 else out


def chi2_survival(df, x):
    """``P[chi2_df > x]``."""
    df = _check_df(df)
    x = np.asarray(x, dtype=float)
    out = gammaincc(0.5 * df, 0.5 * np.maximum(x, 0.0))
    return float(out) if out.ndim == 0 else out


def chi2_logpdf(df, x):
    df = _check_df(df)
    x = np.asarray(x, dtype=float)
    k = 0.5 * df
    with np.errstate(divide="ignore"):
        out = (k - 1.0) * np.log(x) - 0.5 * x - k * math.log(2.0) - gammaln(k)
    return np.where(x > 0, out, -np.inf) if df > 2 else out


def chi2_quantile(df, prob, tol=1e-12, maxiter=200):
    """Inverse of the chi-square CDF.

    Newton steps on the regularized incomplete gamma, falling back to
    bisection whenever a step leaves the current bracket.
    """
    df = _check_df(df)
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie in (0, 1)")
    if df == 2:
        return -2.0 * math.log1p(-prob)
    k = 0.5 * df
    # Wilson-Hilferty start
    from scipy.special import ndtri
    z = float(ndtri(prob))
    c = 2.0 / (9.0 * df)
    x = max(df * (1.0 - c + z * math.sqrt(c)) ** 3, 1e-8)
    lo, hi = 0.0, math.inf
    for _ in range(maxiter):
        # work on whichever tail is smaller to keep relative accuracy
        if prob < 0.5:
            g = gammainc(k, 0.5 * x) - prob
        else:
            g = (1.0 - prob) - gammaincc(k, 0.5 * x)
        if g > 0:
            hi = x
        else:
            lo = x
        logpdf = (k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - gammaln(k)
        step = g / math.exp(logpdf) if logpdf > -700 else math.inf
        x_new = x - step
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * x
        if abs(x_new - x) <= tol * max(x, 1e-300):
            return x_new
        x = x_new
    raise ConvergenceError("chi2_quantile did not converge (df=%d, prob=%r)" % (df, prob))


def noncentral_chi2_survival(df, lam, x, tail=1e-12):
    """``P[chi2_df(lam) > x]`` as a Poisson(lam/2) mixture of central tails.

    Terms are summed outward from the Poisson mode until the Poisson mass not
    yet visited is below ``tail``.
    """
    df = _check_df(df)
    lam = float(lam)
    x = float(x)
    if not (math.isfinite(lam) and math.isfinite(x)) or lam < 0:
        raise ValueError("lam must be finite and >= 0, x finite")
    if x <= 0:
        return 1.0
    if lam == 0.0:
        return chi2_survival(df, x)
    mu = 0.5 * lam
    mode = int(math.floor(mu))

    def weight(j):
        return math.exp(-mu + j * math.log(mu) - gammaln(j + 1.0))

    total = 0.0
    mass = 0.0
    j_up, j_down = mode, mode - 1
    while True:
        wj = weight(j_up)
        total += wj * float(gammaincc(0.5 * df + j_up, 0.5 * x))
        mass += wj
        j_up += 1
        if j_down >= 0:
            wj = weight(j_down)
            total += wj * float(gammaincc(0.5 * df + j_down, 0.5 * x))
            mass += wj
            j_down -= 1
        if 1.0 - mass < tail:
            break
        if j_up - mode > 100000:
            raise ConvergenceError("Poisson mixture failed to converge")
    return min(1.0, total)
