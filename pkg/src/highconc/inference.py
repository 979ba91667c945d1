"""Location inference: spherical mean, confidence caps, Watson and Wald tests,
and the FvML concentration MLE."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .angular import fvml, moments_exact
from .dataset import Dataset
from .geometry import UnitVector, as_unit
from .special import chi2_quantile, chi2_survival


class DegenerateError(ValueError):
    """Estimator or statistic undefined on this sample."""


@dataclass(frozen=True)
class ConfidenceCap:
    """``{theta : theta' center >= threshold}``."""
    center: UnitVector
    threshold: float
    level: float
    kind: str = "feasible"
    degenerate: bool = False

    def contains(self, theta):
        return float(np.dot(self.center.coords, np.asarray(theta, dtype=float))) >= self.threshold

    @property
    def angular_radius(self):
        """Cap half-angle in radians."""
        return math.acos(max(-1.0, min(1.0, self.threshold)))

    def to_dict(self):
        return {"center": self.center.tolist(), "threshold": self.threshold,
                "level": self.level, "kind": self.kind, "degenerate": self.degenerate,
                "angular_radius_deg": math.degrees(self.angular_radius)}


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    kind: str
    level: float = None
    critical_value: float = None
    reject: bool = None

    __test__ = False  # not a pytest class

    def to_dict(self):
        return {"kind": self.kind, "statistic": self.statistic, "df": self.df,
                "p_value": self.p_value, "level": self.level,
                "critical_value": self.critical_value, "reject": self.reject}


@dataclass(frozen=True)
class RnDiagnostic:
    value: float
    mean_dot_theta0: float


def _rows(data):
    if isinstance(data, Dataset):
        return data.rows
    return Dataset(data).rows


def _mean_resultant(x):
    return x.mean(axis=0)


def spherical_mean(data):
    """``Xbar / |Xbar|``."""
    x = _rows(data)
    m = _mean_resultant(x)
    r = np.linalg.norm(m)
    if r <= 1e-10:
        raise DegenerateError("sample mean vanishes; spherical mean undefined")
    return UnitVector(m / r)


def mean_resultant_length(data):
    return float(np.linalg.norm(_mean_resultant(_rows(data))))


def one_minus_e2_hat(data, center):
    """``1 - e2_hat`` computed without cancellation."""
    x = _rows(data)
    center = as_unit(center)
    _, _, v2 = _kernels.projection_summary(x, center.coords)
    return v2


def e2_hat(data, center):
    """Mean of ``(X_i' center)^2``."""
    x = _rows(data)
    center = as_unit(center)
    if center.p != x.shape[1]:
        raise ValueError("dimension mismatch")
    return float(np.mean((x @ center.coords) ** 2))


def confidence_cap_feasible(data, level=0.95):
    """Feasible spherical cap at confidence ``level``.

    Threshold ``1 - (1 - e2_hat) chi2_{p-1, level} / (2 n (p-1))``; no
    knowledge of the angular function or the concentration is needed.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    x = _rows(data)
    n, p = x.shape
    center = spherical_mean(x)
    one_minus = one_minus_e2_hat(x, center)
    if one_minus <= 0.0:
        return ConfidenceCap(center, 1.0, level, "feasible", degenerate=True)
    q = chi2_quantile(p - 1, level)
    return ConfidenceCap(center, 1.0 - one_minus * q / (2.0 * n * (p - 1)), level, "feasible")


def confidence_cap_oracle(data, level, kappa_phi):
    """Cap using the true ``kappa phi_f(kappa)`` (simulation use only)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if not kappa_phi > 0:
        raise ValueError("kappa_phi must be positive")
    x = _rows(data)
    n, p = x.shape
    center = spherical_mean(x)
    q = chi2_quantile(p - 1, level)
    return ConfidenceCap(center, 1.0 - q / (2.0 * n * kappa_phi), level, "oracle")


def _null_pieces(x, theta0):
    theta0 = as_unit(theta0).coords
    if theta0.size != x.shape[1]:
        raise ValueError("dimension mismatch")
    xbar, _, denom = _kernels.projection_summary(x, theta0)
    if denom <= 1e-14:
        raise DegenerateError("all observations coincide with +/- theta0")
    return theta0, xbar, denom


def watson_statistic(data, theta0):
    x = _rows(data)
    n, p = x.shape
    th, xbar, denom = _null_pieces(x, theta0)
    proj = xbar - (xbar @ th) * th
    return float(n * (p - 1) * (proj @ proj) / denom)


def wald_statistic(data, theta0):
    x = _rows(data)
    n, p = x.shape
    th, xbar, denom = _null_pieces(x, theta0)
    r = np.linalg.norm(xbar)
    if r <= 1e-10:
        raise DegenerateError("sample mean vanishes; spherical mean undefined")
    that = xbar / r
    proj = that - (that @ th) * th
    return float(n * (p - 1) * (xbar @ th) ** 2 * (proj @ proj) / denom)


def location_test(data, theta0, level=0.05, kind="watson"):
    """Watson or Wald test of ``theta = theta0``, calibrated on ``chi2_{p-1}``."""
    if level is not None and not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    x = _rows(data)
    p = x.shape[1]
    kind = kind.lower()
    if kind == "watson":
        stat = watson_statistic(x, theta0)
    elif kind == "wald":
        stat = wald_statistic(x, theta0)
    else:
        raise ValueError("kind must be 'watson' or 'wald'")
    pval = chi2_survival(p - 1, stat)
    if level is None:
        return TestResult(stat, p - 1, pval, kind)
    crit = chi2_quantile(p - 1, 1.0 - level)
    return TestResult(stat, p - 1, pval, kind, level, crit, bool(stat > crit))


def _a3(kappa):
    # coth(k) - 1/k, series near 0
    if kappa < 1e-3:
        return kappa / 3.0 - kappa ** 3 / 45.0
    return 1.0 / math.tanh(kappa) - 1.0 / kappa


def mean_resultant_fvml(p, kappa):
    """``E[X'theta]`` under FvML; closed form for ``p = 3``, quadrature otherwise."""
    if p == 3:
        return _a3(kappa)
    return moments_exact(p, kappa, fvml()).e1


def fvml_concentration_mle(data, tol=1e-10):
    """Solve ``A_p(kappa) = Rbar`` for the FvML concentration."""
    x = _rows(data)
    p = x.shape[1]
    rbar = float(np.linalg.norm(x.mean(axis=0)))
    if rbar >= 1.0 - 1e-12:
        raise DegenerateError("mean resultant length ~1: concentration estimate diverges")
    if rbar <= 1e-12:
        raise DegenerateError("mean resultant length ~0: data near uniform")
    g = lambda k: mean_resultant_fvml(p, k) - rbar
    lo, hi = 1e-6, max(1.0, (p - 1) / (2.0 * (1.0 - rbar)))
    while g(lo) > 0:
        lo *= 0.1
    while g(hi) < 0:
        hi *= 2.0
    return float(brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def rn_diagnostic(data, theta0, e2_tilde_exact):
    """Ratio of the Watson denominator to its population value ``sqrt(2(p-1) e2_tilde)``."""
    x = _rows(data)
    p = x.shape[1]
    if not e2_tilde_exact > 0:
        raise ValueError("e2_tilde_exact must be positive")
    th = as_unit(theta0).coords
    xbar, _, denom = _kernels.projection_summary(x, th)
    return RnDiagnostic(denom / math.sqrt(2.0 * (p - 1) * e2_tilde_exact), float(xbar @ th))
