"""Angular functions, normalizing constants and moments of the colatitude cosine.

Every integral over ``s = x'theta`` in [-1, 1] is carried out in the angle
``t = arccos(s)``, for which ``(1 - s^2)^{(p-3)/2} ds = sin^{p-2}(t) dt`` has
no endpoint singularity for any ``p >= 2``.  The integrand is evaluated in
log-domain relative to ``log f(kappa)`` (its maximum), and initial panels
are the images of the grid ``r = (1 - s) * kappa * phi_f(kappa)`` on which
the mass concentrates.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _config
from .geometry import as_unit, one_minus_dot
from .quadrature import QuadratureError, integrate

__all__ = [
    "AngularFunction", "RotSymModel", "MomentSet", "HighConcentration",
    "fvml", "power_exp", "polynomial", "arctan", "custom", "from_name",
    "log_norm_const", "log_density", "colatitude_logpdf", "colatitude_cdf",
    "moments_exact", "moments_asymptotic", "classify_high_concentration",
    "kappa_for_kappa_phi", "colatitude_edges",
]


class AngularFunction:
    """Monotone angular function ``f`` of a rotationally symmetric law.

    Use the module-level constructors (:func:`fvml`, :func:`power_exp`,
    :func:`polynomial`, :func:`arctan`, :func:`custom`) rather than calling
    this directly.  Instances are immutable.

    ``limit`` describes ``kappa * phi_f(kappa)`` as ``kappa -> inf``: one of
    ``"diverges"``, ``"finite"``, ``"vanishes"`` or ``"unknown"``.
    """

    def __init__(self, family, b=None, log_f=None, phi_f=None, limit="unknown", name=None):
        self._family = family
        self._b = None if b is None else float(b)
        self._log_f = log_f
        self._phi_f = phi_f
        self._limit = limit
        self._name = name
        self._check_monotone()

    family = property(lambda self: self._family)
    b = property(lambda self: self._b)
    limit = property(lambda self: self._limit)

    @property
    def name(self):
        if self._name:
            return self._name
        if self._b is None:
            return self._family
        return "%s(b=%g)" % (self._family, self._b)

    def __repr__(self):
        return "AngularFunction(%s)" % self.name

    def to_dict(self):
        return {"family": self._family, "b": self._b}

    def _check_monotone(self):
        z = np.concatenate([-np.logspace(3, -3, 25), [0.0], np.logspace(-3, 3, 25)])
        with np.errstate(all="ignore"):
            lf = self.log_f(z)
        neg, pos = lf[:26], lf[25:]
        if np.any(np.isnan(lf)):
            raise ValueError("log_f returned NaN on the probe grid")
        with np.errstate(invalid="ignore"):
            dneg = np.diff(neg)
        if np.any(dneg < -1e-12 * np.maximum(1.0, np.abs(neg[1:]))):
            raise ValueError("f must be non-decreasing on (-inf, 0]")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("f must be increasing on [0, inf)")

    # --- evaluations -------------------------------------------------------

    def log_f(self, z):
        z = np.asarray(z, dtype=float)
        fam = self._family
        if fam == "fvml":
            return z.copy()
        if fam == "powerexp":
            return np.sign(z) * np.abs(z) ** self._b
        if fam == "polynomial":
            with np.errstate(divide="ignore"):
                return np.where(z > 0, self._b * np.log(np.where(z > 0, z, 1.0)), -np.inf)
        if fam == "arctan":
            return np.log(np.arctan2(1.0, -z))
        return np.asarray(self._log_f(z), dtype=float)

    def phi_f(self, z):
        """``f'/f``."""
        z = np.asarray(z, dtype=float)
        fam = self._family
        if fam == "fvml":
            return np.ones_like(z)
        if fam == "powerexp":
            b = self._b
            with np.errstate(divide="ignore"):
                return b * np.abs(z) ** (b - 1.0)
        if fam == "polynomial":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(z > 0, self._b / z, np.nan)
        if fam == "arctan":
            return 1.0 / ((1.0 + z * z) * np.arctan2(1.0, -z))
        if self._phi_f is not None:
            return np.asarray(self._phi_f(z), dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(z))
        return (self.log_f(z + h) - self.log_f(z - h)) / (2.0 * h)

    def kappa_phi(self, kappa):
        return float(kappa * self.phi_f(np.array(float(kappa))))

    def log_ratio(self, kappa, w):
        """``log f(kappa (1 - w)) - log f(kappa)`` for ``w = 1 - s`` in [0, 2]."""
        w = np.asarray(w, dtype=float)
        fam = self._family
        if fam == "fvml":
            return -kappa * w
        if fam == "powerexp":
            b = self._b
            kb = kappa ** b
            with np.errstate(divide="ignore", invalid="ignore"):
                near = kb * np.expm1(b * np.log1p(-np.minimum(w, 1.0)))
                far = -(kappa * np.maximum(w - 1.0, 0.0)) ** b - kb
            return np.where(w <= 1.0, near, far)
        if fam == "polynomial":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(w < 1.0, self._b * np.log1p(-np.minimum(w, 1.0)), -np.inf)
        if fam == "arctan":
            return np.log(np.arctan2(1.0, -kappa * (1.0 - w))) - math.log(math.atan2(1.0, -kappa))
        return self.log_f(kappa * (1.0 - w)) - float(self.log_f(np.array(float(kappa))))

    def taylor_remainder(self, z, h):
        """``log f(z + h) - log f(z) - h phi_f(z)``, cancellation-free for the built-ins."""
        z = np.asarray(z, dtype=float)
        h = np.asarray(h, dtype=float)
        fam = self._family
        if fam == "fvml":
            return np.zeros(np.broadcast(z, h).shape)
        if fam == "powerexp":
            b = self._b
            zz, hh = np.broadcast_arrays(z, h)
            out = np.empty(zz.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                x = hh / zz
                same = (zz != 0) & (x > -1.0)
                az = np.abs(zz)
                # |z|^b * sgn(z) * ((1 + x)^b - 1 - b x)
                small = same & (np.abs(x) < 1e-2)
                big = same & ~small
                xs = x[small]
                term = np.zeros(xs.shape)
                coef = 1.0
                xpow = np.ones(xs.shape)
                for k in range(1, 12):
                    coef *= (b - k + 1) / k
                    xpow = xpow * xs
                    if k >= 2:
                        term = term + coef * xpow
                out[small] = np.sign(zz[small]) * az[small] ** b * term
                xb = x[big]
                out[big] = np.sign(zz[big]) * az[big] ** b * (
                    np.expm1(b * np.log1p(xb)) - b * xb)
            other = ~same
            if np.any(other):
                zo, ho = zz[other], hh[other]
                out[other] = self.log_f(zo + ho) - self.log_f(zo) - ho * self.phi_f(zo)
            return out
        return self.log_f(z + h) - self.log_f(z) - h * self.phi_f(z)


def fvml():
    """Fisher-von Mises-Langevin, ``f = exp``."""
    return AngularFunction("fvml", limit="diverges")


def power_exp(b):
    """``f_b(z) = exp(sgn(z) |z|^b)``, ``b > 0``; ``b = 1`` is the FvML function."""
    if not b > 0:
        raise ValueError("power-exponential exponent must be positive")
    return AngularFunction("powerexp", b=b, limit="diverges")


def polynomial(b=1.0):
    """``f(z) = z^b`` on ``z >= 0`` and 0 elsewhere."""
    if not b > 0:
        raise ValueError("polynomial exponent must be positive")
    return AngularFunction("polynomial", b=b, limit="finite")


def arctan():
    """``f(z) = pi/2 + arctan(z)``."""
    return AngularFunction("arctan", limit="vanishes")


def custom(log_f, phi_f=None, name="custom"):
    """User-supplied angular function; ``phi_f`` defaults to central differences."""
    return AngularFunction("custom", log_f=log_f, phi_f=phi_f, name=name)


def from_name(family, b=None):
    family = family.lower().replace("-", "").replace("_", "")
    if family in ("fvml", "vmf", "exp"):
        return fvml() if b in (None, 1, 1.0) else power_exp(b)
    if family in ("powerexp", "fb"):
        return power_exp(1.0 if b is None else b)
    if family in ("polynomial", "poly"):
        return polynomial(1.0 if b is None else b)
    if family == "arctan":
        return arctan()
    raise ValueError("unknown angular family %r" % family)


def kappa_for_kappa_phi(f, target):
    """Concentration ``kappa`` at which ``kappa * phi_f(kappa)`` equals ``target``."""
    if f.family == "fvml":
        return float(target)
    if f.family == "powerexp":
        return float((target / f.b) ** (1.0 / f.b))
    from scipy.optimize import brentq
    g = lambda k: f.kappa_phi(k) - target
    lo, hi = 1e-8, 1.0
    while g(hi) < 0:
        hi *= 4.0
        if hi > 1e300:
            raise ValueError("kappa * phi_f(kappa) never reaches %g" % target)
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=1e-14))


@dataclass(frozen=True)
class RotSymModel:
    """``Rot_p(theta, kappa, f)``."""
    theta: object
    kappa: float
    f: AngularFunction = field(default_factory=fvml)

    def __post_init__(self):
        object.__setattr__(self, "theta", as_unit(self.theta))
        object.__setattr__(self, "kappa", float(self.kappa))
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def p(self):
        return self.theta.p

    @property
    def kappa_phi(self):
        return self.f.kappa_phi(self.kappa)


@dataclass(frozen=True)
class MomentSet:
    """Moments of ``u = X'theta``.

    ``one_minus_e1``/``one_minus_e2`` carry ``1 - e1`` and ``1 - e2`` at full
    relative precision; ``e1``/``e2`` themselves round to 1 under strong
    concentration.
    """
    log_c: float
    e1: float
    e2: float
    e2_tilde: float
    ev4: float
    mode: str
    one_minus_e1: float = float("nan")
    one_minus_e2: float = float("nan")
    eu4: float = float("nan")
    kappa_phi: float = float("nan")

    @property
    def ratio_e2(self):
        """``(1 - e2)^2 / e2_tilde``; tends to ``2(p-1)``."""
        return self.one_minus_e2 ** 2 / self.e2_tilde

    @property
    def ratio_v4(self):
        """``E[v^4] / e2_tilde``; tends to ``2(p+1)``."""
        return self.ev4 / self.e2_tilde


class HighConcentration(enum.Enum):
    PROVIDES = "provides"
    DOES_NOT_PROVIDE = "does-not-provide"
    UNKNOWN = "unknown"


# --- quadrature over the colatitude ---------------------------------------

def _check_p(p):
    if int(p) != p or p < 2:
        raise ValueError("dimension p must be an integer >= 2")
    return int(p)


def _safe_kappa_phi(f, kappa):
    with np.errstate(all="ignore"):
        k = f.kappa_phi(kappa)
    return k if np.isfinite(k) and k > 0 else float("nan")


def colatitude_edges(kappa_phi):
    """Initial panel edges in ``t = arccos(s)``.

    Geometric in ``r = (1 - s) * kappa_phi`` when the law is concentrated,
    uniform in ``t`` otherwise.
    """
    base = np.linspace(0.0, np.pi, 9)
    if not (np.isfinite(kappa_phi) and kappa_phi > 4.0):
        return base
    r = [0.0, 2.0 ** -8]
    while r[-1] * 2.0 < 2.0 * kappa_phi:
        r.append(r[-1] * 2.0)
    r = np.asarray(r)
    t = 2.0 * np.arcsin(np.sqrt(r / (2.0 * kappa_phi)))
    edges = np.unique(np.concatenate([t, base[base > t[-1]], [np.pi / 2, np.pi]]))
    return edges


def _colat_terms(p, kappa, f, t):
    """(w, v^2, weighted shifted density) at angles ``t``."""
    half = np.sin(0.5 * t)
    w = 2.0 * half * half
    st = np.sin(t)
    lr = f.log_ratio(kappa, w)
    with np.errstate(over="ignore"):
        dens = np.exp(lr)
    if p != 2:
        dens = dens * st ** (p - 2)
    return w, st * st, dens


def _mass(p, kappa, f, edges=None):
    """``int sin^{p-2}(t) exp(log f(kappa cos t) - log f(kappa)) dt``."""
    if edges is None:
        edges = colatitude_edges(_safe_kappa_phi(f, kappa))
    val, _ = integrate(lambda t: _colat_terms(p, kappa, f, t)[2], edges)
    if not val > 0:
        raise QuadratureError("normalizing integral vanished (p=%d, kappa=%g)" % (p, kappa))
    return val


def log_norm_const(p, kappa, f):
    """``log c_{p,kappa,f}``; ``1/c`` is the integral of ``(1-s^2)^{(p-3)/2} f(kappa s)``."""
    p = _check_p(p)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    mass = _mass(p, kappa, f)
    return -(math.log(mass) + float(f.log_f(np.array(float(kappa)))))


def _log_sphere_factor(p):
    # log[Gamma((p-1)/2) / (2 pi^{(p-1)/2})]
    return gammaln((p - 1) / 2.0) - math.log(2.0) - 0.5 * (p - 1) * math.log(math.pi)


def log_density(x, model):
    """Log density of ``Rot_p(theta, kappa, f)`` w.r.t. surface measure.

    ``x`` may be a single unit vector or an ``(n, p)`` array of rows.
    """
    x = np.asarray(x, dtype=float)
    th = model.theta.coords
    if x.shape[-1] != th.size:
        raise ValueError("dimension mismatch")
    mass = _mass(model.p, model.kappa, model.f)
    w = one_minus_dot(x, th)
    out = _log_sphere_factor(model.p) - math.log(mass) + model.f.log_ratio(model.kappa, w)
    return float(out) if np.ndim(out) == 0 else out


def colatitude_logpdf(s, p, kappa, f):
    """Log density of ``u = X'theta`` at ``s`` in [-1, 1]."""
    p = _check_p(p)
    s_arr = np.asarray(s, dtype=float)
    if np.any((s_arr < -1.0) | (s_arr > 1.0)) or np.any(np.isnan(s_arr)):
        raise ValueError("s must lie in [-1, 1]")
    mass = _mass(p, kappa, f)
    w = 1.0 - s_arr
    with np.errstate(divide="ignore"):
        weight = 0.0 if p == 3 else 0.5 * (p - 3) * np.log1p(-s_arr * s_arr)
        out = f.log_ratio(kappa, w) - math.log(mass) + weight
    return float(out) if np.ndim(out) == 0 else out


def colatitude_cdf(s, p, kappa, f):
    """``P[u <= s]``, by quadrature from the far pole side."""
    p = _check_p(p)
    kp = _safe_kappa_phi(f, kappa)
    edges = colatitude_edges(kp)
    mass = _mass(p, kappa, f, edges)
    out = []
    for si in np.atleast_1d(np.asarray(s, dtype=float)):
        if si <= -1.0:
            out.append(0.0)
            continue
        if si >= 1.0:
            out.append(1.0)
            continue
        t0 = math.acos(si)
        e = np.unique(np.concatenate([[t0], edges[edges > t0]]))
        upper, _ = integrate(lambda t: _colat_terms(p, kappa, f, t)[2], e)
        out.append(min(1.0, upper / mass))
    out = np.asarray(out)
    return float(out[0]) if np.ndim(s) == 0 else out


def moments_exact(p, kappa, f):
    """Moments of ``u`` by adaptive quadrature (``mode = "exact-quadrature"``)."""
    p = _check_p(p)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    kp = _safe_kappa_phi(f, kappa)
    edges = colatitude_edges(kp)

    def first(t):
        w, v2, d = _colat_terms(p, kappa, f, t)
        u = 1.0 - w
        u2 = u * u
        return np.vstack([d, d * w, d * v2, d * v2 * v2, d * u2 * u2])

    (mass, m_w, m_v2, m_v4, m_u4), _ = integrate(first, edges)
    if not mass > 0:
        raise QuadratureError("normalizing integral vanished (p=%d, kappa=%g)" % (p, kappa))
    one_minus_e1 = m_w / mass

    def second(t):
        w, _, d = _colat_terms(p, kappa, f, t)
        dw = w - one_minus_e1
        return d * dw * dw

    var, _ = integrate(second, edges, atol=1e-300)
    e2_tilde = var / mass
    one_minus_e2 = m_v2 / mass
    log_c = -(math.log(mass) + float(f.log_f(np.array(float(kappa)))))
    return MomentSet(
        log_c=log_c,
        e1=1.0 - one_minus_e1,
        e2=1.0 - one_minus_e2,
        e2_tilde=e2_tilde,
        ev4=m_v4 / mass,
        mode="exact-quadrature",
        one_minus_e1=one_minus_e1,
        one_minus_e2=one_minus_e2,
        eu4=m_u4 / mass,
        kappa_phi=kp,
    )


def moments_asymptotic(p, kappa, f):
    """Leading-order high-concentration moments (``mode = "asymptotic"``).

    ``1 - e2 ~ (p-1)/K``, ``e2_tilde ~ (p-1)/(2K^2)`` and
    ``E[v^4] ~ (p^2-1)/K^2`` with ``K = kappa * phi_f(kappa)``; ``e1`` is
    reported as its limit 1.
    """
    p = _check_p(p)
    k = f.kappa_phi(kappa)
    if not (np.isfinite(k) and k > 0):
        raise ValueError("kappa * phi_f(kappa) must be positive, got %r" % k)
    one_minus_e2 = (p - 1) / k
    log_c = -(float(f.log_f(np.array(float(kappa))))
              + 0.5 * (p - 3) * math.log(2.0) + gammaln((p - 1) / 2.0)
              - 0.5 * (p - 1) * math.log(k))
    return MomentSet(
        log_c=log_c,
        e1=1.0,
        e2=1.0 - one_minus_e2,
        e2_tilde=(p - 1) / (2.0 * k * k),
        ev4=(p * p - 1) / (k * k),
        mode="asymptotic",
        one_minus_e1=0.0,
        one_minus_e2=one_minus_e2,
        kappa_phi=k,
    )


def classify_high_concentration(f, probe=None):
    """Whether ``f`` provides high concentration.

    Built-in families answer from their known limit of ``kappa phi_f(kappa)``.
    Custom functions are probed on a geometric grid; the verdict is
    ``UNKNOWN`` unless the probe is monotone and moves by a factor of at
    least 1e3.
    """
    if f.limit == "diverges":
        return HighConcentration.PROVIDES
    if f.limit in ("finite", "vanishes"):
        return HighConcentration.DOES_NOT_PROVIDE
    kappas = np.logspace(0, 8, 17) if probe is None else np.asarray(probe, dtype=float)
    with np.errstate(all="ignore"):
        vals = np.array([f.kappa_phi(k) for k in kappas])
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        return HighConcentration.UNKNOWN
    steps = np.diff(vals)
    if np.all(steps > 0) and vals[-1] / vals[0] >= 1e3:
        return HighConcentration.PROVIDES
    if np.all(steps < 0) and vals[0] / vals[-1] >= 1e3:
        return HighConcentration.DOES_NOT_PROVIDE
    return HighConcentration.UNKNOWN
