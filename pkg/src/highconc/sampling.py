"""Exact sampling from ``Rot_p(theta, kappa, f)``.

Draws ``X = u theta + v S`` with ``u`` from a tabulated inverse CDF and ``S``
uniform on the great subsphere orthogonal to ``theta``.
"""

import math
import threading

import numpy as np

from . import _config, _kernels
from .angular import RotSymModel, _colat_terms, _safe_kappa_phi
from .dataset import Dataset
from .geometry import UnitVector, as_unit, orthonormal_complement_frame
from .quadrature import integrate
from .rng import SeededStream


class ColatitudeSampler:
    """Inverse-CDF table for ``u = X'theta``.

    The table is indexed by the mass ``F`` measured from the pole
    (``F = P[u >= s]``).  When ``K = kappa phi_f(kappa) >= 20`` the
    interpolated variable is ``rho = sqrt((1 - s) K)``, so the bulk of the
    law occupies ``rho = O(1)`` whatever the concentration; otherwise it is
    the angle ``t = arccos(s)``.  Interpolation is monotone cubic (PCHIP).
    """

    def __init__(self, p, kappa, f, knots=_config.CDF_KNOTS):
        self.p = int(p)
        self.kappa = float(kappa)
        self.f = f
        kp = _safe_kappa_phi(f, self.kappa)
        self.kappa_phi = kp
        self.transformed = bool(np.isfinite(kp) and kp >= _config.TRANSFORM_THRESHOLD)
        t = self._knot_angles(knots)
        _, _, seg = integrate(lambda x: _colat_terms(self.p, self.kappa, f, x)[2], t,
                              segments=True, atol=1e-300)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        cdf = cum / total
        if self.transformed:
            y = np.sqrt(2.0 * kp) * np.sin(0.5 * t)
        else:
            y = t
        # drop knots past the support (flat CDF) so the table is strictly increasing
        keep = [0]
        for i in range(1, cdf.size):
            if cdf[i] > cdf[keep[-1]] * (1.0 + 1e-14) + 1e-300:
                keep.append(i)
        keep = np.asarray(keep)
        cdf, y = cdf[keep], y[keep]
        cdf[-1] = 1.0
        self.knot_angles = t[keep]
        self.cdf = cdf
        self.y = y
        self.slopes = _kernels.pchip_slopes(cdf, y)

    def _knot_angles(self, knots):
        if not self.transformed:
            return np.linspace(0.0, np.pi, knots)
        kp = self.kappa_phi
        n_tail = knots // 4
        r_bulk = min(2.0 * kp, 64.0 + 8.0 * self.p)
        rho = np.linspace(0.0, math.sqrt(r_bulk), knots - n_tail)
        t_bulk = 2.0 * np.arcsin(np.minimum(1.0, rho / math.sqrt(2.0 * kp)))
        if t_bulk[-1] >= np.pi:
            return t_bulk
        t_tail = np.linspace(t_bulk[-1], np.pi, n_tail + 1)[1:]
        return np.concatenate([t_bulk, t_tail])

    def table_cdf(self, s):
        """``P[u <= s]`` read off the knots (exact at knots, linear in between)."""
        s = np.asarray(s, dtype=float)
        t = np.arccos(np.clip(s, -1.0, 1.0))
        return 1.0 - np.interp(t, self.knot_angles, self.cdf)

    def draw_w(self, stream, n):
        """``n`` draws of ``w = 1 - u`` (full relative precision near the pole)."""
        q = stream.random(n)
        y = _kernels.hermite_eval(self.cdf, self.y, self.slopes, q)
        if self.transformed:
            rho = np.clip(y, 0.0, math.sqrt(2.0 * self.kappa_phi))
            return np.minimum(rho * rho / self.kappa_phi, 2.0)
        half = np.sin(0.5 * np.clip(y, 0.0, np.pi))
        return 2.0 * half * half


def _f_key(f):
    return (f.family, f.b) if f.family != "custom" else ("custom", id(f))


_CACHE = {}
_CACHE_LOCK = threading.Lock()
_CACHE_SIZE = 64


def sampler_for(p, kappa, f):
    """Shared :class:`ColatitudeSampler`, cached on ``(p, kappa, family, b)``."""
    key = (int(p), float(kappa), _f_key(f))
    with _CACHE_LOCK:
        hit = _CACHE.get(key)
    # custom functions are keyed by id, which is only safe while the object lives
    if hit is not None and (f.family != "custom" or hit[0] is f):
        return hit[1]
    smp = ColatitudeSampler(p, kappa, f)
    with _CACHE_LOCK:
        if len(_CACHE) >= _CACHE_SIZE:
            _CACHE.pop(next(iter(_CACHE)))
        _CACHE[key] = (f, smp)
    return smp


def sample_colatitude(sampler, stream, n):
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 - sampler.draw_w(stream, n)


def _tangent_normals(stream, n, q):
    z = stream.standard_normal((n, q))
    bad = np.einsum("ij,ij->i", z, z) < 1e-200
    while np.any(bad):
        z[bad] = stream.standard_normal((int(bad.sum()), q))
        bad = np.einsum("ij,ij->i", z, z) < 1e-200
    return z


def sample_tangent_direction(pole, stream):
    """Uniform draw on the unit sphere orthogonal to ``pole``."""
    pole = as_unit(pole)
    frame = orthonormal_complement_frame(pole)
    z = _tangent_normals(stream, 1, pole.p - 1)
    s = z @ frame
    return UnitVector(s[0])


def sample_rows(model, n, stream, sampler=None):
    """``(n, p)`` array of draws from ``model``; the stream draws uniforms first, then normals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sampler is None:
        sampler = sampler_for(model.p, model.kappa, model.f)
    th = model.theta.coords
    w = sampler.draw_w(stream, n)
    z = _tangent_normals(stream, n, model.p - 1)
    return _kernels.tangent_rows(w, z, th, orthonormal_complement_frame(th))


def sample(model, n, stream=None, sampler=None):
    """Draw a :class:`Dataset` of ``n`` i.i.d. observations from ``model``."""
    if stream is None:
        stream = SeededStream()
    return Dataset(sample_rows(model, n, stream, sampler))


__all__ = ["ColatitudeSampler", "RotSymModel", "sampler_for", "sample_colatitude",
           "sample_tangent_direction", "sample_rows", "sample"]
