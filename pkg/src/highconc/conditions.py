"""Numerical diagnostics for membership of an angular function in the classes
used by the high-concentration asymptotics.

None of these certify anything: they tabulate the quantities whose limits
the theory requires and report whether the sampled trend goes the right way.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import betaln, gammaln

from .angular import _check_p, _colat_terms, _safe_kappa_phi, colatitude_edges, moments_exact
from .quadrature import QuadratureError, integrate

# diagnostics track trends over decades; they do not need moment-level accuracy
DIAG_RTOL = 1e-8
_GL_COARSE = np.polynomial.legendre.leggauss(48)
_GL_FINE = np.polynomial.legendre.leggauss(96)


@dataclass
class ConditionReport:
    """Scaled diagnostic sequence along an increasing grid.

    ``scaled`` should tend to 0 when the condition holds; ``errors`` maps a
    grid index to the quadrature failure message for that entry.
    """
    name: str
    grid: list
    values: list
    scaled: list
    errors: dict = field(default_factory=dict)

    @property
    def decreasing(self):
        s = [v for v in self.scaled if np.isfinite(v)]
        return len(s) == len(self.scaled) and all(b < a for a, b in zip(s, s[1:]))

    @property
    def identically_zero(self):
        return all(v == 0.0 for v in self.scaled)

    def to_dict(self):
        return {"name": self.name, "grid": list(self.grid), "values": list(self.values),
                "scaled": list(self.scaled), "errors": {str(k): v for k, v in self.errors.items()},
                "decreasing": self.decreasing}


class GpDistribution:
    """``Beta(1/2, (p-2)/2)`` for ``p >= 3``, a point mass at 1 for ``p = 2``."""

    def __init__(self, p):
        self.p = _check_p(p)

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        if self.p == 2:
            return np.where(w >= 1.0, 1.0, 0.0)
        return stats.beta.cdf(w, 0.5, 0.5 * (self.p - 2))

    def nodes(self, rule=_GL_FINE):
        """Quadrature nodes/weights for ``dG_p``.

        Uses ``w = sin^2(psi)``, which turns the Beta density into the smooth
        weight ``2 cos^{p-3}(psi) / B(1/2, (p-2)/2)`` on ``[0, pi/2]``.
        """
        if self.p == 2:
            return np.array([1.0]), np.array([1.0])
        x, wt = rule
        psi = 0.25 * np.pi * (x + 1.0)
        dens = 2.0 * np.cos(psi) ** (self.p - 3) / math.exp(betaln(0.5, 0.5 * (self.p - 2)))
        return np.sin(psi) ** 2, 0.25 * np.pi * wt * dens


@dataclass(frozen=True)
class FlanProbe:
    """Local perturbation ``h_n^{+/-}(s, w)`` entering the LAN integral condition."""
    p: int
    kappa_n: float
    t_n: float
    n: float
    kappa_phi_n: float

    @property
    def nu_n(self):
        return 1.0 / math.sqrt(self.n * self.kappa_phi_n)

    @property
    def c_n(self):
        return math.sqrt(1.0 - 0.25 * self.nu_n ** 2 * self.t_n ** 2)

    def h(self, s, w, sign=1):
        nu, t, k = self.nu_n, self.t_n, self.kappa_n
        s = np.asarray(s, dtype=float)
        v = np.sqrt(np.maximum(0.0, (1.0 - s) * (1.0 + s)))
        return -0.5 * t * t * k * nu * nu * s + sign * self.c_n * t * k * nu * v * np.sqrt(w)


def check_condition_F(f, p, kappa_grid, xi=0.0, zeta=0.0):
    """Tabulate ``int g(s) |f(ks)/f(k) - exp((s-1) k phi(k))| ds`` scaled by ``(k phi(k))^{xi+1}``.

    ``g(s) = (1-s)^xi (1+s)^zeta``.
    """
    p = _check_p(p)
    if not (xi > -1 and zeta > -1):
        raise ValueError("xi and zeta must exceed -1")
    kappas = [float(k) for k in kappa_grid]
    if any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError("kappa_grid must be increasing")
    rep = ConditionReport("F", kappas, [], [])
    for i, k in enumerate(kappas):
        kp = _safe_kappa_phi(f, k)

        def integrand(t, k=k, kp=kp):
            half = np.sin(0.5 * t)
            w = 2.0 * half * half
            # f(ks)/f(k) = exp(-wK + R), R the Taylor remainder of log f at k;
            # |e^{-wK+R} - e^{-wK}| = e^{-wK + max(R, 0)} (1 - e^{-|R|})
            with np.errstate(all="ignore"):
                rem = f.taylor_remainder(k, -k * w)
                diff = np.exp(-w * kp + np.maximum(rem, 0.0)) * -np.expm1(-np.abs(rem))
                diff = np.where(np.isnan(rem), np.exp(-w * kp), diff)
            with np.errstate(divide="ignore", invalid="ignore"):
                g = w ** xi * (2.0 - w) ** zeta
            return np.where(diff == 0.0, 0.0, g * diff) * np.sin(t)

        try:
            val, _ = integrate(integrand, colatitude_edges(kp), rtol=DIAG_RTOL, atol=1e-300)
        except QuadratureError as exc:
            rep.errors[i] = str(exc)
            val = float("nan")
        rep.values.append(val)
        rep.scaled.append(val * kp ** (xi + 1.0))
    return rep


def check_condition_FLAN(f, p, kappa_n, t_n, n):
    """LAN integral conditions at one or several ``(kappa_n, n)`` points.

    ``kappa_n`` and ``n`` may be scalars or equal-length sequences.  Returns
    ``(variance_report, remainder_report)``: the first tabulates the
    ``(phi_f(ks) - phi_f(k))^2`` integral scaled by
    ``k^{(p+1)/2} phi_f(k)^{(p-3)/2}``, the second the double integral of
    the second-order Taylor remainder of ``log f`` against ``dG_p`` (worst
    of the two signs) scaled by ``n (k phi_f(k))^{(p-1)/2}``.
    """
    p = _check_p(p)
    ks = np.atleast_1d(np.asarray(kappa_n, dtype=float))
    ns = np.atleast_1d(np.asarray(n, dtype=float))
    ks, ns = np.broadcast_arrays(ks, ns)
    if np.any(ks <= 0) or np.any(ns <= 0) or not t_n > 0:
        raise ValueError("kappa_n, n and t_n must be positive")
    gp = GpDistribution(p)
    var_rep = ConditionReport("FLAN-variance", ks.tolist(), [], [])
    rem_rep = ConditionReport("FLAN-remainder", list(zip(ns.tolist(), ks.tolist())), [], [])
    for i, (k, nn) in enumerate(zip(ks, ns)):
        kp = _safe_kappa_phi(f, k)
        phi_k = kp / k
        edges = colatitude_edges(kp)

        def var_integrand(t, k=k, phi_k=phi_k):
            w, _, d = _colat_terms(p, k, f, t)
            with np.errstate(all="ignore"):
                diff = f.phi_f(k * (1.0 - w)) - phi_k
                out = diff * diff * d
            return np.where(d == 0.0, 0.0, out)

        try:
            j1, _ = integrate(var_integrand, edges, rtol=DIAG_RTOL, atol=1e-300)
        except QuadratureError as exc:
            var_rep.errors[i] = str(exc)
            j1 = float("nan")
        var_rep.values.append(j1)
        var_rep.scaled.append(j1 * k ** (0.5 * (p + 1)) * phi_k ** (0.5 * (p - 3)))

        probe = FlanProbe(p, float(k), float(t_n), float(nn), kp)
        wf, qf = gp.nodes(_GL_FINE)
        wc, qc = gp.nodes(_GL_COARSE)

        def rem_integrand(t, k=k, probe=probe):
            w_s, _, d = _colat_terms(p, k, f, t)
            s = 1.0 - w_s
            z = k * s
            rows = []
            for sign in (1, -1):
                for wg, qg in ((wf, qf), (wc, qc)):
                    h = probe.h(s[:, None], wg[None, :], sign)
                    with np.errstate(all="ignore"):
                        r = np.abs(f.taylor_remainder(z[:, None], h))
                    rows.append(np.where(d == 0.0, 0.0, (r @ qg) * d))
            return np.vstack(rows)

        try:
            vals, _ = integrate(rem_integrand, edges, rtol=DIAG_RTOL, atol=1e-300)
            plus_f, plus_c, minus_f, minus_c = vals
            for fine, coarse, label in ((plus_f, plus_c, "+"), (minus_f, minus_c, "-")):
                if abs(fine - coarse) > 1e-6 * max(abs(fine), 1e-300):
                    raise QuadratureError(
                        "inner G_p integral unresolved on branch %s (%.3g vs %.3g)"
                        % (label, fine, coarse))
            d_val = max(plus_f, minus_f)
        except QuadratureError as exc:
            rem_rep.errors[i] = str(exc)
            d_val = float("nan")
        rem_rep.values.append(d_val)
        # the double integral is taken relative to f(kappa), as in the integrand shift
        rem_rep.scaled.append(d_val * nn * kp ** (0.5 * (p - 1)))
    return var_rep, rem_rep


@dataclass
class LemmaConstantsReport:
    p: int
    kappas: list
    kappa_phis: list
    scaled_norm: list
    scaled_var: list
    limit_norm: float
    limit_var: float

    @property
    def deviation_norm(self):
        return [abs(v / self.limit_norm - 1.0) for v in self.scaled_norm]

    @property
    def deviation_var(self):
        return [abs(v / self.limit_var - 1.0) for v in self.scaled_var]

    def to_dict(self):
        return {"p": self.p, "kappas": self.kappas, "kappa_phis": self.kappa_phis,
                "scaled_norm": self.scaled_norm, "scaled_var": self.scaled_var,
                "limit_norm": self.limit_norm, "limit_var": self.limit_var,
                "deviation_norm": self.deviation_norm, "deviation_var": self.deviation_var}


def lemma_limits(p):
    """Limits of ``(K)^{(p-1)/2} / (f(k) c)`` and ``e2_tilde K^{p+1} / (f(k) c)^2``."""
    g = math.exp(gammaln(0.5 * (p - 1)))
    return 2.0 ** (0.5 * (p - 3)) * g, 2.0 ** (p - 4) * (p - 1) * g * g


def verify_lemma_constants(p, f, kappa_grid=None, kappa_phi_grid=None):
    """Compare the scaled normalizer and variance with their high-concentration limits.

    Give the grid either in ``kappa`` or in ``kappa * phi_f(kappa)``.
    """
    from .angular import kappa_for_kappa_phi
    p = _check_p(p)
    if (kappa_grid is None) == (kappa_phi_grid is None):
        raise ValueError("give exactly one of kappa_grid and kappa_phi_grid")
    if kappa_grid is None:
        kappa_grid = [kappa_for_kappa_phi(f, k) for k in kappa_phi_grid]
    lim_norm, lim_var = lemma_limits(p)
    rep = LemmaConstantsReport(p, [], [], [], [], lim_norm, lim_var)
    for k in kappa_grid:
        m = moments_exact(p, float(k), f)
        kp = m.kappa_phi
        # 1 / (f(k) c) is the shifted normalizing integral
        inv_fc = math.exp(-(m.log_c + float(f.log_f(np.array(float(k))))))
        rep.kappas.append(float(k))
        rep.kappa_phis.append(kp)
        rep.scaled_norm.append(inv_fc * kp ** (0.5 * (p - 1)))
        rep.scaled_var.append(m.e2_tilde * inv_fc ** 2 * kp ** (p + 1))
    return rep
