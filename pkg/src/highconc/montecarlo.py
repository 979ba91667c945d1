"""Monte Carlo harness: cap-statistic laws, size/power curves, LAN remainder
and the moment-expansion verifier.

Replicate ``m`` always draws from ``SeededStream(seed, m)``, and results are
merged in replicate order, so a report depends only on the configuration and
not on the number of worker threads.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .angular import (RotSymModel, from_name, kappa_for_kappa_phi, moments_asymptotic,
                      moments_exact)
from .conditions import verify_lemma_constants
from .geometry import UnitVector, as_unit, basis_vector, orthonormal_complement_frame
from .inference import DegenerateError
from .rng import SeededStream, default_seed
from .sampling import sample_rows, sampler_for
from .special import (chi2_cdf, chi2_logpdf, chi2_quantile,
                      noncentral_chi2_survival)


class InfeasibleAlternativeError(ValueError):
    pass


# --- configuration ---------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Simulation design.

    The concentration is ``kappa`` when given, else ``n ** kappa_exponent``.
    ``n_schedule`` is used by the LAN experiment only.
    """
    p: int = 3
    n: int = 100
    M: int = 2000
    kappa_exponent: float = 1.0
    kappa: float = None
    family: str = "powerexp"
    b: float = 1.0
    theta: list = None
    alpha: float = 0.05
    seed: int = None
    ell_grid: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0, 4.0])
    n_schedule: list = field(default_factory=lambda: [100, 1000, 10000])
    tau_norm: float = 1.0
    threads: int = 1
    out_json: str = None
    out_csv: str = None

    def __post_init__(self):
        self.p = int(self.p)
        self.n = int(self.n)
        self.M = int(self.M)
        self.seed = default_seed(self.seed)
        self.threads = max(1, int(self.threads))
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.kappa is not None and not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if any(l < 0 for l in self.ell_grid):
            raise ValueError("ell grid must be nonnegative")
        if self.theta is not None and len(self.theta) != self.p:
            raise ValueError("theta must have p coordinates")
        self.angular()  # validates family and b

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(extra)))
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def angular(self):
        return from_name(self.family, self.b)

    def kappa_n(self, n=None):
        if self.kappa is not None:
            return float(self.kappa)
        return float((self.n if n is None else n) ** self.kappa_exponent)

    def kappa_phi_n(self, n=None):
        return self.angular().kappa_phi(self.kappa_n(n))

    def nu_n(self, n=None):
        n = self.n if n is None else n
        return 1.0 / math.sqrt(n * self.kappa_phi_n(n))

    def pole(self):
        if self.theta is None:
            return basis_vector(self.p, 0)
        return as_unit(self.theta)

    def model(self, n=None, theta=None):
        th = self.pole() if theta is None else theta
        return RotSymModel(th, self.kappa_n(n), self.angular())


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    summary: dict
    excluded: int = 0
    histograms: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# --- small helpers ---------------------------------------------------------

def ks_distance(values, cdf):
    """Two-sided Kolmogorov-Smirnov distance between ``values`` and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def histogram(values, df, bins="fd"):
    """Histogram of ``values`` against the ``chi2_df`` density at bin centres.

    ``bins`` is ``"fd"`` (Freedman-Diaconis) or an integer count on
    ``[0, max(values)]``.
    """
    x = np.asarray(values, dtype=float)
    if isinstance(bins, str):
        edges = np.histogram_bin_edges(x, bins=bins)
    else:
        edges = np.linspace(0.0, float(x.max()) if x.size else 1.0, int(bins) + 1)
    count, edges = np.histogram(x, bins=edges)
    width = np.diff(edges)
    density = count / (max(x.size, 1) * width)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return {"bin_left": edges[:-1].tolist(), "bin_right": edges[1:].tolist(),
            "count": count.tolist(), "density": density.tolist(),
            "chi2_density": np.exp(chi2_logpdf(df, mid)).tolist()}


def _run_replicates(fn, M, threads):
    """``[fn(m) for m in range(M)]`` on a thread pool, merged in order."""
    if threads <= 1 or M < 2:
        return [fn(m) for m in range(M)]
    chunks = np.array_split(np.arange(M), min(M, 4 * threads))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda idx: [fn(int(m)) for m in idx], chunks)
        return [r for part in parts for r in part]


def _chord_half_sq(a, b):
    d = a - b
    return 0.5 * float(d @ d)


# --- local alternatives ----------------------------------------------------

@dataclass(frozen=True)
class LocalAlternative:
    ell: float
    nu_n: float
    theta0: UnitVector
    theta_alt: UnitVector

    @property
    def angle(self):
        return 2.0 * math.asin(min(1.0, 0.5 * self.ell * self.nu_n))

    @property
    def tau(self):
        """``(theta_alt - theta0) / nu_n``; its norm is ``ell``."""
        return (self.theta_alt.coords - self.theta0.coords) / self.nu_n


def local_alternative(theta0, ell, nu_n):
    """Rotate ``theta0`` towards its first complement-frame vector so the chord is ``ell * nu_n``."""
    theta0 = as_unit(theta0)
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if not nu_n > 0:
        raise ValueError("nu_n must be positive")
    chord = ell * nu_n
    if chord > 2.0:
        raise InfeasibleAlternativeError("ell * nu_n = %g exceeds the maximal chord 2" % chord)
    if chord == 0.0:
        return LocalAlternative(float(ell), float(nu_n), theta0, theta0)
    half = 0.5 * chord
    # cos(a) = 1 - chord^2/2, sin(a) = chord * sqrt(1 - chord^2/4)
    c = 1.0 - 2.0 * half * half
    s = 2.0 * half * math.sqrt(max(0.0, 1.0 - half * half))
    e = orthonormal_complement_frame(theta0)[0]
    alt = c * theta0.coords + s * e
    return LocalAlternative(float(ell), float(nu_n), theta0, UnitVector(alt))


def theoretical_power(ell, p, level=0.05):
    """Limiting power ``P[chi2_{p-1}(ell^2) > chi2_{p-1,1-level}]``."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return noncentral_chi2_survival(p - 1, ell * ell, chi2_quantile(p - 1, 1.0 - level))


# --- cap statistics --------------------------------------------------------

def cap_statistics(x, theta, kappa_phi):
    """``(T_oracle, T_feasible)`` for one sample ``x`` with true location ``theta``."""
    n, p = x.shape
    xbar, _, _ = _kernels.projection_summary(x, theta)
    r = math.sqrt(float(xbar @ xbar))
    if r <= 1e-10:
        raise DegenerateError("sample mean vanishes")
    that = xbar / r
    gap = _chord_half_sq(that, theta)  # 1 - theta' that_hat
    _, _, one_minus_e2 = _kernels.projection_summary(x, that)
    if one_minus_e2 <= 0.0:
        raise DegenerateError("1 - e2_hat vanishes")
    return 2.0 * n * kappa_phi * gap, 2.0 * n * (p - 1) * gap / one_minus_e2


def run_cap_experiment(config):
    """Laws of the oracle and feasible cap statistics against ``chi2_{p-1}``."""
    cfg = config
    model = cfg.model()
    kp = model.kappa_phi
    if not (math.isfinite(kp) and kp > 0):
        raise ValueError("kappa * phi_f(kappa) is not finite and positive")
    th = model.theta.coords
    sampler = sampler_for(model.p, model.kappa, model.f)

    def one(m):
        x = sample_rows(model, cfg.n, SeededStream(cfg.seed, m), sampler)
        try:
            return cap_statistics(x, th, kp)
        except DegenerateError:
            return None

    res = _run_replicates(one, cfg.M, cfg.threads)
    ok = [r for r in res if r is not None]
    excluded = len(res) - len(ok)
    df = cfg.p - 1
    if not ok:
        raise DegenerateError("every replicate was degenerate")
    t_or = np.array([r[0] for r in ok])
    t_fe = np.array([r[1] for r in ok])
    cdf = lambda v: chi2_cdf(df, v)
    q = chi2_quantile(df, 1.0 - cfg.alpha)
    summary = {
        "kappa_n": model.kappa, "kappa_phi_n": kp, "nu_n": cfg.nu_n(),
        "ks_oracle": ks_distance(t_or, cdf), "ks_feasible": ks_distance(t_fe, cdf),
        "coverage_oracle": float(np.mean(t_or <= q)),
        "coverage_feasible": float(np.mean(t_fe <= q)),
        "mean_oracle": float(t_or.mean()), "mean_feasible": float(t_fe.mean()),
        "all_finite": bool(np.all(np.isfinite(t_or)) and np.all(np.isfinite(t_fe))),
        "replicates_used": int(t_or.size),
    }
    hists = {
        "oracle_fd": histogram(t_or, df, "fd"), "oracle_40": histogram(t_or, df, 40),
        "feasible_fd": histogram(t_fe, df, "fd"), "feasible_40": histogram(t_fe, df, 40),
    }
    return ExperimentReport("cap", cfg.to_dict(), summary, excluded, hists,
                            raw={"t_oracle": t_or.tolist(), "t_feasible": t_fe.tolist()})


# --- size and power --------------------------------------------------------

def _null_stats(x, theta0):
    """``(Watson, Wald)`` on raw rows; raises :class:`DegenerateError`."""
    n, p = x.shape
    xbar, _, denom = _kernels.projection_summary(x, theta0)
    if denom <= 1e-14:
        raise DegenerateError("all observations coincide with +/- theta0")
    r = math.sqrt(float(xbar @ xbar))
    if r <= 1e-10:
        raise DegenerateError("sample mean vanishes")
    a = float(xbar @ theta0)
    proj = xbar - a * theta0
    pp = float(proj @ proj)
    watson = n * (p - 1) * pp / denom
    wald = n * (p - 1) * a * a * (pp / (r * r)) / denom
    return watson, wald


def run_power_experiment(config):
    """Rejection frequencies of the Watson and Wald tests along local alternatives.

    Replicate ``m`` uses stream ``m`` at every ``ell``, so the curves are
    driven by common random numbers.
    """
    cfg = config
    if not cfg.ell_grid:
        raise ValueError("ell grid is empty")
    base = cfg.model()
    nu = cfg.nu_n()
    theta0 = base.theta
    sampler = sampler_for(base.p, base.kappa, base.f)
    crit = chi2_quantile(cfg.p - 1, 1.0 - cfg.alpha)
    rows, raw_w, raw_s = [], [], []
    excluded = 0
    for ell in cfg.ell_grid:
        alt = local_alternative(theta0, ell, nu)
        model = RotSymModel(alt.theta_alt, base.kappa, base.f)

        def one(m, model=model):
            x = sample_rows(model, cfg.n, SeededStream(cfg.seed, m), sampler)
            try:
                return _null_stats(x, theta0.coords)
            except DegenerateError:
                return None

        res = _run_replicates(one, cfg.M, cfg.threads)
        ok = [r for r in res if r is not None]
        excluded += len(res) - len(ok)
        rw = [int(r[0] > crit) for r in ok]
        rs = [int(r[1] > crit) for r in ok]
        fw = float(np.mean(rw)) if rw else float("nan")
        fs = float(np.mean(rs)) if rs else float("nan")
        power = theoretical_power(ell, cfg.p, cfg.alpha)
        rows.append({"ell": float(ell), "freq_watson": fw, "freq_wald": fs,
                     "theoretical_power": power, "diff_watson": fw - power,
                     "diff_wald": fs - power})
        raw_w.append(rw)
        raw_s.append(rs)
    summary = {
        "kappa_n": base.kappa, "kappa_phi_n": base.kappa_phi, "nu_n": nu,
        "critical_value": crit,
        "max_abs_diff_watson": max(abs(r["diff_watson"]) for r in rows),
        "max_abs_diff_wald": max(abs(r["diff_wald"]) for r in rows),
        "max_watson_wald_gap": max(abs(r["freq_watson"] - r["freq_wald"]) for r in rows),
    }
    return ExperimentReport("power", cfg.to_dict(), summary, excluded, rows=rows,
                            raw={"reject_watson": raw_w, "reject_wald": raw_s})


# --- LAN -------------------------------------------------------------------

def central_sequence(data, theta, nu_n):
    """``nu_n^{-1} (I - theta theta') Xbar``."""
    if not nu_n > 0:
        raise ValueError("nu_n must be positive")
    x = np.asarray(data, dtype=float)
    th = as_unit(theta).coords
    xbar = x.mean(axis=0)
    return (xbar - (xbar @ th) * th) / nu_n


def log_likelihood_ratio(data, theta, theta_alt, model):
    """``sum_i log f(kappa x_i'theta_alt) - log f(kappa x_i'theta)``.

    Both terms are evaluated relative to ``log f(kappa)`` so no intermediate
    overflows.
    """
    x = np.asarray(data, dtype=float)
    th = np.asarray(theta, dtype=float)
    ta = np.asarray(theta_alt, dtype=float)
    for v, name in ((th, "theta"), (ta, "perturbed location")):
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError("%s is not unit-norm" % name)
    w0 = 0.5 * np.sum((x - th) ** 2, axis=1)
    w1 = 0.5 * np.sum((x - ta) ** 2, axis=1)
    f = model.f
    return float(np.sum(f.log_ratio(model.kappa, w1) - f.log_ratio(model.kappa, w0)))


@dataclass
class LanReport:
    n_schedule: list
    tau_norm: float
    lam: dict
    linear: dict
    quadratic: dict
    remainder: dict
    median_abs_remainder: list
    var_linear: list
    excluded: int = 0

    @property
    def decreasing(self):
        m = self.median_abs_remainder
        return all(b < a for a, b in zip(m, m[1:]))

    def to_dict(self):
        d = asdict(self)
        d["decreasing"] = self.decreasing
        return d


def run_lan_experiment(config, tau_norm=None):
    """Remainder of the quadratic LAN expansion along an increasing-``n`` schedule.

    ``tau`` is the rotation of the pole towards its first frame vector with
    norm ``tau_norm``, rescaled by ``nu_n`` at each ``n``.
    """
    cfg = config
    tn = cfg.tau_norm if tau_norm is None else float(tau_norm)
    if tn < 0:
        raise ValueError("tau norm must be nonnegative")
    f = cfg.angular()
    th = cfg.pole()
    rep = LanReport([int(n) for n in cfg.n_schedule], tn, {}, {}, {}, {}, [], [])
    for n in rep.n_schedule:
        model = cfg.model(n)
        nu = cfg.nu_n(n)
        alt = local_alternative(th, tn, nu)
        tau = alt.tau
        quad = 0.5 * float(tau @ tau - (tau @ th.coords) ** 2)
        sampler = sampler_for(model.p, model.kappa, f)

        def one(m):
            x = sample_rows(model, n, SeededStream(cfg.seed, m), sampler)
            lam = log_likelihood_ratio(x, th.coords, alt.theta_alt.coords, model)
            lin = float(tau @ central_sequence(x, th, nu))
            return lam, lin

        res = _run_replicates(one, cfg.M, cfg.threads)
        lam = np.array([r[0] for r in res])
        lin = np.array([r[1] for r in res])
        rem = lam - (lin - quad)
        key = str(n)
        rep.lam[key] = lam.tolist()
        rep.linear[key] = lin.tolist()
        rep.quadratic[key] = quad
        rep.remainder[key] = rem.tolist()
        rep.median_abs_remainder.append(float(np.median(np.abs(rem))))
        rep.var_linear.append(float(np.var(lin, ddof=1)) if lin.size > 1 else float("nan"))
    return rep


# --- expansion verifier ----------------------------------------------------

NOISE_FLOOR = 1e-9


def run_expansion_verifier(p_grid=(2, 3, 5), families=(("powerexp", 0.5), ("powerexp", 1.0),
                           ("powerexp", 2.0)), kappa_phi_grid=(1e2, 1e3, 1e4),
                           check_at=1e3, rel_tol=0.05, ratio_tol=0.02, lemma_tol=0.01):
    """Exact-versus-asymptotic moments on a grid of ``kappa * phi_f(kappa)`` values.

    Returns a dict with one entry per (p, family) cell.  ``pass_*`` flags test
    the tolerances at ``check_at`` and the shrinking of every relative error
    from the smallest to the largest grid value; errors below ``NOISE_FLOOR``
    at both ends count as shrinking (they are rounding noise).
    """
    if not (p_grid and families and kappa_phi_grid):
        raise ValueError("grids must be nonempty")
    grid = sorted(float(k) for k in kappa_phi_grid)
    cells = []
    for p in p_grid:
        for fam, b in families:
            f = from_name(fam, b)
            entries = []
            for kp in grid:
                kappa = kappa_for_kappa_phi(f, kp)
                ex = moments_exact(p, kappa, f)
                asy = moments_asymptotic(p, kappa, f)
                err = {
                    "one_minus_e2": abs(asy.one_minus_e2 / ex.one_minus_e2 - 1.0),
                    "e2_tilde": abs(asy.e2_tilde / ex.e2_tilde - 1.0),
                    "ev4": abs(asy.ev4 / ex.ev4 - 1.0),
                }
                ratios = {
                    "ratio_e2": abs(ex.ratio_e2 / (2.0 * (p - 1)) - 1.0),
                    "ratio_v4": abs(ex.ratio_v4 / (2.0 * (p + 1)) - 1.0),
                }
                entries.append({"kappa_phi": kp, "kappa": kappa, "rel_err": err,
                                "ratio_dev": ratios, "exact": asdict(ex),
                                "asymptotic": asdict(asy)})
            at = min(entries, key=lambda e: abs(math.log(e["kappa_phi"] / check_at)))
            pass_rel = all(v <= rel_tol for v in at["rel_err"].values())
            pass_ratio = all(v <= ratio_tol for v in at["ratio_dev"].values())
            first, last = entries[0], entries[-1]
            shrink = {}
            for group in ("rel_err", "ratio_dev"):
                for k in first[group]:
                    lo, hi = first[group][k], last[group][k]
                    shrink[k] = bool(hi < lo or (hi <= NOISE_FLOOR and lo <= NOISE_FLOOR))
            lemma = verify_lemma_constants(p, f, kappa_phi_grid=[grid[-1]])
            pass_lemma = (lemma.deviation_norm[-1] <= lemma_tol
                          and lemma.deviation_var[-1] <= lemma_tol)
            cells.append({"p": p, "family": f.name, "entries": entries,
                          "shrink": shrink, "lemma": lemma.to_dict(),
                          "pass_rel": pass_rel, "pass_ratio": pass_ratio,
                          "pass_shrink": all(shrink.values()), "pass_lemma": pass_lemma})
    return {"check_at": check_at, "rel_tol": rel_tol, "ratio_tol": ratio_tol,
            "lemma_tol": lemma_tol, "cells": cells,
            "pass": all(c["pass_rel"] and c["pass_ratio"] and c["pass_shrink"]
                        and c["pass_lemma"] for c in cells)}


__all__ = ["ExperimentConfig", "ExperimentReport", "LocalAlternative", "LanReport",
           "InfeasibleAlternativeError", "ks_distance", "histogram", "local_alternative",
           "theoretical_power", "cap_statistics", "run_cap_experiment",
           "run_power_experiment", "central_sequence", "log_likelihood_ratio",
           "run_lan_experiment", "run_expansion_verifier"]
