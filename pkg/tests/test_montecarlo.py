import json
import math

import numpy as np
import pytest
from scipy import stats

from highconc.angular import RotSymModel, fvml, power_exp
from highconc.geometry import basis_vector
from highconc.montecarlo import (ExperimentConfig, InfeasibleAlternativeError,
                                 central_sequence, histogram, ks_distance, local_alternative,
                                 log_likelihood_ratio, run_cap_experiment,
                                 run_expansion_verifier, run_lan_experiment,
                                 run_power_experiment, theoretical_power)
from highconc.rng import SeededStream
from highconc.sampling import sample_rows

E1 = basis_vector(3, 0)


def test_config_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(M=0)
    with pytest.raises(ValueError):
        ExperimentConfig(alpha=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(kappa=-2.0)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"p": 3, "bogus": 1})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"p": 3, "n": 50, "kappa_exponent": 0.5, "b": 0.5, "seed": 9}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.kappa_n() == pytest.approx(math.sqrt(50))
    assert cfg.nu_n() == pytest.approx(1 / math.sqrt(50 * 0.5 * 50 ** 0.25))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_local_alternative_examples():
    alt = local_alternative(E1, 0.0, 0.1)
    assert alt.theta_alt == E1
    alt = local_alternative(E1, 2.0, 1.0)
    np.testing.assert_allclose(alt.theta_alt.coords, [-1, 0, 0], atol=1e-15)
    alt = local_alternative(E1, 2.0, 0.01)
    assert np.linalg.norm(alt.theta_alt.coords - E1.coords) == pytest.approx(0.02, abs=1e-12)
    assert alt.angle == pytest.approx(2 * math.asin(0.01), rel=1e-14)
    assert np.linalg.norm(alt.tau) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(InfeasibleAlternativeError):
        local_alternative(E1, 3.0, 1.0)
    with pytest.raises(ValueError):
        local_alternative(E1, -1.0, 0.1)


def test_local_alternative_random_poles():
    rng = np.random.default_rng(0)
    for _ in range(100):
        th = rng.standard_normal(4)
        chord = rng.uniform(0, 2)
        alt = local_alternative(th, chord / 0.3, 0.3)
        assert np.linalg.norm(alt.theta_alt.coords - alt.theta0.coords) == pytest.approx(chord, abs=1e-10)


def test_theoretical_power():
    assert theoretical_power(0.0, 3, 0.05) == pytest.approx(0.05, abs=1e-12)
    vals = [theoretical_power(l, 3) for l in range(5)]
    assert np.all(np.diff(vals) > 0)
    rng = np.random.default_rng(77)
    n = 10 ** 7
    z = rng.standard_normal((2, n))
    hit = np.mean((z[0] + 4) ** 2 + z[1] ** 2 > -2 * math.log(0.05))
    assert abs(vals[4] - hit) < 3 * math.sqrt(hit * (1 - hit) / n)


def test_ks_distance_matches_scipy():
    x = np.random.default_rng(1).chisquare(2, 500)
    cdf = lambda v: stats.chi2.cdf(v, 2)
    assert ks_distance(x, cdf) == pytest.approx(stats.kstest(x, cdf).statistic, abs=1e-14)


def test_histogram_shapes():
    x = np.random.default_rng(2).chisquare(2, 2000)
    h = histogram(x, 2, 40)
    assert len(h["count"]) == 40 and sum(h["count"]) == 2000
    widths = np.array(h["bin_right"]) - np.array(h["bin_left"])
    assert np.sum(np.array(h["density"]) * widths) == pytest.approx(1.0)
    fd = histogram(x, 2, "fd")
    assert sum(fd["count"]) == 2000


def test_cap_experiment_basic_and_thread_invariant():
    cfg = ExperimentConfig(n=60, M=200, seed=3)
    a = run_cap_experiment(cfg)
    cfg.threads = 3
    b = run_cap_experiment(cfg)
    assert a.raw == b.raw and a.summary == b.summary
    assert a.excluded == 0
    assert min(a.raw["t_oracle"]) >= 0 and min(a.raw["t_feasible"]) >= 0
    assert 0 <= a.summary["ks_oracle"] <= 1


def test_power_experiment_raw_reproduces_curve():
    cfg = ExperimentConfig(n=100, M=300, seed=4, ell_grid=[0.0, 2.0])
    r = run_power_experiment(cfg)
    for row, rw, rs in zip(r.rows, r.raw["reject_watson"], r.raw["reject_wald"]):
        assert row["freq_watson"] == pytest.approx(np.mean(rw))
        assert row["diff_wald"] == pytest.approx(np.mean(rs) - row["theoretical_power"])
        assert 0 <= row["freq_watson"] <= 1
    band = 3 * math.sqrt(0.05 * 0.95 / 300)
    assert abs(r.rows[0]["freq_watson"] - 0.05) <= band
    cfg.threads = 2
    assert run_power_experiment(cfg).raw == r.raw


def test_central_sequence():
    x = np.tile(E1.coords, (10, 1))
    np.testing.assert_allclose(central_sequence(x, E1, 0.1), 0.0)
    rng = np.random.default_rng(3)
    y = rng.standard_normal((20, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    assert central_sequence(y, E1, 0.1) @ E1.coords == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        central_sequence(y, E1, 0.0)


def test_central_sequence_variance():
    n = kappa = 1000
    nu = 1 / math.sqrt(n * kappa)
    m = RotSymModel(E1, kappa)
    d = np.array([central_sequence(sample_rows(m, n, SeededStream(5, r)), E1, nu)
                  for r in range(1000)])
    np.testing.assert_allclose(d[:, 1:].var(axis=0, ddof=1), 1.0, rtol=0.10)


def test_log_likelihood_ratio():
    m = RotSymModel(E1, 300.0)
    x = sample_rows(m, 500, SeededStream(6))
    alt = local_alternative(E1, 1.0, 0.01).theta_alt.coords
    assert log_likelihood_ratio(x, E1.coords, E1.coords, m) == 0.0
    lam = log_likelihood_ratio(x, E1.coords, alt, m)
    assert lam == pytest.approx(-log_likelihood_ratio(x, alt, E1.coords, m), rel=1e-12)
    assert lam == pytest.approx(300.0 * np.sum(x @ (alt - E1.coords)), abs=1e-9)
    with pytest.raises(ValueError):
        log_likelihood_ratio(x, E1.coords, alt * 1.01, m)


def test_log_likelihood_ratio_no_overflow():
    m = RotSymModel(E1, 700.0, power_exp(1.4))
    x = sample_rows(m, 700, SeededStream(7))
    alt = local_alternative(E1, 2.0, 0.001).theta_alt.coords
    assert np.isfinite(log_likelihood_ratio(x, E1.coords, alt, m))


def test_lan_zero_tau_and_fvml_closed_form():
    cfg = ExperimentConfig(family="fvml", M=20, n_schedule=[100, 400], seed=8)
    rep = run_lan_experiment(cfg, tau_norm=0.0)
    for v in rep.remainder.values():
        np.testing.assert_allclose(v, 0.0, atol=1e-12)
    rep = run_lan_experiment(cfg, tau_norm=1.0)
    # FvML: remainder = |tau|^2 (1 - Xbar'theta)/2 - nu^2 |tau|^4 / 8
    n = 100
    nu = cfg.nu_n(n)
    m = cfg.model(n)
    for r in range(3):
        x = sample_rows(m, n, SeededStream(8, r))
        expect = 0.5 * (1 - x.mean(axis=0) @ E1.coords) - nu ** 2 / 8
        assert rep.remainder["100"][r] == pytest.approx(expect, abs=1e-9)


def test_expansion_verifier_small_grid():
    out = run_expansion_verifier(p_grid=(3,), families=(("fvml", None),),
                                 kappa_phi_grid=(1e2, 1e3, 1e4))
    cell = out["cells"][0]
    at = cell["entries"][1]
    assert at["exact"]["one_minus_e2"] ** 2 / at["exact"]["e2_tilde"] == pytest.approx(4, rel=0.02)
    assert at["exact"]["ev4"] / at["exact"]["e2_tilde"] == pytest.approx(8, rel=0.02)
    assert out["pass"]
    with pytest.raises(ValueError):
        run_expansion_verifier(p_grid=())
