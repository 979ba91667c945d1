import math

import numpy as np
import pytest
from scipy import integrate as spi
from scipy.special import gammaln

from highconc.angular import (HighConcentration, RotSymModel, arctan,
                              classify_high_concentration, colatitude_cdf, colatitude_logpdf,
                              custom, fvml, from_name, kappa_for_kappa_phi, log_density,
                              log_norm_const, moments_asymptotic, moments_exact, polynomial,
                              power_exp)
from highconc.geometry import basis_vector


def _bessel_i0(x, terms=30):
    return sum((x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def test_norm_const_p3_closed_form():
    c = math.exp(log_norm_const(3, 1.0, fvml()))
    assert c == pytest.approx(1.0 / (2 * math.sinh(1.0)), rel=1e-10)
    assert c == pytest.approx(0.4254590, abs=1e-7)


def test_norm_const_uniform_limit():
    assert math.exp(log_norm_const(3, 1e-6, fvml())) == pytest.approx(0.5, rel=1e-9)


def test_norm_const_p2_bessel():
    c = math.exp(log_norm_const(2, 1.0, fvml()))
    assert c == pytest.approx(1.0 / (math.pi * _bessel_i0(1.0)), rel=1e-10)


def test_norm_const_large_kappa_no_overflow():
    # kappa^b = 1e12 would overflow exp without the shift
    lc = log_norm_const(3, 1e6, power_exp(2.0))
    assert np.isfinite(lc)


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("kappa", [1.0, 50.0])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_density_normalizes(p, kappa, b):
    f = power_exp(b)
    # int over the sphere = c * int sin^{p-2}(t) f(k cos t) dt (density constant included)
    lf = lambda t: math.exp(float(f.log_f(np.array(kappa * math.cos(t)))) - float(f.log_f(np.array(kappa))))
    kp = f.kappa_phi(kappa)
    brk = [2 * math.asin(min(1.0, math.sqrt(r / (2 * kp)))) for r in (1.0, 10.0, 50.0) if r < 2 * kp]
    brk = sorted(set(brk + [math.pi / 2]))  # log f_b has a cusp at z = 0
    val, _ = spi.quad(lambda t: math.sin(t) ** (p - 2) * lf(t), 0, math.pi, points=brk or None,
                      limit=500, epsabs=0, epsrel=1e-12)
    # c * f(kappa) * val, assembled in logs since f(kappa) alone may overflow
    total = math.exp(log_norm_const(p, kappa, f) + float(f.log_f(np.array(kappa))) + math.log(val))
    assert total == pytest.approx(1.0, abs=1e-8)
    # colatitude pdf on s integrates to one: composite Gauss-Legendre in the angle
    x, wt = np.polynomial.legendre.leggauss(40)
    edges = np.unique(np.concatenate([brk, np.linspace(0, math.pi, 65)]))
    lo, hi = edges[:-1, None], edges[1:, None]
    t = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * wt).ravel()
    val2 = np.sum(w * np.exp(colatitude_logpdf(np.cos(t), p, kappa, f)) * np.sin(t))
    assert val2 == pytest.approx(1.0, abs=1e-8)


def test_log_density_properties():
    m = RotSymModel([1, 0, 0], 2.0)
    assert log_density([1, 0, 0], m) - log_density([-1, 0, 0], m) == pytest.approx(4.0, rel=1e-12)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    assert np.all(log_density(x, m) <= log_density([1, 0, 0], m))


def test_log_density_scale_invariance():
    base = custom(lambda z: np.asarray(z, dtype=float), name="exp")
    scaled = custom(lambda z: np.asarray(z, dtype=float) + math.log(7.5), name="7.5exp")
    x = np.array([[0.6, 0.8, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    a = log_density(x, RotSymModel([1, 0, 0], 3.0, base))
    b = log_density(x, RotSymModel([1, 0, 0], 3.0, scaled))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_colatitude_pdf_p3_ratio():
    f = power_exp(0.5)
    r = colatitude_logpdf(1.0, 3, 4.0, f) - colatitude_logpdf(0.0, 3, 4.0, f)
    assert r == pytest.approx(float(f.log_f(np.array(4.0)) - f.log_f(np.array(0.0))), rel=1e-12)


def test_colatitude_pdf_p2_endpoint():
    assert np.isinf(colatitude_logpdf(1.0, 2, 1.0, fvml()))
    assert colatitude_cdf(0.999999, 2, 1.0, fvml()) < 1.0


def test_colatitude_cdf_oracle():
    # p=3 FvML: P[u <= s] = (e^{k s} - e^{-k}) / (e^k - e^{-k})
    k = 3.0
    for s in (-0.5, 0.0, 0.9):
        exact = (math.exp(k * s) - math.exp(-k)) / (math.exp(k) - math.exp(-k))
        assert colatitude_cdf(s, 3, k, fvml()) == pytest.approx(exact, rel=1e-9)


def test_moments_closed_form():
    m = moments_exact(3, 2.0, fvml())
    e1 = 1 / math.tanh(2.0) - 0.5
    assert m.e1 == pytest.approx(e1, rel=1e-10)
    assert m.e2 == pytest.approx(1 - 2 * e1 / 2.0, rel=1e-10)
    m = moments_exact(3, 200.0, fvml())
    assert m.one_minus_e2 == pytest.approx(2 * (1 / math.tanh(200) - 1 / 200) / 200, rel=1e-9)
    assert m.one_minus_e2 == pytest.approx(0.00995, abs=1e-7)


def test_moments_small_kappa_symmetry():
    assert abs(moments_exact(3, 1e-6, fvml()).e1) < 1e-6


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("f", [fvml(), power_exp(0.5), power_exp(2.0), polynomial(2.0), arctan()])
def test_moment_invariants(p, f):
    m = moments_exact(p, 30.0, f)
    assert 0 <= m.e2 <= 1 and 0 <= m.ev4 <= 1 and m.e2_tilde >= 0
    assert m.e2_tilde == pytest.approx(m.e2 - m.e1 ** 2, abs=1e-10)
    assert m.ev4 == pytest.approx(1 - 2 * m.e2 + m.eu4, abs=1e-8)


def test_moments_asymptotic_formulas():
    a = moments_asymptotic(3, 200.0, fvml())
    assert a.one_minus_e2 == pytest.approx(0.01)
    assert a.e2_tilde == pytest.approx(2.5e-5)
    assert a.ratio_e2 == pytest.approx(4.0, rel=1e-14)
    assert a.mode == "asymptotic"


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_expansions_converge(p, b):
    f = power_exp(b)
    errs = []
    for kp in (1e2, 1e3, 1e4):
        k = kappa_for_kappa_phi(f, kp)
        ex, asy = moments_exact(p, k, f), moments_asymptotic(p, k, f)
        e = [abs(asy.one_minus_e2 / ex.one_minus_e2 - 1), abs(asy.e2_tilde / ex.e2_tilde - 1),
             abs(asy.ev4 / ex.ev4 - 1)]
        errs.append(e)
        if kp >= 1e3:
            assert max(e) < 0.05
            assert ex.ratio_e2 == pytest.approx(2 * (p - 1), rel=0.02)
            assert ex.ratio_v4 == pytest.approx(2 * (p + 1), rel=0.02)
    for j in range(3):
        assert errs[2][j] < errs[0][j] or max(errs[2][j], errs[0][j]) < 1e-9


def test_phi_finite_difference():
    for f, h in ((fvml(), 1e-5), (power_exp(0.5), 1e-5), (power_exp(2.0), 1e-5),
                 (polynomial(1.5), 1e-6), (arctan(), 1e-5)):
        z = np.linspace(0.5, 20, 25)
        fd = (f.log_f(z + h) - f.log_f(z - h)) / (2 * h)
        np.testing.assert_allclose(f.phi_f(z), fd, atol=1e-6)


def test_power_exp_definition():
    f = power_exp(1.7)
    z = np.array([-3.0, -0.5, 0.0, 2.0])
    np.testing.assert_allclose(f.log_f(z), np.sign(z) * np.abs(z) ** 1.7, rtol=1e-12)
    assert f.kappa_phi(10.0) == pytest.approx(1.7 * 10 ** 1.7, rel=1e-12)


def test_custom_phi_defaults_to_differences():
    f = custom(lambda z: np.asarray(z) ** 3 + np.asarray(z))
    assert f.phi_f(np.array(2.0)) == pytest.approx(13.0, rel=1e-6)


def test_nonmonotone_rejected():
    with pytest.raises(ValueError):
        custom(lambda z: -np.asarray(z, dtype=float))


def test_classification():
    assert classify_high_concentration(power_exp(0.5)) is HighConcentration.PROVIDES
    assert classify_high_concentration(fvml()) is HighConcentration.PROVIDES
    assert classify_high_concentration(polynomial(2.0)) is HighConcentration.DOES_NOT_PROVIDE
    assert classify_high_concentration(arctan()) is HighConcentration.DOES_NOT_PROVIDE
    grows = custom(lambda z: np.asarray(z, dtype=float) ** 2 * np.sign(z))
    assert classify_high_concentration(grows) is HighConcentration.PROVIDES
    slow = custom(lambda z: np.log1p(np.log1p(np.maximum(np.asarray(z, float), 0.0))) + 0.01 * np.arctan(z))
    assert classify_high_concentration(slow) is HighConcentration.UNKNOWN


def test_from_name_and_kappa_inversion():
    assert from_name("vmf").family == "fvml"
    assert from_name("fb", 2.0).b == 2.0
    with pytest.raises(ValueError):
        from_name("gauss")
    for f, target in ((fvml(), 2.0), (power_exp(0.5), 2.0), (arctan(), 0.1)):
        k = kappa_for_kappa_phi(f, target)
        assert f.kappa_phi(k) == pytest.approx(target, rel=1e-10)


def test_model_validation():
    with pytest.raises(ValueError):
        RotSymModel(basis_vector(3), 0.0)
    assert RotSymModel([0, 0, 2], 5.0).p == 3
