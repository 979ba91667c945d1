import numpy as np
import pytest

from highconc.quadrature import KRONROD_WEIGHTS, NODES, QuadratureError, integrate


def test_kronrod_rule_exact_to_degree_22():
    for k in range(0, 23):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.sum(KRONROD_WEIGHTS * NODES ** k) == pytest.approx(exact, abs=1e-14)


def test_smooth_integral():
    val, err = integrate(np.sin, [0.0, np.pi])
    assert val == pytest.approx(2.0, rel=1e-12)
    assert err < 1e-10


def test_vector_integrand_and_segments():
    f = lambda x: np.vstack([np.ones_like(x), x])
    val, _, seg = integrate(f, [0.0, 1.0, 3.0], segments=True)
    np.testing.assert_allclose(val, [3.0, 4.5])
    np.testing.assert_allclose(seg, [[1.0, 2.0], [0.5, 4.0]])


def test_sharp_peak_refines():
    # exp(-1e4 (x-0.3)^2) integrates to sqrt(pi)/100
    val, _ = integrate(lambda x: np.exp(-1e4 * (x - 0.3) ** 2), [0.0, 1.0])
    assert val == pytest.approx(np.sqrt(np.pi) / 100, rel=1e-9)


def test_integrable_singularity():
    val, _ = integrate(lambda x: 1.0 / np.sqrt(x), [0.0, 1.0], max_panels=2 ** 15)
    assert val == pytest.approx(2.0, rel=1e-6)


def test_panel_cap_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), [0.0, 1.0], max_panels=64)


def test_bad_breakpoints():
    with pytest.raises(ValueError):
        integrate(np.sin, [1.0, 0.0])
