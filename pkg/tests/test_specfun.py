import math

import mpmath
import numpy as np
import pytest
from scipy.special import airy, eval_laguerre

from airyspec.specfun import (
    airy_ai,
    airy_ai_prime,
    gauss_legendre,
    hermite_phi,
    laguerre_h_all,
    laguerre_h_all_scaled,
    panel_rule,
)


def ai_series(x, terms=200):
    """Maclaurin series of Ai in exact-ish mpmath arithmetic."""
    with mpmath.workdps(60):
        x = mpmath.mpf(x)
        c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
        f, g = mpmath.mpf(1), x
        sf, sg = f, g
        for k in range(1, terms):
            f *= x**3 / ((3 * k - 1) * (3 * k))
            g *= x**3 / ((3 * k) * (3 * k + 1))
            sf += f
            sg += g
        return float(c1 * sf - c2 * sg)


def test_airy_at_zero():
    expected = 3 ** (-2 / 3) / math.gamma(2 / 3)
    assert airy_ai(0.0) == pytest.approx(expected, rel=5e-15)
    assert airy_ai(0.0) == pytest.approx(ai_series(0.0), rel=5e-15)
    assert airy_ai_prime(0.0) == pytest.approx(-(3 ** (-1 / 3)) / math.gamma(1 / 3), rel=5e-15)


def test_airy_large_argument_asymptotics():
    x = 20.0
    ratio = airy_ai(x) * 2 * math.sqrt(math.pi) * x**0.25 * math.exp(2 / 3 * x**1.5)
    assert abs(ratio - 1) < 1e-2


def test_airy_first_zero():
    # bisection on the series oracle
    lo, hi = -2.4, -2.3
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ai_series(mid) > 0:
            hi = mid
        else:
            lo = mid
    assert abs(airy_ai(0.5 * (lo + hi))) < 1e-13


@pytest.mark.parametrize("x", np.linspace(-10, 40, 101))
def test_airy_relative_accuracy(x):
    with mpmath.workdps(40):
        ref = float(mpmath.airyai(x))
        dref = float(mpmath.airyai(x, derivative=1))
    assert airy_ai(x) == pytest.approx(ref, rel=5e-15, abs=1e-300)
    assert airy_ai_prime(x) == pytest.approx(dref, rel=5e-15, abs=1e-300)


def test_airy_absolute_accuracy_oscillatory():
    x = np.linspace(-60, -10, 301)
    with mpmath.workdps(40):
        ref = np.array([float(mpmath.airyai(v)) for v in x])
        dref = np.array([float(mpmath.airyai(v, derivative=1)) for v in x])
    assert np.max(np.abs(airy_ai(x) - ref)) < 5e-15
    # Ai' grows like |x|^{1/4}; the contract is absolute in Ai, scaled for Ai'
    assert np.max(np.abs(airy_ai_prime(x) - dref) / np.abs(x) ** 0.25) < 5e-15


def test_airy_far_right():
    with mpmath.workdps(30):
        ref = float(mpmath.airyai(250))
    assert airy_ai(250.0) == pytest.approx(ref, rel=1e-13)


def test_airy_ode_and_sign():
    h = 1e-3
    for x in np.linspace(-10, 100, 45):
        second = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h**2
        assert abs(second - x * airy_ai(x)) < 1e-6 + abs(x * airy_ai(x)) * 1e-5
    h = 1e-4
    fd = (airy_ai_prime(1 + h) - airy_ai_prime(1 - h)) / (2 * h)
    assert fd == pytest.approx(airy_ai(1.0), abs=1e-8)
    assert airy_ai_prime(5.0) < 0


def test_airy_domain():
    with pytest.raises(ValueError):
        airy_ai(-61.0)
    with pytest.raises(ValueError):
        airy_ai_prime(301.0)
    with pytest.raises(ValueError):
        airy_ai(float("nan"))


def test_airy_vectorized():
    x = np.linspace(-5, 5, 11)
    assert np.allclose(airy_ai(x), airy(x)[0], rtol=1e-14, atol=1e-15)


def test_laguerre_at_origin():
    h = laguerre_h_all(30, 2.5, 0.0)
    assert np.allclose(h, math.sqrt(2.5), rtol=1e-14, atol=0)


def test_laguerre_small_case():
    h = laguerre_h_all(1, 2.0, 1.0)
    assert h[1] == pytest.approx(-math.sqrt(2) / math.e, rel=1e-15)


@pytest.mark.parametrize("a,x", [(1.0, 0.3), (2.0, 7.5), (0.7, 40.0), (5.0, 30.0)])
def test_laguerre_against_scipy(a, x):
    h = laguerre_h_all(40, a, x)
    ref = np.array([math.sqrt(a) * math.exp(-a * x / 2) * eval_laguerre(n, a * x) for n in range(41)])
    mask = np.abs(ref) > 1e-280
    # scipy loses relative digits near roots; compare against the larger of the two scales
    assert np.allclose(h[mask], ref[mask], rtol=1e-12, atol=1e-13 * np.max(np.abs(ref)))


def test_laguerre_recurrence_relation():
    a, x, N = 1.3, 4.2, 60
    h = laguerre_h_all(N, a, x)
    y = a * x
    for n in range(1, N):
        lhs = (n + 1) * h[n + 1]
        rhs = (2 * n + 1 - y) * h[n] - n * h[n - 1]
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs((2 * n + 1 - y) * h[n]), abs(n * h[n - 1]))


def test_laguerre_scaled_form_far_out():
    a, x, N = 2.0, 900.0, 5  # a x = 1800, plain values underflow
    g, log_scale = laguerre_h_all_scaled(N, a, x)
    with mpmath.workdps(50):
        for n in range(N + 1):
            ref = mpmath.sqrt(a) * mpmath.exp(-a * x / 2) * mpmath.laguerre(n, 0, a * x)
            val = mpmath.mpf(g[n]) * mpmath.exp(log_scale)
            assert abs(val / ref - 1) < 1e-12
    assert np.all(laguerre_h_all(N, a, x) == 0.0)


def test_laguerre_orthonormal():
    x, w = panel_rule(np.linspace(0, 200, 101), 24)
    h = laguerre_h_all(5, 1.0, x)
    assert abs(w @ (h[3] * h[5])) < 1e-12
    assert w @ (h[4] * h[4]) == pytest.approx(1.0, abs=1e-12)


def test_laguerre_derivative_identity():
    a, x, d = 1.7, 2.3, 1e-5
    hp = laguerre_h_all(8, a, x + d)
    hm = laguerre_h_all(8, a, x - d)
    h = laguerre_h_all(8, a, x)
    dh = (hp - hm) / (2 * d)
    for n in range(1, 9):
        assert dh[n] - dh[n - 1] == pytest.approx(-(a / 2) * (h[n] + h[n - 1]), abs=1e-8)


def test_laguerre_errors():
    with pytest.raises(ValueError):
        laguerre_h_all(3, 0.0, 1.0)
    with pytest.raises(ValueError):
        laguerre_h_all(3, 1.0, -1.0)


def test_hermite_values():
    assert hermite_phi(0, 1.0, 0.0) == pytest.approx(math.pi**-0.25, rel=1e-15)
    assert hermite_phi(1, 1.0, 0.0) == 0.0
    x, w = panel_rule(np.linspace(-20, 20, 41), 24)
    assert w @ hermite_phi(2, 1.0, x) ** 2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,a", [(0, 1.0), (3, 0.8), (6, 1.5)])
def test_hermite_ode(n, a):
    # phi'' = (a^4 x^2 - a^2 (2n + 1)) phi
    h = 1e-4
    for x in np.linspace(-2.5, 2.5, 11):
        second = (hermite_phi(n, a, x + h) - 2 * hermite_phi(n, a, x) + hermite_phi(n, a, x - h)) / h**2
        rhs = (a**4 * x * x - a * a * (2 * n + 1)) * hermite_phi(n, a, x)
        assert abs(second - rhs) < 1e-6


def test_hermite_errors():
    with pytest.raises(ValueError):
        hermite_phi(-1, 1.0, 0.0)
    with pytest.raises(ValueError):
        hermite_phi(1, -1.0, 0.0)


def test_gauss_legendre_small():
    r1 = gauss_legendre(1)
    assert r1.nodes.tolist() == [0.0] and r1.weights.tolist() == [2.0]
    r2 = gauss_legendre(2)
    assert np.allclose(r2.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(r2.weights, [1, 1], atol=1e-15)


def test_gauss_legendre_exactness():
    r = gauss_legendre(20)
    assert r.weights @ r.nodes**38 == pytest.approx(2 / 39, abs=1e-14)


@pytest.mark.parametrize("n", [3, 24, 101, 500])
def test_gauss_legendre_invariants(n):
    r = gauss_legendre(n)
    assert np.all(r.weights > 0)
    assert abs(r.weights.sum() - 2) < 1e-14
    assert np.all(np.diff(r.nodes) > 0)
    assert np.max(np.abs(r.nodes + r.nodes[::-1])) < 1e-14


def test_gauss_legendre_range():
    for n in (0, 501):
        with pytest.raises(ValueError):
            gauss_legendre(n)
