import math

import mpmath
import numpy as np
import pytest
from scipy.special import airye

from airyspec.eigfun import compute_eigenfunctions, select_basis
from airyspec.identities import derivative_inner
from airyspec.specfun import airy_ai
from airyspec.spectrum import (
    INTEGRAL_SWITCH,
    assemble_B,
    compute_H,
    dlambda2_dc,
    dlambda_dc,
    eigenvalue_ratios,
    eval_point,
    full_spectrum,
    h0_integral,
    h0_log_integral,
    lambda_0,
    log_complement,
)
from oracles import h0_log_quad, h_integral_mp, h_integral_quad, nystrom_spectrum


def test_eval_point():
    assert eval_point(3.0) == 0.0
    assert eval_point(0.0) == 0.0
    assert eval_point(-7.0) == 7.0


def test_assemble_B_entries():
    p = select_basis(1.5, 10)
    x = 0.0
    B = assemble_B(p, x)
    M = B.to_dense()
    a, s = p.a, x + p.c
    for k in range(1, 12):
        assert M[k, k] == pytest.approx(6 * k + 3 + 2 * a * s + a**3 / 2, rel=1e-15)
    # the H_{k-2} coefficient of row k is k - 1 (stored below the diagonal)
    for k in range(2, 12):
        assert M[k, k - 2] == k - 1
    assert M[2, 0] == 1.0
    assert np.count_nonzero(M[2]) == 5
    assert np.count_nonzero(M[0]) == 1 and 0 < M[0, 0] < 1e-300
    assert B.dim == p.N_prime + 1


def test_B_annihilates_true_H():
    # the five-term relation holds for quadrature values of H_k
    p = select_basis(0.0, 4)
    H = np.array([h_integral_quad(k, p.a, 0.0) for k in range(14)])
    M = assemble_B(p, 0.0).to_dense()[:14, :14]
    for k in range(2, 12):
        # limited by the quadrature oracle, not by the relation
        assert abs(M[k] @ H) < 1e-10 * np.max(np.abs(M[k]) * np.abs(H))


def h0_oracle(a, s):
    with mpmath.workdps(30):
        f = lambda y: mpmath.airyai(y + s) * mpmath.exp(-a * y / 2)
        return float(mpmath.sqrt(a) * mpmath.quad(f, [0, 1, 2, 4, 8, 16, mpmath.inf]))


@pytest.mark.parametrize("a,s", [(2.0, 0.0), (2.0, 5.0), (0.5, 0.3), (17.0, 12.0)])
def test_h0_integral(a, s):
    assert h0_integral(a, s) == pytest.approx(h0_oracle(a, s), rel=1e-13)


@pytest.mark.parametrize("s", [30.0, 60.0, 100.0])
def test_h0_integral_far_right(s):
    a = 2.0
    val = h0_integral(a, s)
    assert 0 <= val < math.sqrt(a) * airy_ai(s) / (a / 2)
    assert h0_log_integral(a, s) == pytest.approx(h0_log_quad(a, s), rel=1e-14)


def test_h0_integral_rejects_bad_input():
    with pytest.raises(ValueError):
        h0_integral(-1.0, 0.0)
    with pytest.raises(ValueError):
        h0_integral(1.0, -1.0)


def test_compute_H_against_quadrature():
    p = select_basis(0.0, 5)
    H = compute_H(p)
    for k in range(6):
        assert H[k] == pytest.approx(h_integral_mp(k, p.a, 0.0), rel=1e-10)
        assert math.copysign(1, H[k]) == math.copysign(1, h_integral_quad(k, p.a, 0.0))


def test_compute_H_negative_c():
    p = select_basis(-3.0, 5)
    H = compute_H(p)
    x = eval_point(-3.0)
    for k in (0, 2, 5):
        assert H[k] == pytest.approx(h_integral_quad(k, p.a, x + p.c), rel=1e-10)


def test_H_recurrence_residual():
    p = select_basis(0.0, 20)
    H = compute_H(p)
    M = assemble_B(p, 0.0).to_dense()[: p.N + 1, : p.N + 1]
    assert abs(M[10] @ H) <= 1e-12 * np.max(np.abs(H))


def test_lambda0_monotone_in_c():
    l30, l10, l0 = (full_spectrum(c, 0).lam[0] for c in (30.0, 10.0, 0.0))
    assert 0 < l30 < l10 < l0 < 1


def test_lambda0_tends_to_one():
    lam = full_spectrum(-20.0, 0).lam[0]
    assert abs(lam**2 - 1) < 1e-13


def test_lambda0_against_nystrom():
    spec = full_spectrum(0.0, 3)
    vals = nystrom_spectrum(0.0, nodes=200, x_max=40.0)[0]
    assert spec.lam[0] == pytest.approx(abs(vals[0]), abs=1e-12)
    assert lambda_0(spec) == spec.lam[0]


def test_ratios_against_nystrom():
    spec = full_spectrum(0.0, 6)
    r = eigenvalue_ratios(spec)
    assert np.all(np.abs(r) < 1)
    vals = nystrom_spectrum(0.0, nodes=200, x_max=40.0)[0][:7]
    assert r[0] == pytest.approx(vals[1] / vals[0] * np.sign(vals[0]) * np.sign(spec.lam[0]) * np.sign(vals[0]), rel=1e-10)
    # signs alternate in the same way as the oracle's
    assert np.array_equal(np.sign(spec.lam), np.sign(vals) * np.sign(vals[0]))


def test_fredholm_determinant_golden():
    spec = full_spectrum(0.0, 30)
    assert float(np.prod(1 - spec.lam**2)) == pytest.approx(9.69373e-1, abs=5e-7)


def test_fredholm_determinant_negative_c():
    # independent value from a Nystrom determinant of the same operator
    spec = full_spectrum(-2.0, 30)
    vals = nystrom_spectrum(-2.0, nodes=300)[0]
    assert float(np.prod(1 - spec.lam**2)) == pytest.approx(float(np.prod(1 - vals**2)), rel=1e-12)


@pytest.mark.parametrize("c", [-5.0, 0.0, 5.0])
def test_full_spectrum_against_nystrom(c):
    spec = full_spectrum(c, 8)
    vals = nystrom_spectrum(c, nodes=300)[0][:9]
    # the oracle's eigenvectors have arbitrary sign; align on lambda_0
    vals = vals * np.sign(vals[0])
    assert np.max(np.abs(spec.lam - vals)) < 1e-11
    big = np.abs(vals) > 1e-6
    assert np.max(np.abs(spec.lam[big] / vals[big] - 1)) < 1e-8


def test_spectrum_invariants():
    spec = full_spectrum(0.0, 20)
    assert np.all(np.diff(np.abs(spec.lam)) < 0)
    assert np.all(np.abs(spec.lam) < 1)
    assert np.all(np.diff(spec.chi) > 0)
    assert np.allclose(spec.lam_sign * np.exp(spec.lam_log), spec.lam, rtol=1e-15, atol=0)


def test_log_magnitudes_below_double_range():
    spec = full_spectrum(100.0, 40)
    assert spec.lam[40] == 0.0
    assert np.isfinite(spec.lam_log[40]) and spec.lam_log[40] < -745
    assert np.all(np.diff(spec.lam_log) < 0)


def test_log_magnitudes_against_scaled_nystrom():
    # at c = 100 every eigenvalue is below 1e-290; a Nystrom matrix built from
    # Ai(x + y + c) exp(2 c^{3/2} / 3) keeps them representable
    c = 100.0
    zeta = lambda t: 2.0 / 3.0 * t**1.5
    t, w = np.polynomial.legendre.leggauss(120)
    x, w = 1.5 * (t + 1.0), 1.5 * w
    T = x[:, None] + x[None, :] + c
    K = airye(T)[0] * np.exp(zeta(c) - zeta(T))
    sw = np.sqrt(w)
    vals = np.linalg.eigvalsh(sw[:, None] * K * sw[None, :])
    ref = np.sort(np.log(np.abs(vals)))[::-1][:3] - zeta(c)
    got = full_spectrum(c, 2).lam_log
    assert np.allclose(got[:2], ref[:2], rtol=1e-13, atol=0)
    # lambda_2 is e^-17 times lambda_0, close to the dense solver's noise floor
    assert abs(got[2] - ref[2]) < 1e-7


@pytest.mark.parametrize("c,j", [(0.0, 0), (-10.0, 2), (3.0, 4)])
def test_dlambda_dc(c, j):
    # fourth-order stencil: at c = -10, lambda_2 = 1 - 2e-7 and a plain
    # h = 1e-4 difference is dominated by rounding
    h = 3e-3
    f = lambda x: full_spectrum(x, j).lam[j]
    fd = (8 * (f(c + h) - f(c - h)) - (f(c + 2 * h) - f(c - 2 * h))) / (12 * h)
    spec = full_spectrum(c, j)
    assert dlambda_dc(spec, j) == pytest.approx(fd, rel=1e-6)
    assert dlambda2_dc(spec, j) < 0
    assert dlambda2_dc(spec, j) == pytest.approx(2 * spec.lam[j] * dlambda_dc(spec, j), rel=1e-14)


def test_relative_precision_stress():
    spec = full_spectrum(0.0, 30)
    assert abs(spec.lam[30]) < 1e-16 * abs(spec.lam[0])
    assert derivative_inner(spec, 30, 29).rel_err < 1e-8
    assert derivative_inner(spec, 29, 30).rel_err < 1e-8


def test_log_complement_against_nystrom():
    c = -5.0
    comp = math.exp(log_complement(c, 0)[0])
    vals = nystrom_spectrum(c, nodes=300)[0]
    assert comp == pytest.approx(1 - vals[0] ** 2, rel=1e-9)
    assert comp == pytest.approx(1 - full_spectrum(c, 0).lam[0] ** 2, rel=1e-9)


def test_lambda0_across_integral_switch():
    # the two lambda_0 routes meet at INTEGRAL_SWITCH; allow for the slope
    h = 1e-9
    lo = full_spectrum(INTEGRAL_SWITCH - h, 2)
    hi = full_spectrum(INTEGRAL_SWITCH + h, 2)
    slope = np.array([abs(dlambda_dc(hi, j)) for j in range(3)])
    assert np.all(np.abs(lo.lam - hi.lam) <= 2 * h * slope * 1.01 + 1e-14)


@pytest.mark.parametrize("c", [-40.0, -60.0])
def test_lambda0_very_negative_c(c):
    spec = full_spectrum(c, 3)
    assert abs(spec.lam[0] - 1) < 1e-15
    assert np.allclose(np.abs(spec.lam), 1.0, rtol=0, atol=1e-13)


def test_spectrum_from_precomputed_eigenfunctions():
    from airyspec.spectrum import attach_eigenvalues

    spec = attach_eigenvalues(compute_eigenfunctions(1.0, 4))
    assert np.allclose(spec.lam, full_spectrum(1.0, 4).lam, rtol=1e-15)
