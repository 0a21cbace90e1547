"""Distributions of the k-th largest level at the soft edge (beta = 1, 2, 4).

For beta = 2 the Fredholm determinant det(I - z K) equals
prod_i (1 - z lambda_i^2) with lambda_i the eigenvalues of the Airy integral
operator at c = s.  Expanding its z-derivatives at z = 1 turns F_2(k; s)
into a Poisson-binomial probability: with p_i = lambda_i^2,

    F_2(k; s) = P(fewer than k of the independent events i occur)
              = prod_i (1 - p_i) * sum_{j<k} e_j(mu),   mu_i = p_i / (1 - p_i),

where e_j are elementary symmetric polynomials.  Every term is positive,
so nothing cancels.  For beta = 1 and 4 the determinants involve the
signed eigenvalues of the same operator (the GOE kernel Ai((x+y)/2)/2 on
[s, inf) becomes Ai(u + v + s) on [0, inf) after x = s + 2u) and are
differentiated in z with truncated power series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import binom, logsumexp

from .spectrum import full_spectrum, log_complement

EPS = np.finfo(float).eps
N_START = 20
N_CAP = 512
COMPLEMENT_THRESHOLD = 1e-3


@dataclass(frozen=True)
class SpectralFactors:
    """Eigen-data entering the determinant formulas at one value of s.

    ``lam`` holds signed eigenvalues at c = s; logarithms are kept alongside
    so values far below the double range stay usable.  ``log1m`` is log(1 - lam^2) and
    ``dlam_ds`` the s-derivative of ``lam``.
    """

    s: float
    beta: int
    c: float
    lam: np.ndarray
    log_lam2: np.ndarray
    log1m: np.ndarray
    psi0: np.ndarray
    dlam_ds: np.ndarray
    count: int
    n: int
    corrected: int

    @property
    def lam2(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_lam2)

    @property
    def dlam2_ds(self) -> np.ndarray:
        return 2.0 * self.lam * self.dlam_ds


@dataclass(frozen=True)
class DistValue:
    value: float
    log_value: float
    sign: float
    est_abs_err: float

    @classmethod
    def from_log(cls, sign: float, log_value: float, rel_err: float) -> "DistValue":
        with np.errstate(over="ignore", under="ignore"):
            mag = math.exp(log_value) if log_value < 709.78 else math.inf
        value = sign * mag
        if math.isinf(value):
            value = sign * np.finfo(float).max
        est = abs(value) * rel_err
        if mag == 0.0:
            # below the double range: the absolute error is at most the
            # smallest subnormal, whatever the relative error is
            est = 5e-324
        return cls(value, log_value, sign, est)


def _check_beta(beta):
    if beta not in (1, 2, 4):
        raise ValueError("beta must be 1, 2 or 4")


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


def operator_parameter(s: float, beta: int) -> float:
    """Value of c whose operator T_c enters F_beta(k; s).

    It is c = s for all three ensembles: for beta = 1, 4 the kernel
    Ai((x + y)/2)/2 on [s, inf) is unitarily equivalent to Ai(u + v + s) on
    [0, inf).  (Using c = s/2 instead gives densities that do not integrate
    to one.)
    """
    _check_beta(beta)
    return float(s)


def spectral_factors(
    s: float,
    beta: int = 2,
    tol: float = 1e-18,
    n_start: int = N_START,
    n_cap: int = N_CAP,
    tail_correction: bool = True,
) -> SpectralFactors:
    """Eigenvalues of the operator whose determinant gives F_beta at s.

    The number of eigenvalues starts at ``n_start`` and doubles until the
    last squared eigenvalue falls below ``tol`` times the first.  When some
    lambda^2 is within ``COMPLEMENT_THRESHOLD`` of 1, its complement
    1 - lambda^2 is recomputed by integrating d log(lambda^2)/dc, which keeps
    the left tail accurate.
    """
    _check_beta(beta)
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _spectral_factors_cached(float(s), int(beta), float(tol), int(n_start), int(n_cap), bool(tail_correction))


@lru_cache(maxsize=256)
def _spectral_factors_cached(s, beta, tol, n_start, n_cap, tail_correction):
    c = operator_parameter(s, beta)
    log_tol = math.log(tol)
    n = n_start
    while True:
        sp = full_spectrum(c, n)
        log_lam2 = 2.0 * sp.lam_log
        small = np.nonzero(log_lam2 - log_lam2[0] < log_tol)[0]
        if small.size:
            count = int(small[0]) + 1
            break
        if n >= n_cap:
            raise ArithmeticError(f"eigenvalues did not decay below {tol:g} within n={n_cap}")
        n = min(2 * n, n_cap)
    lam = sp.lam[:count]
    log_lam2 = log_lam2[:count]
    psi0 = sp.psi0[:count]
    with np.errstate(divide="ignore", invalid="ignore"):
        log1m = np.log1p(-np.exp(log_lam2))
    corrected = 0
    if tail_correction:
        near = np.nonzero(-np.expm1(log_lam2) < COMPLEMENT_THRESHOLD)[0]
        if near.size:
            corrected = int(near[-1]) + 1
            log1m[:corrected] = log_complement(c, corrected - 1, spec=sp)
    if not np.all(np.isfinite(log1m)):
        raise ArithmeticError("an eigenvalue rounded to magnitude one; enable tail_correction")
    dlam_ds = -0.5 * lam * psi0**2
    for arr in (lam, log_lam2, log1m, psi0, dlam_ds):
        arr.flags.writeable = False
    return SpectralFactors(s, beta, c, lam, log_lam2, log1m, psi0, dlam_ds, count, n, corrected)


# ---------------------------------------------------------------- beta = 2


def _esp_table(x: np.ndarray, order: int) -> np.ndarray:
    """Row i holds e_0..e_order of x[:i] (shape (len(x)+1, order+1))."""
    tab = np.zeros((x.size + 1, order + 1))
    tab[0, 0] = 1.0
    for i, xi in enumerate(x):
        tab[i + 1] = tab[i]
        tab[i + 1, 1:] += xi * tab[i, :-1]
    return tab


def elementary_symmetric(x, order: int) -> np.ndarray:
    """e_0(x), ..., e_order(x) by the positive recurrence e_j += x_i e_{j-1}."""
    return _esp_table(np.asarray(x, dtype=float), order)[-1]


def _gue_terms(f: SpectralFactors):
    log_mu = f.log_lam2 - f.log1m
    shift = float(np.max(log_mu))
    return np.exp(log_mu - shift), shift, float(np.sum(f.log1m))


def _rel_err(f: SpectralFactors, k: int) -> float:
    # rounding in the sums plus the amplification of errors in 1 - lambda^2
    # for eigenvalues that were not recomputed from the complement integral
    uncorrected = f.log1m[f.corrected :]
    amp = float(np.sum(np.exp(-uncorrected) - 1.0)) if uncorrected.size else 0.0
    return EPS * (4.0 * (f.count + k) + 2.0 * amp)


def cdf_gue(k: int, s: float, factors: SpectralFactors | None = None) -> DistValue:
    """F_2(k; s), the CDF of the k-th largest level at the GUE soft edge."""
    _check_k(k)
    f = factors or spectral_factors(s, 2)
    mu, shift, log_p = _gue_terms(f)
    e = elementary_symmetric(mu, k - 1)
    with np.errstate(divide="ignore"):
        terms = np.log(e) + shift * np.arange(k)
    log_f = log_p + float(logsumexp(terms))
    return DistValue.from_log(1.0, min(log_f, 0.0), _rel_err(f, k))


def pdf_gue(k: int, s: float, factors: SpectralFactors | None = None) -> DistValue:
    """d/ds F_2(k; s).

    Differentiating the Poisson-binomial form with d p_i/ds = -p_i psi_i(0)^2
    gives prod(1 - p) * sum_i nu_i e_{k-1}(mu without i) with
    nu_i = p_i psi_i(0)^2 / (1 - p_i); again all terms are positive.
    """
    _check_k(k)
    f = factors or spectral_factors(s, 2)
    mu, shift, log_p = _gue_terms(f)
    with np.errstate(divide="ignore"):
        log_nu = f.log_lam2 + 2.0 * np.log(f.psi0) - f.log1m
    order = k - 1
    pre = _esp_table(mu, order)
    suf = _esp_table(mu[::-1], order)[::-1]
    # e_{k-1}(mu without i) = sum_a e_a(mu[:i]) e_{k-1-a}(mu[i+1:])
    leave_out = np.einsum("ia,ia->i", pre[:-1], suf[1:, ::-1])
    with np.errstate(divide="ignore"):
        log_terms = log_nu + np.log(leave_out)
    log_d = log_p + shift * order + float(logsumexp(log_terms))
    return DistValue.from_log(1.0, log_d, _rel_err(f, k) + 4 * EPS)


# ------------------------------------------------------------ beta = 1, 4


class _Series:
    """Truncated power series in w = z - 1 with a first-order s-perturbation.

    Represents exp(log_scale + eps*dlog) * (coef + eps*dcoef) modulo w^order+1
    and eps^2.
    """

    __slots__ = ("log_scale", "dlog", "coef", "dcoef")

    def __init__(self, log_scale, dlog, coef, dcoef):
        self.log_scale = log_scale
        self.dlog = dlog
        self.coef = coef
        self.dcoef = dcoef

    def __mul__(self, other):
        m = self.coef.size
        mul = lambda p, q: np.convolve(p, q)[:m]
        return _Series(
            self.log_scale + other.log_scale,
            self.dlog + other.dlog,
            mul(self.coef, other.coef),
            mul(self.dcoef, other.coef) + mul(self.coef, other.dcoef),
        )

    def scaled_poly(self, poly):
        m = self.coef.size
        return _Series(self.log_scale, self.dlog, np.convolve(self.coef, poly)[:m], np.convolve(self.dcoef, poly)[:m])

    def at_minus_one(self, ref):
        """Sum_j (-1)^j coef_j and its s-derivative, scaled by exp(-ref)."""
        alt = (-1.0) ** np.arange(self.coef.size)
        g = float(alt @ self.coef)
        dg = float(alt @ self.dcoef)
        scale = math.exp(self.log_scale - ref)
        return scale * g, scale * (dg + self.dlog * g)


def _sqrt_series(order, sign):
    """Coefficients of sqrt(1 + sign*w) up to w^order."""
    m = np.arange(order + 1)
    return binom(0.5, m) * float(sign) ** m


def _r_series(order):
    """sqrt(z (2 - z)) = sqrt(1 - w^2)."""
    out = np.zeros(order + 1)
    m = np.arange(order // 2 + 1)
    out[0::2] = (binom(0.5, m) * (-1.0) ** m)[: out[0::2].size]
    return out


def _q_series(order):
    """sqrt(z / (2 - z)) = (1 + w) / sqrt(1 - w^2)."""
    inv = np.zeros(order + 1)
    m = np.arange(order // 2 + 1)
    inv[0::2] = (binom(-0.5, m) * (-1.0) ** m)[: inv[0::2].size]
    return np.convolve(inv, [1.0, 1.0])[: order + 1]


def _one_minus_and_plus(f: SpectralFactors):
    """log(1 - lam), log(1 + lam) with the small one taken from 1 - lam^2."""
    lam = f.lam
    log_pos = np.log1p(np.abs(lam))
    log_neg = f.log1m - log_pos  # log(1 - |lam|)
    log_1m = np.where(lam >= 0, log_neg, log_pos)
    log_1p = np.where(lam >= 0, log_pos, log_neg)
    return log_1m, log_1p


def _determinant_series(f: SpectralFactors, rser: np.ndarray, sign: float, log_const: np.ndarray) -> _Series:
    """prod_i (1 + sign * r(w) lam_i) as a normalized series with s-derivative."""
    order = rser.size - 1
    lam, dlam = f.lam, f.dlam_ds
    const = np.exp(log_const)
    rm1 = rser.copy()
    rm1[0] -= 1.0
    coef = np.zeros(order + 1)
    coef[0] = 1.0
    dcoef = np.zeros(order + 1)
    for i in range(lam.size):
        # factor / const_i = 1 + sign*lam_i*(r - 1)/const_i
        g = sign * lam[i] * rm1 / const[i]
        g[0] += 1.0
        # d/ds of factor/const_i, normalization included
        dg = sign * dlam[i] / const[i] * (rser - g)
        new = np.convolve(coef, g)[: order + 1]
        dcoef = np.convolve(dcoef, g)[: order + 1] + np.convolve(coef, dg)[: order + 1]
        coef = new
    dlog = float(np.sum(sign * dlam / const))
    return _Series(float(np.sum(log_const)), dlog, coef, dcoef)


def _beta_value_and_derivative(beta: int, k: int, f: SpectralFactors):
    order = k - 1
    log_1m, log_1p = _one_minus_and_plus(f)
    if beta == 1:
        r = _r_series(order)
        q = _q_series(order)
        minus = _determinant_series(f, r, -1.0, log_1m).scaled_poly(np.concatenate(([1.0 + q[0]], q[1:])))
        one_minus_q = -q
        one_minus_q[0] += 1.0
        plus = _determinant_series(f, r, 1.0, log_1p).scaled_poly(one_minus_q)
    else:
        r = _sqrt_series(order, 1.0)
        minus = _determinant_series(f, r, -1.0, log_1m)
        plus = _determinant_series(f, r, 1.0, log_1p)
    ref = max(minus.log_scale, plus.log_scale)
    v1, d1 = minus.at_minus_one(ref)
    v2, d2 = plus.at_minus_one(ref)
    return 0.5 * (v1 + v2), 0.5 * (d1 + d2), ref


def _from_scaled(x: float, ref: float, rel_err: float) -> DistValue:
    if x == 0.0:
        return DistValue(0.0, -math.inf, 0.0, math.exp(ref) * rel_err if ref < 709 else math.inf)
    return DistValue.from_log(math.copysign(1.0, x), ref + math.log(abs(x)), rel_err)


def cdf_beta(beta: int, k: int, s: float, factors: SpectralFactors | None = None) -> DistValue:
    """F_beta(k; s) for beta = 1 (GOE) or 4 (GSE); beta = 2 is delegated."""
    _check_k(k)
    if beta == 2:
        return cdf_gue(k, s, factors)
    if beta not in (1, 4):
        raise ValueError("beta must be 1, 2 or 4")
    f = factors or spectral_factors(s, beta)
    v, _, ref = _beta_value_and_derivative(beta, k, f)
    return _from_scaled(v, ref, _rel_err(f, k) * (2 ** (k - 1)))


def pdf_beta(beta: int, k: int, s: float, factors: SpectralFactors | None = None) -> DistValue:
    """d/ds F_beta(k; s), the exact s-derivative of :func:`cdf_beta`."""
    _check_k(k)
    if beta == 2:
        return pdf_gue(k, s, factors)
    if beta not in (1, 4):
        raise ValueError("beta must be 1, 2 or 4")
    f = factors or spectral_factors(s, beta)
    _, d, ref = _beta_value_and_derivative(beta, k, f)
    return _from_scaled(d, ref, _rel_err(f, k) * (2 ** (k - 1)) + 8 * EPS)


def cdf(beta: int, k: int, s: float) -> DistValue:
    return cdf_gue(k, s) if beta == 2 else cdf_beta(beta, k, s)


def pdf(beta: int, k: int, s: float) -> DistValue:
    return pdf_gue(k, s) if beta == 2 else pdf_beta(beta, k, s)
