"""Eigenvalues of the Airy integral operator to full relative precision.

lambda_0 comes from the integral equation evaluated at a single point,
with the integrals of Ai against the basis functions obtained from a
five-term recurrence; the remaining eigenvalues follow from ratios that
only involve the Laguerre coefficients.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from .banded import TINY, FiveDiagonal, inverse_power_null
from .eigfun import (
    AirySpectrum,
    OperatorParams,
    boundary_values,
    compute_eigenfunctions,
    diff_expansion,
    eval_psi,
    select_basis,
)
from .specfun import airy_pair, gauss_legendre, panel_rule

_LOG_EPS = math.log(np.finfo(float).eps)


def eval_point(c: float) -> float:
    """Point x at which the integral equation is evaluated for lambda_0."""
    return 0.0 if c >= 0 else -float(c)


def assemble_B(params: OperatorParams, x: float) -> FiveDiagonal:
    """Recurrence matrix for H_k = int_0^inf Ai(y + s) h_k^a(y) dy, s = x + c.

    Row ``k >= 1`` holds the five-term relation centred on ``H_k``; row 0
    is empty apart from a tiny diagonal entry so the matrix is invertible.
    """
    a = params.a
    s = x + params.c
    n = params.N_prime + 1
    k = np.arange(n, dtype=float)
    sub2 = k - 1.0                                   # coefficient of H_{k-2}
    sub1 = -(4 * k - 1 + a * s - 0.25 * a**3)        # H_{k-1}
    diag = 6 * k + 3 + 2 * a * s + 0.5 * a**3        # H_k
    sup1 = -(4 * k + 5 + a * s - 0.25 * a**3)        # H_{k+1}
    sup2 = k + 2.0                                   # H_{k+2}
    bands = np.zeros((5, n))
    bands[0, 2:] = sub2[2:]
    bands[1, 1:] = sub1[1:]
    bands[2] = diag
    bands[3, :-1] = sup1[:-1]
    bands[4, :-2] = sup2[:-2]
    bands[:, 0] = 0.0
    bands[2, 0] = TINY
    return FiveDiagonal(bands, symmetric=False)


def _log_ai(x):
    """log Ai(x) for x >= 0 without underflow."""
    ai, _ = airy_pair(x, scaled=True)
    x = np.asarray(x, dtype=float)
    return np.log(ai) - (2.0 / 3.0) * np.clip(x, 0, None) ** 1.5


def _zeta_diff(s, y):
    """(2/3)((y + s)^{3/2} - s^{3/2}) without cancellation for small y."""
    r1, r0 = np.sqrt(y + s), math.sqrt(s)
    return (2.0 / 3.0) * y * ((y + s) + r1 * r0 + s) / (r1 + r0)


def h0_cutoff(a: float, s: float) -> float:
    """y beyond which Ai(y + s) e^{-a y / 2} is below eps times its value at 0."""
    base = float(_log_ai(s))

    def g(y):
        return float(_log_ai(s + y)) - 0.5 * a * y - base - _LOG_EPS

    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, 0.0, hi, xtol=1e-6)


def h0_log_integral(a: float, s: float) -> float:
    """log of H_0^a(s) = sqrt(a) int_0^inf Ai(y + s) e^{-a y / 2} dy, s >= 0."""
    if a <= 0:
        raise ValueError("a must be positive")
    if s < 0:
        raise ValueError("the monotone quadrature needs s >= 0")
    ymax = h0_cutoff(a, s)
    panels = min(400, max(4, int(math.ceil(ymax))))
    y, w = panel_rule(np.linspace(0.0, ymax, panels + 1), 24)
    ai_sc, _ = airy_pair(s + y, scaled=True)
    if s > 0:
        # Ai(y + s) = Ai_sc(y + s) exp(-zeta(s)) exp(-(zeta(y + s) - zeta(s)))
        f = ai_sc * np.exp(-_zeta_diff(s, y) - 0.5 * a * y)
        lead = -(2.0 / 3.0) * s**1.5
    else:
        f = airy_pair(y)[0] * np.exp(-0.5 * a * y)
        lead = 0.0
    return 0.5 * math.log(a) + lead + math.log(float(w @ f))


def h0_integral(a: float, s: float) -> float:
    """H_0^a(s); underflows to 0 for very large s (use the log form there)."""
    return math.exp(h0_log_integral(a, s))


def _normalized_H(params: OperatorParams, x: float):
    """(H / H_0, log H_0) for k = 0..N."""
    B = assemble_B(params, x)
    v = inverse_power_null(B)
    if v[0] == 0.0:
        raise ArithmeticError("null vector of the recurrence has a zero first entry")
    ratio = v[: params.N + 1] / v[0]
    return ratio, h0_log_integral(params.a, x + params.c)


def compute_H(params: OperatorParams, x: float | None = None) -> np.ndarray:
    """H_k = int_0^inf Ai(x + y + c) h_k^a(y) dy for k = 0..N."""
    if x is None:
        x = eval_point(params.c)
    ratio, logh0 = _normalized_H(params, x)
    return ratio * math.exp(logh0)


INTEGRAL_SWITCH = -5.0


def lambda_0_log(spec: AirySpectrum):
    """(sign, log|lambda_0|).

    For c >= INTEGRAL_SWITCH this is the integral equation at
    x = eval_point(c).  Further left that point lies in the decaying tail
    of psi_0, where the sum of beta_k H_k cancels and keeps only absolute
    accuracy; there log(lambda_0^2) is minus the integral of
    psi_{0,t}(0)^2 over t < c, which has no cancellation.
    """
    p = spec.params
    if p.c < INTEGRAL_SWITCH:
        total = psi0_squared_integral(p.c, 0, spec)[0]
        return 1.0, -0.5 * total
    x = eval_point(p.c)
    beta = np.asarray(spec.expansions[0].coeffs)
    ratio, logh0 = _normalized_H(p, x)
    num = float(beta @ ratio)
    den = eval_psi(spec.expansions[0], x) if x > 0 else spec.psi0[0]
    if den == 0.0 or num == 0.0:
        raise ArithmeticError("lambda_0 formula degenerated (zero numerator or denominator)")
    q = num / den
    return math.copysign(1.0, q), logh0 + math.log(abs(q))


def lambda_0(spec: AirySpectrum) -> float:
    sign, lg = lambda_0_log(spec)
    return sign * math.exp(lg)


def eigenvalue_ratios(spec: AirySpectrum) -> np.ndarray:
    """lambda_{j+1} / lambda_j for j = 0..n-1 from derivative inner products."""
    es = spec.expansions
    out = np.empty(len(es) - 1)
    d_prev = diff_expansion(es[0])
    for j in range(len(es) - 1):
        d_next = diff_expansion(es[j + 1])
        num = float(d_prev @ es[j + 1].coeffs)
        den = float(es[j].coeffs @ d_next)
        if den == 0.0:
            raise ArithmeticError(f"ratio formula has a zero denominator at j={j}")
        out[j] = num / den
        d_prev = d_next
    return out


def full_spectrum(c: float, n: int, tol: float = 1e-14) -> AirySpectrum:
    """Eigenfunctions, chi_j, and lambda_j for j = 0..n at parameter c."""
    spec = compute_eigenfunctions(c, n, tol=tol)
    return attach_eigenvalues(spec)


def attach_eigenvalues(spec: AirySpectrum) -> AirySpectrum:
    sign0, log0 = lambda_0_log(spec)
    r = eigenvalue_ratios(spec)
    with np.errstate(divide="ignore"):
        logs = log0 + np.concatenate(([0.0], np.cumsum(np.log(np.abs(r)))))
    signs = sign0 * np.concatenate(([1.0], np.cumprod(np.sign(r))))
    with np.errstate(under="ignore"):
        lam = signs * np.exp(logs)
    return replace(spec, lam=lam, lam_sign=signs, lam_log=logs)


def dlambda_dc(spec: AirySpectrum, j: int) -> float:
    """d lambda_j / dc = -lambda_j psi_j(0)^2 / 2."""
    return -0.5 * float(spec.lam[j]) * float(spec.psi0[j]) ** 2


def dlambda2_dc(spec: AirySpectrum, j: int) -> float:
    """d (lambda_j^2) / dc = -lambda_j^2 psi_j(0)^2."""
    return -float(spec.lam[j]) ** 2 * float(spec.psi0[j]) ** 2


def psi0_squared_integral(
    c: float, n: int, spec: AirySpectrum | None = None, rel: float = 1e-15, width: float = 2.0
) -> np.ndarray:
    """int_{-inf}^c psi_{j,t}(0)^2 dt = -log(lambda_j(c)^2) for j = 0..n.

    Since d log(lambda_j^2)/dc = -psi_j(0)^2 and lambda_j^2 -> 1 as
    c -> -inf, the integral is evaluated by Gauss-Legendre panels moving
    left from c until the integrand has dropped below ``rel`` of its value
    at c.
    """
    if spec is None:
        spec = compute_eigenfunctions(c, n)
    f_c = spec.psi0[: n + 1] ** 2
    rule = gauss_legendre(16)
    total = np.zeros(n + 1)
    hi = float(c)
    for _ in range(200):
        lo = hi - width
        t, w = rule.on(lo, hi)
        vals = _psi0_squared_many(t, n)
        total += w @ vals
        if np.all(vals[0] <= rel * f_c):
            return total
        hi = lo
    raise ArithmeticError("integral of psi(0)^2 did not converge")


def log_complement(c: float, n: int, spec: AirySpectrum | None = None, rel: float = 1e-15, width: float = 2.0) -> np.ndarray:
    """log(1 - lambda_j^2) for j = 0..n, accurate when lambda_j^2 is near 1.

    1 - lambda^2 = -expm1(-integral) with the integral from
    :func:`psi0_squared_integral`, which keeps full relative precision.
    """
    total = psi0_squared_integral(c, n, spec, rel, width)
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(-total))


def _psi0_squared_many(ts, n: int) -> np.ndarray:
    """psi_{j,t}(0)^2 for j = 0..n at each t, with one batched Riccati solve."""
    specs = [compute_eigenfunctions(t, n, accurate_boundary=False) for t in ts]
    es = [e for sp in specs for e in sp.expansions]
    cs = np.repeat(np.asarray(ts, dtype=float), n + 1)
    chis = np.concatenate([sp.chi for sp in specs])
    p0 = boundary_values(es, cs, chis)
    return (p0**2).reshape(len(ts), n + 1)
