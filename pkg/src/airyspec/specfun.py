"""Scalar special functions used throughout the package.

Airy functions are evaluated by Taylor steps from tabulated centers on
[-12, 12] and by the classical asymptotic expansions outside it.  The
center values are generated once with mpmath at 40 digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

AIRY_DOMAIN = (-60.0, 300.0)

_CENTER_STEP = 0.5
_CENTER_MAX = 12.0
_TAYLOR_TERMS = 26
_ASYMP_TERMS = 24

_SQRT_PI = math.sqrt(math.pi)
_SPLITTER = 134217729.0  # 2**27 + 1


@lru_cache(maxsize=None)
def _taylor_table():
    centers = np.arange(-_CENTER_MAX, _CENTER_MAX + 0.5 * _CENTER_STEP, _CENTER_STEP)
    coef = np.empty((centers.size, _TAYLOR_TERMS))
    with mpmath.workdps(40):
        for i, x0 in enumerate(centers):
            x0m = mpmath.mpf(float(x0))
            a = [mpmath.airyai(x0m), mpmath.airyai(x0m, derivative=1)]
            a.append(x0m * a[0] / 2)
            for k in range(1, _TAYLOR_TERMS - 2):
                a.append((x0m * a[k] + a[k - 1]) / ((k + 1) * (k + 2)))
            coef[i] = [float(v) for v in a[:_TAYLOR_TERMS]]
    dcoef = coef[:, 1:] * np.arange(1, _TAYLOR_TERMS)
    return centers, coef, dcoef


@lru_cache(maxsize=None)
def _asymptotic_coefficients():
    u = [1.0]
    for k in range(1, _ASYMP_TERMS):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, _ASYMP_TERMS)]
    return np.array(u), np.array(v)


def _two_prod(a, b):
    p = a * b
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLITTER * b
    bh = t - (t - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _zeta_dd(t):
    """(2/3) t^(3/2) for t > 0 as an unevaluated sum hi + lo."""
    r = np.sqrt(t)
    sq, sq_err = _two_prod(r, r)
    r_lo = ((t - sq) - sq_err) / (2.0 * r)
    p, p_err = _two_prod(t, r)
    p_lo = p_err + t * r_lo
    q = 2.0 * p / 3.0
    q3, q3_err = _two_prod(q, 3.0)
    q_lo = ((2.0 * p - q3) - q3_err + 2.0 * p_lo) / 3.0
    return q, q_lo


def _series(coefs, inv):
    out = np.zeros_like(inv)
    for c in coefs[::-1]:
        out = out * inv + c
    return out


def _airy_taylor(x):
    centers, coef, dcoef = _taylor_table()
    idx = np.rint((x + _CENTER_MAX) / _CENTER_STEP).astype(np.intp)
    h = x - centers[idx]
    c = coef[idx]
    d = dcoef[idx]
    ai = c[:, -1].copy()
    for k in range(_TAYLOR_TERMS - 2, -1, -1):
        ai = ai * h + c[:, k]
    aip = d[:, -1].copy()
    for k in range(_TAYLOR_TERMS - 3, -1, -1):
        aip = aip * h + d[:, k]
    return ai, aip


def _airy_positive(x, scaled):
    u, v = _asymptotic_coefficients()
    z, z_lo = _zeta_dd(x)
    alt = (-1.0) ** np.arange(_ASYMP_TERMS)
    inv = 1.0 / z
    su = _series(alt * u, inv)
    sv = _series(alt * v, inv)
    q = x**0.25
    if scaled:
        e = 1.0 - z_lo
    else:
        e = np.exp(-z) * (1.0 - z_lo)
    return e * su / (2 * _SQRT_PI * q), -q * e * sv / (2 * _SQRT_PI)


def _airy_negative(x):
    u, v = _asymptotic_coefficients()
    t = -x
    z, z_lo = _zeta_dd(t)
    inv2 = 1.0 / (z * z)
    sign = (-1.0) ** np.arange(_ASYMP_TERMS // 2)
    ue = _series(sign * u[0::2], inv2)
    uo = _series(sign * u[1::2], inv2) / z
    ve = _series(sign * v[0::2], inv2)
    vo = _series(sign * v[1::2], inv2) / z
    theta = z - math.pi / 4
    theta_lo = z_lo + ((z - theta) - math.pi / 4)
    cs, sn = np.cos(theta), np.sin(theta)
    cs, sn = cs - theta_lo * sn, sn + theta_lo * cs
    q = t**0.25
    ai = (cs * ue + sn * uo) / (_SQRT_PI * q)
    aip = q * (sn * ve - cs * vo) / _SQRT_PI
    return ai, aip


def airy_pair(x, scaled=False):
    """Return ``(Ai(x), Ai'(x))`` for real ``x`` (scalar or array).

    No domain restriction; this is the vectorized kernel behind
    :func:`airy_ai` and :func:`airy_ai_prime`.  With ``scaled=True`` both
    values are multiplied by ``exp(2/3 x^{3/2})`` for ``x > 0`` (unchanged
    for ``x <= 0``), which keeps large-argument values representable.
    """
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    mid = np.abs(flat) <= _CENTER_MAX
    hi = flat > _CENTER_MAX
    lo = flat < -_CENTER_MAX
    if mid.any():
        ai[mid], aip[mid] = _airy_taylor(flat[mid])
        if scaled:
            pos = mid & (flat > 0)
            if pos.any():
                z, z_lo = _zeta_dd(flat[pos])
                f = np.exp(z) * (1.0 + z_lo)
                ai[pos] *= f
                aip[pos] *= f
    if hi.any():
        ai[hi], aip[hi] = _airy_positive(flat[hi], scaled)
    if lo.any():
        ai[lo], aip[lo] = _airy_negative(flat[lo])
    bad = ~np.isfinite(flat)
    ai[bad] = np.nan
    aip[bad] = np.nan
    if xa.ndim == 0:
        return float(ai[0]), float(aip[0])
    return ai.reshape(xa.shape), aip.reshape(xa.shape)


def _check_domain(x):
    xa = np.asarray(x, dtype=float)
    lo, hi = AIRY_DOMAIN
    if not np.all(np.isfinite(xa)) or np.any(xa < lo) or np.any(xa > hi):
        raise ValueError(f"Airy argument outside supported range [{lo}, {hi}]")


def airy_ai(x):
    """Ai(x) on the supported range [-60, 300]."""
    _check_domain(x)
    return airy_pair(x)[0]


def airy_ai_prime(x):
    """Ai'(x) on the supported range [-60, 300]."""
    _check_domain(x)
    return airy_pair(x)[1]


def laguerre_h_all_scaled(N, a, x):
    """Scaled Laguerre functions in mantissa/exponent form.

    Returns ``(g, log_scale)`` with ``h_n^a(x) = g[n] * exp(log_scale)``.
    ``g`` has shape ``(N+1,)`` for scalar ``x`` and ``(N+1, M)`` for an
    array of ``M`` points.
    """
    if a <= 0:
        raise ValueError("scaling factor a must be positive")
    if N < 0:
        raise ValueError("N must be non-negative")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("scaled Laguerre functions are defined for x >= 0")
    y = a * np.atleast_1d(xa).ravel()
    g = np.empty((N + 1, y.size))
    log_scale = -0.5 * y
    sa = math.sqrt(a)
    any_big = bool(np.any(y > 1400.0))
    if not any_big:
        g[0] = sa * np.exp(-0.5 * y)
        log_scale = np.zeros_like(y)
    else:
        g[0] = sa
    if N >= 1:
        g[1] = g[0] * (1.0 - y)
    for k in range(1, N):
        g[k + 1] = ((2 * k + 1 - y) * g[k] - k * g[k - 1]) / (k + 1)
        if any_big:
            m = np.maximum(np.abs(g[k + 1]), np.abs(g[k]))
            over = m > 1e250
            if over.any():
                g[: k + 2, over] *= 1e-250
                log_scale[over] += 250 * math.log(10.0)
    if xa.ndim == 0:
        return g[:, 0], float(log_scale[0])
    return g.reshape((N + 1,) + xa.shape), log_scale.reshape(xa.shape)


def laguerre_h_all(N, a, x):
    """Values h_0^a(x), ..., h_N^a(x) of the scaled Laguerre functions.

    ``h_n^a(x) = sqrt(a) exp(-a x / 2) L_n(a x)``, evaluated by the
    three-term Laguerre recurrence.  Values below the double range flush
    to zero; use :func:`laguerre_h_all_scaled` to keep them.
    """
    g, log_scale = laguerre_h_all_scaled(N, a, x)
    with np.errstate(under="ignore"):
        return g * np.exp(log_scale)


def hermite_phi(n, a, x):
    """Scaled Hermite function phi_n^a(x), unit L2 norm on the real line."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if a <= 0:
        raise ValueError("scaling factor a must be positive")
    t = a * np.asarray(x, dtype=float)
    prev = np.zeros_like(t)
    cur = math.sqrt(a) * math.pi**-0.25 * np.exp(-0.5 * t * t)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * t * cur - math.sqrt(k / (k + 1)) * prev
    return cur if np.ndim(cur) else float(cur)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def on(self, lo, hi):
        """Nodes and weights mapped to [lo, hi]."""
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [-1, 1]."""
    if not 1 <= n <= 500:
        raise ValueError("Gauss-Legendre order must be in [1, 500]")
    x, w = np.polynomial.legendre.leggauss(n)
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.flags.writeable = False
    w.flags.writeable = False
    return QuadratureRule(x, w)


def panel_rule(edges, order=24):
    """Composite Gauss-Legendre rule over consecutive panels ``edges``."""
    edges = np.asarray(edges, dtype=float)
    rule = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * rule.nodes[None, :]).ravel()
    weights = (half[:, None] * rule.weights[None, :]).ravel()
    return nodes, weights
