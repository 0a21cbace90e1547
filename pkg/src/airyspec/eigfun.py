"""Eigenfunctions of the commuting differential operator in a Laguerre basis.

The eigenfunctions psi_j of the Airy integral operator with kernel
Ai(x + y + c) on [0, inf) also solve the Sturm-Liouville problem

    (x psi')' - (x^2 + c x - chi) psi = 0,

whose matrix in the scaled Laguerre basis h_k^a is symmetric and
five-diagonal.  Inverse iteration on that matrix gives the expansion
coefficients to coordinate-wise relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .banded import FiveDiagonal, fivediag_eigenvalues, shifted_inverse_power
from .specfun import airy_pair, laguerre_h_all_scaled, panel_rule

FIT_C_RANGE = 50.0
FIT_N_MAX = 800


@dataclass(frozen=True)
class OperatorParams:
    c: float
    n: int
    a: float
    N: int
    N_prime: int


@dataclass(frozen=True, eq=False)
class LaguerreExpansion:
    """Coefficients of sum_k beta_k h_k^a.

    When the expansion is an eigenfunction, ``c`` and ``chi`` identify its
    differential equation; :func:`eval_psi` then switches to a Riccati
    integration past the right turning point, where the basis sum has only
    absolute accuracy.
    """

    a: float
    coeffs: np.ndarray
    c: float | None = None
    chi: float | None = None

    def value_at_zero(self) -> float:
        return math.sqrt(self.a) * float(np.sum(self.coeffs))

    def __call__(self, x):
        return eval_psi(self, x)


@dataclass(frozen=True)
class AirySpectrum:
    """Eigen-data of the Airy integral operator for one value of c.

    ``lam`` is ``None`` until the spectrum module fills it in.  For
    eigenvalues below the double range, ``lam_sign`` and ``lam_log``
    (natural log of ``|lambda|``) remain meaningful.
    """

    params: OperatorParams
    chi: np.ndarray
    expansions: tuple
    psi0: np.ndarray
    lam: np.ndarray | None = None
    lam_sign: np.ndarray | None = None
    lam_log: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def n(self) -> int:
        return self.params.n


def fitted_chi(c: float, n: int) -> float:
    """Empirical model of chi_{n,c}, used only to choose the basis scale."""
    return 19.3 * c + 11.1 * n + 1.19e-2 * n**2 + 7.4e-5 * c * n**2


def asymptotic_chi(c: float, n: int) -> float:
    """Leading-order chi_{n,c} for |c| large.

    As c -> +inf, chi ~ (2n+1) sqrt(c); as c -> -inf the equation near
    x = -c/2 becomes a harmonic oscillator and chi ~ -c^2/4 + (2n+1) sqrt(-c/2).
    """
    if c >= 0:
        return (2 * n + 1) * math.sqrt(c)
    x0 = -0.5 * c
    return -x0 * x0 + (2 * n + 1) * math.sqrt(x0)


def scale_from_chi(c: float, n: int, chi: float) -> float:
    """Scaling factor that puts the turning point of h_n^a on that of psi_n."""
    disc = c * c + 4.0 * chi
    if disc < 0:
        raise ValueError("turning point is not real")
    return 4.0 * (2 * n + 1) / (-c + math.sqrt(disc))


def truncation(c: float, n: int) -> int:
    # round before ceil: 1.1 * 50 is 55.000000000000007 in binary
    return int(math.ceil(round(1.1 * n + abs(c) + 100, 9)))


def select_basis(c: float, n: int) -> OperatorParams:
    """Basis scale ``a`` and truncations ``N``, ``N'`` for indices 0..n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    c = float(c)
    N = truncation(c, n)
    if c > FIT_C_RANGE:
        # the fitted model grows linearly in c while chi grows like sqrt(c)
        a = scale_from_chi(c, n, asymptotic_chi(c, n))
    elif c < -FIT_C_RANGE:
        # eigenfunctions sit near x = -c/2; spread the N basis functions'
        # oscillatory range over about twice the right turning point
        chi = asymptotic_chi(c, n)
        x_right = 0.5 * (-c + math.sqrt(max(c * c + 4.0 * chi, 0.0)))
        a = 2.0 * N / x_right
    else:
        m = n
        # a vanishing denominator (c = n = 0) is as unusable as a complex root
        while c * c + 4.0 * fitted_chi(c, m) < 0 or -c + math.sqrt(c * c + 4.0 * fitted_chi(c, m)) <= 0:
            m += 100
        a = scale_from_chi(c, m, fitted_chi(c, m))
    return OperatorParams(c, n, a, N, N + 40)


def assemble_A(params: OperatorParams) -> FiveDiagonal:
    """Matrix of the operator -(x f')' + x(x + c) f in the basis h_0..h_N."""
    a, c = params.a, params.c
    k = np.arange(params.N + 1, dtype=float)
    a2, a3 = a * a, a**3
    d0 = (8 + a3 + 4 * a * c + 24 * k + 2 * a3 * k + 8 * a * c * k + 24 * k * k) / (4 * a2)
    k1 = k[:-1]
    d1 = (k1 + 1) * (a3 - 4 * a * c - 16 * (k1 + 1)) / (4 * a2)
    k2 = k[:-2]
    d2 = (k2 + 1) * (k2 + 2) / a2
    return FiveDiagonal.from_diagonals(d0, d1, d2, symmetric=True)


def multiplication_by_x(params: OperatorParams) -> FiveDiagonal:
    """Tridiagonal matrix of f -> x f in the basis (also dA/dc)."""
    a = params.a
    k = np.arange(params.N + 1, dtype=float)
    return FiveDiagonal.from_diagonals((2 * k + 1) / a, -(k[:-1] + 1) / a, symmetric=True)


def _solve(params: OperatorParams, tol: float):
    A = assemble_A(params)
    estimates = fivediag_eigenvalues(A)[: params.n + 1]
    chi = np.empty(params.n + 1)
    vecs = []
    for j, est in enumerate(estimates):
        pair = shifted_inverse_power(A, est, tol=tol)
        chi[j] = pair.value
        vecs.append(pair.vector)
    order = np.argsort(chi)
    return chi[order], [vecs[i] for i in order]


def compute_eigenfunctions(
    c: float,
    n: int,
    tol: float = 1e-14,
    params: OperatorParams | None = None,
    accurate_boundary: bool = True,
) -> AirySpectrum:
    """chi_0..chi_n and Laguerre expansions of psi_0..psi_n (no lambdas).

    With ``accurate_boundary=False`` the psi_j(0) stored are the plain basis
    sums, which lose relative accuracy once the origin is deep in the
    forbidden region (strongly negative c); a sum that underflows to zero
    then leaves the sign unfixed instead of raising.  ``extras["psi0_log"]``
    keeps log psi_j(0), which stays finite when psi_j(0) itself underflows.
    """
    if params is None:
        params = select_basis(c, n)
    chi, vecs = _solve(params, tol)
    tail = max(float(np.max(np.abs(v[-11:]))) for v in vecs)
    if tail > 1e-12:
        # the basis did not resolve the eigenfunctions; give it more room
        N = 2 * params.N
        params = OperatorParams(params.c, params.n, params.a, N, N + 40)
        chi, vecs = _solve(params, tol)
    raw = [LaguerreExpansion(params.a, v / np.linalg.norm(v), params.c, float(ch)) for v, ch in zip(vecs, chi)]
    if accurate_boundary:
        sign, logs = boundary_log_values(raw, params.c, chi)
        if np.any(sign == 0):
            j = int(np.nonzero(sign == 0)[0][0])
            raise ArithmeticError(f"psi_{j}(0) evaluated to zero; cannot fix the sign")
    else:
        # a plain sum that underflows to zero leaves the sign as computed
        p0 = np.array([e.value_at_zero() for e in raw])
        sign = np.where(p0 < 0, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(p0))
    expansions = tuple(replace(e, coeffs=-e.coeffs) if sg < 0 else e for e, sg in zip(raw, sign))
    with np.errstate(under="ignore"):
        psi0 = np.exp(logs)
    return AirySpectrum(params, chi, expansions, psi0, extras={"psi0_log": logs})


def left_turning_point(c: float, chi: float) -> float | None:
    """Positive root of x^2 + c x - chi when [0, root] is classically forbidden."""
    if c >= 0 or chi >= 0:
        return None
    disc = c * c + 4.0 * chi
    if disc < 0:
        return None
    return 0.5 * (-c - math.sqrt(disc))


def _series_start(c: float, chi: float, x: float, terms: int = 60):
    """psi and psi' of the solution regular at 0 (psi(0) = 1) by power series."""
    p = [1.0, -chi]
    for k in range(1, terms):
        nxt = -chi * p[k] + c * p[k - 1] + (p[k - 2] if k >= 2 else 0.0)
        p.append(nxt / (k + 1) ** 2)
    val = sum(pk * x**k for k, pk in enumerate(p))
    der = sum(k * pk * x ** (k - 1) for k, pk in enumerate(p) if k)
    return val, der


def log_growth(c: float, chi, x_end):
    """log(psi(x_end) / psi(0)) for the solution regular at the origin.

    Integrates the Riccati equation for u = psi'/psi, which is stable in
    the direction of growth across the forbidden region.  ``chi`` and
    ``x_end`` (and ``c``) may be arrays; all cases are integrated together on the
    common variable x = x_end * t.
    """
    from scipy.integrate import solve_ivp

    chi = np.atleast_1d(np.asarray(chi, dtype=float))
    x_end = np.broadcast_to(np.asarray(x_end, dtype=float), chi.shape).copy()
    c = np.broadcast_to(np.asarray(c, dtype=float), chi.shape).copy()
    t0 = float(np.min(np.minimum(0.05 / ((1.0 + np.abs(chi)) * x_end), 0.5)))
    u0 = np.empty_like(chi)
    logv0 = np.empty_like(chi)
    for i in range(chi.size):
        val, der = _series_start(float(c[i]), float(chi[i]), t0 * x_end[i])
        u0[i] = der / val
        logv0[i] = math.log(val)
    m = chi.size

    def rhs(t, y):
        u = y[:m]
        x = t * x_end
        du = ((x * x + c * x - chi - u) / x - u * u) * x_end
        return np.concatenate((du, u * x_end))

    sol = solve_ivp(rhs, (t0, 1.0), np.concatenate((u0, np.zeros(m))), method="DOP853", rtol=3e-14, atol=1e-14)
    if not sol.success:
        raise ArithmeticError(f"Riccati integration failed: {sol.message}")
    out = logv0 + sol.y[m:, -1]
    return out if out.size > 1 else float(out[0])


def boundary_log_values(es, c, chis):
    """(sign, log|psi_j(0)|) for several expansions, accurate even when tiny.

    When the origin lies in a classically forbidden region the basis sum
    sqrt(a) sum beta_k cancels to rounding noise; the value is then
    transported from the left turning point, where the expansion is
    accurate, with the Riccati equation.  psi has no zero in the forbidden
    region, so the sign at the turning point is the sign at 0 even when
    the magnitude is below the double range.
    """
    vals = np.array([e.value_at_zero() for e in es])
    sign = np.sign(vals)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(vals))
    cs = np.broadcast_to(np.asarray(c, dtype=float), vals.shape)
    xt = np.array([left_turning_point(float(ci), float(ch)) or 0.0 for ci, ch in zip(cs, chis)])
    far = np.nonzero(xt >= 0.25)[0]
    if far.size:
        growth = np.atleast_1d(log_growth(cs[far], np.asarray(chis)[far], xt[far]))
        for i, g in zip(far, growth):
            anchor = eval_psi(es[i], xt[i])
            sign[i] = np.sign(anchor)
            with np.errstate(divide="ignore"):
                logs[i] = math.log(abs(anchor)) - g if anchor else -math.inf
    return sign, logs


def boundary_values(es, c, chis) -> np.ndarray:
    """psi_j(0) for several expansions; see :func:`boundary_log_values`."""
    sign, logs = boundary_log_values(es, c, chis)
    with np.errstate(under="ignore"):
        return sign * np.exp(logs)


def boundary_value(e: LaguerreExpansion, c: float, chi: float) -> float:
    """Single-expansion form of :func:`boundary_values`."""
    return float(boundary_values([e], c, [chi])[0])


def _eval_coeffs(a: float, coeffs: np.ndarray, x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("the expansion is defined for x >= 0")
    g, log_scale = laguerre_h_all_scaled(coeffs.size - 1, a, np.atleast_1d(xa).ravel())
    with np.errstate(under="ignore"):
        out = (coeffs @ g) * np.exp(log_scale)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def right_turning_point(c: float, chi: float) -> float:
    """Root of x^2 + c x - chi beyond which psi decays monotonically."""
    return 0.5 * (-c + math.sqrt(max(c * c + 4.0 * chi, 0.0)))


@lru_cache(maxsize=256)
def _tail_solution(c: float, chi: float, x0: float, top: float):
    """Dense solution of the tail Riccati equation on [x0, top].

    u = psi'/psi of the decaying solution obeys
    u' = (x^2 + c x - chi)/x - u/x - u^2, which is stable when integrated
    toward smaller x.  The start value at ``top`` comes from the WKB
    approximation; its error is damped by about exp(-2 int |u|) over the
    margin the caller leaves past the last point of interest.
    """
    from scipy.integrate import solve_ivp

    q = top * top + c * top - chi

    def rhs(t, y):
        u = y[0]
        return [(t * t + c * t - chi - u) / t - u * u, u]

    u_top = -math.sqrt(q / top) - 0.25 * (2 * top + c) / q
    sol = solve_ivp(rhs, (top, x0), [u_top, 0.0], method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)
    if not sol.success:
        raise ArithmeticError(f"tail Riccati integration failed: {sol.message}")
    return sol


def _tail_log_ratio(c: float, chi: float, x0: float, x):
    """log(psi(x) / psi(x0)) for x >= x0 >= right turning point."""
    x = np.asarray(x, dtype=float)
    # round the far end up so that nearby calls share one integration
    top = x0 + 20.0 * math.ceil((float(np.max(x)) - x0 + 20.0) / 20.0)
    sol = _tail_solution(float(c), float(chi), float(x0), top)
    # y[1](t) = int_top^t u, so log psi(x)/psi(x0) = y[1](x) - y[1](x0)
    return sol.sol(x)[1] - sol.y[1, -1]


def eval_psi(e: LaguerreExpansion, x):
    """Evaluate psi = sum_k beta_k h_k^a at x >= 0 (scalar or array).

    For eigenfunction expansions the values past the right turning point
    are continued by the Riccati equation, so that they keep relative
    accuracy as psi decays below the rounding level of the sum.
    """
    coeffs = np.asarray(e.coeffs, dtype=float)
    if e.chi is None:
        return _eval_coeffs(e.a, coeffs, x)
    xa = np.asarray(x, dtype=float)
    x0 = right_turning_point(e.c, e.chi)
    far = xa > x0
    if not np.any(far):
        return _eval_coeffs(e.a, coeffs, x)
    out = np.atleast_1d(np.array(_eval_coeffs(e.a, coeffs, xa), dtype=float))
    flat = np.atleast_1d(xa)
    idx = np.nonzero(np.atleast_1d(far))
    anchor = _eval_coeffs(e.a, coeffs, x0)
    with np.errstate(under="ignore"):
        out[idx] = anchor * np.exp(_tail_log_ratio(e.c, e.chi, x0, flat[idx]))
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def diff_expansion(e: LaguerreExpansion) -> np.ndarray:
    """Coefficients d_k of psi' in the same basis.

    d_k = -(a/2) beta_k - a sum_{j>k} beta_j, evaluated with a suffix sum.
    """
    b = np.asarray(e.coeffs, dtype=float)
    suffix = np.concatenate((np.cumsum(b[::-1])[::-1][1:], [0.0]))
    return -0.5 * e.a * b - e.a * suffix


def eval_dpsi(e: LaguerreExpansion, x):
    """psi'(x) through the differentiated expansion."""
    return _eval_coeffs(e.a, diff_expansion(e), x)


def support_end(e: LaguerreExpansion, rel: float = 1e-18) -> float:
    """A point beyond which |psi| stays below ``rel`` times its maximum."""
    N = e.coeffs.size - 1
    span = (4.0 * N + 60.0) / e.a
    x = np.linspace(0.0, span, 2000)
    v = np.abs(eval_psi(e, x))
    big = np.nonzero(v > rel * v.max())[0]
    last = big[-1] if big.size else 0
    return float(x[min(last + 1, x.size - 1)])


def effective_degree(e: LaguerreExpansion, rel: float = 1e-17) -> int:
    """Largest k with |beta_k| above ``rel`` times the largest coefficient."""
    b = np.abs(np.asarray(e.coeffs))
    return int(np.nonzero(b > rel * b.max())[0][-1])


def expansion_quadrature(e: LaguerreExpansion, order: int = 24, upper: float | None = None, max_width: float = 0.5):
    """Panel Gauss-Legendre nodes and weights on [0, support_end(e)].

    Near the origin a degree-k expansion oscillates like J0(2 sqrt(a k x)),
    so panels are uniform in sqrt(x) there and capped at ``max_width``
    further out.
    """
    hi = support_end(e) if upper is None else float(upper)
    chi_eff = e.a * (effective_degree(e) + 1.0)
    dt = 0.5 / math.sqrt(max(chi_eff, 1.0))
    t = np.linspace(0.0, math.sqrt(hi), max(2, int(math.ceil(math.sqrt(hi) / dt)) + 1))
    edges = [0.0]
    for x in t[1:] ** 2:
        gap = x - edges[-1]
        if gap > max_width:
            m = int(math.ceil(gap / max_width))
            edges.extend(edges[-1] + gap * np.arange(1, m) / m)
        edges.append(x)
    return panel_rule(np.asarray(edges), order)


def psi_continuation(spec: AirySpectrum, j: int, x):
    """Continuation of psi_j to the whole line via the integral equation.

    psi_j(x) = (1/lambda_j) int_0^inf Ai(x + c + y) psi_j(y) dy holds for
    x >= 0 and defines the analytic continuation for x < 0.
    """
    if spec.lam is None:
        raise ValueError("spectrum has no eigenvalues; compute the full spectrum first")
    lam = float(spec.lam[j])
    if abs(lam) < 1e-300:
        raise ArithmeticError(f"|lambda_{j}| = {abs(lam):.3e} is too small for the continuation")
    e = spec.expansions[j]
    y, w = expansion_quadrature(e)
    wp = w * eval_psi(e, y)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    out = np.empty(xa.size)
    for i, xi in enumerate(xa):
        ai, _ = airy_pair(xi + spec.c + y)
        out[i] = float(ai @ wp) / lam
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def dchi_dc(spec: AirySpectrum, j: int) -> float:
    """d chi_j / dc = int_0^inf x psi_j(x)^2 dx (the c-derivative of the operator is x)."""
    b = np.asarray(spec.expansions[j].coeffs)
    return float(b @ multiplication_by_x(spec.params).matvec(b))
