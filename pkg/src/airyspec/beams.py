"""Finite-energy Airy beams and their paraxial propagation.

A beam is described either by samples of its initial profile Phi(s, 0),
which are propagated with a periodic spectral step, or by its density
sigma(v) in the Airy domain,

    Phi(s, xi) = int sigma(v) Ai(s + v - xi^2/4) exp(i((s + v) xi/2 - xi^3/12)) dv,

which is evaluated directly.  The second form is needed for the Airy
eigenfunction beam: its density jumps at v = 0, so its profile decays
only like |s|^(-3/4) to the left and cannot be put on a periodic grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import bernoulli, erfc

from .eigfun import LaguerreExpansion, eval_psi, expansion_quadrature, support_end
from .specfun import airy_pair, panel_rule
from .spectrum import full_spectrum

DECAY_TOL = 1e-10
NYQUIST_TOL = 1e-12
DEFAULT_S = (-60.0, 30.0, 4096)
DEFAULT_XI = (0.0, 12.0, 256)


class BoundaryDecayError(ValueError):
    """The sampled profile is too large at the grid ends (or too coarse) for a periodic step."""


@dataclass(frozen=True)
class BeamProfile:
    s_grid: np.ndarray
    xi_grid: np.ndarray
    amplitude: np.ndarray  # shape (len(xi_grid), len(s_grid))
    energy: float

    @property
    def ds(self) -> float:
        return float(self.s_grid[1] - self.s_grid[0])

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def row_energies(self) -> np.ndarray:
        return self.ds * np.sum(self.intensity, axis=1)

    def crop(self, lo: float, hi: float) -> "BeamProfile":
        keep = (self.s_grid >= lo - 1e-12) & (self.s_grid <= hi + 1e-12)
        amp = self.amplitude[:, keep]
        energy = self.ds * float(np.sum(np.abs(amp[0]) ** 2))
        return BeamProfile(self.s_grid[keep], self.xi_grid, amp, energy)


@dataclass(frozen=True)
class Density:
    """Airy-domain density of a beam.

    ``kind`` is ``"laguerre"`` (supported on [0, inf), given by an
    expansion) or ``"finite_airy"`` (the Gaussian density of the
    exponentially apertured Airy beam with parameter ``alpha``).
    """

    kind: str
    expansion: LaguerreExpansion | None = None
    alpha: float | None = None

    @classmethod
    def laguerre(cls, expansion: LaguerreExpansion) -> "Density":
        return cls("laguerre", expansion=expansion)

    @classmethod
    def finite_airy(cls, alpha: float) -> "Density":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return cls("finite_airy", alpha=float(alpha))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "laguerre":
            out = np.zeros_like(v)
            pos = v >= 0
            out[pos] = eval_psi(self.expansion, v[pos])
            return out
        a = self.alpha
        return (8 * math.pi * a) ** 0.25 / (2 * math.sqrt(math.pi * a)) * np.exp(-((v + a * a) ** 2) / (4 * a))

    def support(self) -> tuple[float, float]:
        if self.kind == "laguerre":
            return 0.0, support_end(self.expansion)
        a = self.alpha
        half = math.sqrt(4 * a * 45.0)  # exp(-45) ~ 3e-20
        return -a * a - half, -a * a + half

    def norm2(self) -> float:
        if self.kind == "laguerre":
            return float(np.sum(np.asarray(self.expansion.coeffs) ** 2))
        return 1.0

    def quadrature(self):
        """Nodes and weights that resolve the density on its support."""
        if self.kind == "laguerre":
            return expansion_quadrature(self.expansion)
        lo, hi = self.support()
        return panel_rule(np.linspace(lo, hi, 17), 24)


# ----------------------------------------------------------- initial rows


def finite_airy_initial(alpha: float, s):
    """Exponentially apertured Airy profile with unit energy.

    (8 pi alpha)^{1/4} Ai(s) exp(alpha s - alpha^3/3); the prefactor makes
    the L2 norm over the real line exactly one.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    s = np.asarray(s, dtype=float)
    ai, _ = airy_pair(s)
    with np.errstate(under="ignore"):
        out = (8 * math.pi * alpha) ** 0.25 * ai * np.exp(alpha * s - alpha**3 / 3)
    return float(out) if out.ndim == 0 else out


def infinite_airy_initial(s, taper_start: float = -250.0, taper_width: float = 25.0):
    """Ai(s) times the smooth roll-off erfc((taper_start - s) / taper_width) / 2.

    The untapered Airy beam has infinite energy; the roll-off makes it
    decay at the left end of a wide grid and is within 1e-17 of one for
    s > taper_start + 6 * taper_width.
    """
    s = np.asarray(s, dtype=float)
    ai, _ = airy_pair(s)
    out = ai * 0.5 * erfc((taper_start - s) / taper_width)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _ground_state(c: float):
    spec = full_spectrum(c, 2)
    return spec, float(spec.lam[0])


def eigen_density(c: float) -> Density:
    """Density psi_{0,c} of the Airy eigenfunction beam."""
    spec, _ = _ground_state(float(c))
    return Density.laguerre(spec.expansions[0])


def eigen_beam_initial(c: float, s):
    """Initial profile of the Airy eigenfunction beam, int_0^inf Ai(s + v) psi_{0,c}(v) dv.

    Right of ``c`` this equals lambda_{0,c} psi_{0,c}(s - c); left of it the
    integral is evaluated by quadrature.
    """
    spec, lam = _ground_state(float(c))
    e = spec.expansions[0]
    s = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s).ravel()
    out = np.empty(flat.size)
    right = flat >= c
    out[right] = lam * eval_psi(e, flat[right] - c)
    if (~right).any():
        out[~right] = airy_transform(Density.laguerre(e), flat[~right])
    return float(out[0]) if s.ndim == 0 else out.reshape(s.shape)


def airy_transform(density: Density, s) -> np.ndarray:
    """(A sigma)(s) = int sigma(v) Ai(s + v) dv at the points ``s``."""
    v, w = density.quadrature()
    wf = w * density(v)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.size)
    for lo in range(0, s.size, 256):
        blk = s[lo : lo + 256]
        ai, _ = airy_pair(blk[:, None] + v[None, :])
        out[lo : lo + 256] = ai @ wf
    return out


def airy_kernel(x, y):
    """K(x, y) = int_0^inf Ai(x + t) Ai(y + t) dt as a matrix over the two point sets.

    Closed form (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y), with the diagonal
    limit Ai'(x)^2 - x Ai(x)^2 where the points coincide.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, dx = airy_pair(x)
    ay, dy = airy_pair(y)
    diff = x[:, None] - y[None, :]
    same = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (ax[:, None] * dy[None, :] - dx[:, None] * ay[None, :]) / diff
    if same.any():
        i, j = np.nonzero(same)
        K[i, j] = dx[i] ** 2 - x[i] * ax[i] ** 2
    return K


def energy_fraction(density: Density, c: float) -> float:
    """Share of the beam energy on [c, inf) at xi = 0.

    int_c^inf (A sigma)(s)^2 ds = int int sigma(u) sigma(v) K(c + u, c + v),
    a quadratic form in the Airy kernel.  The transform is unitary, so the
    total is the density's own norm.
    """
    v, w = density.quadrature()
    f = w * density(v)
    return float(f @ airy_kernel(c + v, c + v) @ f) / density.norm2()


# ------------------------------------------------------------ propagation


def check_sampling(initial, s_grid, decay_tol: float = DECAY_TOL, nyquist_tol: float = NYQUIST_TOL) -> None:
    """Raise BoundaryDecayError unless a periodic step is safe for these samples."""
    f = np.asarray(initial)
    peak = float(np.max(np.abs(f)))
    if peak == 0.0:
        raise BoundaryDecayError("initial profile is identically zero")
    edge = max(abs(f[0]), abs(f[-1]))
    if edge > decay_tol * peak:
        raise BoundaryDecayError(
            f"profile is {edge / peak:.2e} of its peak at the grid ends (need <= {decay_tol:g}); widen the s-grid"
        )
    spec = np.abs(np.fft.fft(f))
    q = np.abs(np.fft.fftfreq(f.size))
    top = spec[q >= 0.4].max()  # the last fifth of the band below Nyquist
    if top > nyquist_tol * spec.max():
        raise BoundaryDecayError(
            f"spectrum near Nyquist is {top / spec.max():.2e} of its peak (need <= {nyquist_tol:g}); refine the s-grid"
        )


def propagate(initial, s_grid, xi_grid, check: bool = True) -> BeamProfile:
    """Solve 1/2 Phi_ss + i Phi_xi = 0 on the periodic grid ``s_grid``.

    Each row is exp(-i q^2 xi / 2) applied to the discrete Fourier modes of
    the initial samples, which is exact for the periodic problem.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    xi_grid = np.asarray(xi_grid, dtype=float)
    f = np.asarray(initial, dtype=complex)
    if f.shape != s_grid.shape or s_grid.size < 2:
        raise ValueError("initial samples must match the s-grid")
    ds = float(s_grid[1] - s_grid[0])
    if not np.allclose(np.diff(s_grid), ds, rtol=1e-9, atol=0):
        raise ValueError("s-grid must be uniform")
    if check:
        check_sampling(f, s_grid)
    q = 2 * math.pi * np.fft.fftfreq(s_grid.size, d=ds)
    fhat = np.fft.fft(f)
    phase = np.exp(-0.5j * np.outer(xi_grid, q * q))
    amp = np.fft.ifft(fhat[None, :] * phase, axis=1)
    energy = ds * float(np.sum(np.abs(f) ** 2))
    return BeamProfile(s_grid, xi_grid, amp, energy)


@lru_cache(maxsize=16)
def _gregory_corrections(p: int) -> np.ndarray:
    """Left-end corrections c_j added to trapezoid weights at nodes 0..p-1.

    They make the corrected rule exact for the first p terms of the
    Euler-Maclaurin expansion at that end.
    """
    k = np.arange(p)
    V = np.vander(np.arange(p, dtype=float), p, increasing=True).T  # V[k, j] = j^k
    b = bernoulli(p + 1)
    rhs = np.where(k % 2 == 1, b[np.minimum(k + 1, p)] / (k + 1), 0.0)
    return np.linalg.solve(V, rhs)


def _uniform_rule(density: Density, h: float, order: int = 8):
    lo, hi = density.support()
    n = int(math.ceil((hi - lo) / h)) + 1
    v = lo + h * np.arange(n)
    w = np.full(n, h)
    if density.kind == "laguerre":
        # jump at v = 0: trapezoid plus end corrections
        w[0] = 0.5 * h
        w[:order] += h * _gregory_corrections(order)
    return v, w * density(v)


def propagate_density(
    density: Density,
    s_grid,
    xi_grid,
    refine: int | None = None,
    threads: int = 1,
) -> BeamProfile:
    """Evaluate the Airy-domain representation of Phi on a (xi, s) grid.

    The density is sampled with step ds/refine, so every Airy argument
    s_i + v_j - xi^2/4 falls on one fine uniform grid; each row is then a
    single correlation done by FFT.  The result is not periodic and the
    window need not contain the whole beam, so row energies on the window
    are not conserved.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    xi_grid = np.asarray(xi_grid, dtype=float)
    ds = float(s_grid[1] - s_grid[0])
    if not np.allclose(np.diff(s_grid), ds, rtol=1e-9, atol=0):
        raise ValueError("s-grid must be uniform")
    if refine is None:
        refine = max(1, int(math.ceil(ds / 0.004)))
    h = ds / refine
    v, g = _uniform_rule(density, h)
    u0 = s_grid[0] + v[0]
    n_fine = (s_grid.size - 1) * refine + v.size

    def row(xi):
        ai, _ = airy_pair(u0 - 0.25 * xi * xi + h * np.arange(n_fine))
        kern = g * np.exp(0.5j * xi * v)
        corr = fftconvolve(ai, kern[::-1], mode="valid")[::refine]
        return corr * np.exp(1j * (0.5 * xi * s_grid - xi**3 / 12.0))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, xi_grid))
    else:
        rows = [row(x) for x in xi_grid]
    amp = np.array(rows)
    energy = ds * float(np.sum(np.abs(amp[0]) ** 2))
    return BeamProfile(s_grid, xi_grid, amp, energy)


def density_field(density: Density, s: float, xi: float) -> complex:
    """Phi(s, xi) at one point by Gauss-Legendre quadrature over the density."""
    v, w = density.quadrature()
    ai, _ = airy_pair(s + v - 0.25 * xi * xi)
    ph = np.exp(1j * ((s + v) * xi / 2 - xi**3 / 12))
    return complex(np.sum(w * density(v) * ai * ph))


def padded_grid(lo: float, hi: float, count: int, left: float, right: float):
    """Uniform grid with the spacing of linspace(lo, hi, count), widened to [left, right].

    Returns the grid and the slice that recovers the original points.
    """
    ds = (hi - lo) / (count - 1)
    n_left = max(0, int(math.ceil((lo - left) / ds)))
    n_right = max(0, int(math.ceil((right - hi) / ds)))
    total = n_left + count + n_right
    grid = lo + ds * (np.arange(total) - n_left)
    return grid, slice(n_left, n_left + count)


def finite_airy_left_extent(alpha: float, tol: float = DECAY_TOL) -> float:
    """A point left of which the finite Airy profile is below ``tol`` of its peak."""
    # |profile| <~ (8 pi alpha)^{1/4} |s|^{-1/4} exp(alpha s) / sqrt(pi), peak ~ 0.5
    return -(math.log(2.0 / tol) + 0.25 * math.log(8 * math.pi * alpha)) / alpha - 10.0


# ------------------------------------------------------ uncertainty bound


def _tail_energy(t):
    """int_t^inf Ai(y)^2 dy = Ai'(t)^2 - t Ai(t)^2."""
    ai, aip = airy_pair(t)
    return aip * aip - t * ai * ai


def uncertainty_bound(a: float, b: float) -> float:
    """int_b^inf int_a^inf Ai(x + y)^2 dy dx.

    The inner integral has the closed form Ai'^2 - t Ai^2 at t = x + a; the
    outer one is done by Gauss-Legendre panels and cut where the integrand
    has dropped below 1e-40 of the total (it decays like exp(-4/3 t^{3/2})).
    """
    t0 = float(a) + float(b)
    # beyond t = 30 the tail energy is below 1e-60
    t1 = max(t0, 0.0) + 30.0
    panels = max(8, int(math.ceil((t1 - t0) / 0.5)))
    t, w = panel_rule(np.linspace(t0, t1, panels + 1), 24)
    return float(w @ _tail_energy(t))
