"""Five-diagonal matrices: storage, eigenvalues, and inverse iteration.

Matrices are stored row-aligned: ``bands[o + 2, i]`` holds ``A[i, i + o]``
for offsets ``o = -2..2``; entries that fall outside the matrix are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals_banded
from scipy.linalg.lapack import dgbtrf, dgbtrs

TINY = np.finfo(float).tiny
EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """Raised when an iterative method stops without meeting its tolerance."""


@dataclass(frozen=True)
class FiveDiagonal:
    bands: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        b = np.ascontiguousarray(self.bands, dtype=float)
        if b.ndim != 2 or b.shape[0] != 5:
            raise ValueError("bands must have shape (5, dim)")
        if b.shape[1] < 3:
            raise ValueError("five-diagonal matrices need dim >= 3")
        n = b.shape[1]
        b = b.copy()
        # zero the slots that fall outside the matrix
        b[0, :2] = 0.0
        b[1, :1] = 0.0
        b[3, n - 1 :] = 0.0
        b[4, n - 2 :] = 0.0
        if self.symmetric:
            if not (np.array_equal(b[3, :-1], b[1, 1:]) and np.array_equal(b[4, :-2], b[0, 2:])):
                raise ValueError("symmetric flag set but bands are not symmetric")
        b.flags.writeable = False
        object.__setattr__(self, "bands", b)

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    def diagonal(self, offset: int) -> np.ndarray:
        """The ``offset`` diagonal as a vector of length ``dim - |offset|``."""
        if offset >= 0:
            return self.bands[offset + 2, : self.dim - offset].copy()
        return self.bands[offset + 2, -offset:].copy()

    @classmethod
    def from_diagonals(cls, d0, d1=None, d2=None, dm1=None, dm2=None, symmetric=False):
        """Build from the main diagonal and the off-diagonals.

        ``d1``/``d2`` are the first and second superdiagonals.  When
        ``symmetric`` is true the subdiagonals default to copies of them.
        """
        d0 = np.asarray(d0, dtype=float)
        n = d0.size
        z1, z2 = np.zeros(n - 1), np.zeros(n - 2)
        d1 = z1 if d1 is None else np.asarray(d1, dtype=float)
        d2 = z2 if d2 is None else np.asarray(d2, dtype=float)
        if symmetric:
            dm1 = d1 if dm1 is None else np.asarray(dm1, dtype=float)
            dm2 = d2 if dm2 is None else np.asarray(dm2, dtype=float)
        else:
            dm1 = z1 if dm1 is None else np.asarray(dm1, dtype=float)
            dm2 = z2 if dm2 is None else np.asarray(dm2, dtype=float)
        bands = np.zeros((5, n))
        bands[0, 2:] = dm2
        bands[1, 1:] = dm1
        bands[2] = d0
        bands[3, :-1] = d1
        bands[4, :-2] = d2
        return cls(bands, symmetric)

    @classmethod
    def from_dense(cls, M, symmetric=False):
        M = np.asarray(M, dtype=float)
        idx = np.arange(M.shape[0])
        if np.any(np.abs(idx[:, None] - idx[None, :])[M != 0] > 2):
            raise ValueError("matrix has entries outside the five central diagonals")
        return cls.from_diagonals(
            np.diag(M), np.diag(M, 1), np.diag(M, 2), np.diag(M, -1), np.diag(M, -2), symmetric=symmetric
        )

    def to_dense(self) -> np.ndarray:
        n = self.dim
        M = np.zeros((n, n))
        for o in range(-2, 3):
            M += np.diag(self.diagonal(o), o)
        return M

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        n = self.dim
        out = self.bands[2] * v
        out[:-1] += self.bands[3, :-1] * v[1:]
        out[:-2] += self.bands[4, :-2] * v[2:]
        out[1:] += self.bands[1, 1:] * v[:-1]
        out[2:] += self.bands[0, 2:] * v[:-2]
        return out

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        return float(np.max(np.sum(np.abs(self.bands), axis=0)))

    def _gb_storage(self) -> np.ndarray:
        """LAPACK general-band layout with two extra rows for LU fill-in."""
        n = self.dim
        ab = np.zeros((7, n))
        # ab[kl + ku + i - j, j] = A[i, j] with kl = ku = 2
        for o in range(-2, 3):
            d = self.diagonal(o)
            row = 4 - o
            if o >= 0:
                ab[row, o:] = d
            else:
                ab[row, : n + o] = d
        return ab


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    iterations: int = 0
    residuals: tuple = field(default_factory=tuple)


class _BandedLU:
    """Partial-pivoting LU of a five-diagonal matrix via LAPACK dgbtrf."""

    def __init__(self, A: FiveDiagonal, shift: float = 0.0):
        ab = A._gb_storage()
        ab[4] -= shift
        lu, piv, info = dgbtrf(ab, 2, 2)
        if info < 0:
            raise ValueError(f"dgbtrf: illegal argument {-info}")
        scale = max(A.norm_inf(), TINY)
        if info > 0:
            # exact zero pivot: nudge it, inverse iteration tolerates this
            lu[4][lu[4] == 0.0] = EPS * scale
        self.lu, self.piv = lu, piv
        self.min_pivot = float(np.min(np.abs(lu[4])))
        self.scale = scale

    def solve(self, b: np.ndarray) -> np.ndarray:
        # pre-scale so the solution cannot overflow when a pivot is tiny
        rhs = np.array(b, dtype=float)
        scaled = self.min_pivot < 1e-200 * self.scale
        if scaled:
            rhs *= self.min_pivot / self.scale
        with np.errstate(over="ignore", invalid="ignore"):
            x, info = dgbtrs(self.lu, 2, 2, rhs, self.piv)
            if info == 0 and not scaled and not np.all(np.isfinite(x)):
                # growth in the substitutions overflowed; retry scaled down
                x, info = dgbtrs(self.lu, 2, 2, rhs * (self.min_pivot / self.scale), self.piv)
        if info != 0:
            raise ValueError(f"dgbtrs failed with info={info}")
        return x


def fivediag_eigenvalues(A: FiveDiagonal) -> np.ndarray:
    """All eigenvalues of a symmetric five-diagonal matrix, ascending."""
    if not A.symmetric:
        raise ValueError("fivediag_eigenvalues requires a symmetric matrix")
    n = A.dim
    upper = np.zeros((3, n))
    upper[0, 2:] = A.diagonal(2)
    upper[1, 1:] = A.diagonal(1)
    upper[2] = A.diagonal(0)
    return eigvals_banded(upper, lower=False, check_finite=True)


def _normalize(v):
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ConvergenceError("inverse iteration produced a degenerate vector")
    return v / nrm


def shifted_inverse_power(
    A: FiveDiagonal,
    shift: float,
    tol: float = 1e-14,
    max_iter: int = 20,
    start: np.ndarray | None = None,
) -> EigenPair:
    """Rayleigh-quotient inverse iteration for one eigenpair of ``A``.

    Each step solves ``(A - shift I) w = v`` by banded LU, normalizes, and
    replaces the shift by the Rayleigh quotient.  Iteration stops once the
    Rayleigh quotient is stationary on two consecutive steps and the
    residual is below ``tol * ||A||``.
    """
    if not A.symmetric:
        raise ValueError("shifted_inverse_power requires a symmetric matrix")
    n = A.dim
    anorm = A.norm_inf()
    if start is None:
        rng = np.random.default_rng(12345)
        v = _normalize(1.0 + 0.1 * rng.standard_normal(n))
    else:
        v = _normalize(np.asarray(start, dtype=float))
    mu = float(shift)
    still = 0
    residuals = []
    for it in range(1, max_iter + 1):
        lu = _BandedLU(A, mu)
        v = _normalize(lu.solve(v))
        Av = A.matvec(v)
        new_mu = float(v @ Av)
        res = float(np.linalg.norm(Av - new_mu * v))
        residuals.append(res)
        step = abs(new_mu - mu)
        mu = new_mu
        if step <= max(1e-15 * abs(mu), 2.0 * EPS * anorm):
            still += 1
        else:
            still = 0
        if still >= 2 and res <= tol * anorm:
            return EigenPair(mu, v, it, tuple(residuals))
        if res == 0.0:
            return EigenPair(mu, v, it, tuple(residuals))
    raise ConvergenceError(
        f"inverse iteration did not converge in {max_iter} steps "
        f"(residual {residuals[-1]:.3e}, target {tol * anorm:.3e})"
    )


def _upper_back_substitution(lu: np.ndarray) -> np.ndarray:
    """Solve U x = e_last for the banded U factor, rescaling as x grows.

    Entries that end up more than the double range below the largest one
    flush to zero, which is harmless for a null vector.
    """
    n = lu.shape[1]
    x = np.zeros(n)
    x[-1] = 1.0
    for i in range(n - 2, -1, -1):
        hi = min(n, i + 5)
        acc = 0.0
        for j in range(i + 1, hi):
            acc += lu[4 - (j - i), j] * x[j]
        x[i] = -acc / lu[4, i]
        if abs(x[i]) > 1e150:
            x[i:] *= 1e-150
    return x


def inverse_power_null(B: FiveDiagonal, tol: float = 1e-13, max_iter: int = 8) -> np.ndarray:
    """Unit vector spanning the (near) null space of a five-diagonal ``B``.

    The LU factorization is computed once.  The first candidate solves
    U x = e_last with the triangular factor alone: when the last pivot is the
    small one this is already the null vector, and it avoids the growth a
    full solve with a generic right-hand side can show.  Otherwise inverse
    iteration takes over.
    """
    n = B.dim
    bnorm = B.norm_inf()
    lu = _BandedLU(B, 0.0)
    v = _upper_back_substitution(lu.lu)
    if np.all(np.isfinite(v)) and np.any(v):
        v = _normalize(v)
        if v[int(np.argmax(np.abs(v)))] < 0:
            v = -v
        # B v = P L (U v) is the last pivot times a unit column of P L
        if float(np.linalg.norm(B.matvec(v))) <= tol * bnorm:
            return v
    # the rejected candidate may be another eigenvector exactly; start afresh
    v = np.full(n, 1.0 / math.sqrt(n))
    prev = None
    for _ in range(max_iter):
        v = _normalize(lu.solve(v))
        # fix the sign so successive iterates can be compared
        k = int(np.argmax(np.abs(v)))
        if v[k] < 0:
            v = -v
        res = float(np.linalg.norm(B.matvec(v)))
        if prev is not None and res <= tol * bnorm and np.max(np.abs(v - prev)) <= 1e-14:
            return v
        prev = v
    res = float(np.linalg.norm(B.matvec(v)))
    if res <= tol * bnorm:
        return v
    raise ConvergenceError(f"null-vector iteration failed (residual {res:.3e})")
