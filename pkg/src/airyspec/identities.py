"""Closed-form identities between eigenfunctions, used as self-checks.

Each check returns the two sides separately so the caller can choose the
tolerance.  Inner products are evaluated in coefficient space, where the
matrices of d/dx and of multiplication by x are explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigfun import AirySpectrum, diff_expansion, eval_dpsi, multiplication_by_x


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def rel_err(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if scale == 0.0 else abs(self.lhs - self.rhs) / scale


def _coeffs(spec, j):
    return np.asarray(spec.expansions[j].coeffs)


def _psi0(spec, j):
    return float(spec.psi0[j])


def _dpsi0(spec, j):
    return float(eval_dpsi(spec.expansions[j], 0.0))


def _x_inner(spec, n, m):
    return float(_coeffs(spec, m) @ multiplication_by_x(spec.params).matvec(_coeffs(spec, n)))


def _wronskian0(spec, n, m):
    return _dpsi0(spec, n) * _psi0(spec, m) - _psi0(spec, n) * _dpsi0(spec, m)


def derivative_inner(spec: AirySpectrum, n: int, m: int) -> IdentityCheck:
    """int psi_n' psi_m = -lambda_m/(lambda_n + lambda_m) psi_n(0) psi_m(0)."""
    lam = spec.lam
    lhs = float(diff_expansion(spec.expansions[n]) @ _coeffs(spec, m))
    rhs = -lam[m] / (lam[n] + lam[m]) * _psi0(spec, n) * _psi0(spec, m)
    return IdentityCheck(f"derivative_inner({n},{m})", lhs, float(rhs))


def moment_inner(spec: AirySpectrum, n: int, m: int) -> IdentityCheck:
    """int x psi_n psi_m = lambda_n lambda_m/(lambda_n^2 - lambda_m^2) W(0), n != m."""
    if n == m:
        raise ValueError("the moment identity needs n != m")
    lam = spec.lam
    rhs = lam[n] * lam[m] / (lam[n] ** 2 - lam[m] ** 2) * _wronskian0(spec, n, m)
    return IdentityCheck(f"moment_inner({n},{m})", _x_inner(spec, n, m), float(rhs))


def c_derivative_inner(spec: AirySpectrum, n: int, m: int) -> IdentityCheck:
    """int (d psi_n/dc) psi_m = lambda_n lambda_m/(lambda_m^2 - lambda_n^2) psi_m(0) psi_n(0), n != m.

    The left side is the first-order perturbation coefficient
    <psi_m, x psi_n> / (chi_n - chi_m), since d/dc of the differential
    operator is multiplication by x.
    """
    if n == m:
        raise ValueError("the c-derivative identity needs n != m")
    lam = spec.lam
    lhs = _x_inner(spec, n, m) / (spec.chi[n] - spec.chi[m])
    rhs = lam[n] * lam[m] / (lam[m] ** 2 - lam[n] ** 2) * _psi0(spec, m) * _psi0(spec, n)
    return IdentityCheck(f"c_derivative_inner({n},{m})", float(lhs), float(rhs))


def boundary_relation(spec: AirySpectrum, n: int) -> IdentityCheck:
    """chi_n psi_n(0) + psi_n'(0) = 0 (the ODE at x = 0), reported as lhs = chi psi(0), rhs = -psi'(0)."""
    return IdentityCheck(f"boundary_relation({n})", float(spec.chi[n]) * _psi0(spec, n), -_dpsi0(spec, n))


def identity_suite(spec: AirySpectrum, n_max: int) -> list[IdentityCheck]:
    """All pairwise checks for indices 0..n_max."""
    out = []
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            out.append(derivative_inner(spec, n, m))
            if n != m:
                out.append(moment_inner(spec, n, m))
                out.append(c_derivative_inner(spec, n, m))
        if spec.params.c > 0:
            out.append(boundary_relation(spec, n))
    return out
