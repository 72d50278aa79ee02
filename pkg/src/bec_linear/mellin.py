"""Mellin symbol ``W(s)`` of the linearized operator and the companion ``B(s)``.

``W(s) = -2 gamma_e - 2 psi(s/2) - pi cot(pi s/4)`` on ``-2 < Re s < 4``.
``B`` is the exponential of a contour integral of ``log(-W)`` along
``Re rho = beta``; it satisfies ``B(s) = -W(s-1) B(s-1)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import BranchError, DomainError, NumericalFailure, PoleError

EULER_GAMMA = float(np.euler_gamma)
POLE_DISTANCE = 1e-8
W_POLES = (-2.0, 0.0, 4.0)
CONTOUR_TOL = 1e-14
QUAD_BUDGET = 100_000


def digamma(z: complex) -> complex:
    """Complex digamma; raises ``PoleError`` at the nonpositive integers."""
    z = complex(z)
    if z.real <= 0 and z.imag == 0 and z.real == math.floor(z.real):
        raise PoleError(f"digamma pole at {z}")
    return complex(special.psi(z))


def _cot(w: complex) -> complex:
    # cot via exp(2iw); avoids overflow of tan/sin for large imaginary parts
    if w.imag > 0:
        e = cmath.exp(2j * w)
        return 1j * (e + 1) / (e - 1)
    e = cmath.exp(-2j * w)
    return -1j * (e + 1) / (e - 1)


def symbol_W(s: complex) -> complex:
    """``W(s)`` on the strip ``-2 < Re s < 4``."""
    s = complex(s)
    if not -2.0 < s.real < 4.0 and min(abs(s - p) for p in W_POLES) >= POLE_DISTANCE:
        raise DomainError(f"Re s = {s.real} outside (-2, 4)")
    for p in W_POLES:
        if abs(s - p) < POLE_DISTANCE:
            raise PoleError(f"s = {s} within {POLE_DISTANCE:g} of the pole {p:g}")
    return -2.0 * EULER_GAMMA - 2.0 * digamma(s / 2.0) - math.pi * _cot(math.pi * s / 4.0)


def _kernel_s(s: complex, rho: complex) -> complex:
    # 1/(1 - exp(2 i pi (s - rho))), written to stay bounded on both half-lines
    e = cmath.exp(2j * math.pi * (s - rho)) if (s - rho).imag >= 0 else None
    if e is not None:
        return 1.0 / (1.0 - e)
    e_inv = cmath.exp(-2j * math.pi * (s - rho))
    return -e_inv / (1.0 - e_inv)


def _kernel_norm(rho: complex) -> complex:
    # 1/(1 + exp(-2 i pi rho))
    if rho.imag <= 0:
        return 1.0 / (1.0 + cmath.exp(-2j * math.pi * rho))
    e = cmath.exp(2j * math.pi * rho)
    return e / (e + 1.0)


def log_minus_W(rho: complex) -> complex:
    """Principal ``log(-W(rho))``; raises ``BranchError`` if ``Re(-W) <= 0``."""
    w = -symbol_W(rho)
    if not w.real > 0:
        raise BranchError(f"Re(-W) = {w.real:.3e} <= 0 at rho = {rho}; principal log ambiguous")
    return cmath.log(w)


@dataclass(frozen=True)
class SymbolPoint:
    s: complex
    W_val: complex
    B_val: complex
    beta: float


@dataclass(frozen=True)
class _Contour:
    s: complex
    beta: float

    def integrand(self, y: float) -> complex:
        rho = complex(self.beta, y)
        # d rho = i dy
        return 1j * log_minus_W(rho) * (_kernel_s(self.s, rho) - _kernel_norm(rho))


def _truncation(contour: _Contour, tol: float, budget: int) -> tuple[float, float, int]:
    """Symmetric cut ``Y`` beyond which the integrand stays below ``tol``."""
    evals = 0
    ymax = 0.0
    for sign in (1.0, -1.0):
        y = 1.0
        while True:
            vals = [abs(contour.integrand(sign * (y + d))) for d in (0.0, 0.25, 0.5)]
            evals += 3
            if max(vals) < tol:
                break
            y += 0.5
            if evals > budget:
                raise NumericalFailure(
                    f"contour integrand above {tol:g} beyond |Im rho| = {y}",
                    achieved=max(vals),
                )
        ymax = max(ymax, y)
    return ymax, tol, evals


def contour_log_B(s: complex, beta: float, budget: int = QUAD_BUDGET) -> complex:
    """The exponent of ``B(s)``: the contour integral along ``Re rho = beta``."""
    s = complex(s)
    if not 0.0 < beta < 2.0:
        raise DomainError(f"beta = {beta} must lie in (0, 2)")
    if abs((beta - 0.5) - round(beta - 0.5)) < 1e-6:
        raise DomainError(f"contour Re rho = {beta} passes through a pole of the normalizing term")
    if not beta < s.real < beta + 1.0:
        raise DomainError(f"Re s = {s.real} must lie in ({beta}, {beta + 1})")
    contour = _Contour(s=s, beta=float(beta))
    Y, _, used = _truncation(contour, CONTOUR_TOL, budget)
    limit = max(50, min(2000, (budget - used) // 21))
    # the s-kernel has a steep profile near Im rho = Im s; split there
    pts = sorted({-Y, Y, float(np.clip(s.imag, -Y, Y)), 0.0})
    total = 0j
    err = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        val, e = integrate.quad(contour.integrand, a, b, complex_func=True,
                                epsabs=1e-14, epsrel=1e-13, limit=limit)
        total += val
        err += abs(e)
    if not np.isfinite(total.real) or not np.isfinite(total.imag):
        raise NumericalFailure("non-finite contour integral")
    if err > 1e-9:
        raise NumericalFailure(f"contour quadrature error {err:.2e}", achieved=err)
    return total


def symbol_B(s: complex, beta: float, budget: int = QUAD_BUDGET) -> complex:
    """``B(s)`` for ``beta < Re s < beta + 1``."""
    return cmath.exp(contour_log_B(s, beta, budget))


def shifted_beta(s: complex) -> float:
    """A line for ``B(s-1)`` that shares its normalization with lines in ``(1/2, 3/2)``.

    Moving the normalizing term across a half-integer multiplies ``B`` by a
    constant, so the lines for ``B(s)`` and ``B(s-1)`` must sit in the same
    cell ``(1/2, 3/2)``. That requires ``Re s > 3/2``.
    """
    top = complex(s).real - 1.0
    if not 0.5 < top < 1.5:
        raise DomainError(f"Re s = {complex(s).real} must lie in (3/2, 5/2)")
    return 0.5 * (0.5 + top)


def functional_residual(s: complex, beta: float) -> float:
    """``|B(s) + W(s-1) B(s-1)| / |B(s)|`` with ``B(s-1)`` on its own line."""
    s = complex(s)
    if not 0.5 < beta < 1.5:
        raise DomainError("beta must lie in (1/2, 3/2) for a shared normalization")
    b_s = symbol_B(s, beta)
    b_prev = symbol_B(s - 1.0, shifted_beta(s))
    return abs(b_s + symbol_W(s - 1.0) * b_prev) / abs(b_s)


def symbol_point(s: complex, beta: float) -> SymbolPoint:
    return SymbolPoint(s=complex(s), W_val=symbol_W(s), B_val=symbol_B(s, beta), beta=float(beta))
