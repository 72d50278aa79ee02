"""Equilibrium weights and collision kernels.

All kernels take the momentum modulus ``x > 0``. Hyperbolic functions of
``x**2`` are evaluated through ``exp(-a)`` forms so that the kernels stay
finite for arguments far beyond the overflow point of ``sinh``.

Near the diagonal the kernel ``T`` is a difference of two terms that blow
up like ``1/|x**2 - y**2|``; there it is evaluated from the series of
``h(z) = 1/z - 1/sinh(z)`` and a rearranged form of ``T2`` that has no
cancellation.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalFailure, SingularEvaluationError

# |x^2 - y^2| below NEAR_DIAGONAL_REL * max(1, x^2) uses the stable branch of T
NEAR_DIAGONAL_REL = 1e-3
SERIES_ORDER = 8
# h(z) is summed from its series below this argument, directly above it
_H_SERIES_MAX = 0.25

def bernoulli_numbers(n_max):
    """Exact ``B_0 .. B_n_max`` (``B_1 = -1/2``) from the Akiyama-Tanigawa recurrence.

    scipy.special.bernoulli carries relative errors near 1e-12 in ``B_4``.
    """
    out, a = [], []
    for m in range(n_max + 1):
        a.append(Fraction(1, m + 1))
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    out[1] = -out[1]
    return out


_B = bernoulli_numbers(2 * SERIES_ORDER)
_H_COEFFS = np.array(
    [float(2 * (2 ** (2 * n - 1) - 1) * _B[2 * n] / math.factorial(2 * n))
     for n in range(1, SERIES_ORDER + 1)]
)


class Convention(enum.Enum):
    """Which equilibrium weight ``n0(1+n0)`` the moments are taken against.

    ``SINH_X2``: ``1/(4 sinh^2(x^2))``; ``SINH_HALF_X2``: ``1/(4 sinh^2(x^2/2))``.
    """

    SINH_X2 = "SINH_X2"
    SINH_HALF_X2 = "SINH_HALF_X2"

    @property
    def scale(self) -> float:
        """Factor c with ``n0(1+n0) = 1/(4 sinh^2(c x^2))``."""
        return 1.0 if self is Convention.SINH_X2 else 0.5

    @classmethod
    def parse(cls, value) -> "Convention":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


# --- elementary stable pieces -------------------------------------------

def inv_sinh(a):
    """``1/sinh(a)`` for ``a > 0`` without overflow."""
    a = np.asarray(a, dtype=float)
    return 2.0 * np.exp(-a) / -np.expm1(-2.0 * a)


def h_function(z):
    """``h(z) = 1/z - 1/sinh(z)`` for ``z >= 0`` (odd extension for ``z < 0``)."""
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    small = az < _H_SERIES_MAX
    out = np.empty_like(az)
    zs = az[small]
    z2 = zs * zs
    acc = np.zeros_like(zs)
    for c in _H_COEFFS[::-1]:
        acc = acc * z2 + c
    out[small] = acc * zs
    zl = az[~small]
    out[~small] = 1.0 / zl - inv_sinh(zl)
    return np.sign(z) * out if out.ndim else float(np.sign(z) * out)


def _shc_minus_one(z):
    """``sinh(z)/z - 1``, accurate for small ``z``."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    small = np.abs(z) < 0.1
    series = z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0 * (1.0 + z2 / 72.0)))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = np.sinh(z) / z - 1.0
    return np.where(small, series, direct)


# --- equilibrium ----------------------------------------------------------

def equilibrium_n0(omega):
    """Bose-Einstein occupation ``1/(e^omega - 1)``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("equilibrium_n0 needs omega > 0 (pole at 0)")
    out = np.exp(-omega) / -np.expm1(-omega)
    return out if out.ndim else float(out)


def n0_of_x(x, convention=Convention.SINH_X2):
    """Occupation at momentum modulus ``x``: ``1/(e^{2 c x^2} - 1)``."""
    c = Convention.parse(convention).scale
    return equilibrium_n0(2.0 * c * np.asarray(x, dtype=float) ** 2)


def pair_weight(x, convention=Convention.SINH_X2):
    """``n0(1+n0) = 1/(4 sinh^2(c x^2))``."""
    c = Convention.parse(convention).scale
    x = np.asarray(x, dtype=float)
    return 0.25 * inv_sinh(c * x * x) ** 2


@dataclass(frozen=True)
class EquilibriumWeights:
    nodes: np.ndarray
    w4: np.ndarray
    w6: np.ndarray
    convention: Convention = Convention.SINH_X2


def equilibrium_weights(nodes, convention=Convention.SINH_X2) -> EquilibriumWeights:
    convention = Convention.parse(convention)
    x = np.asarray(nodes, dtype=float)
    if np.any(x <= 0):
        raise DomainError("weight nodes must be positive")
    x2 = x * x
    w4 = pair_weight(x, convention) * x2 * x2
    return EquilibriumWeights(nodes=x, w4=w4, w6=w4 * x2, convention=convention)


# --- kernels ----------------------------------------------------------------

def _check_pair(x, y, allow_diagonal=False):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("kernels are defined for x > 0, y > 0")
    if not allow_diagonal and np.any(x == y):
        raise SingularEvaluationError(
            "kernel is singular on x == y; use kernel_T or the generator"
        )
    return x, y


def _bracket_rest(x2, y2):
    # bracket = exp(-|x2 - y2|) * rest, from
    # 1/sinh a - 1/sinh b = 2 cosh((a+b)/2) sinh((b-a)/2) / (sinh a sinh b)
    a = np.abs(x2 - y2)
    b = x2 + y2
    lo = np.minimum(x2, y2)
    hi = np.maximum(x2, y2)
    with np.errstate(divide="ignore"):
        return 2.0 * (1.0 + np.exp(-2.0 * hi)) * np.expm1(-2.0 * lo) / (
            np.expm1(-2.0 * a) * -np.expm1(-2.0 * b))


def _bracket(x2, y2):
    """``1/sinh|x^2-y^2| - 1/sinh(x^2+y^2)``, symmetric and free of cancellation."""
    return np.exp(-np.abs(x2 - y2)) * _bracket_rest(x2, y2)


def _ratio_bracket(x2, y2):
    """``sinh(x2)/sinh(y2)`` times the bracket, with all exponents <= 0."""
    ratio_rest = np.expm1(-2.0 * x2) / np.expm1(-2.0 * y2)
    return np.exp(x2 - y2 - np.abs(x2 - y2)) * ratio_rest * _bracket_rest(x2, y2)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def kernel_M(x, y):
    """Jump kernel of the generator, ``M(x, y)`` for ``x != y``."""
    x, y = _check_pair(x, y)
    x2, y2 = x * x, y * y
    out = _ratio_bracket(x2, y2) * (y / x) ** 3
    return _scalar(out)


def kernel_W(x, y):
    """Symmetric kernel ``W(x, y) = M(x, y) x^2 / (sinh^2(x^2) y^4)``."""
    x, y = _check_pair(x, y)
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    lo2, hi2 = lo * lo, hi * hi
    out = _bracket(lo2, hi2) * inv_sinh(lo2) * inv_sinh(hi2) / (lo * hi)
    return _scalar(out)


def kernel_L(x, y):
    """Kernel of the principal part, ``(1/|x^2-y^2| - 1/(x^2+y^2)) y/x``."""
    x, y = _check_pair(x, y)
    x2, y2 = x * x, y * y
    out = (1.0 / np.abs(x2 - y2) - 1.0 / (x2 + y2)) * y / x
    return _scalar(out)


def kernel_T1(x, y):
    """``T1 = (y/x)(h(x^2+y^2) - h(|x^2-y^2|))``; equals ``h(2x^2)`` on the diagonal."""
    x, y = _check_pair(x, y, allow_diagonal=True)
    x2, y2 = x * x, y * y
    out = (y / x) * (h_function(x2 + y2) - h_function(np.abs(x2 - y2)))
    return _scalar(out)


def t2_jump(x):
    """One-sided limits of ``T2(x, y)`` as ``y -> x±`` are ``±t2_jump(x)``."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    # d/dv [sinh(x^2)/sinh(v) - x^2/v] at v = x^2
    return _scalar(1.0 / x2 - 1.0 / np.tanh(x2))


def kernel_T2(x, y):
    """``T2 = (y/x)^3 (sinh x^2/sinh y^2 - x^2/y^2)(1/sinh|d| - 1/sinh s)``.

    Evaluated in a rearranged form free of the 0*inf product at ``d = 0``.
    ``T2`` jumps across the diagonal; the value there is the mean of the
    one-sided limits, which is 0.
    """
    x, y = _check_pair(x, y, allow_diagonal=True)
    x, y = np.broadcast_arrays(x, y)
    x2, y2 = x * x, y * y
    d = x2 - y2
    out = np.empty(x2.shape)
    nb = np.abs(d) < np.minimum(1.0, 0.5 * np.minimum(x2, y2))
    # away from the diagonal the literal form is accurate once the sinh ratio
    # is folded into the bracket
    fx, fy = x2[~nb], y2[~nb]
    out[~nb] = (y[~nb] / x[~nb]) ** 3 * _t2_far_factor(fx, fy)
    if np.any(nb):
        out[nb] = _t2_near(x2[nb], y2[nb], (y[nb] / x[nb]) ** 3)
    return _scalar(out)


def _t2_far_factor(x2, y2):
    # phi * bracket; phi = x^2 (sinh(x^2)/x^2 - sinh(y^2)/y^2) / sinh(y^2) avoids
    # cancelling sinh(x^2)/sinh(y^2) against x^2/y^2 when y is small
    moderate = np.maximum(x2, y2) < 50.0
    out = np.empty(x2.shape)
    a, b = x2[moderate], y2[moderate]
    phi = a * (_shc_minus_one(a) - _shc_minus_one(b)) * inv_sinh(b)
    out[moderate] = phi * _bracket(a, b)
    a, b = x2[~moderate], y2[~moderate]
    out[~moderate] = _ratio_bracket(a, b) - a / b * _bracket(a, b)
    return out


def _t2_near(x2, y2, cube):
    d = x2 - y2
    s = x2 + y2
    # phi/sinh(d) with phi = sinh(x^2)/sinh(y^2) - x^2/y^2
    d_h = d * h_function(d)  # 1 - d/sinh(d), even in d
    # sinh(x^2/2) / (cosh(d/2) cosh(y^2/2)) in overflow-free form
    third = (np.exp(d / 2.0) * -np.expm1(-x2) / (1.0 + np.exp(-y2))
             / (0.5 * (1.0 + np.exp(-np.abs(d)))) * np.exp(-np.abs(d) / 2.0))
    near = -h_function(y2) + d_h / y2 + third
    # phi itself, as d * Q
    shc_m1 = _shc_minus_one(d / 2.0)
    cosh_m1_over_sinh = np.exp(d / 2.0) * np.expm1(-s / 2.0) ** 2 / -np.expm1(-2.0 * y2)
    q = cosh_m1_over_sinh * (1.0 + shc_m1) + shc_m1 * inv_sinh(y2) - h_function(y2)
    phi = d * q
    return cube * (np.sign(d) * near - phi * inv_sinh(s))


def near_diagonal(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.abs(x * x - y * y) < NEAR_DIAGONAL_REL * np.maximum(1.0, x * x)


def kernel_T_direct(x, y):
    """``T = M - L`` straight from the definitions (cancels badly near ``x == y``)."""
    x, y = _check_pair(x, y)
    x2, y2 = x * x, y * y
    m = _ratio_bracket(x2, y2) * (y / x) ** 3
    lk = (1.0 / np.abs(x2 - y2) - 1.0 / (x2 + y2)) * y / x
    return _scalar(m - lk)


def kernel_T_series(x, y):
    """``T = T1 + T2`` through the series and rearranged forms."""
    return _scalar(np.asarray(kernel_T1(x, y)) + np.asarray(kernel_T2(x, y)))


def kernel_T(x, y):
    """Kernel ``T = M - L`` of the compact part, defined on the whole quadrant."""
    x, y = _check_pair(x, y, allow_diagonal=True)
    x, y = np.broadcast_arrays(x, y)
    near = near_diagonal(x, y)
    out = np.asarray(kernel_T_series(x, y), dtype=float).copy()
    far = ~near
    if np.any(far):
        out[far] = kernel_T_direct(x[far], y[far])
    return _scalar(out)


def kernel_row_mass(x, x_max, column=False, epsabs=1e-11, limit=400):
    """``int_0^x_max |T(x, y)| dy`` (or ``|T(y, x)|`` with ``column=True``)."""
    if x <= 0 or x_max <= 0:
        raise DomainError("row mass needs x > 0 and x_max > 0")

    if column:
        def g(y):
            return abs(kernel_T(y, x))
    else:
        def g(y):
            return abs(kernel_T(x, y))

    # T jumps at y = x and varies on the scale 1/x around it
    pts = sorted({p for p in (x, x - 1.0 / max(x, 1.0), x + 1.0 / max(x, 1.0), 1.0)
                  if 0 < p < x_max})
    edges = [0.0, *pts, x_max]
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e, info = integrate.quad(g, a, b, epsabs=epsabs, epsrel=1e-10,
                                      limit=limit, full_output=True)[:3]
        total += val
        err += e
    if err > max(1e-6, 1e-6 * total):
        raise NumericalFailure(
            f"row mass quadrature at x={x} did not converge (err={err:.2e})",
            partial=total, achieved=err,
        )
    return total
