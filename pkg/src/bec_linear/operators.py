"""Discrete generator on a graded radial grid.

The generator is assembled from the symmetric kernel ``W`` so that the
energy pairing is conserved to rounding and constants are annihilated:
``K[i, j] = w6_i h_i A[i, j]`` is stored symmetric and the diagonal of
``A`` is the negative off-diagonal row sum.

Under ``Convention.SINH_HALF_X2`` the same operator is used in the variable
``z = sqrt(c) x`` (``c = 1/2``), which is the form of the equation whose
conserved energy is taken against ``x^6/(4 sinh^2(x^2/2))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError
from .kernels import Convention, EquilibriumWeights


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    weights: np.ndarray
    x_max: float
    grading: float

    @property
    def n(self) -> int:
        return self.nodes.size


def make_grid(n: int = 400, x_max: float = 8.0, grading: float = 2.0) -> RadialGrid:
    """Power-law graded nodes ``x_i = x_max (i/n)^grading`` with trapezoid weights."""
    if n < 16:
        raise ContractError(f"grid needs N >= 16, got {n}")
    if x_max <= 0 or grading <= 0:
        raise ContractError("x_max and grading must be positive")
    i = np.arange(1, n + 1, dtype=float)
    x = x_max * (i / n) ** grading
    padded = np.concatenate([[0.0], x, [x[-1]]])
    w = 0.5 * (padded[2:] - padded[:-2])
    return RadialGrid(nodes=x, weights=w, x_max=float(x_max), grading=float(grading))


@dataclass
class StateField:
    values: np.ndarray
    theta: float = 0.5

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ContractError("state values must be finite")
        if not 0.0 <= self.theta < 1.0:
            raise ContractError("theta must lie in [0, 1)")

    def theta_norm(self, grid: RadialGrid) -> float:
        """``sup_{x<1} x^theta |f| + sup_{x>1} |f|`` over the grid nodes."""
        x = grid.nodes
        lo = x < 1.0
        a = np.max(x[lo] ** self.theta * np.abs(self.values[lo]), initial=0.0)
        b = np.max(np.abs(self.values[~lo]), initial=0.0)
        return float(a + b)


@dataclass(frozen=True)
class GeneratorMatrix:
    entries: np.ndarray
    sym: np.ndarray = field(repr=False)
    grid: RadialGrid = field(repr=False)
    weights: EquilibriumWeights = field(repr=False)

    @property
    def energy_vector(self) -> np.ndarray:
        """``w6_i h_i``: the discrete measure that ``entries`` is self-adjoint in."""
        return self.weights.w6 * self.grid.weights

    @property
    def mass_vector(self) -> np.ndarray:
        return self.weights.w4 * self.grid.weights

    def matvec(self, f) -> np.ndarray:
        return self.entries @ np.asarray(f, dtype=float)


def _check_shared(grid: RadialGrid, weights: EquilibriumWeights):
    if weights.nodes.shape != grid.nodes.shape or not np.array_equal(weights.nodes, grid.nodes):
        raise ContractError("grid and weights must share nodes")


def symmetric_kernel_matrix(grid: RadialGrid, convention=Convention.SINH_X2) -> np.ndarray:
    """``K[i, j] = w6(x_i) M_c(x_i, x_j) h_i h_j`` for ``i != j`` (zero diagonal).

    Computed from ``W`` on the upper triangle and mirrored, so ``K == K.T``
    holds bitwise.
    """
    c = Convention.parse(convention).scale
    z = np.sqrt(c) * grid.nodes
    h = grid.weights
    n = z.size
    iu, ju = np.triu_indices(n, k=1)
    vals = (0.25 * c ** -2.5 * kernels.kernel_W(z[iu], z[ju])
            * z[iu] ** 4 * z[ju] ** 4 * h[iu] * h[ju])
    K = np.zeros((n, n))
    K[iu, ju] = vals
    K[ju, iu] = vals
    return K


def assemble_generator(grid: RadialGrid, weights: EquilibriumWeights) -> GeneratorMatrix:
    """Discrete ``calL f(x_i) = sum_j (f_j - f_i) M(x_i, x_j) h_j``."""
    _check_shared(grid, weights)
    K = symmetric_kernel_matrix(grid, weights.convention)
    A = K / (weights.w6 * grid.weights)[:, None]
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -A.sum(axis=1))
    A.setflags(write=False)
    K.setflags(write=False)
    return GeneratorMatrix(entries=A, sym=K, grid=grid, weights=weights)


def _values(f):
    return f.values if isinstance(f, StateField) else np.asarray(f, dtype=float)


def _difference_apply(kmat: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``sum_j k[i, j] h_j (f_j - f_i)`` with a zero diagonal in ``kmat``."""
    return kmat @ f - kmat.sum(axis=1) * f


def _pair_matrix(grid: RadialGrid, kernel, convention, diagonal=None) -> np.ndarray:
    c = Convention.parse(convention).scale
    z = np.sqrt(c) * grid.nodes
    zi, zj = np.meshgrid(z, z, indexing="ij")
    off = ~np.eye(z.size, dtype=bool)
    out = np.zeros((z.size, z.size))
    out[off] = kernel(zi[off], zj[off])
    if diagonal is not None:
        out[~off] = diagonal(z)
    # the integration variable is z = sqrt(c) x, so dz = sqrt(c) dx
    return np.sqrt(c) * out * grid.weights[None, :]


def apply_L(f, grid: RadialGrid, convention=Convention.SINH_X2) -> StateField:
    """Principal part ``L f`` in combined-difference form."""
    vals = _values(f)
    lmat = _pair_matrix(grid, kernels.kernel_L, convention)
    theta = f.theta if isinstance(f, StateField) else 0.5
    return StateField(_difference_apply(lmat, vals), theta)


def apply_F(f, grid: RadialGrid, convention=Convention.SINH_X2) -> StateField:
    """Compact part ``F f = int T(x, y)(f(y) - f(x)) dy``."""
    vals = _values(f)
    tmat = _pair_matrix(grid, kernels.kernel_T, convention)
    theta = f.theta if isinstance(f, StateField) else 0.5
    return StateField(_difference_apply(tmat, vals), theta)


def apply_calL(f, A: GeneratorMatrix) -> StateField:
    vals = _values(f)
    if vals.shape != (A.grid.n,):
        raise ContractError(f"state has shape {vals.shape}, generator is {A.entries.shape}")
    theta = f.theta if isinstance(f, StateField) else 0.5
    return StateField(A.matvec(vals), theta)


def quadratic_form(f, A: GeneratorMatrix) -> float:
    """``sum_i w6_i h_i f_i (A f)_i``; nonpositive."""
    vals = _values(f)
    return float(np.dot(A.energy_vector * vals, A.matvec(vals)))


def generator_reference(f, x, convention=Convention.SINH_X2, upper=np.inf, points=None):
    """Adaptive-quadrature value of ``int (f(y) - f(x)) M_c(x, y) dy`` at one ``x``.

    ``f`` is a callable. Independent of the grid; used as an oracle.
    """
    from scipy import integrate

    c = Convention.parse(convention).scale
    sc = np.sqrt(c)
    fx = f(x)

    def g(y):
        if y == x:
            return 0.0
        return (f(y) - fx) * sc * kernels.kernel_M(sc * x, sc * y)

    brk = [x] + list(points or [])
    brk = sorted(p for p in brk if 0 < p)
    edges = [0.0, *brk]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    total += integrate.quad(g, edges[-1], upper, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    return total
