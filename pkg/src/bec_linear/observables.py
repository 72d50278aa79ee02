"""Scalar functionals of the state and their time series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConsistencyError, ContractError
from .evolution import EvolutionRun, boundary_limit
from .kernels import EquilibriumWeights
from .operators import GeneratorMatrix, RadialGrid, StateField

DRIFT_TOL = 1e-4


def _vals(f):
    return f.values if isinstance(f, StateField) else np.asarray(f, dtype=float)


def _node_weights(weights: EquilibriumWeights, grid: RadialGrid | None):
    if grid is None:
        raise ContractError("a RadialGrid is needed for the node weights")
    if grid.nodes.shape != weights.nodes.shape:
        raise ContractError("grid and weights must share nodes")
    return grid.weights


def mass_energy(f, weights: EquilibriumWeights, grid: RadialGrid) -> tuple[float, float]:
    """Mass and energy variations ``(N, E)`` carried by the perturbation ``f``."""
    h = _node_weights(weights, grid)
    v = _vals(f)
    if v.shape != h.shape:
        raise ContractError("state and weights differ in length")
    return float(np.dot(weights.w4 * h, v)), float(np.dot(weights.w6 * h, v))


def equilibrium_moments(weights: EquilibriumWeights, grid: RadialGrid) -> tuple[float, float]:
    """``(N0, E0)``: the moments of the constant perturbation 1."""
    return mass_energy(np.ones_like(weights.nodes), weights, grid)


class AsymptoticConstants(NamedTuple):
    Cstar: float
    Mcal_inf: float
    pc_limit_ratio: float


def asymptotic_constants(f0, weights: EquilibriumWeights, grid: RadialGrid) -> AsymptoticConstants:
    """Long-time plateau ``C* = E(0)/E0`` and condensate limit ``exp(-Mcal_inf)``."""
    N0, E0 = equilibrium_moments(weights, grid)
    if E0 <= 0:
        raise ContractError("E0 must be positive")
    n, e = mass_energy(f0, weights, grid)
    cstar = e / E0
    minf = cstar * N0 - n
    return AsymptoticConstants(cstar, minf, float(np.exp(-minf)))


def dissipation(f, A: GeneratorMatrix) -> float:
    """``D(f) = sum_ij K_ij (f_i - f_j)^2``, the decay rate of ``int f^2 dmu``."""
    return float(_dissipation_rows(np.atleast_2d(_vals(f)), A.sym)[0])


def _dissipation_rows(S, K):
    # sum_ij K_ij (f_i - f_j)^2 = 2 (f^2 . rowsum(K) - f . K f); clipped at the rounding floor
    val = 2.0 * ((S * S) @ K.sum(axis=1) - np.einsum("ij,ij->i", S, S @ K))
    return np.maximum(val, 0.0)


def l2_distance(f, c: float, A: GeneratorMatrix) -> float:
    """``int |f - c|^2 dmu`` on the grid."""
    v = _vals(f) - c
    return float(np.dot(A.energy_vector, v * v))


@dataclass
class ObservableSeries:
    tau: np.ndarray
    N: np.ndarray
    E: np.ndarray
    m: np.ndarray
    Mcal: np.ndarray
    qc: np.ndarray
    D: np.ndarray
    b: np.ndarray
    Cstar: float
    Mcal_inf: float
    qc0: float = 1.0

    @property
    def drift_residual(self) -> np.ndarray:
        return self.Mcal - (self.N - self.N[0])


def drift_series(run: EvolutionRun, A: GeneratorMatrix, qc0: float = 1.0,
                 check: bool = True) -> ObservableSeries:
    """Observables along a run; ``Mcal`` is the trapezoid integral of ``m``.

    The identity ``Mcal = N - N(0)`` is checked, not substituted.
    """
    if run.states.shape[0] == 0:
        raise ContractError("empty run")
    if qc0 <= 0:
        raise ContractError("qc0 must be positive")
    grid, w = A.grid, A.weights
    S = run.states
    mvec = A.mass_vector
    evec = A.energy_vector
    AS = S @ A.entries.T
    N = S @ mvec
    E = S @ evec
    m = AS @ mvec
    Mcal = np.concatenate([[0.0], cumulative_trapezoid(m, run.times)])
    qc = qc0 * np.exp(-Mcal)
    D = _dissipation_rows(S, A.sym)
    b = np.array([boundary_limit(s, grid).value for s in S])
    consts = asymptotic_constants(S[0], w, grid)
    series = ObservableSeries(tau=run.times.copy(), N=N, E=E, m=m, Mcal=Mcal, qc=qc, D=D,
                              b=b, Cstar=consts.Cstar, Mcal_inf=consts.Mcal_inf, qc0=qc0)
    if check:
        bad = np.max(np.abs(series.drift_residual))
        if bad > DRIFT_TOL * max(1.0, abs(N[0])):
            raise ConsistencyError(
                f"Mcal deviates from N - N(0) by {bad:.3e}; discretization too coarse"
            )
    return series
