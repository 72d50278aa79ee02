"""Condensate driven by the nonlinear moment, and its physical horizon.

The state ``f`` still evolves by the linear generator; only the condensate
factor changes: ``q~_c = qc0 exp(-Mcal~)`` with ``Mcal~`` the integral of

    m~ = -C1 (1 + b)^2 + C2 int (n0 + n0 (1 + n0) x^2 f) x^3 dx,

``b`` being the boundary value of ``f``. The physical time reached as
``tau -> inf`` is ``T* = int dsigma / q~_c``, which may be finite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import ContractError
from .evolution import EvolutionRun, boundary_limit
from .kernels import Convention, EquilibriumWeights
from .operators import GeneratorMatrix, RadialGrid, StateField

TAIL_FRACTION = 0.25
RATIO_TOL = 1e-3


@dataclass(frozen=True)
class NonlinearDriveConfig:
    C1: float = math.pi ** 2 / 3
    C2: float = 1.0
    qc0: float = 1.0

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0 and self.qc0 > 0):
            raise ContractError("C1, C2 and qc0 must be positive")


def equilibrium_cubic_moment(convention=Convention.SINH_X2) -> float:
    """``int_0^inf n0(x) x^3 dx = pi^2 / (48 c^2)`` for ``n0 = 1/(exp(2 c x^2) - 1)``."""
    c = Convention.parse(convention).scale
    return math.pi ** 2 / (48.0 * c * c)


def _moment_vector(weights: EquilibriumWeights, grid: RadialGrid) -> np.ndarray:
    # n0 (1 + n0) x^5 h_i
    return weights.w4 * weights.nodes * grid.weights


def nonlinear_drift(f, b: float, cfg: NonlinearDriveConfig, weights: EquilibriumWeights,
                    grid: RadialGrid) -> float:
    """``m~`` for one state and its boundary value ``b``."""
    if not np.isfinite(b):
        raise ContractError("b must be finite")
    vals = f.values if isinstance(f, StateField) else np.asarray(f, dtype=float)
    if vals.shape != grid.nodes.shape:
        raise ContractError("state and grid differ in length")
    moment = equilibrium_cubic_moment(weights.convention) + float(
        np.dot(_moment_vector(weights, grid), vals))
    return -cfg.C1 * (1.0 + b) ** 2 + cfg.C2 * moment


class Horizon(enum.Enum):
    FINITE = "FINITE"
    INFINITE = "INFINITE"
    UNDECIDED = "UNDECIDED"


@dataclass
class HorizonResult:
    Tstar: float
    classification: Horizon
    t_partial: float
    ratios: list = field(default_factory=list)
    diagnostics: str = ""
    tau: np.ndarray | None = field(default=None, repr=False)
    qc: np.ndarray | None = field(default=None, repr=False)
    mtilde: np.ndarray | None = field(default=None, repr=False)


def classify_horizon(tau, qc_tilde, tail_fraction: float = TAIL_FRACTION,
                     ratio_tol: float = RATIO_TOL) -> HorizonResult:
    """Decide whether ``int_0^inf dsigma / q~_c`` converges from sampled values.

    The last ``tail_fraction`` of the samples is cut into four equal pieces and
    the integrals ``I_1..I_4`` of ``1/q~_c`` over them are compared. Ratios all
    at least ``1 - ratio_tol`` mean the integrand does not decay (INFINITE).
    Ratios all below that, and not increasing, mean geometric decay (FINITE);
    the remainder is then summed as a geometric series with the last ratio.
    Anything else is UNDECIDED.
    """
    tau = np.asarray(tau, dtype=float)
    qc = np.asarray(qc_tilde, dtype=float)
    if tau.shape != qc.shape or tau.size < 17:
        raise ContractError("need matching tau/qc arrays with at least 17 samples")
    if np.any(~np.isfinite(qc)) or np.any(qc <= 0):
        raise ContractError("q~_c must be finite and positive")
    g = 1.0 / qc
    t = np.concatenate([[0.0], cumulative_trapezoid(g, tau)])
    t_end = float(t[-1])
    n_tail = max(int(round(tail_fraction * tau.size)), 9)
    idx = np.linspace(tau.size - 1 - 4 * ((n_tail - 1) // 4), tau.size - 1, 5).astype(int)
    # integrate each piece on its own so tiny tails are not lost against t_end
    pieces = np.array([trapezoid(g[a:b + 1], tau[a:b + 1]) for a, b in zip(idx[:-1], idx[1:])])
    if np.any(pieces <= 0):
        return HorizonResult(math.nan, Horizon.UNDECIDED, t_end, [],
                             "tail integrals not positive; q~_c out of range", tau, qc)
    r = pieces[1:] / pieces[:-1]
    ratios = [float(v) for v in r]
    diag = "tail ratios " + ", ".join(f"{v:.6g}" for v in ratios)
    if np.min(r) >= 1.0 - ratio_tol:
        return HorizonResult(math.inf, Horizon.INFINITE, t_end, ratios,
                             diag + "; integrand does not decay", tau, qc)
    if np.max(r) <= 1.0 - ratio_tol and r[-1] <= r[0] + ratio_tol:
        rest = pieces[-1] * r[-1] / (1.0 - r[-1])
        return HorizonResult(t_end + float(rest), Horizon.FINITE, t_end, ratios,
                             diag + f"; geometric remainder {rest:.6g}", tau, qc)
    return HorizonResult(math.nan, Horizon.UNDECIDED, t_end, ratios,
                         diag + "; ratios neither uniformly below nor above threshold", tau, qc)


def drift_history(run: EvolutionRun, cfg: NonlinearDriveConfig, A: GeneratorMatrix):
    """``(m~, b)`` at every stored state of ``run``."""
    grid, w = A.grid, A.weights
    b = np.array([boundary_limit(s, grid).value for s in run.states])
    base = equilibrium_cubic_moment(w.convention)
    moment = base + run.states @ _moment_vector(w, grid)
    return -cfg.C1 * (1.0 + b) ** 2 + cfg.C2 * moment, b


def horizon(run: EvolutionRun, cfg: NonlinearDriveConfig, A: GeneratorMatrix) -> HorizonResult:
    """Build ``q~_c`` from the run and classify its physical horizon."""
    mt, _ = drift_history(run, cfg, A)
    Mt = np.concatenate([[0.0], cumulative_trapezoid(mt, run.times)])
    qc = cfg.qc0 * np.exp(-Mt)
    if np.any(qc <= 0) or np.any(~np.isfinite(qc)):
        return HorizonResult(math.nan, Horizon.UNDECIDED, math.nan, [],
                             "q~_c underflowed or overflowed", run.times, qc, mt)
    res = classify_horizon(run.times, qc)
    res.mtilde = mt
    return res
