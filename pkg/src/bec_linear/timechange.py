"""From rescaled time back to physical time.

``t(tau) = int_0^tau dsigma / q_c(sigma)``; the physical pair is
``u(t) = f(tau(t))``, ``p_c(t) = q_c(tau(t))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ContractError, RangeError
from .evolution import EvolutionRun
from .observables import ObservableSeries
from .operators import StateField


@dataclass(frozen=True)
class TimeMap:
    tau: np.ndarray
    t: np.ndarray
    qc: np.ndarray

    @property
    def t_end(self) -> float:
        return float(self.t[-1])


def build_map(series: ObservableSeries | None = None, *, tau=None, qc=None) -> TimeMap:
    """Build ``t(tau)`` by the trapezoid rule on ``1/q_c``.

    Either pass an ``ObservableSeries`` or explicit ``tau``/``qc`` arrays.
    """
    if series is not None:
        tau, qc = series.tau, series.qc
    tau = np.asarray(tau, dtype=float)
    qc = np.asarray(qc, dtype=float)
    if tau.shape != qc.shape or tau.ndim != 1 or tau.size < 2:
        raise ContractError("tau and qc must be matching 1-d arrays of length >= 2")
    if not np.all(np.isfinite(qc)) or np.any(qc <= 0):
        raise ContractError("qc must be finite and positive")
    if tau[0] != 0 or np.any(np.diff(tau) <= 0):
        raise ContractError("tau must start at 0 and increase strictly")
    t = np.concatenate([[0.0], cumulative_trapezoid(1.0 / qc, tau)])
    if np.any(np.diff(t) <= 0):
        raise ContractError("t(tau) lost strict monotonicity")
    return TimeMap(tau=tau, t=t, qc=qc)


def tau_of_t(tmap: TimeMap, t_query):
    """Inverse of the piecewise-linear ``t(tau)``."""
    tq = np.asarray(t_query, dtype=float)
    if np.any(tq < 0):
        raise RangeError("t_query must be nonnegative")
    if np.any(tq > tmap.t_end * (1 + 1e-14)):
        raise RangeError(f"t_query beyond the available horizon t_end = {tmap.t_end:.6g}")
    out = np.interp(tq, tmap.t, tmap.tau)
    return float(out) if out.ndim == 0 else out


def t_of_tau(tmap: TimeMap, tau_query):
    out = np.interp(np.asarray(tau_query, dtype=float), tmap.tau, tmap.t)
    return float(out) if np.ndim(out) == 0 else out


def physical_solution(run: EvolutionRun, tmap: TimeMap, t_query: float) -> tuple[StateField, float]:
    """``(u(t), p_c(t))`` by linear interpolation between stored states."""
    if run.times.shape != tmap.tau.shape or not np.allclose(run.times, tmap.tau):
        raise ContractError("time map and run use different tau samples")
    tau = tau_of_t(tmap, t_query)
    k = int(np.clip(np.searchsorted(run.times, tau, side="right") - 1, 0, run.times.size - 2))
    t0, t1 = run.times[k], run.times[k + 1]
    a = (tau - t0) / (t1 - t0)
    u = (1 - a) * run.states[k] + a * run.states[k + 1]
    pc = float(np.interp(tau, tmap.tau, tmap.qc))
    return StateField(u, run.theta), pc
