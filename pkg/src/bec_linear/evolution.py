"""Time integration of ``df/dtau = calL f`` in the rescaled time."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ContractError, NumericalFailure, StepSizeError
from .operators import GeneratorMatrix, RadialGrid, StateField

log = logging.getLogger(__name__)

RK4_STABILITY = 2.7
ENERGY_STARTUP_TOL = 1e-13
B_EXPONENT_DELTA = 0.05


class Method(enum.Enum):
    CRANK_NICOLSON = "CRANK_NICOLSON"
    RK4 = "RK4"

    @classmethod
    def parse(cls, value) -> "Method":
        return value if isinstance(value, cls) else cls(str(value).upper())


def spectral_radius_bound(A: GeneratorMatrix) -> float:
    """Gershgorin bound ``2 max |A_ii|`` (rows of ``A`` sum to zero)."""
    return 2.0 * float(np.max(np.abs(np.diag(A.entries))))


def monotone_dt(A: GeneratorMatrix) -> float:
    """Largest Crank-Nicolson step whose propagator is entrywise nonnegative.

    ``(I - dt/2 A)^{-1}`` is always nonnegative; ``I + dt/2 A`` is once
    ``dt max|A_ii| <= 2``. Below this step the scheme keeps the maximum
    principle and the order of data.
    """
    return 2.0 / float(np.max(np.abs(np.diag(A.entries))))


class _CNFactor:
    """Reusable LU of ``I - dt/2 A`` for a fixed step."""

    def __init__(self, A: GeneratorMatrix, dt: float):
        n = A.grid.n
        self.dt = dt
        self.rhs = np.eye(n) + 0.5 * dt * A.entries
        self.lu = lu_factor(np.eye(n) - 0.5 * dt * A.entries)

    def __call__(self, f):
        return lu_solve(self.lu, self.rhs @ f)


_cn_cache: dict = {}


def _cn_factor(A: GeneratorMatrix, dt: float) -> _CNFactor:
    key = (id(A), dt)
    hit = _cn_cache.get(key)
    if hit is not None and hit[0] is A:
        return hit[1]
    if len(_cn_cache) > 8:
        _cn_cache.clear()
    fac = _CNFactor(A, dt)
    _cn_cache[key] = (A, fac)
    return fac


def _rk4(A: GeneratorMatrix, f, dt):
    k1 = A.matvec(f)
    k2 = A.matvec(f + 0.5 * dt * k1)
    k3 = A.matvec(f + 0.5 * dt * k2)
    k4 = A.matvec(f + dt * k3)
    return f + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step(f, A: GeneratorMatrix, dt: float, method=Method.CRANK_NICOLSON) -> StateField:
    """Advance one step of size ``dt``."""
    method = Method.parse(method)
    if dt <= 0:
        raise ContractError("dt must be positive")
    vals = f.values if isinstance(f, StateField) else np.asarray(f, dtype=float)
    theta = f.theta if isinstance(f, StateField) else 0.5
    if method is Method.CRANK_NICOLSON:
        out = _cn_factor(A, dt)(vals)
    else:
        limit = RK4_STABILITY / spectral_radius_bound(A)
        if dt > limit:
            raise StepSizeError(f"RK4 step {dt:g} above stability bound {limit:g}")
        out = _rk4(A, vals, dt)
        e = A.energy_vector
        if np.dot(e, out * out) > np.dot(e, vals * vals) * (1 + 1e-10) + 1e-300:
            raise StepSizeError("RK4 step increased the L2(dmu) norm")
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite state after step")
    return StateField(out, theta)


@dataclass
class Schedule:
    tau_end: float
    dt: float = 0.01
    method: Method = Method.CRANK_NICOLSON
    store_every: int = 1
    monotone: bool = False
    check_energy: bool = True


@dataclass
class EvolutionRun:
    times: np.ndarray
    states: np.ndarray
    method: Method
    dt: float
    t_end: float
    grid: RadialGrid = field(repr=False)
    theta: float = 0.5

    def state(self, k: int) -> StateField:
        return StateField(self.states[k], self.theta)

    @property
    def final(self) -> StateField:
        return self.state(-1)


def _startup_dt(f0, A, dt, method):
    """Halve ``dt`` until one step keeps the discrete energy to ENERGY_STARTUP_TOL."""
    e = A.energy_vector
    E0 = float(np.dot(e, f0))
    scale = max(abs(E0), float(np.dot(e, np.abs(f0))), 1e-300)
    for _ in range(30):
        try:
            f1 = step(f0, A, dt, method).values
        except StepSizeError:
            dt *= 0.5
            continue
        if abs(float(np.dot(e, f1)) - E0) <= ENERGY_STARTUP_TOL * scale:
            return dt
        dt *= 0.5
    raise NumericalFailure("could not find a step size conserving energy")


def run(f0, A: GeneratorMatrix, schedule: Schedule) -> EvolutionRun:
    """Integrate from ``f0`` to ``schedule.tau_end``."""
    method = Method.parse(schedule.method)
    vals = f0.values if isinstance(f0, StateField) else np.asarray(f0, dtype=float)
    theta = f0.theta if isinstance(f0, StateField) else 0.5
    if vals.shape != (A.grid.n,):
        raise ContractError("initial state does not match the generator grid")
    if not np.isfinite(StateField(vals, theta).theta_norm(A.grid)):
        raise ContractError("initial datum has infinite theta-norm")
    if schedule.tau_end <= 0:
        raise ContractError("tau_end must be positive")
    dt = min(schedule.dt, schedule.tau_end)
    if schedule.monotone:
        dt = min(dt, monotone_dt(A))
    if schedule.check_energy:
        dt = _startup_dt(vals, A, dt, method)
    nsteps = int(np.ceil(schedule.tau_end / dt - 1e-9))
    dt = schedule.tau_end / nsteps
    if schedule.monotone:
        assert dt <= monotone_dt(A)
    log.debug("run: %d steps of %g (%s)", nsteps, dt, method.value)

    every = max(1, int(schedule.store_every))
    keep = list(range(0, nsteps + 1, every))
    if keep[-1] != nsteps:
        keep.append(nsteps)
    states = np.empty((len(keep), vals.size))
    times = np.empty(len(keep))
    states[0] = vals
    times[0] = 0.0
    f = vals.copy()
    slot = 1
    advance = _cn_factor(A, dt) if method is Method.CRANK_NICOLSON else None
    for k in range(1, nsteps + 1):
        if advance is not None:
            f = advance(f)
            if not np.all(np.isfinite(f)):
                raise NumericalFailure(f"non-finite state at step {k}")
        else:
            f = step(f, A, dt, method).values
        if slot < len(keep) and keep[slot] == k:
            states[slot] = f
            times[slot] = k * dt
            slot += 1
    return EvolutionRun(times=times, states=states, method=method, dt=dt,
                        t_end=float(times[-1]), grid=A.grid, theta=theta)


class BoundaryEstimate(NamedTuple):
    value: float
    error: float
    confident: bool


def boundary_limit(f, grid: RadialGrid, delta: float = B_EXPONENT_DELTA) -> BoundaryEstimate:
    """Extrapolate ``f`` to ``x = 0`` from the three smallest nodes.

    Polynomial in ``xi = x^(1-delta)``. ``error`` is the gap between the
    quadratic and linear extrapolants; ``confident`` is False when that
    gap does not shrink relative to the linear-vs-constant gap.
    """
    vals = f.values if isinstance(f, StateField) else np.asarray(f, dtype=float)
    x = grid.nodes
    if np.count_nonzero(x < 0.1) < 4:
        raise ContractError("boundary_limit needs at least 4 nodes below x = 0.1")
    xi = x[:3] ** (1.0 - delta)
    fv = vals[:3]
    b1 = fv[0]
    b2 = fv[0] - xi[0] * (fv[1] - fv[0]) / (xi[1] - xi[0])
    # Lagrange value at xi = 0
    l0 = xi[1] * xi[2] / ((xi[0] - xi[1]) * (xi[0] - xi[2]))
    l1 = xi[0] * xi[2] / ((xi[1] - xi[0]) * (xi[1] - xi[2]))
    l2 = xi[0] * xi[1] / ((xi[2] - xi[0]) * (xi[2] - xi[1]))
    b3 = l0 * fv[0] + l1 * fv[1] + l2 * fv[2]
    err = abs(b3 - b2)
    confident = err <= abs(b2 - b1) or err < 1e-14 * max(1.0, abs(b3))
    return BoundaryEstimate(float(b3), float(err), bool(confident))
