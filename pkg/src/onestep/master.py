"""Exact master-equation solutions, their moments, and the moment-hierarchy remainder."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from onestep._backend import kernels
from onestep.model import OneStepModel, per_state_rates
from onestep.ode import IntegrationError, IntegratorConfig, IvpProblem, TimeSeries, integrate

__all__ = [
    "MASTER_N_LIMIT",
    "MASTER_CONFIG",
    "MasterSizeError",
    "ProbabilityVector",
    "MasterSolution",
    "MomentSeries",
    "RemainderAudit",
    "master_rhs",
    "solve_master",
    "solve_master_from",
    "moments",
    "moment_series",
    "exact_moment_derivative",
    "remainder",
    "remainder_audit",
]

MASTER_N_LIMIT = 5000
# tail probabilities are tiny, so the absolute tolerance has to sit well below
# the 1e-12 nonnegativity allowance
MASTER_CONFIG = IntegratorConfig(rtol=1e-8, atol=1e-14)
SUM_TOL = 1e-9
NEG_TOL = 1e-12


class MasterSizeError(ValueError):
    """The state space is too large for a direct master-equation solve."""


def _as_p(p) -> np.ndarray:
    return np.asarray(p.p if isinstance(p, ProbabilityVector) else p, dtype=float)


@dataclass(frozen=True)
class ProbabilityVector:
    p: np.ndarray
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.p.size - 1

    def total(self) -> float:
        return math.fsum(self.p)


@dataclass
class MasterSolution:
    """Distributions ``P[g, k] = p_k(t_grid[g])``; iterates as ProbabilityVectors.

    ``P`` holds the integrator output as computed. ``raw_min`` records the
    most negative entry seen before read-out clamping.
    """

    t: np.ndarray
    P: np.ndarray
    raw_min: float

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, g: int) -> ProbabilityVector:
        return ProbabilityVector(self.P[g], float(self.t[g]))

    def __iter__(self) -> Iterator[ProbabilityVector]:
        return (self[g] for g in range(len(self)))

    @property
    def N(self) -> int:
        return self.P.shape[1] - 1

    def mass_defect(self) -> np.ndarray:
        return np.abs(self.P.sum(axis=1) - 1.0)


@dataclass
class MomentSeries:
    """``Y[g, n-1] = y_n(t_grid[g])`` for ``n = 1..n_max``."""

    t: np.ndarray
    Y: np.ndarray

    def __getitem__(self, n: int) -> np.ndarray:
        if n < 1 or n > self.Y.shape[1]:
            raise IndexError(f"moment order {n} not in 1..{self.Y.shape[1]}")
        return self.Y[:, n - 1]

    @property
    def n_max(self) -> int:
        return self.Y.shape[1]

    def as_timeseries(self) -> TimeSeries:
        return TimeSeries(self.t, {f"y{n}": self[n] for n in range(1, self.n_max + 1)})


def master_rhs(model: OneStepModel, p) -> np.ndarray:
    """Time derivative of the state distribution under the master equation (O(N))."""
    a, c = per_state_rates(model)
    p = _as_p(p)
    if p.size != model.N + 1:
        raise ValueError(f"p has length {p.size}, expected {model.N + 1}")
    return kernels.master_rhs(a, c, np.ascontiguousarray(p))


def solve_master(
    model: OneStepModel,
    initial_state: int,
    t_grid,
    config: IntegratorConfig | None = None,
    n_limit: int = MASTER_N_LIMIT,
) -> MasterSolution:
    """Solve the master equation from a point mass at ``initial_state``."""
    if not 0 <= initial_state <= model.N:
        raise ValueError(f"initial state {initial_state} outside 0..{model.N}")
    p0 = np.zeros(model.N + 1)
    p0[initial_state] = 1.0
    return solve_master_from(model, p0, t_grid, config, n_limit)


def solve_master_from(
    model: OneStepModel,
    p0,
    t_grid,
    config: IntegratorConfig | None = None,
    n_limit: int = MASTER_N_LIMIT,
) -> MasterSolution:
    """Solve the master equation from an arbitrary initial distribution ``p0``."""
    if model.N > n_limit:
        raise MasterSizeError(
            f"N={model.N} exceeds the master-equation limit {n_limit}; "
            "use the bounds solver or stochastic simulation instead"
        )
    p0 = _as_p(p0)
    if p0.size != model.N + 1:
        raise ValueError(f"p0 has length {p0.size}, expected {model.N + 1}")
    a, c = per_state_rates(model)
    rhs_kernel = kernels.master_rhs

    def rhs(t, p):
        return rhs_kernel(a, c, p)

    sol = integrate(IvpProblem(rhs, p0, t_grid), config or MASTER_CONFIG)
    P = sol.matrix()
    raw_min = float(P.min())
    if raw_min < -NEG_TOL:
        g, k = np.unravel_index(np.argmin(P), P.shape)
        raise IntegrationError(f"probability p_{k} went negative ({raw_min:.3g})", float(sol.t[g]))
    if abs(math.fsum(p0) - 1.0) <= SUM_TOL:
        defect = np.abs(P.sum(axis=1) - 1.0)
        g = int(np.argmax(defect))
        if defect[g] > SUM_TOL:
            raise IntegrationError(f"probability mass drifted by {defect[g]:.3g}", float(sol.t[g]))
    np.maximum(P, 0.0, out=P)
    return MasterSolution(sol.t, P, raw_min)


def moments(p, n_max: int) -> np.ndarray:
    """``y_n = sum_k (k/N)^n p_k`` for ``n = 1..n_max``."""
    p = np.maximum(_as_p(p), 0.0)
    x = np.arange(p.size) / (p.size - 1)
    out = np.empty(n_max)
    xn = np.ones_like(x)
    for n in range(n_max):
        xn = xn * x
        out[n] = np.dot(xn, p)
    return out


def moment_series(solution: MasterSolution, n_max: int) -> MomentSeries:
    x = np.arange(solution.N + 1) / solution.N
    powers = np.vstack([x ** n for n in range(1, n_max + 1)])
    return MomentSeries(solution.t, solution.P @ powers.T)


def exact_moment_derivative(model: OneStepModel, p, n: int) -> float:
    """Instantaneous ``dy_n/dt`` under the master dynamics, from the distribution ``p``."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    a, c = per_state_rates(model)
    p = _as_p(p)
    k = np.arange(model.N + 1, dtype=float)
    kn = k ** n
    w = a * ((k + 1) ** n - kn) + c * ((k - 1) ** n - kn)
    return float(np.dot(w, p)) / float(model.N) ** n


def remainder(model: OneStepModel, p, n: int) -> float:
    """Moment-hierarchy defect ``R_n = N (y_n' - n sum_j D_j y_{n+j-1})``; zero for ``n = 1``."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    if n == 1:
        return 0.0
    D = model.drift.D
    y = np.concatenate(([1.0], moments(p, n + len(D))))
    closure = n * math.fsum(Dj * y[n + j - 1] for j, Dj in enumerate(D))
    return model.N * (exact_moment_derivative(model, p, n) - closure)


@dataclass(frozen=True)
class RemainderAudit:
    n: int
    t: float
    value: float
    bound: float
    ok: bool


def remainder_audit(model: OneStepModel, p, n: int, tol: float = 1e-9) -> RemainderAudit:
    """Check ``0 <= R_n <= n(n-1)c/2`` (within ``tol``); reports instead of raising."""
    value = remainder(model, p, n)
    bound = n * (n - 1) * model.drift.c / 2
    t = p.t if isinstance(p, ProbabilityVector) else float("nan")
    return RemainderAudit(n, t, value, bound, -tol <= value <= bound + tol)
