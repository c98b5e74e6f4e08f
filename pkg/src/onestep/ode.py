"""Initial value problem integration on a prescribed output grid.

The adaptive integrator is the Dormand-Prince 5(4) embedded pair with
local extrapolation and proportional step-size control. Grid values are never
interpolated: the integrator always lands exactly on each requested time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "IntegrationError",
    "IvpProblem",
    "IntegratorConfig",
    "TimeSeries",
    "integrate",
    "integrate_fixed",
]

Rhs = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    """Integration could not proceed; ``last_t`` is the last accepted time."""

    def __init__(self, message: str, last_t: float):
        super().__init__(f"{message} (last good t={last_t!r})")
        self.last_t = last_t


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 10**7
    initial_step: float | None = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")


@dataclass
class IvpProblem:
    rhs: Rhs
    x0: np.ndarray
    t_grid: np.ndarray

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float)).copy()
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if self.x0.ndim != 1:
            raise ValueError("x0 must be a vector")
        t = self.t_grid
        if t.ndim != 1 or t.size < 1 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing and start at 0")

    @property
    def dimension(self) -> int:
        return self.x0.size


@dataclass
class TimeSeries:
    """A time grid with named value channels, each an array aligned with ``t``."""

    t: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    @classmethod
    def from_matrix(cls, t, X: np.ndarray, names: Sequence[str] | None = None) -> "TimeSeries":
        if names is None:
            names = [f"x{i}" for i in range(X.shape[1])]
        return cls(np.asarray(t), {n: X[:, i].copy() for i, n in enumerate(names)})

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.names if names is None else names
        return np.column_stack([self.channels[n] for n in names])

    def merged(self, other: "TimeSeries | Mapping[str, np.ndarray]") -> "TimeSeries":
        extra = other.channels if isinstance(other, TimeSeries) else other
        if isinstance(other, TimeSeries) and not np.array_equal(other.t, self.t):
            raise ValueError("cannot merge series on different grids")
        return TimeSeries(self.t, {**self.channels, **extra})


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
# 5th minus 4th order weights
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _eval(rhs: Rhs, t: float, x: np.ndarray) -> np.ndarray:
    f = np.asarray(rhs(t, x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("right-hand side returned a non-finite value", t)
    return f


def _rms(v: np.ndarray) -> float:
    return math.sqrt(float(np.dot(v, v)) / v.size)


def _initial_step(rhs, t0, x0, f0, rtol, atol, span) -> float:
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
    scale = atol + rtol * np.abs(x0)
    d0 = _rms(x0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = _eval(rhs, t0 + h0, x0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate(problem: IvpProblem, config: IntegratorConfig | None = None) -> TimeSeries:
    """Integrate ``problem`` adaptively and report the state at every grid time.

    Returns a :class:`TimeSeries` with channels ``x0, x1, ...`` (one per state
    component). Raises :class:`IntegrationError` on step underflow, on
    exceeding ``config.max_steps`` or on a non-finite right-hand side.
    """
    cfg = config or IntegratorConfig()
    rhs, grid = problem.rhs, problem.t_grid
    rtol, atol = cfg.rtol, cfg.atol
    out = np.empty((grid.size, problem.dimension))
    x = problem.x0.copy()
    out[0] = x
    if grid.size == 1:
        return TimeSeries.from_matrix(grid, out)

    t = 0.0
    f = _eval(rhs, t, x)
    h = cfg.initial_step or _initial_step(rhs, t, x, f, rtol, atol, grid[-1])
    K = np.empty((7, problem.dimension))
    steps = 0
    rejected = False
    for g in range(1, grid.size):
        target = grid[g]
        while t < target:
            if steps >= cfg.max_steps:
                raise IntegrationError(f"exceeded max_steps={cfg.max_steps}", t)
            remaining = target - t
            landing = h >= remaining * (1 - 1e-12)
            h_try = remaining if landing else h
            if h_try < 16 * np.finfo(float).eps * max(abs(t), 1.0):
                raise IntegrationError("step size underflow", t)

            K[0] = f
            for s in range(1, 7):
                dx = np.dot(_A[s], K[:s]) if s > 1 else _A[1][0] * K[0]
                K[s] = _eval(rhs, t + _C[s] * h_try, x + h_try * dx)
            x_new = x + h_try * np.dot(_B[:6], K[:6])
            err = h_try * np.dot(_E, K)
            scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = _rms(err / scale)
            steps += 1

            if err_norm <= 1.0:
                t = target if landing else t + h_try
                x = x_new
                f = K[6].copy()
                factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
                if rejected:
                    factor = min(factor, 1.0)
                rejected = False
                # a short landing step says nothing about the unclipped step size
                h = max(h, h_try * factor) if landing else h_try * factor
            else:
                h = h_try * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
                rejected = True
        out[g] = x
    return TimeSeries.from_matrix(grid, out)


def integrate_fixed(problem: IvpProblem, step: float) -> TimeSeries:
    """Classical fixed-step RK4; a cross-check oracle for :func:`integrate`.

    Each grid interval is split into ``ceil(length / step)`` equal substeps so
    that grid times are hit exactly.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    rhs, grid = problem.rhs, problem.t_grid
    out = np.empty((grid.size, problem.dimension))
    x = problem.x0.copy()
    out[0] = x
    for g in range(1, grid.size):
        t0, t1 = grid[g - 1], grid[g]
        n = max(1, math.ceil((t1 - t0) / step - 1e-9))
        h = (t1 - t0) / n
        for i in range(n):
            t = t0 + i * h
            k1 = _eval(rhs, t, x)
            k2 = _eval(rhs, t + h / 2, x + h / 2 * k1)
            k3 = _eval(rhs, t + h / 2, x + h / 2 * k2)
            k4 = _eval(rhs, t + h, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[g] = x
    return TimeSeries.from_matrix(grid, out)
