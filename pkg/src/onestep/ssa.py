"""Gillespie (direct method) simulation of one-step processes.

Random numbers come from NumPy's PCG64. Run ``r`` of an ensemble with master
seed ``s`` uses ``PCG64(run_seed(s, r))``, where :func:`run_seed` is the
SplitMix64 finalizer applied to ``s + (r + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``.
Each event consumes two doubles in order: one for the waiting time and one
for the jump direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from onestep import _backend
from onestep._fallback import _Uniforms
from onestep.model import OneStepModel, per_state_rates

__all__ = ["SamplePath", "SsaEnsembleResult", "run_seed", "simulate_path", "estimate_mean"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def run_seed(master_seed: int, index: int) -> int:
    """Per-run 64-bit seed: SplitMix64 of ``master_seed + (index + 1) * golden``."""
    z = (master_seed + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SamplePath:
    """Piecewise-constant path: ``states[i]`` holds on ``[times[i], times[i+1])``."""

    times: np.ndarray
    states: np.ndarray
    T: float

    def at(self, t):
        """State at time(s) ``t``, right-continuous."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.states[idx]


def simulate_path(model: OneStepModel, initial_state: int, T: float, seed: int) -> SamplePath:
    """One direct-method path on ``[0, T]``, stopped early if absorbed.

    Draws the same random stream as the ensemble kernels, so sampling this
    path on a grid reproduces the corresponding ensemble run exactly.
    """
    if not 0 <= initial_state <= model.N:
        raise ValueError(f"initial state {initial_state} outside 0..{model.N}")
    a, c = per_state_rates(model)
    a, c = a.tolist(), c.tolist()
    draw = _Uniforms(seed)
    k, t = initial_state, 0.0
    times, states = [0.0], [k]
    while True:
        total = a[k] + c[k]
        if total <= 0.0:
            break
        t_next = t - math.log1p(-draw()) / total
        if t_next > T:
            break
        k += 1 if draw() * total < a[k] else -1
        assert 0 <= k <= model.N, "path left the state space"
        t = t_next
        times.append(t)
        states.append(k)
    return SamplePath(np.array(times), np.array(states, dtype=np.int64), float(T))


@dataclass(frozen=True)
class SsaEnsembleResult:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int
    master_seed: int
    backend: str


def estimate_mean(
    model: OneStepModel,
    initial_state: int,
    t_grid,
    n_runs: int,
    master_seed: int,
    kernels=None,
) -> SsaEnsembleResult:
    """Monte Carlo estimate of ``E[X(t)/N]`` with its standard error on ``t_grid``.

    The result is bit-reproducible for fixed inputs and does not depend on
    which kernel backend runs it. ``kernels`` overrides the backend module.
    """
    if n_runs < 2:
        raise ValueError("n_runs must be at least 2")
    if not 0 <= initial_state <= model.N:
        raise ValueError(f"initial state {initial_state} outside 0..{model.N}")
    if n_runs * model.N**2 >= 2**63:
        raise ValueError("n_runs * N**2 overflows the exact int64 accumulators")
    master_seed = int(master_seed) & _MASK
    kern = kernels or _backend.kernels
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    a, c = per_state_rates(model)
    seeds = [run_seed(master_seed, r) for r in range(n_runs)]
    s1, s2 = kern.ssa_ensemble(a, c, initial_state, t_grid, seeds)

    R, N = n_runs, model.N
    mean = np.array([int(v) for v in s1], dtype=float) / (R * N)
    # exact integer arithmetic for the sample variance numerator
    num = [R * int(b) - int(a_) ** 2 for a_, b in zip(s1, s2)]
    var = np.array([n / (R * (R - 1) * N * N) for n in num], dtype=float)
    stderr = np.sqrt(np.maximum(var, 0.0) / R)
    name = "cython" if kern.__name__.endswith("_ext") else "python"
    return SsaEnsembleResult(t_grid, mean, stderr, n_runs, master_seed, name)
