"""Mean-field upper bound, z-system lower bound and the heuristic variants.

Under the sign condition (``D_0 >= 0``, ``D_j <= 0`` for ``j >= 2``) the
expected density ``y_1(t) = E[X(t)/N]`` satisfies ``z_1(t) <= y_1(t) <= y(t)``
where ``y`` solves the mean-field equation ``y' = sum_j D_j y^j`` and ``z``
solves

    z_1' = sum_j D_j z_j                                    (z_0 = 1)
    z_n' = n sum_j D_j z_n^((n+j-1)/n) + n(n-1) c / (2N)    (n = 2..m)

with ``z_1(0) = u`` and ``z_n(0) = u^n``. The q- and Cauchy-Schwarz variants
(quadratic models only) are heuristic: they look like tighter lower bounds
numerically but carry no guarantee.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from onestep.model import DriftCoefficients
from onestep.ode import IntegratorConfig, IvpProblem, TimeSeries, integrate

__all__ = [
    "SignConditionError",
    "UnsupportedDegreeError",
    "BoundsResult",
    "CS_FLOOR",
    "mean_field_rhs",
    "solve_mean_field",
    "z_system_rhs",
    "power_system_rhs",
    "solve_bounds",
    "solve_q_variant",
    "solve_cs_variant",
    "q_variant_rhs",
    "cs_variant_rhs",
]

# smallest z_1 used in the z_2^2/z_1 division; below ~1e-8 a collapsed z_1 makes
# the system too stiff for an explicit integrator
CS_FLOOR = 1e-8


class SignConditionError(ValueError):
    """The drift coefficients violate the sign condition the bounds rely on."""


class UnsupportedDegreeError(ValueError):
    """A variant defined only for quadratic rate polynomials was given another degree."""


def _coeffs(D) -> tuple[float, ...]:
    return tuple(D.D) if isinstance(D, DriftCoefficients) else tuple(float(v) for v in D)


def _ppow(x: float, alpha: float) -> float:
    # the exact solution stays positive; clamp only guards integrator undershoot
    return max(x, 0.0) ** alpha


def _inv_n(N) -> float:
    return 0.0 if N is None or math.isinf(N) else 1.0 / N


def mean_field_rhs(D, y: float) -> float:
    """``sum_j D_j y^j`` by Horner's scheme."""
    out = 0.0
    for d in reversed(_coeffs(D)):
        out = out * y + d
    return out


def z_system_rhs(D, c: float, N, z: Sequence[float]) -> np.ndarray:
    """Right-hand side of the z-system for ``z = (z_1, ..., z_m)``.

    ``N=None`` or ``math.inf`` drops the ``c/N`` source, which turns the
    ``n >= 2`` equations into the power system for ``y^n``.
    """
    D = _coeffs(D)
    m = len(D) - 1
    z = np.asarray(z, dtype=float)
    if z.size != max(m, 1):
        raise ValueError(f"z has length {z.size}, expected {max(m, 1)}")
    out = np.empty(z.size)
    # z_0 = 1
    out[0] = D[0] + sum(D[j] * z[j - 1] for j in range(1, m + 1))
    source = c * _inv_n(N)
    for n in range(2, m + 1):
        zn = z[n - 1]
        drift = sum(Dj * _ppow(zn, (n + j - 1) / n) for j, Dj in enumerate(D))
        out[n - 1] = n * drift + n * (n - 1) / 2 * source
    return out


def power_system_rhs(D, y_pow: Sequence[float]) -> np.ndarray:
    """Right-hand side for ``(y, y^2, ..., y^m)``: the z-system at ``1/N = 0``
    except that the first equation is the nonlinear mean-field one."""
    out = z_system_rhs(D, 0.0, None, y_pow)
    out[0] = mean_field_rhs(D, y_pow[0])
    return out


def _check_u(u: float):
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"initial density u={u!r} outside [0, 1]")


def solve_mean_field(D, u: float, t_grid, config: IntegratorConfig | None = None) -> TimeSeries:
    """Integrate ``y' = sum_j D_j y^j`` from ``y(0) = u``; channel ``y``."""
    _check_u(u)
    coeffs = _coeffs(D)
    sol = integrate(IvpProblem(lambda t, x: [mean_field_rhs(coeffs, x[0])], [u], t_grid), config)
    return TimeSeries(sol.t, {"y": sol["x0"]})


def q_variant_rhs(D, c: float, N, q: float, z1: float, z2: float) -> tuple[float, float]:
    """q-interpolated z-system: the ``D_2 z_2`` term becomes ``D_2 z_2^(q/2) z_1^(2-q)``.

    ``q = 2`` is the z-system, ``q = 0`` makes the first equation the mean-field one.
    """
    D = _coeffs(D)
    if len(D) != 3:
        raise UnsupportedDegreeError(f"q-variant needs a quadratic model, got degree {len(D) - 1}")
    if not 0.0 <= q <= 2.0:
        raise ValueError(f"q={q!r} outside [0, 2]")
    D0, D1, D2 = D
    dz1 = D0 + D1 * z1 + D2 * _ppow(z2, q / 2) * _ppow(z1, 2 - q)
    dz2 = 2 * D0 * _ppow(z2, 0.5) + 2 * D1 * z2 + 2 * D2 * _ppow(z2, 1.5) + c * _inv_n(N)
    return dz1, dz2


def cs_variant_rhs(D, c: float, N, z1: float, z2: float) -> tuple[float, float]:
    """Cauchy-Schwarz variant: ``z_2^(3/2)`` replaced by ``z_2^2 / z_1`` (``z_1`` floored at ``CS_FLOOR``)."""
    D = _coeffs(D)
    if len(D) != 3:
        raise UnsupportedDegreeError(f"CS variant needs a quadratic model, got degree {len(D) - 1}")
    D0, D1, D2 = D
    dz1 = D0 + D1 * z1 + D2 * z2
    dz2 = 2 * D0 * _ppow(z2, 0.5) + 2 * D1 * z2 + 2 * D2 * z2 * z2 / max(z1, CS_FLOOR) + c * _inv_n(N)
    return dz1, dz2


def _q_label(q: float) -> str:
    return f"q{q:g}_z1"


@dataclass
class BoundsResult:
    """Trajectories on a shared grid.

    ``y`` is the mean-field upper bound and ``z[0]`` (= ``z_1``) the lower
    bound; ``z[n-1]`` bounds the n-th moment from above. ``variants`` holds
    the heuristic q/CS lower-bound candidates keyed ``q{q}_z1`` and ``cs_z1``.
    """

    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    y_pow: np.ndarray | None = None
    variants: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def z1(self) -> np.ndarray:
        return self.z[0]

    def gap(self) -> np.ndarray:
        return self.y - self.z[0]

    def as_timeseries(self) -> TimeSeries:
        channels = {"y": self.y}
        channels.update({f"z{n + 1}": zn for n, zn in enumerate(self.z)})
        channels.update(self.variants)
        return TimeSeries(self.t, channels)


def _solve_pair(rhs, u: float, t_grid, config) -> np.ndarray:
    sol = integrate(IvpProblem(lambda t, x: rhs(x[0], x[1]), [u, u * u], t_grid), config)
    return sol["x0"]


def solve_q_variant(drift: DriftCoefficients, N, u: float, q: float, t_grid, config=None) -> np.ndarray:
    """``z_1`` of the q-variant (heuristic lower-bound candidate)."""
    D, c = _coeffs(drift), drift.c
    return _solve_pair(lambda z1, z2: q_variant_rhs(D, c, N, q, z1, z2), u, t_grid, config)


def solve_cs_variant(drift: DriftCoefficients, N, u: float, t_grid, config=None) -> np.ndarray:
    """``z_1`` of the Cauchy-Schwarz variant (heuristic lower-bound candidate)."""
    D, c = _coeffs(drift), drift.c
    return _solve_pair(lambda z1, z2: cs_variant_rhs(D, c, N, z1, z2), u, t_grid, config)


def solve_bounds(
    drift: DriftCoefficients,
    N,
    u: float,
    t_grid,
    config: IntegratorConfig | None = None,
    *,
    q_values: Sequence[float] = (),
    cs: bool = False,
    powers: bool = False,
) -> BoundsResult:
    """Solve the mean-field equation and the z-system jointly on ``t_grid``.

    Parameters
    ----------
    drift
        Drift coefficients of the model; must satisfy the sign condition.
    N
        System size. ``None`` or ``math.inf`` removes the ``c/N`` source term.
    u
        Initial density ``i/N``. ``u = 0`` is accepted but voids the
        guarantee (recorded as ``metadata["guarantee_void"]``).
    q_values, cs
        Heuristic variants to add (quadratic models only).
    powers
        Also integrate the power system ``(y^2, ..., y^m)``.

    Raises
    ------
    SignConditionError
        If the sign condition fails; relabelling the states with
        :func:`onestep.model.flip_states` may restore it.
    """
    if not drift.sign_ok:
        raise SignConditionError(
            f"sign condition violated for D={drift.D}: need D_0 >= 0 and D_j <= 0 for j >= 2; "
            "try flip_states() to swap the state labels"
        )
    _check_u(u)
    cfg = config or IntegratorConfig()
    D, c = _coeffs(drift), drift.c
    m = max(len(D) - 1, 1)

    def rhs(t, x):
        out = np.empty(m + 1)
        out[0] = mean_field_rhs(D, x[0])
        out[1:] = z_system_rhs(D, c, N, x[1:])
        return out

    x0 = [u] + [u ** n for n in range(1, m + 1)]
    sol = integrate(IvpProblem(rhs, x0, t_grid), cfg).matrix()
    result = BoundsResult(
        t=np.asarray(t_grid, dtype=float),
        y=sol[:, 0].copy(),
        z=sol[:, 1:].T.copy(),
        metadata={
            "N": None if N is None or math.isinf(N) else N,
            "u": u,
            "D": list(D),
            "c": c,
            "rtol": cfg.rtol,
            "atol": cfg.atol,
            "guarantee_void": u == 0.0,
        },
    )
    if u == 0.0:
        warnings.warn("u = 0: the bracketing guarantee requires u > 0", stacklevel=2)
    if powers:
        psol = integrate(IvpProblem(lambda t, x: power_system_rhs(D, x), x0[1:], t_grid), cfg).matrix()
        result.y_pow = psol.T.copy()
    if q_values or cs:
        if len(D) != 3:
            raise UnsupportedDegreeError("q and CS variants need a quadratic model")
        result.metadata["heuristic"] = []
    for q in q_values:
        key = _q_label(q)
        result.variants[key] = solve_q_variant(drift, N, u, q, t_grid, cfg)
        result.metadata["heuristic"].append(key)
    if cs:
        result.variants["cs_z1"] = solve_cs_variant(drift, N, u, t_grid, cfg)
        result.metadata["heuristic"].append("cs_z1")
    return result
