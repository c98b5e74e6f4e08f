"""One-step (birth-death) process models with density-dependent polynomial rates.

A model on states ``0..N`` is fixed by two polynomials ``A`` and ``C`` in the
density ``x = k/N``; the up and down rates out of state ``k`` are
``a_k = N A(k/N)`` and ``c_k = N C(k/N)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "ModelError",
    "DensityRatePolynomial",
    "OneStepModel",
    "DriftCoefficients",
    "build_sis_model",
    "build_voter_model",
    "drift_coefficients",
    "flip_states",
    "per_state_rates",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

COEF_TOL = 1e-12
RATE_TOL = 1e-12
# states per chunk when checking rate nonnegativity on very large grids
_CHECK_CHUNK = 1 << 20


class ModelError(ValueError):
    """Raised for an invalid model definition or instantiation."""


def _horner(coefs: Sequence[float], x):
    out = np.zeros_like(x, dtype=float) if isinstance(x, np.ndarray) else 0.0
    for a in reversed(coefs):
        out = out * x + a
    return out


def _reflect(coefs: Sequence[float]) -> list[float]:
    """Coefficients of ``P(1 - x)`` given those of ``P(x)``."""
    out = [0.0] * len(coefs)
    for j, pj in enumerate(coefs):
        for i in range(j + 1):
            out[i] += pj * math.comb(j, i) * (-1) ** i
    return out


@dataclass(frozen=True)
class DensityRatePolynomial:
    """Pair of rate polynomials ``A(x) = sum A_j x^j`` and ``C(x) = sum C_j x^j``.

    Both coefficient lists are padded to a common degree ``m``. ``A(1) = 0``
    (to within 1e-12) and ``C(0) = 0`` are enforced.
    """

    A: tuple[float, ...]
    C: tuple[float, ...]

    def __post_init__(self):
        A = [float(v) for v in self.A]
        C = [float(v) for v in self.C]
        if not A or not C:
            raise ModelError("rate polynomials need at least one coefficient")
        if not all(math.isfinite(v) for v in A + C):
            raise ModelError("rate coefficients must be finite")
        m = max(len(A), len(C))
        A += [0.0] * (m - len(A))
        C += [0.0] * (m - len(C))
        # trailing zero coefficients are kept: degree follows the input
        if abs(math.fsum(A)) > COEF_TOL:
            raise ModelError(f"A(1) must vanish, got {math.fsum(A)!r}")
        if C[0] != 0.0:
            raise ModelError(f"C(0) must vanish, got {C[0]!r}")
        object.__setattr__(self, "A", tuple(A))
        object.__setattr__(self, "C", tuple(C))

    @property
    def degree(self) -> int:
        return len(self.A) - 1

    def birth(self, x):
        return _horner(self.A, x)

    def death(self, x):
        return _horner(self.C, x)


@dataclass(frozen=True)
class DriftCoefficients:
    """Drift ``D_j = A_j - C_j``, the constant ``c`` and the sign-condition verdict."""

    D: tuple[float, ...]
    c: float
    sign_ok: bool
    D_sum: float

    @property
    def degree(self) -> int:
        return len(self.D) - 1


@dataclass(frozen=True)
class OneStepModel:
    """A birth-death chain on ``{0, ..., N}`` with density-dependent rates.

    Construction checks that ``A(k/N) >= 0`` and ``C(k/N) >= 0`` on the grid
    ``k = 0..N`` (with a 1e-12 allowance for rounding).
    """

    N: int
    rates: DensityRatePolynomial
    label: str = "model"

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ModelError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        self._check_grid_rates()

    def _check_grid_rates(self):
        N = self.N
        for start in range(0, N + 1, _CHECK_CHUNK):
            x = np.arange(start, min(N + 1, start + _CHECK_CHUNK), dtype=float) / N
            A = self.rates.birth(x)
            C = self.rates.death(x)
            # A(1) and C(0) are zero by construction; only interior values count
            A = np.where(x < 1.0, A, 0.0)
            C = np.where(x > 0.0, C, 0.0)
            for name, vals in (("birth", A), ("death", C)):
                if vals.min() < -RATE_TOL:
                    k = start + int(np.argmin(vals))
                    raise ModelError(f"negative {name} rate at k={k}: density value {vals.min():g}")

    @property
    def degree(self) -> int:
        return self.rates.degree

    @cached_property
    def drift(self) -> DriftCoefficients:
        return drift_coefficients(self.rates)

    @cached_property
    def _rates(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.N + 1, dtype=float) / self.N
        a = self.N * np.maximum(self.rates.birth(x), 0.0)
        c = self.N * np.maximum(self.rates.death(x), 0.0)
        a[-1] = 0.0
        c[0] = 0.0
        a.flags.writeable = False
        c.flags.writeable = False
        return a, c


def per_state_rates(model: OneStepModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-state rates ``(a, c)``, each of length ``N + 1``.

    ``a_N`` and ``c_0`` are forced to zero and rounding negatives are clamped.
    The returned arrays are read-only and cached on the model.
    """
    return model._rates


def drift_coefficients(rates: DensityRatePolynomial) -> DriftCoefficients:
    D = tuple(a - c for a, c in zip(rates.A, rates.C))
    c = math.fsum(abs(v) for v in rates.A + rates.C)
    sign_ok = D[0] >= 0.0 and all(d <= 0.0 for d in D[2:])
    return DriftCoefficients(D=D, c=c, sign_ok=sign_ok, D_sum=math.fsum(D[1:]))


def flip_states(model: OneStepModel) -> OneStepModel:
    """Relabel the two node states, i.e. substitute ``x -> 1 - x``.

    The flipped chain has ``A'(x) = C(1 - x)`` and ``C'(x) = A(1 - x)``, so
    ``a'_k = c_{N-k}`` and ``c'_k = a_{N-k}``.
    """
    A_new = _reflect(model.rates.C)
    C_new = _reflect(model.rates.A)
    # C'(0) = A(1), which is zero up to rounding
    if abs(C_new[0]) <= COEF_TOL:
        C_new[0] = 0.0
    if abs(math.fsum(A_new)) <= COEF_TOL:
        A_new[-1] -= math.fsum(A_new)
    label = model.label[:-8] if model.label.endswith("-flipped") else model.label + "-flipped"
    return OneStepModel(model.N, DensityRatePolynomial(tuple(A_new), tuple(C_new)), label)


def _nonneg(**params):
    for name, v in params.items():
        if not math.isfinite(v) or v < 0:
            raise ModelError(f"{name} must be a nonnegative finite number, got {v!r}")


def build_sis_model(N: int, tau: float, gamma: float, d: int, beta: float) -> OneStepModel:
    """SIS epidemic on a ``d``-regular graph with external infection rate ``beta``.

    ``A(x) = tau d x (1 - x) + beta (1 - x)`` and ``C(x) = gamma x``.
    """
    _nonneg(tau=tau, gamma=gamma, beta=beta)
    if int(d) != d or d < 1:
        raise ModelError(f"d must be a positive integer, got {d!r}")
    td = tau * d
    rates = DensityRatePolynomial(A=(beta, td - beta, -td), C=(0.0, gamma, 0.0))
    return OneStepModel(N, rates, label="sis")


def build_voter_model(N: int, tau: float, gamma: float, d: int) -> OneStepModel:
    """Voter-like model: ``A(x) = tau d x (1 - x)``, ``C(x) = gamma d x (1 - x)``."""
    _nonneg(tau=tau, gamma=gamma)
    if int(d) != d or d < 1:
        raise ModelError(f"d must be a positive integer, got {d!r}")
    td, gd = tau * d, gamma * d
    rates = DensityRatePolynomial(A=(0.0, td, -td), C=(0.0, gd, -gd))
    return OneStepModel(N, rates, label="voter")


_SIS_KEYS = ("N", "tau", "gamma", "d", "beta")
_VOTER_KEYS = ("N", "tau", "gamma", "d")


def _builder_args(data: Mapping[str, Any], keys: Sequence[str], kind: str) -> dict:
    missing = [k for k in keys if k not in data]
    extra = [k for k in data if k not in keys]
    if missing or extra:
        raise ModelError(f"{kind} model needs exactly {list(keys)}; missing={missing} extra={extra}")
    return {k: data[k] for k in keys}


def model_from_dict(data: Mapping[str, Any]) -> OneStepModel:
    """Build a model from its JSON form.

    Accepted shapes::

        {"N": 100, "A": [...], "C": [...], "label": "..."}
        {"sis": {"N": .., "tau": .., "gamma": .., "d": .., "beta": ..}}
        {"voter": {"N": .., "tau": .., "gamma": .., "d": ..}}
    """
    if not isinstance(data, Mapping):
        raise ModelError("model definition must be a JSON object")
    if "sis" in data:
        return build_sis_model(**_builder_args(data["sis"], _SIS_KEYS, "sis"))
    if "voter" in data:
        return build_voter_model(**_builder_args(data["voter"], _VOTER_KEYS, "voter"))
    try:
        N, A, C = data["N"], data["A"], data["C"]
    except KeyError as exc:
        raise ModelError(f"model definition missing field {exc.args[0]!r}") from None
    return OneStepModel(N, DensityRatePolynomial(tuple(A), tuple(C)), str(data.get("label", "model")))


def model_to_dict(model: OneStepModel) -> dict:
    return {"N": model.N, "A": list(model.rates.A), "C": list(model.rates.C), "label": model.label}


def load_model(source: str | Path) -> OneStepModel:
    """Load a model from a JSON file path or an inline JSON string."""
    text = str(source)
    if not text.lstrip().startswith("{"):
        text = Path(source).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid model JSON: {exc}") from None
    return model_from_dict(data)
