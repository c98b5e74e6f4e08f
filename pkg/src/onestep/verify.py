"""Invariant checks over a full master + bounds + SSA pipeline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from onestep.bounds import BoundsResult
from onestep.master import (
    MasterSolution,
    NEG_TOL,
    SUM_TOL,
    exact_moment_derivative,
    moment_series,
    moments,
    remainder_audit,
)
from onestep.model import OneStepModel
from onestep.ssa import SsaEnsembleResult

BRACKET_TOL = 1e-6
MOMENT_TOL = 1e-12
APRIORI_TOL = 1e-9
SSA_SIGMAS = 3.0
SSA_MIN_FRACTION = 0.95
N_AUDIT_TIMES = 20


@dataclass
class Check:
    """One invariant: ``worst_margin`` is the smallest slack; negative means violated."""

    name: str
    passed: bool
    worst_margin: float
    t: float | None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["worst_margin"] is not None and not math.isfinite(d["worst_margin"]):
            d["worst_margin"] = None
        return d


def margin_check(name: str, t: np.ndarray, slack: np.ndarray, note: str = "") -> Check:
    """Pass iff ``slack >= 0`` everywhere; report the worst point."""
    slack = np.asarray(slack, dtype=float)
    if slack.size == 0:
        return Check(name, True, math.inf, None, note)
    g = int(np.argmin(slack))
    return Check(name, bool(slack[g] >= 0), float(slack[g]), float(t[g]), note)


def audit_indices(n_grid: int, count: int = N_AUDIT_TIMES) -> np.ndarray:
    return np.unique(np.linspace(0, n_grid - 1, count).round().astype(int))


def check_master(model: OneStepModel, sol: MasterSolution, initial_state: int) -> list[Check]:
    t = sol.t
    m = max(model.degree, 1)
    Y = moment_series(sol, max(4, m))
    checks = [
        margin_check("probability_conservation", t, SUM_TOL - sol.mass_defect()),
        Check("probability_nonnegative", sol.raw_min >= -NEG_TOL, sol.raw_min + NEG_TOL, None),
    ]
    for n in range(1, 4):
        checks.append(margin_check(f"moment_monotone_y{n + 1}_le_y{n}", t, Y[n] + MOMENT_TOL - Y[n + 1]))
    for n in (2, 3):
        checks.append(margin_check(f"jensen_y1^{n}_le_y{n}", t, Y[n] + MOMENT_TOL - Y[1] ** n))
    drift = model.drift
    if drift.sign_ok:
        u = initial_state / model.N
        checks.append(margin_check("apriori_lower_y1", t, Y[1] - u * np.exp(t * drift.D_sum) + APRIORI_TOL))

    idx = audit_indices(len(sol))
    closure_slack, closure_t = [], []
    for g in idx:
        p = sol[g]
        y = np.concatenate(([1.0], moments(p, len(drift.D))))
        closure = math.fsum(Dj * y[j] for j, Dj in enumerate(drift.D))
        err = abs(exact_moment_derivative(model, p, 1) - closure)
        closure_slack.append(1e-10 * max(1.0, drift.c) - err)
        closure_t.append(p.t)
    checks.append(margin_check("first_moment_closed", np.array(closure_t), np.array(closure_slack)))
    for n in range(2, m + 1):
        audits = [remainder_audit(model, sol[g], n) for g in idx]
        slack = [min(a.value + 1e-9, a.bound + 1e-9 - a.value) for a in audits]
        checks.append(
            margin_check(f"remainder_R{n}_in_bounds", np.array([a.t for a in audits]), np.array(slack))
        )
    return checks


def check_bounds(model: OneStepModel, b: BoundsResult) -> list[Check]:
    t = b.t
    D, c = model.drift.D, model.drift.c
    u = b.metadata["u"]
    checks = [margin_check("mean_field_in_unit_interval", t, np.minimum(b.y, 1.0 - b.y) + APRIORI_TOL)]
    for n in range(2, b.z.shape[0] + 1):
        # growth is at most exponential once z_n >= 1, and z_n(0) = u^n <= 1
        rate = n * (D[0] + abs(D[1]) + c * n)
        cap = np.exp(np.minimum(rate * t, 700.0))
        literal = u**n * np.exp(np.minimum(rate * t, 700.0))
        worst_literal = float(np.min(literal + BRACKET_TOL - b.z[n - 1]))
        checks.append(
            margin_check(
                f"apriori_upper_z{n}",
                t,
                cap + BRACKET_TOL - b.z[n - 1],
                f"cap exp({rate:g} t); the u^{n}-scaled cap has worst margin {worst_literal:.3g}",
            )
        )
    return checks


def check_bracketing(b: BoundsResult, sol: MasterSolution) -> list[Check]:
    t = b.t
    m = b.z.shape[0]
    Y = moment_series(sol, m)
    checks = [
        margin_check("bracket_lower_z1_le_y1", t, Y[1] - b.z1 + BRACKET_TOL),
        margin_check("bracket_upper_y1_le_y", t, b.y - Y[1] + BRACKET_TOL),
    ]
    # z_1 <= y_1 and Jensen give y_n >= z_1^n only while z_1 >= 0
    z1_pos = np.maximum(b.z1, 0.0)
    for n in range(2, m + 1):
        checks.append(margin_check(f"moment_lower_z1^{n}_le_y{n}", t, Y[n] - z1_pos**n + BRACKET_TOL))
        checks.append(margin_check(f"moment_upper_y{n}_le_z{n}", t, b.z[n - 1] - Y[n] + BRACKET_TOL))
    return checks


def check_ssa(ssa: SsaEnsembleResult, y1: np.ndarray, y2: np.ndarray) -> Check:
    """SSA mean within 3 standard errors of ``y_1`` at >= 95% of grid points.

    The standard error uses the exact variance ``y_2 - y_1^2`` from the master
    solution; the sample estimate is reported alongside. The sample estimate
    collapses to zero once every run sits in an absorbing state.
    """
    dev = np.abs(ssa.mean - y1)
    se_exact = np.sqrt(np.maximum(y2 - y1**2, 0.0) / ssa.n_runs)
    ok = dev <= SSA_SIGMAS * se_exact
    frac = float(ok.mean())
    frac_sample = float((dev <= SSA_SIGMAS * ssa.stderr).mean())
    bad = np.flatnonzero(~ok)
    t_bad = float(ssa.t[bad[np.argmax(dev[bad])]]) if bad.size else None
    return Check(
        "ssa_agrees_with_master",
        frac >= SSA_MIN_FRACTION,
        frac - SSA_MIN_FRACTION,
        t_bad,
        f"{frac:.4f} of grid points within {SSA_SIGMAS:g} exact standard errors "
        f"({frac_sample:.4f} with the sample standard error; {ssa.n_runs} runs)",
    )
