import math

import numpy as np
import pytest

from onestep import build_sis_model, flip_states
from onestep.bounds import (
    SignConditionError,
    UnsupportedDegreeError,
    cs_variant_rhs,
    mean_field_rhs,
    power_system_rhs,
    q_variant_rhs,
    solve_bounds,
    solve_mean_field,
    z_system_rhs,
)
from onestep.master import moment_series, solve_master
from onestep.model import DensityRatePolynomial, OneStepModel, drift_coefficients

T10 = np.linspace(0, 10, 501)


def logistic(u, s, t):
    return u * np.exp(s * t) / (1 + u * (np.exp(s * t) - 1))


def test_mean_field_rhs_endpoints(fig2_model):
    D = fig2_model.drift
    assert mean_field_rhs(D, 0.0) == D.D[0]
    # at y = 1 the drift is -C(1)
    assert mean_field_rhs(D, 1.0) == pytest.approx(-fig2_model.rates.death(1.0))


def test_mean_field_rhs_equilibrium():
    assert mean_field_rhs((0, 2, -3), 2 / 3) == pytest.approx(0, abs=1e-15)


def test_mean_field_constant():
    assert np.all(solve_mean_field((0, 0, 0), 0.3, T10)["y"] == 0.3)


def test_mean_field_logistic():
    y = solve_mean_field((0, 0.5, -0.5), 0.02, T10)["y"]
    np.testing.assert_allclose(y, logistic(0.02, 0.5, T10), atol=1e-7)


def test_mean_field_equilibrium_fig1():
    y = solve_mean_field((0, 2, -3), 0.01, T10)["y"]
    assert abs(y[-1] - 2 / 3) < 1e-3
    assert np.all((y >= -1e-9) & (y <= 1 + 1e-9))


def test_z_rhs_hand_value():
    out = z_system_rhs((1, -1, -1), 3.0, 100, [0.01, 1e-4])
    assert out[1] == pytest.approx(0.049798, abs=1e-12)
    # z_1' = D0 + D1 z1 + D2 z2
    assert out[0] == pytest.approx(1 - 0.01 - 1e-4)


def test_z_rhs_infinite_n_is_power_system():
    D, y = (1, -1, -1), 0.3
    out = z_system_rhs(D, 3.0, math.inf, [y, y * y])
    assert out[1] == pytest.approx(2 * y * mean_field_rhs(D, y))
    np.testing.assert_allclose(power_system_rhs(D, [y, y * y])[1], out[1])


def test_z_rhs_null():
    np.testing.assert_array_equal(z_system_rhs((0, 0, 0), 0.0, 10, [0.2, 0.04]), 0.0)


def test_z_rhs_clamps_negative_base():
    out = z_system_rhs((1, -1, -1), 3.0, 100, [0.01, -1e-3])
    assert np.all(np.isfinite(out))


def test_bracketing_fig2(fig2_model):
    b = solve_bounds(fig2_model.drift, 100, 0.01, T10)
    y1 = moment_series(solve_master(fig2_model, 1, T10), 1)[1]
    assert np.all(b.z1 <= b.y)
    assert np.all(b.z1 - 1e-6 <= y1) and np.all(y1 <= b.y + 1e-6)


def test_pure_death_linear():
    m = OneStepModel(10, DensityRatePolynomial((0.0, 0.0, 0.0), (0.0, 0.5, 0.0)))
    b = solve_bounds(m.drift, 10, 1.0, T10)
    np.testing.assert_allclose(b.y, np.exp(-0.5 * T10), atol=1e-8)
    np.testing.assert_allclose(b.z1, np.exp(-0.5 * T10), atol=1e-8)


def test_gap_shrinks_with_n():
    D = build_sis_model(100, 0.1, 1, 30, 0).drift
    t = np.linspace(0, 5, 501)
    g6 = solve_bounds(D, 10**6, 0.01, t).gap().max()
    g7 = solve_bounds(D, 10**7, 0.01, t).gap().max()
    assert 8 <= g6 / g7 <= 12


def test_sign_condition_refused(voter_down):
    with pytest.raises(SignConditionError, match="flip"):
        solve_bounds(voter_down.drift, 200, 0.01, T10)
    solve_bounds(flip_states(voter_down).drift, 200, 0.99, T10)


def test_zero_u_voids_guarantee(fig2_model):
    with pytest.warns(UserWarning):
        b = solve_bounds(fig2_model.drift, 100, 0.0, T10)
    assert b.metadata["guarantee_void"]


def test_powers_channel(fig2_model):
    b = solve_bounds(fig2_model.drift, 100, 0.01, T10, powers=True)
    np.testing.assert_allclose(b.y_pow[1], b.y**2, atol=1e-7)


def test_general_degree():
    # cubic drift: A = x(1-x)(1+x) scaled, C = x
    rates = DensityRatePolynomial((0.0, 1.0, 0.0, -1.0), (0.0, 0.5))
    D = drift_coefficients(rates)
    assert D.sign_ok and D.degree == 3
    b = solve_bounds(D, 50, 0.1, np.linspace(0, 3, 61))
    assert b.z.shape == (3, 61)
    m = OneStepModel(50, rates)
    Y = moment_series(solve_master(m, 5, np.linspace(0, 3, 61)), 3)
    assert np.all(b.z1 - 1e-6 <= Y[1]) and np.all(Y[1] <= b.y + 1e-6)
    for n in (2, 3):
        assert np.all(Y[n] <= b.z[n - 1] + 1e-6)


def test_q_variant_endpoints():
    D, c, N, z1, z2 = (1, -1, -1), 3.0, 100, 0.2, 0.05
    np.testing.assert_allclose(q_variant_rhs(D, c, N, 2.0, z1, z2), z_system_rhs(D, c, N, [z1, z2]))
    assert q_variant_rhs(D, c, N, 0.0, z1, z2)[0] == pytest.approx(mean_field_rhs(D, z1))
    assert q_variant_rhs((0, -1, -1), c, N, 1.0, 0.0, 0.0) == (0.0, pytest.approx(c / N))


def test_cs_variant_on_consistency_manifold():
    D, c, N, z1 = (1, -1, -1), 3.0, 100, 0.3
    np.testing.assert_allclose(cs_variant_rhs(D, c, N, z1, z1 * z1), z_system_rhs(D, c, N, [z1, z1 * z1]))
    assert cs_variant_rhs((0, 0, 0), 0.0, N, 0.4, 0.1) == (0.0, 0.0)


def test_variants_need_quadratic():
    with pytest.raises(UnsupportedDegreeError):
        q_variant_rhs((0, 1, 0, -1), 2.0, 10, 1.0, 0.1, 0.01)
    with pytest.raises(UnsupportedDegreeError):
        cs_variant_rhs((0, -1), 1.0, 10, 0.1, 0.01)


def test_cs_ordering_fig4():
    m = build_sis_model(100, 0.1, 1, 30, 0)
    b = solve_bounds(m.drift, 100, 0.01, T10, q_values=(1.0,), cs=True)
    cs = b.variants["cs_z1"]
    assert np.all(b.z1 <= cs + 1e-6) and np.all(cs <= b.y + 1e-6)
    assert b.metadata["heuristic"] == ["q1_z1", "cs_z1"]
    assert b.as_timeseries().names == ["y", "z1", "z2", "q1_z1", "cs_z1"]


def test_voter_role_swap(voter_down):
    t = np.linspace(0, 15, 301)
    f = flip_states(voter_down)
    b = solve_bounds(f.drift, 200, (200 - 2) / 200, t)
    y1 = moment_series(solve_master(voter_down, 2, t), 1)[1]
    assert np.all(1 - b.y - 1e-6 <= y1) and np.all(y1 <= 1 - b.z1 + 1e-6)
