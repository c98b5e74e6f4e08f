import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from onestep import build_sis_model, build_voter_model, flip_states, per_state_rates
from onestep.bounds import solve_bounds
from onestep.master import master_rhs, moment_series, moments, remainder, solve_master
from onestep.model import DensityRatePolynomial, OneStepModel
from onestep.output import read_csv, write_csv
from onestep.ssa import simulate_path

rate = st.floats(0.0, 3.0, allow_nan=False)
sizes = st.integers(1, 300)
coefs = st.lists(st.floats(0.0, 2.0), min_size=1, max_size=4)


def poly_mul(p, q):
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


@st.composite
def models(draw, max_n=300):
    """Random valid models: A(x) = (1 - x) P(x), C(x) = x Q(x) with P, Q >= 0 on [0, 1]."""
    A = poly_mul([1.0, -1.0], draw(coefs))
    C = poly_mul([0.0, 1.0], draw(coefs))
    return OneStepModel(draw(st.integers(1, max_n)), DensityRatePolynomial(tuple(A), tuple(C)))


def distributions(n):
    return st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda v: sum(v) > 0)


@given(sizes, rate, rate, st.integers(1, 40), rate)
def test_sis_rates_nonnegative_and_sign_ok(N, tau, gamma, d, beta):
    m = build_sis_model(N, tau, gamma, d, beta)
    a, c = per_state_rates(m)
    assert np.all(a >= 0) and np.all(c >= 0) and a[-1] == 0 and c[0] == 0
    assert m.drift.sign_ok


@given(sizes, rate, rate, st.integers(1, 40))
def test_voter_sign_condition_iff(N, tau, gamma, d):
    m = build_voter_model(N, tau, gamma, d)
    assert m.drift.sign_ok == (gamma <= tau)


@given(models())
def test_c_dominates_drift(m):
    assert all(abs(Dj) <= m.drift.c + 1e-12 for Dj in m.drift.D)


@given(models())
def test_flip_is_involution_and_mirrors_rates(m):
    f = flip_states(m)
    a, c = per_state_rates(m)
    fa, fc = per_state_rates(f)
    scale = 1e-9 * max(1.0, a.max(initial=0), c.max(initial=0))
    np.testing.assert_allclose(fa, c[::-1], atol=scale)
    np.testing.assert_allclose(fc, a[::-1], atol=scale)
    ff = flip_states(f)
    np.testing.assert_allclose(ff.rates.A, m.rates.A, atol=1e-9)
    np.testing.assert_allclose(ff.rates.C, m.rates.C, atol=1e-9)


@given(st.data())
def test_master_rhs_conserves_and_is_tridiagonal(data):
    m = data.draw(models(max_n=40))
    p = np.array(data.draw(distributions(m.N + 1)))
    out = master_rhs(m, p)
    a, c = per_state_rates(m)
    assert abs(math.fsum(out)) <= 1e-12 * max(1.0, np.abs(out).max())
    k = data.draw(st.integers(0, m.N))
    e = np.zeros(m.N + 1)
    e[k] = 1.0
    col = master_rhs(m, e)
    assert np.count_nonzero(col[max(0, k - 1): k + 2]) == np.count_nonzero(col)
    assert col[k] == pytest.approx(-(a[k] + c[k]))


@given(st.data())
def test_moment_chain(data):
    n = data.draw(st.integers(1, 60))
    p = np.array(data.draw(distributions(n + 1)))
    p /= p.sum()
    y = moments(p, 4)
    assert np.all(y[1:] <= y[:-1] + 1e-12)
    assert y[0] ** 2 <= y[1] + 1e-12 and y[0] ** 3 <= y[2] + 1e-12
    assert 0 <= y[-1] and y[0] <= 1 + 1e-12


@given(st.data())
def test_remainder_within_bounds_for_any_distribution(data):
    m = data.draw(models(max_n=80))
    p = np.array(data.draw(distributions(m.N + 1)))
    p /= p.sum()
    c = m.drift.c
    for n in (2, 3):
        r = remainder(m, p, n)
        tol = 1e-9 * max(1.0, c) * m.N
        assert -tol <= r <= n * (n - 1) * c / 2 + tol


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.05, 0.5), st.integers(2, 30), st.floats(0.0, 2.0), st.integers(10, 60),
       st.floats(0.01, 1.0))
def test_bracketing_random_sis(tau, gamma, d, beta, N, frac):
    m = build_sis_model(N, tau, gamma, d, beta)
    i = max(1, round(frac * N))
    t = np.linspace(0, 3, 61)
    b = solve_bounds(m.drift, N, i / N, t)
    Y = moment_series(solve_master(m, i, t), 2)
    assert np.all(b.z1 - 1e-6 <= Y[1]) and np.all(Y[1] <= b.y + 1e-6)
    assert np.all(Y[2] <= b.z[1] + 1e-6)
    assert np.all((b.y >= -1e-9) & (b.y <= 1 + 1e-9))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.05, 2.0), st.integers(2, 30), st.floats(0.0, 2.0), st.floats(0.01, 1.0))
def test_infinite_n_matches_power_system(tau, gamma, d, beta, u):
    D = build_sis_model(10, tau, gamma, d, beta).drift
    b = solve_bounds(D, math.inf, u, np.linspace(0, 5, 51))
    np.testing.assert_allclose(b.z[1], b.y**2, atol=1e-7)


@settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow])
@given(models(max_n=50), st.integers(0, 2**64 - 1), st.floats(0.0, 1.0))
def test_paths_stay_in_state_space(m, seed, frac):
    path = simulate_path(m, round(frac * m.N), 5.0, seed)
    assert path.states.min() >= 0 and path.states.max() <= m.N
    assert np.all(np.abs(np.diff(path.states)) == 1)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "v.csv"
    write_csv(path, {"t": range(len(values)), "v": values})
    assert read_csv(path)["v"].tolist() == [float(v) for v in values]
