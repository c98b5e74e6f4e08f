import numpy as np
import pytest

from onestep import _backend, _fallback, build_sis_model, build_voter_model, per_state_rates
from onestep.ssa import estimate_mean, run_seed

ext = pytest.importorskip("onestep._ext") if _backend.BACKEND == "cython" else None
needs_ext = pytest.mark.skipif(ext is None, reason="compiled extension not built")


@pytest.fixture(params=["sis", "voter"])
def rates(request):
    m = build_sis_model(60, 0.05, 1, 20, 1) if request.param == "sis" else build_voter_model(60, 0.2, 0.1, 10)
    return per_state_rates(m)


def test_fallback_rhs_conserves(rates):
    p = np.random.default_rng(0).random(61)
    assert abs(_fallback.master_rhs(*rates, p).sum()) < 1e-10


@needs_ext
def test_rhs_identical(rates):
    p = np.random.default_rng(1).random(61)
    assert ext.master_rhs(*rates, p).tobytes() == _fallback.master_rhs(*rates, p).tobytes()


@needs_ext
def test_sample_run_identical(rates):
    t = np.linspace(0, 10, 101)
    for r in range(10):
        seed = run_seed(123, r)
        assert list(ext.sample_run(*rates, 3, t, seed)) == list(_fallback.sample_run(*rates, 3, t, seed))


@needs_ext
def test_ensemble_identical(rates):
    t = np.linspace(0, 5, 51)
    seeds = [run_seed(7, r) for r in range(100)]
    e1, e2 = ext.ssa_ensemble(*rates, 2, t, seeds)
    f1, f2 = _fallback.ssa_ensemble(*rates, 2, t, seeds)
    np.testing.assert_array_equal(e1, f1)
    np.testing.assert_array_equal(e2, f2)


@needs_ext
def test_estimate_mean_backend_independent():
    m = build_sis_model(100, 0.05, 1, 20, 1)
    t = np.linspace(0, 10, 51)
    a = estimate_mean(m, 1, t, 100, 9, kernels=ext)
    b = estimate_mean(m, 1, t, 100, 9, kernels=_fallback)
    assert (a.backend, b.backend) == ("cython", "python")
    assert a.mean.tobytes() == b.mean.tobytes() and a.stderr.tobytes() == b.stderr.tobytes()


def test_order_independent_reduction(rates):
    t = np.linspace(0, 3, 31)
    seeds = [run_seed(5, r) for r in range(40)]
    fwd = _fallback.ssa_ensemble(*rates, 4, t, seeds)
    rev = _fallback.ssa_ensemble(*rates, 4, t, seeds[::-1])
    np.testing.assert_array_equal(fwd[0], rev[0])
    np.testing.assert_array_equal(fwd[1], rev[1])


def test_backend_name():
    assert _backend.BACKEND in ("cython", "python")
