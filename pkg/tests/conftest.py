import numpy as np
import pytest

from onestep import build_sis_model, build_voter_model
from onestep.model import DensityRatePolynomial, OneStepModel

FIG2 = dict(N=100, tau=0.05, gamma=1.0, d=20, beta=1.0)
FIG1 = dict(tau=0.1, gamma=1.0, d=30, beta=0.0)


@pytest.fixture(scope="session")
def fig2_model():
    return build_sis_model(**FIG2)


@pytest.fixture(scope="session")
def fig2_grid():
    return np.linspace(0.0, 10.0, 501)


@pytest.fixture(scope="session")
def voter_down():
    # gamma > tau: fails the sign condition until flipped
    return build_voter_model(200, tau=0.1, gamma=0.2, d=10)


def two_state(lam: float, mu: float) -> OneStepModel:
    """N=1 chain with a_0 = lam and c_1 = mu."""
    # A(x) = lam (1 - x), C(x) = mu x
    return OneStepModel(1, DensityRatePolynomial((lam, -lam), (0.0, mu)), "two-state")


def two_state_p1(lam, mu, p1_0, t):
    s = lam + mu
    return lam / s * (1 - np.exp(-s * t)) + p1_0 * np.exp(-s * t)
