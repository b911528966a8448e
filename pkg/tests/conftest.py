import numpy as np
import pytest

from qflag.aseries import random_system_A
from qflag.config import Settings
from qflag.lie_core import build_cartan, parse_algebra
from qflag.qsystem import assemble_extended_A
from qflag.spectral import TwistedPoly, TwistParams


@pytest.fixture
def settings() -> Settings:
    return Settings(seed=7)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20251)


@pytest.fixture
def cartan():
    def make(series: str, rank: int):
        return build_cartan(parse_algebra(series, rank))

    return make


@pytest.fixture
def a3_system(rng):
    return random_system_A(3, rng, twisted=False)


@pytest.fixture
def sourced_a_system(rng):
    """Twisted A_r systems with degree-one single-box functions, so the Wronskian top is a polynomial."""

    def make(rank: int):
        n = rank + 1
        logs = rng.normal(size=n) + 1j * rng.uniform(-0.5, 0.5, size=n)
        params = TwistParams(logs=logs - logs.mean(), hbar=1.0 + 0j)
        singles = [
            TwistedPoly(np.eye(n)[i], np.array([complex(rng.normal(), rng.normal()), 1.0]), params) for i in range(n)
        ]
        return assemble_extended_A(build_cartan(parse_algebra("A", rank)), singles)

    return make
