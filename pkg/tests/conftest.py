import math

import pytest

from mixqnm.fixtures import builtin, zero_coupling_model
from mixqnm.spectral import ModeParams, build_model


@pytest.fixture(scope="session")
def p0():
    return builtin("P0")


@pytest.fixture(scope="session")
def p1():
    return builtin("P1")


@pytest.fixture(scope="session")
def p2():
    return builtin("P2")


@pytest.fixture(scope="session")
def p1_rank1():
    """Single-channel rank-1 bath on nearly-degenerate masses."""
    model = build_model({"channels": [
        {"g": [0.1, 0.1], "shape": "ohmic-gaussian", "lambda": 10.0}]})
    return model, ModeParams(m=(1.0, 1.0005), beta=1.0)


@pytest.fixture(scope="session")
def free_params():
    return zero_coupling_model(), ModeParams(m=(1.0, 1.3), beta=1.0)


@pytest.fixture(scope="session")
def cold_params():
    return ModeParams(m=(1.0, 1.0), beta=math.inf)
