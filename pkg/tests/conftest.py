import numpy as np
import pytest

from kinshock.canonical import reduce_model
from kinshock.chapman_enskog import make_chapman_enskog
from kinshock.manifolds import center_taylor
from kinshock.presets import get_preset


@pytest.fixture(scope="session")
def m0():
    return get_preset("demo-m0")


@pytest.fixture(scope="session")
def m1():
    return get_preset("demo-m1")


@pytest.fixture(scope="session")
def canon0(m0):
    return reduce_model(m0)


@pytest.fixture(scope="session")
def canon1(m1):
    return reduce_model(m1)


@pytest.fixture(scope="session")
def ced1(m1):
    return make_chapman_enskog(m1)


@pytest.fixture(scope="session")
def taylor1(canon1):
    return center_taylor(canon1, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


SWEEP_EPS = (0.02, 0.04, 0.08, 0.16)


@pytest.fixture(scope="session")
def sweep_pairs(canon1, ced1):
    from kinshock.profiles import PROFILE_TAYLOR_ORDER, compute_profile_pair
    taylor = center_taylor(canon1, PROFILE_TAYLOR_ORDER)
    return [compute_profile_pair(canon1, ced1, taylor, eps) for eps in SWEEP_EPS]


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(request):
    """Registry of criterion -> (title, passed, detail) printed after the run."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
