import numpy as np
import pytest

from nsaclab import EndStates, GasModel, SmoothingParams, WaveProfile, solve_intermediate


@pytest.fixture(scope="session")
def gas14():
    return GasModel(R=1.0, gamma=1.4, nu=1.0, kappa=1.0)


@pytest.fixture(scope="session")
def bench(gas14):
    ends = EndStates.entropy_matched(gas14, 1.0, 0.0, 1.0, 2.0, 1.0)
    return solve_intermediate(gas14, ends)


@pytest.fixture(scope="session")
def wave14(gas14, bench):
    return WaveProfile(gas14, bench, SmoothingParams(eps_w=0.1, q_exp=2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
