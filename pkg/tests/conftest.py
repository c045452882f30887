import pytest

from lifespan_lab.pde_solver import SimConfig, run
from lifespan_lab.radial_profiles import make_poly_bump, polynomial_speed, zero_profile
from lifespan_lab.radiation_field import radiation_field


@pytest.fixture(scope="session")
def poly_data():
    return zero_profile(1.0), make_poly_bump(1.0, 3, 1.0)


@pytest.fixture(scope="session")
def poly_rf(poly_data):
    return radiation_field(*poly_data)


@pytest.fixture(scope="session")
def poly4_data():
    """Case-II data: amplitude 4 brings nu0 to O(1)."""
    return zero_profile(1.0), make_poly_bump(1.0, 3, 4.0)


@pytest.fixture(scope="session")
def poly4_rf(poly4_data):
    return radiation_field(*poly4_data)


@pytest.fixture(scope="session")
def case1_run_eps01(poly_data):
    """Case-I run at eps = 0.1 to blowup, with a space-time record."""
    u0, u1 = poly_data
    cfg = SimConfig(eps=0.1, wavespeed=polynomial_speed(1.0, 1), u0=u0, u1=u1, record_interval=0.5)
    return cfg, run(cfg)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
