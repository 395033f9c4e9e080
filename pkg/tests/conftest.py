import pytest

from hamjac.dynsys import SystemParams
from hamjac.numerics import IntegratorConfig, integrate_ode
from hamjac.transform import drag_example_systems

DRAG_PARAMS = SystemParams(m=1.0, lam=1.0, gamma=0.2, alpha=0.3)


@pytest.fixture(scope="session")
def drag_params():
    return DRAG_PARAMS


@pytest.fixture(scope="session")
def drag_systems():
    return drag_example_systems(DRAG_PARAMS)


@pytest.fixture(scope="session")
def drag_trajectory(drag_systems):
    first_order, _, _ = drag_systems
    return integrate_ode(
        first_order.rhs, 0.0, 0.0, IntegratorConfig(t_end=2.0, step=1e-4), guard=first_order.in_domain, strict=True
    )


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
