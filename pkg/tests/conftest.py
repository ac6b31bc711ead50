import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fronthaul.topology import TopologyConfig, generate_ap_field, nofac

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def report_criterion(name: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_scenario():
    cfg = TopologyConfig(L=120, W=3, G_initial=20, g_s=8, g_m=2, region_side=700.0)
    field = generate_ap_field(cfg, seed=11)
    return nofac(cfg, field, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
