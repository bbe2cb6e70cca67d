import numpy as np
import pytest

from cqed_rabi import OMEGA_R, default_params


@pytest.fixture
def params_opt():
    """Template parameters at gamma_m = 0.25 Omega_R."""
    return default_params(0.25 * OMEGA_R)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for a criterion, then assert it."""

    def record(name: str, checks: dict, detail: str) -> None:
        ok = all(bool(v) for v in checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" + (f"  [failed: {', '.join(failed)}]" if failed else "")
        request.config.stash[ACCEPTANCE_LINES].append(line)
        print(line)
        assert ok, line

    return record
