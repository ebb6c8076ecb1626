import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Context manager timing one acceptance criterion and recording PASS/FAIL."""
    lines = request.config.stash[_ACCEPTANCE]

    @contextmanager
    def run(number, title, budget):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            first = str(exc).strip().splitlines()[0] if str(exc).strip() else ""
            lines.append(f"criterion {number}: FAIL  {title}  [{type(exc).__name__}: {first}]")
            raise
        elapsed = time.perf_counter() - start
        ok = elapsed < budget
        lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  "
                     f"({elapsed:.2f} s, budget {budget:g} s)")
        assert ok, f"criterion {number} took {elapsed:.2f} s, budget {budget} s"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
