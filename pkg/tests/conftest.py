import numpy as np
import pytest

from liouville_lab.surface import build_surface


@pytest.fixture(scope="session")
def torus64():
    return build_surface("torus", 64)


@pytest.fixture(scope="session")
def torus32():
    return build_surface("torus", 32)


@pytest.fixture(scope="session")
def sphere64():
    # 64 x 64 latitude-longitude grid: 63 * 64 + 2 = 4034 nodes
    return build_surface("sphere", 64)


@pytest.fixture(scope="session")
def disk():
    return build_surface("disk", (48, 96))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, title, why = RESULTS[k]
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if not ok:
            line += f"  ({why})"
        terminalreporter.write_line(line)
