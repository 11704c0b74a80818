import pytest

from helpers import disk_pair
from holopatch.compacts import SetPrimitive, build_compact, validate_good_pair


@pytest.fixture(scope="session")
def pair_ctx():
    return validate_good_pair(*disk_pair(0.02))


@pytest.fixture(scope="session")
def pair_ctx_coarse():
    return validate_good_pair(*disk_pair(0.04))


@pytest.fixture(scope="session")
def unit_disk():
    return build_compact([SetPrimitive.disk(0, 1.0)], 0.05)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
