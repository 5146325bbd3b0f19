import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from blockade_lab.params import SystemParams  # noqa: E402

_ACCEPTANCE = {}


def record_acceptance(label, passed, detail):
    _ACCEPTANCE[label] = (bool(passed), detail)


@pytest.fixture
def acceptance():
    return record_acceptance


@pytest.fixture
def blockade_params():
    """eta = 0.5, kappa = 0.15 omega_m at zero temperature, infinite Q."""
    return SystemParams.from_ratios(0.5, 0.15)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")
