import math

import pytest

from wfhsim.constellation import build_psk
from wfhsim.wf_receiver import WfReceiverParams

# verdict lines collected by the acceptance tests, echoed after the run
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)

# Canonical operating-point parameters used across the suite.
ALPHA = 2.04
LO_AMPLITUDE = 3.53
SIG_MEAN = 4.13
LO_MEAN = 12.5


@pytest.fixture
def qpsk():
    return build_psk(4, ALPHA)


@pytest.fixture
def bpsk():
    # antipodal binary encoding {0, pi}
    return build_psk(2, ALPHA, 0.0)


@pytest.fixture
def receiver():
    return WfReceiverParams(lo_amplitude=LO_AMPLITUDE)


@pytest.fixture
def lab_bpsk():
    return build_psk(2, math.sqrt(SIG_MEAN), 0.0)


@pytest.fixture
def lab_receiver():
    return WfReceiverParams(lo_amplitude=math.sqrt(LO_MEAN))
