import sys
from pathlib import Path

import numpy as np
import pytest

from queuenet import ctmc
from queuenet.scenario import load_scenario

sys.path.insert(0, str(Path(__file__).parent))

CONSERVATION_SUM = 1e-8
CONSERVATION_NEG = -1e-10


class ConservationLog:
    """Worst probability-conservation figures over every solver output seen."""

    def __init__(self):
        self.runs = 0
        self.states = 0
        self.worst_sum = 0.0
        self.worst_min = np.inf

    def record(self, states):
        self.runs += 1
        for s in states:
            if s.probs.size == 0:
                continue
            self.states += 1
            self.worst_sum = max(self.worst_sum, abs(float(s.probs.sum()) - 1.0))
            self.worst_min = min(self.worst_min, float(s.probs.min()))

    @property
    def ok(self):
        return self.worst_sum <= CONSERVATION_SUM and self.worst_min >= CONSERVATION_NEG


CONSERVATION = ConservationLog()
_march = ctmc._march


def _recording_march(gen, initial, t_end, dt, keep):
    states = _march(gen, initial, t_end, dt, keep)
    CONSERVATION.record(states)
    return states


@pytest.fixture(autouse=True)
def conservation_guard(monkeypatch):
    """Every transient solve in every test must conserve probability."""
    before = (CONSERVATION.worst_sum, CONSERVATION.worst_min)
    monkeypatch.setattr(ctmc, "_march", _recording_march)
    yield CONSERVATION
    after = (CONSERVATION.worst_sum, CONSERVATION.worst_min)
    if after != before:
        assert CONSERVATION.ok, (
            f"probability conservation violated: |sum-1|={CONSERVATION.worst_sum:.3e}, "
            f"min={CONSERVATION.worst_min:.3e}")


@pytest.fixture(scope="session")
def day():
    return load_scenario("day")


@pytest.fixture(scope="session")
def night():
    return load_scenario("night")


@pytest.fixture(scope="session")
def case1():
    return load_scenario("case1")


@pytest.fixture(scope="session")
def case2():
    return load_scenario("case2")


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for the acceptance criterion named by the test's marker."""
    number = request.node.get_closest_marker("criterion").args[0]

    def record(ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    yield record
    if number not in ACCEPTANCE:
        ACCEPTANCE[number] = (False, "did not complete")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    terminalreporter.write_line(
        f"suite-wide conservation: {CONSERVATION.runs} solver runs, {CONSERVATION.states} output states, "
        f"max |sum-1| = {CONSERVATION.worst_sum:.2e}, min p = {CONSERVATION.worst_min:.2e}")
