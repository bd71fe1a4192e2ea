import math

import pytest

from ssicl.circuit import CircuitParams
from ssicl.core import SaturableCore
from ssicl.scenario import LAB_NAMEPLATE

OMEGA = 2.0 * math.pi * 50.0
L_MAG = 169.0 / OMEGA


@pytest.fixture
def table_circuit():
    return CircuitParams()


@pytest.fixture
def linear_core():
    """Lossless linear core: the circuit reduces to a first-order series R-L."""
    return SaturableCore(l_unsat=L_MAG, l_sat=L_MAG, flux_knee=1.0, remnant_flux=0.0, core_loss_r=math.inf)


@pytest.fixture
def nameplate():
    return LAB_NAMEPLATE


def switch_schedule(events, dt):
    """Gate function from ``[(instant, conducting), ...]``, aligned to step boundaries."""

    def gate(t):
        on = True
        for ts, state in events:
            if t >= ts - dt / 2:
                on = state
        return on

    return gate


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
