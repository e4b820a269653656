import json

import numpy as np
import pytest

import pspsplan
import pspsplan.cli
import pspsplan.formulations
import pspsplan.season
import pspsplan.sweeps
from pspsplan.network import network_from_dict

AUDITED = {"count": 0, "violations": []}
ACCEPTANCE_LINES: list[str] = []

_decode = pspsplan.formulations.decode


def _audited_decode(form, result):
    """Every solution decoded anywhere in the suite is also audited."""
    dispatch, plan = _decode(form, result)
    bad = pspsplan.formulations.audit(form, dispatch, plan)
    AUDITED["count"] += 1
    if bad:
        AUDITED["violations"].append((form.kind, bad))
        raise AssertionError(f"decoded {form.kind} solution fails audit: {bad}")
    return dispatch, plan


for _mod in (pspsplan, pspsplan.formulations, pspsplan.season, pspsplan.sweeps, pspsplan.cli):
    _mod.decode = _audited_decode


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"audited decoded solutions: {AUDITED['count']}, with violations: {len(AUDITED['violations'])}"
    )


TWO_BUS = {
    "name": "two_bus",
    "base_mva": 100,
    "buses": [
        {"id": "1", "nominal_demand": 0.0, "latitude": 38.5, "longitude": -121.5},
        {"id": "2", "nominal_demand": 0.1, "latitude": 38.5, "longitude": -121.3},
    ],
    "lines": [
        {"id": "L", "from_bus": "1", "to_bus": "2", "susceptance": -10.0, "flow_limit": 1.0,
         "angle_min": -0.5, "angle_max": 0.5, "length": 10.0},
    ],
    "generators": [{"id": "G", "bus": "1", "p_max": 1.0}],
}


@pytest.fixture
def two_bus_dict():
    return json.loads(json.dumps(TWO_BUS))


@pytest.fixture
def two_bus():
    return network_from_dict(TWO_BUS)


@pytest.fixture
def flat_day(two_bus):
    return pspsplan.apply_profile(two_bus, np.ones(24))
