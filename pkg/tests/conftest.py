import math

import pytest

from cylgrating import model

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def desk():
    """a/d = 0.1, eps_r = 2, theta = pi/4, psi = pi, k_r a = 0.05."""
    th = math.pi / 4
    params = model.GratingParams(1.0, 10.0, 2.0, 1.0)
    wave = model.IncidentWave(0.05 / math.sin(th), th, math.pi)
    return params, wave


@pytest.fixture
def oblique():
    """Magnetic rods, off-normal azimuth, k_r d = 1.5."""
    th = math.pi / 4
    params = model.GratingParams(0.1, 1.0, 2.0, 1.3)
    wave = model.IncidentWave(1.5 / math.sin(th), th, math.pi + 0.4)
    return params, wave
